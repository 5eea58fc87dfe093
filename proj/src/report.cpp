#include "ikeusb/report.hpp"
#include "ikeusb/error.hpp"

#include <sstream>

#include <json.hpp>

namespace ikeusb::report {

using nlohmann::ordered_json;

namespace {

ordered_json counters_json(const protocol::Counters &c)
{
    ordered_json j;
    j["dh_ops"] = c.dh_ops;
    j["modexps"] = c.modexps;
    j["sig_verifies"] = c.sig_verifies;
    j["decrypt_failures"] = c.decrypt_failures;
    j["messages_rejected_pre_dh"] = c.messages_rejected_pre_dh;
    j["device_ops"] = c.device_ops;
    j["device_signs"] = c.device_signs;
    j["file_signs"] = c.file_signs;
    return j;
}

ordered_json verdict_value(const std::optional<bool> &v)
{
    if (!v)
        return nullptr;
    return *v ? "supported" : "not-supported";
}

std::optional<bool> verdict_from(const ordered_json &j)
{
    if (j.is_null())
        return std::nullopt;
    const auto s = j.get<std::string>();
    if (s == "supported")
        return true;
    if (s == "not-supported")
        return false;
    throw Error(Errc::ConfigError, "bad verdict '" + s + "'");
}

ordered_json verdicts_json(const netsim::VerdictMap &v)
{
    ordered_json j;
    j["sa_ke_protection"] = verdict_value(v.sa_ke_protection);
    j["cert_sig_protection"] = verdict_value(v.cert_sig_protection);
    j["dos_prevention"] = verdict_value(v.dos_prevention);
    j["certificate_storage"] = v.certificate_storage ? ordered_json(*v.certificate_storage) : ordered_json(nullptr);
    return j;
}

ordered_json evidence_json(const netsim::Evidence &e)
{
    ordered_json j;
    j["flood_sent"] = e.flood_sent;
    j["flood_dh_ops"] = e.flood_dh_ops;
    j["flood_rejected_pre_dh"] = e.flood_rejected_pre_dh;
    j["tamper_applied"] = e.tamper_applied;
    j["tamper_targets"] = e.tamper_targets;
    j["tamper_detected"] = e.tamper_detected;
    j["tamper_pre_signature"] = e.tamper_pre_signature;
    j["tamper_failure_step"] = e.tamper_failure_step;
    j["observed_messages"] = e.observed_messages;
    j["observed_none_findings"] = e.observed_none_findings;
    j["observed_sa_ke_findings"] = e.observed_sa_ke_findings;
    j["observed_cert_sig_findings"] = e.observed_cert_sig_findings;
    j["plaintext_cert_on_wire"] = e.plaintext_cert_on_wire;
    j["device_signs"] = e.device_signs;
    j["file_signs"] = e.file_signs;
    return j;
}

ordered_json trace_record_json(const netsim::TraceRecord &t)
{
    ordered_json j;
    j["seq"] = t.seq;
    j["principal"] = t.principal;
    j["role"] = t.role;
    j["action"] = t.action;
    j["message"] = t.message;
    j["from"] = t.from;
    j["to"] = t.to;
    j["delta"] = counters_json(t.delta);
    j["step"] = t.step;
    j["detail"] = t.detail;
    return j;
}

// display width of a string holding ASCII plus the two glyphs
std::size_t display_width(const std::string &s)
{
    std::size_t w = 0;
    for (unsigned char c : s)
        if ((c & 0xc0) != 0x80)
            ++w;
    return w;
}

std::string pad(const std::string &s, std::size_t width)
{
    std::size_t w = display_width(s);
    return s + std::string(width > w ? width - w : 0, ' ');
}

const char *const kColumns[] = {"SA/KE protection", "CERT/SIG protection", "DoS prevention", "certificate storage"};
constexpr std::size_t kVariantWidth = 10;
constexpr std::size_t kCellWidth = 21;

std::string scenario_list(const MatrixRow &row)
{
    std::string s;
    for (const auto &name : row.scenarios)
        s += (s.empty() ? "" : " ") + name;
    return s;
}

} // namespace

std::string report_json(const netsim::ScenarioReport &r, int indent)
{
    ordered_json j;
    j["scenario"] = r.scenario;
    j["variant"] = r.variant;
    j["seed"] = r.seed;
    j["suite"] = r.suite;
    j["dh_group"] = r.dh_group;
    j["cipher_algorithm_id"] = r.cipher_algorithm_id;

    ordered_json counters = ordered_json::object();
    for (const auto &[name, c] : r.counters)
        counters[name] = counters_json(c);
    j["counters"] = counters;

    ordered_json pairs = ordered_json::array();
    for (const auto &p : r.pairs)
        pairs.push_back({{"initiator", p.initiator},
                         {"responder", p.responder},
                         {"initiator_state", p.initiator_state},
                         {"responder_state", p.responder_state},
                         {"established", p.established},
                         {"skeyid_match", p.skeyid_match}});
    j["pairs"] = pairs;

    ordered_json findings = ordered_json::array();
    for (const auto &f : r.observer_findings)
        findings.push_back(
            {{"message_index", f.message_index}, {"knowledge", f.knowledge}, {"payload", f.payload}, {"hex", f.hex}});
    j["observer_findings"] = findings;

    ordered_json failures = ordered_json::array();
    for (const auto &f : r.failure_trace)
        failures.push_back({{"seq", f.seq},
                            {"principal", f.principal},
                            {"role", f.role},
                            {"message", f.message},
                            {"step", f.step},
                            {"detail", f.detail},
                            {"injected", f.injected},
                            {"sig_verifies_total", f.sig_verifies_total}});
    j["failure_trace"] = failures;

    ordered_json wire = ordered_json::array();
    for (const auto &w : r.wire)
        wire.push_back({{"index", w.index},
                        {"from", w.from},
                        {"to", w.to},
                        {"message", w.message},
                        {"injected", w.injected},
                        {"tampered", w.tampered},
                        {"size", w.size},
                        {"layout", w.layout}});
    j["wire"] = wire;

    j["network"] = {{"sent", r.network.sent},
                    {"delivered", r.network.delivered},
                    {"undeliverable", r.network.undeliverable},
                    {"tampered", r.network.tampered},
                    {"replayed", r.network.replayed}};
    j["evidence"] = evidence_json(r.evidence);
    j["verdicts"] = verdicts_json(r.verdicts);
    j["trace_events"] = r.trace.size();
    return j.dump(indent) + "\n";
}

std::string trace_jsonl(const netsim::ScenarioReport &r)
{
    std::string out;
    for (const auto &t : r.trace)
        out += trace_record_json(t).dump() + "\n";
    return out;
}

std::string report_text(const netsim::ScenarioReport &r)
{
    std::ostringstream os;
    os << "scenario " << r.scenario << " (" << r.variant << ", seed " << r.seed << ", " << r.dh_group << ")\n";
    os << "\ncounters\n";
    os << "  " << pad("principal", 12) << pad("dh_ops", 8) << pad("modexps", 9) << pad("sig_ver", 9)
       << pad("dec_fail", 10) << pad("pre_dh_rej", 12) << pad("dev_ops", 9) << pad("dev_sign", 10) << "file_sign\n";
    for (const auto &[name, c] : r.counters)
        os << "  " << pad(name, 12) << pad(std::to_string(c.dh_ops), 8) << pad(std::to_string(c.modexps), 9)
           << pad(std::to_string(c.sig_verifies), 9) << pad(std::to_string(c.decrypt_failures), 10)
           << pad(std::to_string(c.messages_rejected_pre_dh), 12) << pad(std::to_string(c.device_ops), 9)
           << pad(std::to_string(c.device_signs), 10) << c.file_signs << "\n";

    if (!r.pairs.empty()) {
        os << "\nhandshakes\n";
        for (const auto &p : r.pairs)
            os << "  " << p.initiator << " -> " << p.responder << ": " << p.initiator_state << "/"
               << p.responder_state << (p.established ? (p.skeyid_match ? ", SKEYID match" : ", SKEYID MISMATCH") : "")
               << "\n";
    }

    os << "\nnetwork: " << r.network.sent << " sent, " << r.network.delivered << " delivered, "
       << r.network.undeliverable << " undeliverable, " << r.network.tampered << " tampered, " << r.network.replayed
       << " replayed\n";

    if (r.evidence.flood_sent > 0)
        os << "flood: " << r.evidence.flood_sent << " forged, responder dh_ops=" << r.evidence.flood_dh_ops
           << ", rejected_pre_dh=" << r.evidence.flood_rejected_pre_dh << "\n";

    os << "\nfailure trace";
    if (r.failure_trace.empty())
        os << ": none\n";
    else
        os << " (" << r.failure_trace.size() << ")\n";
    constexpr std::size_t kShown = 10;
    for (std::size_t i = 0; i < r.failure_trace.size() && i < kShown; ++i) {
        const auto &f = r.failure_trace[i];
        os << "  #" << f.seq << " " << f.principal << " " << f.role << " msg" << f.message << " step=" << f.step
           << (f.injected ? " [injected]" : "") << " sig_verifies_total=" << f.sig_verifies_total << " : "
           << f.detail << "\n";
    }
    if (r.failure_trace.size() > kShown)
        os << "  ... " << r.failure_trace.size() - kShown << " more\n";

    if (!r.observer_findings.empty()) {
        os << "\nobserver findings (" << r.observer_findings.size() << ")\n";
        for (std::size_t i = 0; i < r.observer_findings.size() && i < kShown * 2; ++i) {
            const auto &f = r.observer_findings[i];
            std::string hex = f.hex.size() > 48 ? f.hex.substr(0, 48) + "..." : f.hex;
            os << "  msg#" << f.message_index << " [" << f.knowledge << "] " << f.payload << " " << hex << "\n";
        }
    }

    os << "\nverdicts\n";
    const auto &v = r.verdicts;
    auto line = [&](const char *name, const std::optional<bool> &b) {
        os << "  " << pad(name, 22) << (b ? (*b ? "supported" : "not supported") : "no evidence") << "\n";
    };
    line(kColumns[0], v.sa_ke_protection);
    line(kColumns[1], v.cert_sig_protection);
    line(kColumns[2], v.dos_prevention);
    os << "  " << pad(kColumns[3], 22) << v.certificate_storage.value_or("no evidence") << "\n";
    return os.str();
}

MatrixResult run_matrix(std::uint64_t seed, bool dos_gate)
{
    MatrixResult result;
    result.seed = seed;
    for (auto variant : {protocol::Variant::Baseline, protocol::Variant::Improved}) {
        MatrixRow row;
        row.variant = std::string(protocol::variant_name(variant));
        std::vector<netsim::ScenarioReport> reports;
        for (auto &scenario : netsim::matrix_battery(variant, seed)) {
            scenario.dos_gate = dos_gate;
            row.scenarios.push_back(scenario.name);
            reports.push_back(netsim::run_scenario(scenario));
        }
        row.verdicts = netsim::verdicts_from_trace(reports);
        result.rows.push_back(std::move(row));
    }
    return result;
}

MatrixResult expected_matrix(std::uint64_t seed)
{
    MatrixResult m;
    m.seed = seed;
    std::vector<std::string> names;
    for (const auto &s : netsim::matrix_battery(protocol::Variant::Baseline, seed))
        names.push_back(s.name);
    m.rows.push_back({"baseline", {false, false, false, "file"}, names});
    m.rows.push_back({"improved", {true, true, true, "device"}, names});
    return m;
}

bool matches_expected(const MatrixResult &result) { return result == expected_matrix(result.seed); }

std::string matrix_json(const MatrixResult &m, int indent)
{
    ordered_json j;
    j["battery"] = m.battery;
    j["seed"] = m.seed;
    ordered_json rows = ordered_json::array();
    for (const auto &row : m.rows) {
        ordered_json r;
        r["variant"] = row.variant;
        r["verdicts"] = verdicts_json(row.verdicts);
        r["scenarios"] = row.scenarios;
        rows.push_back(r);
    }
    j["rows"] = rows;
    j["matches_expected"] = matches_expected(m);
    return j.dump(indent) + "\n";
}

MatrixResult matrix_from_json(std::string_view text)
{
    MatrixResult m;
    try {
        auto j = ordered_json::parse(text);
        m.battery = j.at("battery").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto &r : j.at("rows")) {
            MatrixRow row;
            row.variant = r.at("variant").get<std::string>();
            const auto &v = r.at("verdicts");
            row.verdicts.sa_ke_protection = verdict_from(v.at("sa_ke_protection"));
            row.verdicts.cert_sig_protection = verdict_from(v.at("cert_sig_protection"));
            row.verdicts.dos_prevention = verdict_from(v.at("dos_prevention"));
            if (!v.at("certificate_storage").is_null())
                row.verdicts.certificate_storage = v.at("certificate_storage").get<std::string>();
            row.scenarios = r.at("scenarios").get<std::vector<std::string>>();
            m.rows.push_back(std::move(row));
        }
    } catch (const ordered_json::exception &e) {
        throw Error(Errc::ConfigError, std::string("bad matrix document: ") + e.what());
    }
    return m;
}

std::string cell(const std::optional<bool> &supported, bool ascii)
{
    if (!supported)
        return "-";
    if (ascii)
        return *supported ? "o" : "x";
    return *supported ? "○" : "×";
}

std::string matrix_table(const MatrixResult &m, bool ascii)
{
    std::ostringstream os;
    os << pad("", kVariantWidth);
    for (const char *c : kColumns)
        os << pad(c, kCellWidth);
    os << "\n";
    for (const auto &row : m.rows) {
        const auto &v = row.verdicts;
        os << pad(row.variant, kVariantWidth) << pad(cell(v.sa_ke_protection, ascii), kCellWidth)
           << pad(cell(v.cert_sig_protection, ascii), kCellWidth) << pad(cell(v.dos_prevention, ascii), kCellWidth)
           << v.certificate_storage.value_or("-") << "\n";
    }
    os << "\n" << cell(true, ascii) << " supported  " << cell(false, ascii) << " not supported\n";
    os << "battery " << m.battery << "  seed " << m.seed << "\n";
    for (const auto &row : m.rows)
        os << "scenarios " << row.variant << ": " << scenario_list(row) << "\n";
    os << (matches_expected(m) ? "matches expected pattern\n" : "DOES NOT match expected pattern\n");
    return os.str();
}

MatrixResult matrix_from_table(std::string_view text)
{
    auto parse_cell = [](const std::string &c) -> std::optional<bool> {
        if (c == "o" || c == "○")
            return true;
        if (c == "x" || c == "×")
            return false;
        return std::nullopt;
    };

    MatrixResult m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::getline(in, line);  // column headings
    while (std::getline(in, line) && !line.empty()) {
        std::istringstream fields(line);
        MatrixRow row;
        std::string a, b, c, storage;
        fields >> row.variant >> a >> b >> c >> storage;
        row.verdicts = {parse_cell(a), parse_cell(b), parse_cell(c),
                        storage == "-" ? std::nullopt : std::optional<std::string>(storage)};
        m.rows.push_back(std::move(row));
    }
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string word;
        fields >> word;
        if (word == "battery") {
            std::string seed_word;
            fields >> m.battery >> seed_word >> m.seed;
        } else if (word == "scenarios") {
            std::string variant;
            fields >> variant;
            variant.pop_back();  // trailing ':'
            for (auto &row : m.rows)
                if (row.variant == variant)
                    for (std::string name; fields >> name;)
                        row.scenarios.push_back(name);
        }
    }
    return m;
}

} // namespace ikeusb::report
