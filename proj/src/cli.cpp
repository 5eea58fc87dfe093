#include "ikeusb/cli.hpp"
#include "ikeusb/error.hpp"
#include "ikeusb/netsim.hpp"
#include "ikeusb/report.hpp"
#include "ikeusb/udp_bridge.hpp"

#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace ikeusb::cli {

namespace {

enum class Format { Table, Structured };

struct CliConfig {
    std::string variant = "improved";
    std::string scenario_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string format = "table";
    int verbosity = 0;
    std::string no_token;
    bool udp = false;
    std::string udp_role = "both";
    std::uint16_t udp_port = 50500;
    std::string trace_out;
    bool ascii = false;
    bool disable_dos_gate = false;
};

Format parse_format(const std::string &f) { return f == "structured" ? Format::Structured : Format::Table; }

void write_trace(const std::string &path, const std::string &jsonl)
{
    if (path.empty())
        return;
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::ConfigError, "cannot write trace file " + path);
    f << jsonl;
}

std::string short_hex(ByteView b, std::size_t n = 16)
{
    std::string h = to_hex(b.first(std::min(n, b.size())));
    return b.size() > n ? h + "..." : h;
}

std::string failure_line(const std::string &step, const std::string &detail)
{
    if (step == protocol::fail_step_name(protocol::FailStep::NoDevice))
        return "negotiation stopped: no device";
    return "negotiation stopped: " + step + " (" + detail + ")";
}

int cmd_handshake_memory(const CliConfig &c, std::ostream &out)
{
    auto variant = protocol::parse_variant(c.variant);
    auto scenario = netsim::default_handshake_scenario(variant, c.seed);
    scenario.adversary.clear();
    if (!c.no_token.empty()) {
        std::string who = c.no_token;
        if (who == "initiator")
            who = scenario.handshakes[0].initiator;
        else if (who == "responder")
            who = scenario.handshakes[0].responder;
        bool found = false;
        for (auto &p : scenario.principals)
            if (p.name == who) {
                p.has_token = false;
                found = true;
            }
        if (!found)
            throw Error(Errc::ConfigError, "--no-token: unknown principal '" + c.no_token + "'");
    }

    auto r = netsim::run_scenario(scenario);
    write_trace(c.trace_out, report::trace_jsonl(r));
    const auto &pair = r.pairs.at(0);
    const bool ok = pair.established && pair.skeyid_match;

    if (parse_format(c.format) == Format::Structured) {
        out << report::report_json(r);
        return ok ? kExitOk : kExitProtocol;
    }

    out << "handshake " << r.variant << ", seed " << r.seed << ", group " << r.dh_group << "\n";
    out << "suite " << r.suite << "\n\n";
    for (const auto &w : r.wire)
        out << "  " << w.message << "  " << w.from << " -> " << w.to << "  " << w.size << "B  " << w.layout << "\n";
    if (r.wire.empty())
        out << "  (nothing sent)\n";
    out << "\n";
    if (ok) {
        out << "established: " << pair.initiator << " and " << pair.responder << " agree on SKEYID\n";
    } else {
        for (const auto &f : r.failure_trace)
            out << f.principal << " (" << f.role << "): " << failure_line(f.step, f.detail) << "\n";
        if (r.failure_trace.empty())
            out << "negotiation incomplete: " << pair.initiator_state << "/" << pair.responder_state << "\n";
    }
    if (c.verbosity > 0)
        out << "\n" << report::report_text(r);
    return ok ? kExitOk : kExitProtocol;
}

int cmd_handshake_udp(const CliConfig &c, std::ostream &out)
{
    udp::UdpOptions o;
    o.variant = protocol::parse_variant(c.variant);
    o.seed = c.seed;
    o.role = udp::parse_endpoint_role(c.udp_role);
    o.port = c.udp_port;
    if (c.no_token == "initiator" || c.no_token == "alice")
        o.initiator_token = false;
    else if (c.no_token == "responder" || c.no_token == "bob")
        o.responder_token = false;
    else if (!c.no_token.empty())
        throw Error(Errc::ConfigError, "--no-token: unknown principal '" + c.no_token + "'");
    if (!c.trace_out.empty())
        throw Error(Errc::ConfigError, "--trace-out is not available with --udp");

    auto res = udp::run_udp_handshake(o);

    bool ok = true;
    for (const auto *e : {&res.initiator, &res.responder})
        if (*e)
            ok = ok && (*e)->state == protocol::State::Established;
    if (ok && res.initiator && res.responder)
        ok = res.initiator->skeyid && res.responder->skeyid && *res.initiator->skeyid == *res.responder->skeyid;

    if (parse_format(c.format) == Format::Structured) {
        nlohmann::ordered_json j;
        j["mode"] = "udp";
        j["variant"] = c.variant;
        j["seed"] = c.seed;
        j["port"] = c.udp_port;
        nlohmann::ordered_json ladder = nlohmann::ordered_json::array();
        for (const auto &d : res.ladder)
            ladder.push_back({{"message", d.message},
                              {"from", d.from},
                              {"to", d.to},
                              {"size", d.bytes.size()},
                              {"layout", netsim::wire_layout(d.bytes)},
                              {"hex", to_hex(d.bytes)}});
        j["ladder"] = ladder;
        for (const auto &[key, e] : {std::pair{"initiator", &res.initiator}, std::pair{"responder", &res.responder}}) {
            if (!*e)
                continue;
            const auto &ep = **e;
            nlohmann::ordered_json je;
            je["principal"] = ep.principal;
            je["state"] = protocol::state_name(ep.state);
            je["failure_step"] = ep.failure ? protocol::fail_step_name(ep.failure->step) : "";
            je["failure_detail"] = ep.failure ? ep.failure->detail : "";
            je["timed_out"] = ep.timed_out;
            je["skeyid"] = ep.skeyid ? to_hex(ep.skeyid->skeyid) : "";
            j[key] = je;
        }
        j["ok"] = ok;
        out << j.dump(2) << "\n";
        return ok ? kExitOk : kExitProtocol;
    }

    out << "handshake " << c.variant << " over udp " << "127.0.0.1:" << c.udp_port << " (" << c.udp_role
        << "), seed " << c.seed << "\n\n";
    for (const auto &d : res.ladder)
        out << "  " << d.message << "  " << d.from << " -> " << d.to << "  " << d.bytes.size() << "B  "
            << netsim::wire_layout(d.bytes) << "\n";
    out << "\n";
    for (const auto *e : {&res.initiator, &res.responder}) {
        if (!*e)
            continue;
        const auto &ep = **e;
        out << ep.principal << ": " << protocol::state_name(ep.state);
        if (ep.timed_out)
            out << " (timed out)";
        if (ep.failure)
            out << ", " << failure_line(std::string(protocol::fail_step_name(ep.failure->step)), ep.failure->detail);
        if (ep.skeyid)
            out << ", SKEYID " << short_hex(ep.skeyid->skeyid);
        out << "\n";
    }
    return ok ? kExitOk : kExitProtocol;
}

int cmd_attack(const CliConfig &c, std::ostream &out)
{
    auto scenario = netsim::load_scenario(c.scenario_path);
    if (c.seed_given)
        scenario.seed = c.seed;
    auto r = netsim::run_scenario(scenario);
    write_trace(c.trace_out, report::trace_jsonl(r));
    if (parse_format(c.format) == Format::Structured)
        out << report::report_json(r);
    else
        out << report::report_text(r);
    return kExitOk;
}

int cmd_matrix(const CliConfig &c, std::ostream &out)
{
    auto m = report::run_matrix(c.seed, !c.disable_dos_gate);
    if (parse_format(c.format) == Format::Structured)
        out << report::matrix_json(m);
    else
        out << report::matrix_table(m, c.ascii);
    return report::matches_expected(m) ? kExitOk : kExitProtocol;
}

} // namespace

std::uint64_t default_seed()
{
    if (const char *env = std::getenv(kSeedEnv)) {
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(env, &used, 0);
            if (used == std::string(env).size())
                return v;
        } catch (const std::exception &) {
        }
    }
    return kDefaultSeed;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CliConfig c;
    c.seed = default_seed();

    CLI::App app{"IKE aggressive-mode handshake simulator with a USB security key"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(crypto::suite_id()));

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--seed", c.seed, std::string("RNG seed (default ") + std::to_string(kDefaultSeed) +
                                               ", or $" + kSeedEnv + ")");
        sub->add_option("--format", c.format, "table or structured")
            ->check(CLI::IsMember({"table", "structured"}));
        sub->add_flag("-v,--verbose", c.verbosity, "more detail in table output");
    };

    auto *hs = app.add_subcommand("handshake", "run one alice -> bob handshake");
    add_common(hs);
    hs->add_option("--variant", c.variant, "baseline or improved")->check(CLI::IsMember({"baseline", "improved"}));
    hs->add_option("--no-token", c.no_token, "principal without a security key (name, initiator or responder)");
    hs->add_flag("--udp", c.udp, "send the datagrams over loopback UDP");
    hs->add_option("--udp-role", c.udp_role, "both, initiator or responder")
        ->check(CLI::IsMember({"both", "initiator", "responder"}));
    hs->add_option("--udp-port", c.udp_port, "responder UDP port");
    hs->add_option("--trace-out", c.trace_out, "write the transition trace as JSON lines");

    auto *at = app.add_subcommand("attack", "run an attack scenario file");
    add_common(at);
    at->add_option("--scenario", c.scenario_path, "scenario JSON file")->required();
    at->add_option("--trace-out", c.trace_out, "write the transition trace as JSON lines");

    auto *mx = app.add_subcommand("matrix", "run the scenario battery for both variants");
    add_common(mx);
    mx->add_flag("--ascii", c.ascii, "o/x instead of the circle and cross glyphs");
    mx->add_flag("--disable-dos-gate", c.disable_dos_gate)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    for (auto *sub : {hs, at, mx})
        for (const auto *opt : sub->get_options())
            if (opt->get_name() == "--seed" && opt->count() > 0)
                c.seed_given = true;

    try {
        if (hs->parsed())
            return c.udp ? cmd_handshake_udp(c, out) : cmd_handshake_memory(c, out);
        if (at->parsed())
            return cmd_attack(c, out);
        return cmd_matrix(c, out);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace ikeusb::cli
