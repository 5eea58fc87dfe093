#include "ikeusb/error.hpp"
#include "ikeusb/netsim.hpp"
#include "ikeusb/report.hpp"
#include "ikeusb/udp_bridge.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

using namespace ikeusb;
using namespace ikeusb::netsim;
using protocol::Variant;

namespace {

const std::string kScenarios = IKEUSB_SCENARIO_DIR;

Errc error_code(const std::function<void()> &f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::AuthFailure;
}

const char *kMinimal = R"({
  "name": "t", "variant": "baseline", "seed": 3,
  "principals": [{"name": "alice", "address": 1}, {"name": "bob", "address": 2}],
  "handshakes": [{"initiator": "alice", "responder": "bob"}]
})";

std::string with(std::string_view extra_key_value)
{
    std::string s = kMinimal;
    s.insert(s.rfind('}'), std::string(", ") + std::string(extra_key_value));
    return s;
}

} // namespace

TEST(Scenario, ParsesMinimalFile)
{
    auto c = parse_scenario(kMinimal);
    EXPECT_EQ(c.variant, Variant::Baseline);
    EXPECT_EQ(c.seed, 3u);
    ASSERT_EQ(c.principals.size(), 2u);
    EXPECT_TRUE(c.principals[0].has_token);
    EXPECT_EQ(c.dh_group, "oakley768");
    EXPECT_EQ(parse_scenario(scenario_to_json(c)).name, "t");
}

TEST(Scenario, RejectsMalformedInput)
{
    EXPECT_EQ(error_code([] { parse_scenario("{"); }), Errc::ConfigError);
    EXPECT_EQ(error_code([] { parse_scenario("[]"); }), Errc::ConfigError);
    EXPECT_EQ(error_code([] { parse_scenario(with(R"("colour": "red")")); }), Errc::ConfigError);
    EXPECT_EQ(error_code([] { parse_scenario(with(R"("dh_group": "modp9999")")); }), Errc::ConfigError);
    EXPECT_EQ(error_code([] { parse_scenario(with(R"("adversary": [{"action": "dance"}])")); }),
              Errc::ConfigError);
    EXPECT_EQ(error_code([] {
                  parse_scenario(with(R"("adversary": [{"action": "tamper", "message": 1, "payload": "XX"}])"));
              }),
              Errc::ConfigError);
    EXPECT_EQ(error_code([] { load_scenario(kScenarios + "/does-not-exist.json"); }), Errc::ConfigError);
}

TEST(Scenario, ValidateCatchesInconsistency)
{
    auto c = parse_scenario(kMinimal);
    auto bad = c;
    bad.handshakes[0].responder = "carol";
    EXPECT_EQ(error_code([&] { validate(bad); }), Errc::ConfigError);
    bad = c;
    bad.principals[1].name = "alice";
    EXPECT_EQ(error_code([&] { validate(bad); }), Errc::ConfigError);
    bad = c;
    bad.adversary.push_back(TamperAction{4, {codec::PayloadType::Ke, std::nullopt}, 0, 1});
    EXPECT_EQ(error_code([&] { validate(bad); }), Errc::ConfigError);
    validate(c);
}

TEST(Scenario, BatteryFilesMatchBuiltInBattery)
{
    for (Variant v : {Variant::Baseline, Variant::Improved}) {
        for (const auto &s : matrix_battery(v, 1729)) {
            const std::string path = kScenarios + "/battery-v1/" + std::string(protocol::variant_name(v)) + "-" +
                                     s.name + ".json";
            EXPECT_EQ(scenario_to_json(load_scenario(path)), scenario_to_json(s)) << path;
        }
    }
}

TEST(Scenario, EveryShippedScenarioRuns)
{
    for (const char *name : {"baseline-flood-forged", "improved-flood-forged", "baseline-tamper-ke",
                             "improved-tamper-ke", "improved-replay-msg1", "improved-insider-observer"}) {
        auto r = run_scenario(load_scenario(kScenarios + "/" + name + ".json"));
        EXPECT_EQ(r.scenario, name);
        EXPECT_EQ(r.network.sent, r.network.delivered + r.network.undeliverable) << name;
    }
}

TEST(Simulation, HonestHandshakeEstablishes)
{
    for (Variant v : {Variant::Baseline, Variant::Improved}) {
        auto r = run_scenario(default_handshake_scenario(v, 77));
        ASSERT_EQ(r.pairs.size(), 1u);
        EXPECT_TRUE(r.pairs[0].established);
        EXPECT_TRUE(r.pairs[0].skeyid_match);
        EXPECT_TRUE(r.failure_trace.empty());
        EXPECT_EQ(r.wire.size(), 3u);
        EXPECT_EQ(r.counters.at("alice").dh_ops, 2u);
        EXPECT_EQ(r.counters.at("bob").dh_ops, 1u);
        EXPECT_EQ(r.evidence.plaintext_cert_on_wire, v == Variant::Baseline);
    }
}

TEST(Simulation, ReportIsDeterministic)
{
    for (Variant v : {Variant::Baseline, Variant::Improved}) {
        for (const auto &s : matrix_battery(v, 99)) {
            EXPECT_EQ(report::report_json(run_scenario(s)), report::report_json(run_scenario(s))) << s.name;
            EXPECT_EQ(report::trace_jsonl(run_scenario(s)), report::trace_jsonl(run_scenario(s))) << s.name;
        }
    }
}

TEST(Simulation, SeedChangesTheTranscript)
{
    auto a = report::report_json(run_scenario(default_handshake_scenario(Variant::Improved, 1)));
    auto b = report::report_json(run_scenario(default_handshake_scenario(Variant::Improved, 2)));
    EXPECT_NE(a, b);
}

TEST(Simulation, FloodCostsOnlyTheBaseline)
{
    auto base = run_scenario(matrix_battery(Variant::Baseline, 5)[1]);
    auto imp = run_scenario(matrix_battery(Variant::Improved, 5)[1]);
    ASSERT_EQ(base.evidence.flood_sent, 1000u);
    EXPECT_EQ(base.counters.at("bob").dh_ops, 1000u);
    EXPECT_EQ(imp.counters.at("bob").dh_ops, 0u);
    EXPECT_EQ(imp.counters.at("bob").messages_rejected_pre_dh, 1000u);
    EXPECT_EQ(imp.evidence.flood_rejected_pre_dh, 1000u);
    EXPECT_EQ(base.verdicts.dos_prevention, false);
    EXPECT_EQ(imp.verdicts.dos_prevention, true);
}

TEST(Simulation, GarbageFloodIsCheapForBoth)
{
    for (Variant v : {Variant::Baseline, Variant::Improved}) {
        auto s = parse_scenario(with(R"("adversary": [{"action": "flood", "count": 50, "target": "bob",
                                        "template": "garbage"}])"));
        s.variant = v;
        s.handshakes.clear();
        auto r = run_scenario(s);
        EXPECT_EQ(r.counters.at("bob").dh_ops, 0u);
    }
}

TEST(Simulation, ReplayedMessageOneIsRejectedByImproved)
{
    auto r = run_scenario(load_scenario(kScenarios + "/improved-replay-msg1.json"));
    EXPECT_TRUE(r.pairs[0].established);
    EXPECT_EQ(r.network.replayed, 1u);
    bool saw_replay = false;
    for (const auto &f : r.failure_trace)
        saw_replay = saw_replay || f.step == "replay";
    EXPECT_TRUE(saw_replay);
}

TEST(Simulation, InsiderObserverReadsEverything)
{
    auto r = run_scenario(load_scenario(kScenarios + "/improved-insider-observer.json"));
    std::set<std::string> recovered;
    for (const auto &f : r.observer_findings)
        if (f.knowledge == "key1+token")
            recovered.insert(f.payload);
    for (const char *p : {"serial", "SA", "KE", "CERT", "SIG"})
        EXPECT_TRUE(recovered.count(p)) << p;
    EXPECT_EQ(r.evidence.observed_none_findings, 0u);
}

TEST(Tamper, PayloadSelectorFlipsOneBodyOctet)
{
    protocol::SessionConfig cfg;
    crypto::Drbg rng(3, "file");
    cfg.identity = "alice";
    cfg.credential = std::make_shared<token::FileCredential>("alice", rng);
    protocol::HandshakeSession i(protocol::Role::Initiator, cfg);
    Bytes m1 = *i.initiator_start();

    auto layout = codec::payload_layout(m1);
    std::size_t ke_body = 0;
    for (const auto &span : layout)
        if (span.type == codec::PayloadType::Ke)
            ke_body = span.body_offset;
    ASSERT_NE(ke_body, 0u);
    Bytes t = tamper_in_flight(m1, {codec::PayloadType::Ke, std::nullopt}, 0, 0x80);
    for (std::size_t k = 0; k < m1.size(); ++k)
        EXPECT_EQ(t[k], k == ke_body ? m1[k] ^ 0x80 : m1[k]) << k;

    Bytes raw = tamper_in_flight(m1, {std::nullopt, 20}, 3, 0xff);
    EXPECT_EQ(raw[23], m1[23] ^ 0xff);
    EXPECT_EQ(error_code([&] { tamper_in_flight(m1, {std::nullopt, m1.size()}, 0, 1); }), Errc::SelectorMiss);
    EXPECT_EQ(error_code([&] { tamper_in_flight(m1, {codec::PayloadType::Cert, std::nullopt}, 0, 1); }),
              Errc::SelectorMiss);
    EXPECT_EQ(error_code([&] { tamper_in_flight(m1, {codec::PayloadType::Ke, std::nullopt}, 4096, 1); }),
              Errc::SelectorMiss);
}

TEST(Tamper, SealedPayloadsAreNotAddressableInClear)
{
    auto d = token::DeploymentConfig::from_seed(3);
    auto tok = token::create_token(to_bytes("AB12345"), d, "alice");
    protocol::SessionConfig cfg;
    cfg.variant = Variant::Improved;
    cfg.identity = "alice";
    cfg.device = token::UsbSlot(tok);
    protocol::HandshakeSession i(protocol::Role::Initiator, cfg);
    Bytes m1 = *i.initiator_start();
    EXPECT_EQ(error_code([&] { tamper_in_flight(m1, {codec::PayloadType::Ke, std::nullopt}, 0, 1); }),
              Errc::SelectorMiss);

    auto key = crypto::kdf_session(d.key1, view(tok->serial()));
    auto offsets = sealed_body_offsets(m1, codec::PayloadType::Ke, key);
    ASSERT_EQ(offsets.size(), 96u);
    for (std::size_t k = 1; k < offsets.size(); ++k)
        EXPECT_EQ(offsets[k], offsets[0] + k);
    EXPECT_LT(offsets.back(), m1.size() - 16);  // ahead of the tag
}

TEST(Tamper, ImprovedDetectsBeforeSignature)
{
    auto b = run_scenario(load_scenario(kScenarios + "/baseline-tamper-ke.json"));
    auto i = run_scenario(load_scenario(kScenarios + "/improved-tamper-ke.json"));
    EXPECT_TRUE(b.evidence.tamper_detected);
    EXPECT_FALSE(b.evidence.tamper_pre_signature);
    EXPECT_EQ(b.evidence.tamper_failure_step, "sig-verify");
    EXPECT_TRUE(i.evidence.tamper_detected);
    EXPECT_TRUE(i.evidence.tamper_pre_signature);
    EXPECT_EQ(i.evidence.tamper_failure_step, "chain");
    ASSERT_FALSE(i.evidence.tamper_targets.empty());
    EXPECT_EQ(i.evidence.tamper_targets[0], "KE(sealed)");
}

TEST(Observe, NoKeysSeesBaselinePayloads)
{
    auto r = run_scenario(default_handshake_scenario(Variant::Baseline, 8));
    std::set<std::string> seen;
    for (const auto &f : r.observer_findings)
        seen.insert(f.payload);
    for (const char *p : {"SA", "KE", "ID", "CERT", "SIG"})
        EXPECT_TRUE(seen.count(p)) << p;
    EXPECT_EQ(observe(Bytes(10, 0), Knowledge::None).size(), 0u);  // undecodable yields nothing
}

TEST(Observe, NoKeysSeesNothingInImproved)
{
    auto r = run_scenario(default_handshake_scenario(Variant::Improved, 8));
    EXPECT_EQ(r.evidence.observed_none_findings, 0u);
    EXPECT_GT(r.evidence.observed_messages, 0u);
    EXPECT_EQ(knowledge_name(Knowledge::HasKey1AndToken), "key1+token");
}

TEST(Verdicts, BatteryYieldsTheTableRows)
{
    std::vector<ScenarioReport> base, imp;
    for (const auto &s : matrix_battery(Variant::Baseline, 1729))
        base.push_back(run_scenario(s));
    for (const auto &s : matrix_battery(Variant::Improved, 1729))
        imp.push_back(run_scenario(s));
    auto vb = verdicts_from_trace(base);
    auto vi = verdicts_from_trace(imp);
    EXPECT_EQ(vb.sa_ke_protection, false);
    EXPECT_EQ(vb.cert_sig_protection, false);
    EXPECT_EQ(vb.dos_prevention, false);
    EXPECT_EQ(vb.certificate_storage, "file");
    EXPECT_EQ(vi.sa_ke_protection, true);
    EXPECT_EQ(vi.cert_sig_protection, true);
    EXPECT_EQ(vi.dos_prevention, true);
    EXPECT_EQ(vi.certificate_storage, "device");

    imp.erase(imp.begin() + 1);  // drop the flood
    EXPECT_EQ(error_code([&] { verdicts_from_trace(imp); }), Errc::IncompleteTrace);
    EXPECT_EQ(error_code([] { verdicts_from_trace({}); }), Errc::IncompleteTrace);
}

TEST(Matrix, TableAndStructuredAgree)
{
    auto m = report::run_matrix(1729);
    EXPECT_TRUE(report::matches_expected(m));
    EXPECT_EQ(report::matrix_from_table(report::matrix_table(m)), m);
    EXPECT_EQ(report::matrix_from_table(report::matrix_table(m, true)), m);
    EXPECT_EQ(report::matrix_from_json(report::matrix_json(m)), m);
    auto j = nlohmann::json::parse(report::matrix_json(m));
    EXPECT_EQ(j["battery"], "battery-v1");
    EXPECT_EQ(j["matches_expected"], true);
}

TEST(Matrix, DisabledGateLosesDosColumn)
{
    auto m = report::run_matrix(1729, false);
    EXPECT_FALSE(report::matches_expected(m));
    EXPECT_EQ(m.rows.at(1).verdicts.dos_prevention, false);
    EXPECT_EQ(report::cell(true, true), "o");
    EXPECT_EQ(report::cell(false, false), "×");
}

TEST(Udp, LoopbackLadderMatchesSimulator)
{
    for (Variant v : {Variant::Baseline, Variant::Improved}) {
        udp::UdpOptions o;
        o.variant = v;
        o.seed = 31;
        o.port = static_cast<std::uint16_t>(50600 + static_cast<int>(v));
        auto res = udp::run_udp_handshake(o);
        ASSERT_TRUE(res.initiator && res.responder);
        EXPECT_EQ(res.initiator->state, protocol::State::Established);
        EXPECT_EQ(res.responder->state, protocol::State::Established);
        ASSERT_TRUE(res.initiator->skeyid && res.responder->skeyid);
        EXPECT_EQ(*res.initiator->skeyid, *res.responder->skeyid);

        auto s = default_handshake_scenario(v, 31);
        s.adversary.clear();
        auto r = run_scenario(s);
        ASSERT_EQ(res.ladder.size(), r.wire.size());
        for (std::size_t k = 0; k < r.wire.size(); ++k) {
            EXPECT_EQ(res.ladder[k].bytes.size(), r.wire[k].size);
            EXPECT_EQ(wire_layout(res.ladder[k].bytes), r.wire[k].layout);
        }
    }
    EXPECT_EQ(udp::parse_endpoint_role("responder"), udp::EndpointRole::Responder);
    EXPECT_EQ(error_code([] { udp::parse_endpoint_role("router"); }), Errc::ConfigError);
}

TEST(Udp, MissingResponderDeviceFailsInitiatorTimesOut)
{
    udp::UdpOptions o;
    o.seed = 4;
    o.port = 50610;
    o.responder_token = false;
    o.timeout_ms = 300;
    auto res = udp::run_udp_handshake(o);
    ASSERT_TRUE(res.responder && res.initiator);
    EXPECT_EQ(res.responder->state, protocol::State::Failed);
    EXPECT_EQ(res.responder->failure->step, protocol::FailStep::NoDevice);
    EXPECT_NE(res.initiator->state, protocol::State::Established);
    EXPECT_TRUE(res.initiator->timed_out);
}
