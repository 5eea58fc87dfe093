#include "ikeusb/cli.hpp"
#include "ikeusb/report.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ikeusb;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "ikeusb");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

bool has(const std::string &text, std::string_view needle) { return text.find(needle) != std::string::npos; }

} // namespace

TEST(Cli, ImprovedHandshakeShowsDevLadder)
{
    auto r = invoke({"handshake", "--variant", "improved", "--seed", "5"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(has(r.out, "DEV(55)"));
    EXPECT_TRUE(has(r.out, "alice -> bob"));
    EXPECT_TRUE(has(r.out, "established: alice and bob agree on SKEYID"));
}

TEST(Cli, BaselineHandshakeShowsCleartextPayloads)
{
    auto r = invoke({"handshake", "--variant", "baseline"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(has(r.out, "SA"));
    EXPECT_TRUE(has(r.out, "CERT"));
    EXPECT_FALSE(has(r.out, "DEV(55)"));
}

TEST(Cli, MissingTokenStopsNegotiation)
{
    auto r = invoke({"handshake", "--no-token", "initiator"});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(has(r.out, "negotiation stopped: no device"));
    auto b = invoke({"handshake", "--no-token", "bob"});
    EXPECT_EQ(b.code, 1);
    EXPECT_TRUE(has(b.out, "bob (responder): negotiation stopped: no device"));
    // a baseline principal never needs the token
    EXPECT_EQ(invoke({"handshake", "--variant", "baseline", "--no-token", "alice"}).code, 0);
}

TEST(Cli, StructuredHandshakeIsJson)
{
    auto r = invoke({"handshake", "--format", "structured", "--seed", "9"});
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["wire"].size(), 3u);
    EXPECT_EQ(invoke({"handshake", "--format", "structured", "--seed", "9"}).out, r.out);
}

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"handshake", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({"handshake", "--variant", "ikev2"}).code, 2);
    EXPECT_EQ(invoke({"attack"}).code, 2);
    auto r = invoke({"attack", "--scenario", "/nonexistent/scenario.json"});
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(has(r.err, "error:"));
    EXPECT_EQ(invoke({"handshake", "--no-token", "carol"}).code, 2);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, AttackWritesTrace)
{
    const std::string trace = ::testing::TempDir() + "ikeusb_trace.jsonl";
    auto r = invoke({"attack", "--scenario", std::string(IKEUSB_SCENARIO_DIR) + "/improved-tamper-ke.json",
                  "--trace-out", trace});
    EXPECT_EQ(r.code, 0) << r.err;
    std::ifstream in(trace);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line); ++lines)
        EXPECT_TRUE(nlohmann::json::accept(line)) << line;
    EXPECT_GT(lines, 0u);
}

TEST(Cli, AttackSeedOverridesFile)
{
    const std::string file = std::string(IKEUSB_SCENARIO_DIR) + "/improved-tamper-ke.json";
    auto a = invoke({"attack", "--scenario", file, "--format", "structured"});
    auto b = invoke({"attack", "--scenario", file, "--format", "structured", "--seed", "12"});
    EXPECT_EQ(nlohmann::json::parse(a.out)["seed"], 11);
    EXPECT_EQ(nlohmann::json::parse(b.out)["seed"], 12);
}

TEST(Cli, MatrixTableAndStructuredAgree)
{
    auto t = invoke({"matrix"});
    EXPECT_EQ(t.code, 0);
    EXPECT_TRUE(has(t.out, "matches expected pattern"));
    auto s = invoke({"matrix", "--format", "structured"});
    EXPECT_EQ(s.code, 0);
    EXPECT_EQ(report::matrix_from_table(t.out), report::matrix_from_json(s.out));
    auto a = invoke({"matrix", "--ascii"});
    EXPECT_EQ(report::matrix_from_table(a.out), report::matrix_from_table(t.out));
}

TEST(Cli, MatrixWithoutGateFails)
{
    auto r = invoke({"matrix", "--disable-dos-gate", "--format", "structured"});
    EXPECT_EQ(r.code, 1);
    auto m = report::matrix_from_json(r.out);
    EXPECT_EQ(m.rows.at(1).variant, "improved");
    EXPECT_EQ(m.rows.at(1).verdicts.dos_prevention, false);
}

TEST(Cli, SeedFromEnvironment)
{
    ::setenv(cli::kSeedEnv, "4242", 1);
    EXPECT_EQ(cli::default_seed(), 4242u);
    ::setenv(cli::kSeedEnv, "not-a-number", 1);
    EXPECT_EQ(cli::default_seed(), cli::kDefaultSeed);
    ::unsetenv(cli::kSeedEnv);
    EXPECT_EQ(cli::default_seed(), cli::kDefaultSeed);
}

TEST(Cli, InstalledBinaryRuns)
{
    const std::string cmd = std::string(IKEUSB_CLI_PATH) + " handshake --variant improved --seed 3 2>&1";
    FILE *p = ::popen(cmd.c_str(), "r");
    ASSERT_NE(p, nullptr);
    std::string output;
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), p))
        output += buf.data();
    int status = ::pclose(p);
    EXPECT_EQ(WEXITSTATUS(status), 0);
    EXPECT_EQ(output, invoke({"handshake", "--variant", "improved", "--seed", "3"}).out);
}
