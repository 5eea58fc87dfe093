// report.hpp
//
// Rendering of scenario reports and the two-row comparison matrix.  Every
// structured document and table is produced from the same in-memory
// object, so the two forms never disagree.

#ifndef IKEUSB_REPORT_HPP
#define IKEUSB_REPORT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ikeusb/netsim.hpp"

namespace ikeusb::report {

// Deterministic JSON document (fixed key order, no timestamps).
std::string report_json(const netsim::ScenarioReport &report, int indent = 2);

// Transition trace, one JSON object per line.
std::string trace_jsonl(const netsim::ScenarioReport &report);

// Counters, pair outcomes, failure trace and verdicts as plain text.
std::string report_text(const netsim::ScenarioReport &report);

struct MatrixRow {
    std::string variant;
    netsim::VerdictMap verdicts;
    std::vector<std::string> scenarios;  // battery members that fed the row

    bool operator==(const MatrixRow &) const = default;
};

struct MatrixResult {
    std::string battery = std::string(netsim::kBatteryVersion);
    std::uint64_t seed = 0;
    std::vector<MatrixRow> rows;  // baseline, then improved

    bool operator==(const MatrixResult &) const = default;
};

// Runs the battery for both variants.  dos_gate=false is a mutation hook
// for testing the harness.
MatrixResult run_matrix(std::uint64_t seed, bool dos_gate = true);

// The published pattern: baseline (x, x, x, file), improved (o, o, o, device).
MatrixResult expected_matrix(std::uint64_t seed);
bool matches_expected(const MatrixResult &result);

std::string matrix_json(const MatrixResult &result, int indent = 2);
MatrixResult matrix_from_json(std::string_view text);
std::string matrix_table(const MatrixResult &result, bool ascii = false);
// inverse of matrix_table, for round-trip checks
MatrixResult matrix_from_table(std::string_view text);

// "o"/"x" glyph for one boolean cell
std::string cell(const std::optional<bool> &supported, bool ascii);

} // namespace ikeusb::report

#endif
