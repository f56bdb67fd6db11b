#pragma once

#include "iegds/dispatch.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iegds::report {

inline constexpr const char* kOutcomeSchema = "iegds-outcome/v1";
inline constexpr const char* kSummarySchema = "iegds-summary/v1";
inline constexpr const char* kTraceColumns =
    "ell,rho,rho_lo,rho_hi,violation,tau_max,J,potential,violated,stage1_status,stage1_iterations,stage1_seconds";
inline constexpr const char* kDeviationColumns = "pipe,from,to,h,phi,weymouth,delta,undefined_reference";
// seconds is the only timing column
inline constexpr const char* kSummaryColumns =
    "case,model,status,epsilon,epsilon_pct,mean_abs_cost,rho_bar,ell_bar,iterations,violation,mean_abs_dev,"
    "undefined_deviations,seconds,error";
inline constexpr const char* kBaselineColumns =
    "kind,solved,rounds,potential,objective,max_cone_slack,mean_abs_dev,undefined_deviations,seconds,note";

// Shortest round-trip text for doubles; inf and nan spelled out.
std::string num(double v);

nlohmann::json outcome_to_json(const dispatch::Outcome& o, bool include_strategy = true);
void write_trace_csv(std::ostream& os, const std::vector<dispatch::IterationRecord>& trace);
void write_deviations_csv(std::ostream& os, const std::vector<dispatch::Deviation>& devs);
void write_baselines_csv(std::ostream& os, const std::vector<dispatch::BaselineOutcome>& rows);

struct CaseRow {
    std::uint64_t seed = 0;
    std::string model;
    std::string status;  // dispatch status or "error"
    std::optional<double> epsilon;
    double epsilon_pct = 0.0;
    double mean_abs_cost = 0.0;
    double rho_bar = 0.0;
    int ell_bar = 0;
    int iterations = 0;
    double violation = 0.0;
    double mean_abs_dev = 0.0;
    int undefined_deviations = 0;
    double seconds = 0.0;
    std::string error;

    bool success() const { return status == "eps_gne" || status == "exact_gne"; }
};

CaseRow case_row(std::uint64_t seed, const dispatch::Outcome& o);
CaseRow error_row(std::uint64_t seed, const std::string& model, const std::string& message);

struct FiveNumber {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    int n = 0;
};
// Linear interpolation between order statistics; all zero with n = 0 for empty input.
FiveNumber five_number(std::vector<double> v);
nlohmann::json to_json(const FiveNumber& f);

struct BatchSummary {
    std::string network;
    int horizon = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> models;
    std::vector<CaseRow> rows;  // seed-major, models in configured order

    double success_rate() const;
    double success_rate(const std::string& model) const;
};

void write_summary_csv(std::ostream& os, const BatchSummary& s);
nlohmann::json summary_to_json(const BatchSummary& s);
// Throws std::invalid_argument on a malformed document.
BatchSummary summary_from_json(const nlohmann::json& j);

// Per-model statistics of a summary: epsilon percentage over successful runs, rho_bar over
// successful runs, time and mean |deviation| over every run that did not error.
struct ModelStats {
    std::string model;
    int cases = 0;
    int successes = 0;
    FiveNumber epsilon_pct;
    FiveNumber rho_bar;
    FiveNumber seconds;
    FiveNumber mean_abs_dev;
    double mean_of_mean_abs_dev = 0.0;
};
std::vector<ModelStats> model_stats(const BatchSummary& s);

// Throws std::invalid_argument when the summaries cover different networks, horizons, seeds or models.
void check_compatible(const std::vector<BatchSummary>& sums);
// One row per (summary, model); the delta columns are relative to the first summary.
void write_comparison_csv(std::ostream& os, const std::vector<std::string>& names,
                          const std::vector<BatchSummary>& sums);
nlohmann::json boxplot_json(const std::vector<std::string>& names, const std::vector<BatchSummary>& sums);

}  // namespace iegds::report
