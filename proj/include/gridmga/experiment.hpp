#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridmga/evaluation.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/mga.hpp"
#include "gridmga/reconfig_model.hpp"
#include "gridmga/serialization.hpp"

namespace gridmga {

/// Rates unrated cases from a DC power flow at the case setpoints.
struct LimitDerivation {
    double headroom = 1.0;
    double floor_mw = 1.0;
};

struct SweepSpec {
    bool enabled = false;
    std::vector<double> tau_values{0.05, 0.15, 0.75, 0.95};
    /// (a, b) pairs for the feedback-strength sweep.
    std::vector<std::pair<double, double>> ab_values{{1.0, 0.5}, {1.0, 1.0}, {1.0, 2.0}, {1.0, 4.0}};
    std::size_t reduced_count = 10;
    std::size_t reduced_top_k = 3;
};

struct ExperimentConfig {
    std::filesystem::path case_path;
    double congestion_factor = 1.0;
    std::optional<LimitDerivation> derive_limits;
    std::vector<int> splittable_buses;
    SwitchingOptions switching;
    double epsilon = 0.05;
    std::size_t alt_count = 100;
    /// Alternatives per feedback round; 0 means alt_count.
    std::size_t hitl_count = 0;
    std::size_t top_k = 10;
    std::size_t seeds = 4;
    std::uint64_t base_seed = 1;
    SolverSettings solver;
    double tau = 0.15;
    double a = 1.0;
    double b = 1.0;
    std::vector<FunctionId> functions{std::begin(kAllFunctions), std::end(kAllFunctions)};
    std::vector<HitlVariant> variants{HitlVariant::baseline, HitlVariant::v1, HitlVariant::v2};
    SetTarget u2_target = SetTarget::zero;
    double overload_threshold = 0.9;
    bool compute_bounds = true;
    bool include_least_cost = false;
    std::size_t workers = 0;
    SweepSpec sweeps;

    std::size_t feedback_count() const { return hitl_count ? hitl_count : alt_count; }
    void validate() const;
};

/// Reads a config document. `case` and `congestion_factor` are mandatory;
/// a relative case path resolves against `relative_to`.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& relative_to = {});
Json to_json(const ExperimentConfig& cfg);

/// Loads the case and applies limit derivation, congestion and substation marks.
Network prepare_network(const ExperimentConfig& cfg);

struct AlternativeRecord {
    std::size_t index = 0;
    double cost = 0.0;
    double slack = 0.0;
    bool unique = true;
    std::size_t hamming_to_reference = 0;
    std::string topology;  // flat z bits
    std::map<std::string, double> values;  // by function name
};

struct RoundRecord {
    std::string label;   // mga, hitl-v2, ...
    std::string driver;  // ranking function for feedback rounds, empty for mga
    std::string sweep;   // empty for the main study, e.g. "tau=0.75"
    HitlParams params;
    bool feedback_dropped = false;
    std::vector<AlternativeRecord> alternatives;
};

struct BoundRecord {
    double bound = 0.0;
    double incumbent = 0.0;
    double approximation_gap = 0.0;
};

struct SeedReport {
    std::uint64_t seed = 0;
    double f_star = 0.0;
    std::string least_cost_topology;
    std::string error;
    std::vector<RoundRecord> rounds;
};

struct SummaryRow {
    std::uint64_t seed = 0;
    std::string round;
    std::string driver;
    std::string sweep;
    std::string fn;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct ValuableFlags {
    std::uint64_t seed = 0;
    std::string fn;
    bool mga_valuable = false;
    std::map<std::string, bool> more_valuable;  // by variant label
};

struct ExperimentReport {
    Json config;
    std::map<std::string, BoundRecord> bounds;  // by function name, U6 absent
    std::vector<SeedReport> seeds;
    std::vector<SummaryRow> summary;
    std::vector<ValuableFlags> valuable;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Values compare after rounding to 1e-9.
bool mga_valuable(const std::vector<double>& mga_values);
bool hitl_more_valuable(const std::vector<double>& mga_values, const std::vector<double>& hitl_values,
                        Direction direction);
/// Flags for each seed and function, feedback rounds judged against that seed's MGA round.
std::vector<ValuableFlags> classify_valuable(const ExperimentReport& report);

double median(std::vector<double> values);
std::vector<SummaryRow> summarize(const ExperimentReport& report);

Json to_json(const ExperimentReport& report);
ExperimentReport experiment_report_from_json(const Json& j);

/// Writes alternatives.csv, summary.csv, report.json and series.json.
void export_report(const ExperimentReport& report, const std::filesystem::path& directory);
ExperimentReport read_report(const std::filesystem::path& directory);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace gridmga
