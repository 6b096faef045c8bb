#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridmga/reconfig_model.hpp"

namespace gridmga {

enum class WeightKind : std::uint8_t { diversity, feedback, composed };

struct WeightVector {
    std::vector<double> values;
    WeightKind kind = WeightKind::diversity;
};

/// n i.i.d. uniform values on [0, 1), a pure function of (seed, index).
WeightVector sample_diversity_weights(std::size_t n, std::uint64_t seed, std::uint64_t index);

/// An ordered set of alternatives; positions are the ids used by rankings.
struct AlternativeSet {
    std::vector<Alternative> alternatives;
    double f_star = 0.0;
    double epsilon = 0.05;
    std::uint64_t seed = 0;
    std::string label = "mga";

    std::size_t size() const { return alternatives.size(); }
};

struct MgaOptions {
    /// Parallel solves; 0 picks the hardware concurrency.
    std::size_t workers = 0;
    /// Prepended as alternative 0 when set.
    std::optional<Alternative> least_cost;
};

/// Solves `count` alternatives in parallel; objective i comes from `objective_for(i)`.
/// Results are ordered by i regardless of completion order. The first failure
/// stops the batch and is rethrown.
std::vector<Alternative> solve_batch(const ReconfigModel& model, std::size_t count,
                                     const std::function<ObjectiveSpec(std::size_t)>& objective_for, double f_star,
                                     double epsilon, const SolverSettings& settings, std::size_t workers);

/// Sets `unique` on each alternative: no earlier alternative and no `reference`
/// topology shares its topology.
void flag_unique(std::vector<Alternative>& alternatives, std::span<const Topology> reference = {});

AlternativeSet generate_mga_set(const ReconfigModel& model, double f_star, double epsilon, std::size_t count,
                                std::uint64_t seed, const SolverSettings& settings, const MgaOptions& options = {});

}  // namespace gridmga
