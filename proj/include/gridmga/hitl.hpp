#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridmga/mga.hpp"

namespace gridmga {

enum class HitlVariant : std::uint8_t { baseline, v1, v2 };

std::string to_string(HitlVariant v);
/// "baseline", "v1", "v2"; throws DomainError otherwise.
HitlVariant parse_variant(std::string_view s);
/// Round label of alternatives produced by a variant, e.g. "hitl-v2".
std::string round_label(HitlVariant v);

/// Alternative positions in a set, best first.
struct RankingFeedback {
    std::vector<std::size_t> ranked_ids;
    std::string source;
};

/// Throws DomainError for an empty ranking, repeated ids or ids outside the set.
void validate_ranking(const AlternativeSet& set, const RankingFeedback& ranking);

struct HitlParams {
    HitlVariant variant = HitlVariant::v2;
    double tau = 0.15;
    double a = 1.0;
    double b = 1.0;
    std::size_t round_count = 100;

    void validate() const;
};

/// Per z-dimension mean over all alternatives of the set.
std::vector<double> mean_topology(const AlternativeSet& set);
/// Per z-dimension mean over the ranked alternatives.
std::vector<double> mean_ranked_topology(const AlternativeSet& set, const RankingFeedback& ranking);

/// delta_k = mean over the set minus z of the k-th ranked alternative, one row per k.
std::vector<std::vector<double>> baseline_deltas(const AlternativeSet& set, const RankingFeedback& ranking);

/// +1 above tau, -1 below -tau, 0 inside the dead band.
double threshold_weight(double delta, double tau);

/// One thresholded vector per ranked alternative, then their sum (|K| + 1 vectors).
std::vector<WeightVector> encode_feedback_baseline(const AlternativeSet& set, const RankingFeedback& ranking,
                                                   double tau);
/// Thresholded difference between the set mean and the ranked mean.
WeightVector encode_feedback_v1(const AlternativeSet& set, const RankingFeedback& ranking, double tau);
/// Unthresholded difference between the set mean and the ranked mean.
WeightVector encode_feedback_v2(const AlternativeSet& set, const RankingFeedback& ranking);
/// Dispatches on params.variant.
std::vector<WeightVector> encode_feedback(const AlternativeSet& set, const RankingFeedback& ranking,
                                          const HitlParams& params);

/// z-coefficients a w_d/|w_d| + b w_hitl/|w_hitl| with the augmentation slack
/// coefficient. A zero w_hitl drops the feedback term and sets *feedback_dropped.
ObjectiveSpec compose_hitl_objective(const WeightVector& w_d, const WeightVector& w_hitl, double a, double b,
                                     double f_star, bool* feedback_dropped = nullptr);

struct HitlRound {
    AlternativeSet set;
    std::vector<WeightVector> feedback;
    /// Some feedback vector had zero norm; those solves were plain MGA.
    bool feedback_dropped = false;
};

/// Generates params.round_count alternatives. Alternative i composes a fresh
/// w_d (seed, i) with feedback vector i mod |feedback|. Uniqueness is judged
/// against earlier round members and every alternative of `set`.
HitlRound run_hitl_round(const ReconfigModel& model, const AlternativeSet& set, const RankingFeedback& ranking,
                         const HitlParams& params, std::uint64_t seed, const SolverSettings& settings,
                         std::size_t workers = 0);

}  // namespace gridmga
