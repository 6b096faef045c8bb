#include "gridmga/hitl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

std::string to_string(HitlVariant v) {
    switch (v) {
        case HitlVariant::baseline: return "baseline";
        case HitlVariant::v1: return "v1";
        case HitlVariant::v2: return "v2";
    }
    return "unknown";
}

HitlVariant parse_variant(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "baseline") return HitlVariant::baseline;
    if (lower == "v1") return HitlVariant::v1;
    if (lower == "v2") return HitlVariant::v2;
    throw DomainError("unknown feedback variant '" + std::string(s) + "'");
}

std::string round_label(HitlVariant v) { return "hitl-" + to_string(v); }

void validate_ranking(const AlternativeSet& set, const RankingFeedback& ranking) {
    if (ranking.ranked_ids.empty()) throw DomainError("ranking is empty");
    std::set<std::size_t> seen;
    for (auto id : ranking.ranked_ids) {
        if (id >= set.size())
            throw DomainError("ranking references alternative " + std::to_string(id) + " of a set of " +
                              std::to_string(set.size()));
        if (!seen.insert(id).second) throw DomainError("ranking lists alternative " + std::to_string(id) + " twice");
    }
}

void HitlParams::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("a and b must be finite and non-negative");
}

namespace {

std::size_t dims(const AlternativeSet& set) {
    if (set.alternatives.empty()) throw DomainError("alternative set is empty");
    const auto n = set.alternatives.front().topology.size();
    for (const auto& a : set.alternatives)
        if (a.topology.size() != n) throw DomainError("alternatives disagree on topology size");
    return n;
}

WeightVector feedback(std::vector<double> values) { return {std::move(values), WeightKind::feedback}; }

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

std::vector<double> mean_topology(const AlternativeSet& set) {
    const auto n = dims(set);
    std::vector<double> mean(n, 0.0);
    for (const auto& a : set.alternatives)
        for (std::size_t j = 0; j < n; ++j) mean[j] += a.topology[j];
    for (auto& m : mean) m /= static_cast<double>(set.size());
    return mean;
}

std::vector<double> mean_ranked_topology(const AlternativeSet& set, const RankingFeedback& ranking) {
    validate_ranking(set, ranking);
    const auto n = dims(set);
    std::vector<double> mean(n, 0.0);
    for (auto id : ranking.ranked_ids)
        for (std::size_t j = 0; j < n; ++j) mean[j] += set.alternatives[id].topology[j];
    for (auto& m : mean) m /= static_cast<double>(ranking.ranked_ids.size());
    return mean;
}

std::vector<std::vector<double>> baseline_deltas(const AlternativeSet& set, const RankingFeedback& ranking) {
    validate_ranking(set, ranking);
    const auto mean = mean_topology(set);
    std::vector<std::vector<double>> out;
    for (auto id : ranking.ranked_ids) {
        std::vector<double> d(mean.size());
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = mean[j] - set.alternatives[id].topology[j];
        out.push_back(std::move(d));
    }
    return out;
}

double threshold_weight(double delta, double tau) {
    if (delta > tau) return 1.0;
    if (delta < -tau) return -1.0;
    return 0.0;
}

std::vector<WeightVector> encode_feedback_baseline(const AlternativeSet& set, const RankingFeedback& ranking,
                                                   double tau) {
    const auto deltas = baseline_deltas(set, ranking);
    std::vector<WeightVector> out;
    std::vector<double> sum(deltas.front().size(), 0.0);
    for (const auto& d : deltas) {
        std::vector<double> w(d.size());
        for (std::size_t j = 0; j < d.size(); ++j) {
            w[j] = threshold_weight(d[j], tau);
            sum[j] += w[j];
        }
        out.push_back(feedback(std::move(w)));
    }
    out.push_back(feedback(std::move(sum)));
    return out;
}

WeightVector encode_feedback_v1(const AlternativeSet& set, const RankingFeedback& ranking, double tau) {
    auto w = encode_feedback_v2(set, ranking);
    for (auto& v : w.values) v = threshold_weight(v, tau);
    return w;
}

WeightVector encode_feedback_v2(const AlternativeSet& set, const RankingFeedback& ranking) {
    const auto top = mean_ranked_topology(set, ranking);
    auto all = mean_topology(set);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] -= top[j];
    return feedback(std::move(all));
}

std::vector<WeightVector> encode_feedback(const AlternativeSet& set, const RankingFeedback& ranking,
                                          const HitlParams& params) {
    params.validate();
    switch (params.variant) {
        case HitlVariant::baseline: return encode_feedback_baseline(set, ranking, params.tau);
        case HitlVariant::v1: return {encode_feedback_v1(set, ranking, params.tau)};
        case HitlVariant::v2: return {encode_feedback_v2(set, ranking)};
    }
    return {};
}

ObjectiveSpec compose_hitl_objective(const WeightVector& w_d, const WeightVector& w_hitl, double a, double b,
                                     double f_star, bool* feedback_dropped) {
    if (w_d.values.size() != w_hitl.values.size()) throw DomainError("weight vectors differ in length");
    if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("a and b must be non-negative");
    const double nd = norm2(w_d.values);
    if (nd == 0.0) throw DomainError("diversity weights have zero norm");
    const double nh = norm2(w_hitl.values);
    ObjectiveSpec obj;
    obj.slack_coefficient = augmentation_coefficient(f_star);
    obj.z_coefficients.resize(w_d.values.size());
    for (std::size_t j = 0; j < w_d.values.size(); ++j) {
        obj.z_coefficients[j] = a * w_d.values[j] / nd;
        if (nh > 0.0) obj.z_coefficients[j] += b * w_hitl.values[j] / nh;
    }
    if (feedback_dropped) *feedback_dropped = nh == 0.0;
    return obj;
}

HitlRound run_hitl_round(const ReconfigModel& model, const AlternativeSet& set, const RankingFeedback& ranking,
                         const HitlParams& params, std::uint64_t seed, const SolverSettings& settings,
                         std::size_t workers) {
    params.validate();
    HitlRound round;
    round.feedback = encode_feedback(set, ranking, params);
    for (const auto& w : round.feedback)
        if (norm2(w.values) == 0.0) round.feedback_dropped = true;
    if (round.feedback_dropped)
        spdlog::warn("{}: a feedback vector has zero norm, those solves fall back to plain MGA",
                     round_label(params.variant));

    const std::size_t n = model.z_count();
    auto solved = solve_batch(
        model, params.round_count,
        [&](std::size_t i) {
            const auto w_d = sample_diversity_weights(n, seed, i);
            return compose_hitl_objective(w_d, round.feedback[i % round.feedback.size()], params.a, params.b,
                                          set.f_star);
        },
        set.f_star, set.epsilon, settings, workers);
    const auto label = round_label(params.variant);
    for (std::size_t i = 0; i < solved.size(); ++i) {
        solved[i].weight_seed = seed;
        solved[i].weight_index = i;
        solved[i].round = label;
    }
    std::vector<Topology> reference;
    for (const auto& a : set.alternatives) reference.push_back(a.topology);
    flag_unique(solved, reference);

    round.set.alternatives = std::move(solved);
    round.set.f_star = set.f_star;
    round.set.epsilon = set.epsilon;
    round.set.seed = seed;
    round.set.label = label;
    return round;
}

}  // namespace gridmga
