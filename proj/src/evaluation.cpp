#include "gridmga/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "gridmga/errors.hpp"
#include "gridmga/powerflow.hpp"

namespace gridmga {

Direction direction_of(FunctionId fn) {
    switch (fn) {
        case FunctionId::u1:
        case FunctionId::u2:
        case FunctionId::u6: return Direction::maximize;
        default: return Direction::minimize;
    }
}

std::string to_string(FunctionId fn) { return "u" + std::to_string(static_cast<int>(fn) + 1); }

FunctionId parse_function_id(std::string_view s) {
    if (s.size() == 2 && std::tolower(static_cast<unsigned char>(s[0])) == 'u' && s[1] >= '1' && s[1] <= '6')
        return static_cast<FunctionId>(s[1] - '1');
    throw DomainError("unknown evaluation function '" + std::string(s) + "'");
}

EvalContext make_eval_context(const Alternative& least_cost, SetTarget target, double overload_threshold) {
    if (!(overload_threshold > 0.0 && overload_threshold <= 1.0))
        throw DomainError("overload threshold must lie in (0, 1]");
    EvalContext ctx;
    const auto& t = least_cost.topology;
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (!t[j]) continue;
        ctx.j_spec.push_back(j);
        ctx.s_spec.push_back(j);
        ctx.s_values.push_back(1);
    }
    ctx.s_target = target;
    ctx.base.line_open.assign(t.line_open.size(), 0);
    ctx.base.busbar_split.assign(t.busbar_split.size(), 0);
    ctx.overload_threshold = overload_threshold;
    return ctx;
}

double eval_specific_actions(const Topology& t, const EvalContext& ctx) {
    double n = 0.0;
    for (auto j : ctx.j_spec) {
        if (j >= t.size()) throw DomainError("J_spec index out of range");
        n += t[j];
    }
    return n;
}

double eval_specific_set(const Topology& t, const EvalContext& ctx) {
    for (std::size_t k = 0; k < ctx.s_spec.size(); ++k) {
        const auto j = ctx.s_spec[k];
        if (j >= t.size()) throw DomainError("S_spec index out of range");
        if (t[j] != ctx.target_for(k)) return 0.0;
    }
    return 1.0;
}

double eval_topological_depth(const Topology& t, const EvalContext& ctx) {
    return static_cast<double>(hamming_distance(t, ctx.base));
}

std::vector<double> line_loadings(const Network& net, const Alternative& alt) {
    if (alt.flows_mw.size() != net.branches.size()) throw DomainError("alternative carries no flows for this network");
    const auto switchable = net.switchable_branches();
    std::vector<std::uint8_t> open(net.branches.size(), 0);
    for (std::size_t k = 0; k < switchable.size() && k < alt.topology.line_open.size(); ++k)
        open[switchable[k]] = alt.topology.line_open[k];
    std::vector<double> out(net.branches.size(), 0.0);
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const double lim = net.branches[l].limit_mw;
        if (!(lim > 0.0)) throw DataError("branch " + std::to_string(net.branches[l].id) + " has no positive limit");
        if (!open[l]) out[l] = std::abs(alt.flows_mw[l]) / lim;
    }
    return out;
}

double eval_cumulative_overload(const Network& net, const Alternative& alt, const EvalContext& ctx) {
    double s = 0.0;
    for (double p : line_loadings(net, alt)) s += std::max(0.0, p - ctx.overload_threshold);
    return s;
}

double eval_cumulative_quadratic_load(const Network& net, const Alternative& alt) {
    double s = 0.0;
    for (double p : line_loadings(net, alt)) s += p * p;
    return s;
}

std::optional<std::vector<std::size_t>> find_feasible_order(std::size_t actions,
                                                            const std::function<bool(std::uint32_t)>& feasible) {
    if (actions > 16) throw DomainError("too many switching actions for an exhaustive ordering search");
    if (actions == 0) return std::vector<std::size_t>{};
    std::unordered_map<std::uint32_t, bool> cache;
    auto ok = [&](std::uint32_t mask) {
        auto it = cache.find(mask);
        if (it != cache.end()) return it->second;
        return cache[mask] = feasible(mask);
    };
    std::vector<std::size_t> order(actions);
    std::iota(order.begin(), order.end(), std::size_t{0});
    do {
        std::uint32_t mask = 0;
        bool good = true;
        for (auto a : order) {
            mask |= 1u << a;
            if (!ok(mask)) {
                good = false;
                break;
            }
        }
        if (good) return order;
    } while (std::next_permutation(order.begin(), order.end()));
    return std::nullopt;
}

bool switching_state_feasible(const Network& net, const Alternative& alt, const Topology& state) {
    const auto pf = dc_power_flow(net, state, alt.layouts, alt.dispatch_mw);
    if (!pf.islanded_buses.empty() || !pf.slack_within_bounds) return false;
    for (std::size_t l = 0; l < net.branches.size(); ++l)
        if (std::abs(pf.flows_mw[l]) > net.branches[l].limit_mw * (1.0 + 1e-6)) return false;
    return true;
}

EvalResult eval_switching_sequence(const Network& net, const Alternative& alt) {
    EvalResult r;
    r.fn = FunctionId::u6;
    r.direction = Direction::maximize;
    std::vector<std::size_t> actions;
    for (std::size_t j = 0; j < alt.topology.size(); ++j)
        if (alt.topology[j]) actions.push_back(j);
    Topology base = alt.topology;
    for (std::size_t j = 0; j < base.size(); ++j) base.set(j, 0);
    const auto order = find_feasible_order(actions.size(), [&](std::uint32_t mask) {
        Topology state = base;
        for (std::size_t a = 0; a < actions.size(); ++a)
            if (mask & (1u << a)) state.set(actions[a], 1);
        return switching_state_feasible(net, alt, state);
    });
    r.value = order ? 1.0 : 0.0;
    if (order)
        for (auto a : *order) r.feasible_order.push_back(actions[a]);
    return r;
}

EvalResult evaluate(FunctionId fn, const Network& net, const Alternative& alt, const EvalContext& ctx) {
    EvalResult r;
    r.fn = fn;
    r.direction = direction_of(fn);
    switch (fn) {
        case FunctionId::u1: r.value = eval_specific_actions(alt.topology, ctx); break;
        case FunctionId::u2: r.value = eval_specific_set(alt.topology, ctx); break;
        case FunctionId::u3: r.value = eval_topological_depth(alt.topology, ctx); break;
        case FunctionId::u4:
            r.value = eval_cumulative_overload(net, alt, ctx);
            r.loadings = line_loadings(net, alt);
            break;
        case FunctionId::u5:
            r.value = eval_cumulative_quadratic_load(net, alt);
            r.loadings = line_loadings(net, alt);
            break;
        case FunctionId::u6: return eval_switching_sequence(net, alt);
    }
    return r;
}

std::vector<double> evaluate_set(FunctionId fn, const Network& net, const AlternativeSet& set,
                                 const EvalContext& ctx) {
    std::vector<double> out;
    out.reserve(set.size());
    for (const auto& a : set.alternatives) out.push_back(evaluate(fn, net, a, ctx).value);
    return out;
}

RankingFeedback rank_by_values(const std::vector<double>& values, Direction direction) {
    RankingFeedback r;
    r.ranked_ids.resize(values.size());
    std::iota(r.ranked_ids.begin(), r.ranked_ids.end(), std::size_t{0});
    std::stable_sort(r.ranked_ids.begin(), r.ranked_ids.end(), [&](std::size_t a, std::size_t b) {
        return direction == Direction::minimize ? values[a] < values[b] : values[a] > values[b];
    });
    return r;
}

RankingFeedback rank_alternatives(const AlternativeSet& set, FunctionId fn, const Network& net,
                                  const EvalContext& ctx) {
    auto r = rank_by_values(evaluate_set(fn, net, set, ctx), direction_of(fn));
    r.source = "simulated:" + to_string(fn);
    return r;
}

bool respects_bound(Direction direction, double value, double bound, double tolerance) {
    return direction == Direction::minimize ? value >= bound - tolerance : value <= bound + tolerance;
}

}  // namespace gridmga
