#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gridmga/eval_context.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/network.hpp"
#include "gridmga/reconfig_model.hpp"

namespace gridmga {

struct EvalResult {
    FunctionId fn = FunctionId::u1;
    double value = 0.0;
    Direction direction = Direction::minimize;
    std::vector<double> loadings;                // U4 / U5
    std::vector<std::size_t> feasible_order;     // U6, z-indices in switching order
};

/// J_spec = S_spec = the switching actions of the least-cost alternative.
EvalContext make_eval_context(const Alternative& least_cost, SetTarget target = SetTarget::zero,
                              double overload_threshold = 0.9);

double eval_specific_actions(const Topology& t, const EvalContext& ctx);
double eval_specific_set(const Topology& t, const EvalContext& ctx);
double eval_topological_depth(const Topology& t, const EvalContext& ctx);

/// |flow| / limit per branch; open branches read 0. Throws DataError on a nonpositive limit.
std::vector<double> line_loadings(const Network& net, const Alternative& alt);
double eval_cumulative_overload(const Network& net, const Alternative& alt, const EvalContext& ctx);
double eval_cumulative_quadratic_load(const Network& net, const Alternative& alt);

/// Searches orderings of `actions` one-step actions (at most 16). A state is a
/// bitmask of already applied actions; `feasible` is consulted for the state
/// after every step and cached per mask. Returns the first feasible order in
/// lexicographic permutation order, or nullopt.
std::optional<std::vector<std::size_t>> find_feasible_order(std::size_t actions,
                                                            const std::function<bool(std::uint32_t)>& feasible);

/// Operability of a partially switched state: DC power flow under the
/// alternative's dispatch with no loading above 100 %, no injection-bearing
/// island and the slack generation within bounds.
bool switching_state_feasible(const Network& net, const Alternative& alt, const Topology& state);

EvalResult eval_switching_sequence(const Network& net, const Alternative& alt);

EvalResult evaluate(FunctionId fn, const Network& net, const Alternative& alt, const EvalContext& ctx);
std::vector<double> evaluate_set(FunctionId fn, const Network& net, const AlternativeSet& set,
                                 const EvalContext& ctx);

/// Positions sorted best first for the direction; ties keep the lower position first.
RankingFeedback rank_by_values(const std::vector<double>& values, Direction direction);
RankingFeedback rank_alternatives(const AlternativeSet& set, FunctionId fn, const Network& net,
                                  const EvalContext& ctx);

/// Whether `value` is on the right side of `bound` for the function's direction.
bool respects_bound(Direction direction, double value, double bound, double tolerance);

}  // namespace gridmga
