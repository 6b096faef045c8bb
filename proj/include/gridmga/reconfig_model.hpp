#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridmga/eval_context.hpp"
#include "gridmga/milp_solver.hpp"
#include "gridmga/network.hpp"
#include "gridmga/powerflow.hpp"

namespace gridmga {

struct SwitchingOptions {
    bool allow_line_switching = true;
    bool allow_busbar_splitting = false;
    std::size_t max_line_actions = 3;
    std::size_t max_busbar_actions = 0;
    bool reassign_generators = true;
    bool reassign_loads = true;

    /// Throws ConfigError when a disabled mode carries a nonzero budget.
    void validate() const;
};

/// Bounds used to linearize the switching disjunctions.
struct ModelBounds {
    double angle_limit_rad = 0.6;  // |theta| bound; big-M values derive from 2x this
};

struct Alternative {
    Topology topology;
    SubstationLayouts layouts;
    std::vector<double> dispatch_mw;
    std::vector<double> flows_mw;
    std::vector<double> angles_rad;  // per bus (busbar A)
    double cost = 0.0;
    double slack = 0.0;
    double objective_value = 0.0;
    double solver_gap = 0.0;
    std::uint64_t weight_seed = 0;
    std::size_t weight_index = 0;
    std::string round = "mga";
    bool unique = true;
};

/// d(z) = z_coefficients . z + slack_coefficient * s, minimized.
struct ObjectiveSpec {
    std::vector<double> z_coefficients;
    double slack_coefficient = 0.0;
};

/// Slack coefficient of the augmented MGA objective, -1 / (100 f*).
double augmentation_coefficient(double f_star);

/// Mixed-integer DC-OPF with line switching and two-busbar substation
/// splitting. Holds a solver-independent LinearModel; every solve copies it.
class ReconfigModel {
public:
    const Network& network() const { return net_; }
    const SwitchingOptions& options() const { return opts_; }
    const LinearModel& base() const { return lm_; }

    /// n: number of z-dimensions.
    std::size_t z_count() const { return z_col_.size(); }
    /// m: number of operational columns (everything except z and s).
    std::size_t x_count() const { return lm_.num_cols() - z_col_.size() - 1; }
    std::size_t line_dims() const { return line_dims_; }
    std::size_t balance_rows() const { return balance_rows_; }

    int z_column(std::size_t j) const { return z_col_.at(j); }
    int slack_column() const { return slack_col_; }
    int flow_column(std::size_t branch) const { return flow_col_.at(branch); }
    int epsilon_row() const { return eps_row_; }
    int line_budget_row() const { return line_budget_row_; }
    int busbar_budget_row() const { return busbar_budget_row_; }
    const ModelBounds& bounds() const { return bounds_; }
    /// Objective coefficients of the generation cost over all columns.
    const std::vector<double>& cost_vector() const { return cost_; }

    /// Generation cost of a column vector.
    double cost_of(std::span<const double> values) const;
    /// Decodes a solver column vector into an Alternative (cost, flows, layouts).
    Alternative extract(std::span<const double> values) const;

private:
    friend ReconfigModel build_reconfiguration_model(const Network&, const SwitchingOptions&, const ModelBounds&);

    Network net_;
    SwitchingOptions opts_;
    LinearModel lm_;
    std::size_t line_dims_ = 0;
    std::size_t balance_rows_ = 0;
    std::vector<int> z_col_;
    std::vector<int> gen_col_;                     // total output, pu
    std::vector<int> flow_col_;                    // per branch, pu
    std::vector<int> theta_col_;                   // per bus (busbar A)
    std::vector<std::vector<int>> end_b_col_;      // per splittable substation, per line end
    std::vector<std::vector<int>> inj_b_col_;      // per splittable substation, per injection (-1 if fixed on A)
    std::vector<int> gen_b_col_;                   // output on busbar B (-1 if not reassignable)
    std::vector<double> cost_;
    int slack_col_ = -1;
    int eps_row_ = -1;
    int line_budget_row_ = -1;
    int busbar_budget_row_ = -1;
    ModelBounds bounds_;
};

ReconfigModel build_reconfiguration_model(const Network& net, const SwitchingOptions& opts,
                                          const ModelBounds& bounds = {});

struct LeastCostResult {
    double f_star = 0.0;
    Alternative best;
};

/// Minimum generation cost with switching allowed.
LeastCostResult solve_least_cost(const ReconfigModel& model, const SolverSettings& settings);

/// Augmented MGA solve: f(x) + s = f*(1 + epsilon), s >= 0, minimize obj.
Alternative solve_alternative(const ReconfigModel& model, const ObjectiveSpec& obj, double f_star, double epsilon,
                              const SolverSettings& settings);

/// Least-cost dispatch for a fixed topology (z fixed; busbar layouts free).
Alternative solve_fixed_topology(const ReconfigModel& model, const Topology& topology,
                                 const SolverSettings& settings);

struct EvalOptimum {
    FunctionId fn = FunctionId::u1;
    Direction direction = Direction::minimize;
    /// Proven bound on the function over the epsilon-feasible set (solver dual bound).
    double bound = 0.0;
    /// Value of the best found point; U5 reports the exact quadratic load there.
    double incumbent = 0.0;
    /// U5 only: true quadratic load at the incumbent minus its piecewise-linear value.
    double approximation_gap = 0.0;
    double solver_gap = 0.0;
    Topology topology;
};

inline constexpr std::size_t kQuadraticLoadSegments = 12;
inline constexpr double kQuadraticLoadRange = 1.2;

/// Optimizes U1..U5 over the epsilon-feasible set. U6 throws UnsupportedError.
EvalOptimum solve_eval_optimum(const ReconfigModel& model, FunctionId fn, const EvalContext& ctx, double f_star,
                               double epsilon, const SolverSettings& settings);

}  // namespace gridmga
