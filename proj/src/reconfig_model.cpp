#include "gridmga/reconfig_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

void SwitchingOptions::validate() const {
    if (!allow_line_switching && max_line_actions > 0)
        throw ConfigError("line switching is disabled but max_line_actions = " + std::to_string(max_line_actions));
    if (!allow_busbar_splitting && max_busbar_actions > 0)
        throw ConfigError("busbar splitting is disabled but max_busbar_actions = " +
                          std::to_string(max_busbar_actions));
}

double augmentation_coefficient(double f_star) {
    if (!(f_star > 0.0) || !std::isfinite(f_star)) throw DomainError("f* must be positive and finite");
    return -1.0 / (100.0 * f_star);
}

ReconfigModel build_reconfiguration_model(const Network& net, const SwitchingOptions& opts,
                                          const ModelBounds& bounds) {
    opts.validate();
    require_valid(net);

    ReconfigModel m;
    m.net_ = net;
    m.opts_ = opts;
    m.bounds_ = bounds;
    auto& lm = m.lm_;

    const NetworkIndex idx(net);
    const double base = net.base_mva;
    const double th = bounds.angle_limit_rad;
    const double m_theta = 2.0 * th;
    const auto switchable = net.switchable_branches();
    const auto splittable = net.splittable_substations();
    const std::size_t nb = net.buses.size();
    const std::size_t nl = net.branches.size();

    m.line_dims_ = switchable.size();
    std::vector<int> line_z(nl, -1);
    for (auto l : switchable) {
        line_z[l] = lm.add_variable(0.0, opts.allow_line_switching ? 1.0 : 0.0, VarType::binary);
        m.z_col_.push_back(line_z[l]);
    }
    std::vector<int> split_z;
    for (std::size_t k = 0; k < splittable.size(); ++k) {
        split_z.push_back(lm.add_variable(0.0, opts.allow_busbar_splitting ? 1.0 : 0.0, VarType::binary));
        m.z_col_.push_back(split_z.back());
    }
    m.slack_col_ = lm.add_variable(0.0, 0.0);

    for (const auto& g : net.generators) m.gen_col_.push_back(lm.add_variable(g.p_min / base, g.p_max / base));
    for (const auto& br : net.branches)
        m.flow_col_.push_back(lm.add_variable(-br.limit_mw / base, br.limit_mw / base));
    for (const auto& b : net.buses) {
        const double bound = b.is_slack ? 0.0 : th;
        m.theta_col_.push_back(lm.add_variable(-bound, bound));
    }

    // balance accumulators: node i < nb is busbar A of bus i, nb + k is busbar B of substation k
    const std::size_t nodes = nb + splittable.size();
    std::vector<std::vector<int>> bal_vars(nodes);
    std::vector<std::vector<double>> bal_coefs(nodes);
    std::vector<double> bal_rhs(nodes, 0.0);
    auto add_term = [&](std::size_t node, int col, double coef) {
        bal_vars[node].push_back(col);
        bal_coefs[node].push_back(coef);
    };

    // angle seen by each branch at its from / to side
    std::vector<std::array<int, 2>> side_theta(nl);
    for (std::size_t l = 0; l < nl; ++l)
        side_theta[l] = {m.theta_col_[*idx.bus(net.branches[l].from_bus)],
                         m.theta_col_[*idx.bus(net.branches[l].to_bus)]};
    std::vector<std::array<bool, 2>> side_split(nl, {false, false});

    m.gen_b_col_.assign(net.generators.size(), -1);
    std::vector<int> load_x(nb, -1);

    for (std::size_t k = 0; k < splittable.size(); ++k) {
        const auto& sub = net.substations[splittable[k]];
        const std::size_t a_node = *idx.bus(sub.bus);
        const std::size_t b_node = nb + k;
        const int zb = split_z[k];
        const int theta_a = m.theta_col_[a_node];
        const int theta_b = lm.add_variable(-th, th);

        // coupler: |theta_A - theta_B| <= M (z_b)
        lm.add_row({theta_a, theta_b, zb}, {1.0, -1.0, -m_theta}, -kInf, 0.0);
        lm.add_row({theta_a, theta_b, zb}, {1.0, -1.0, m_theta}, 0.0, kInf);

        std::vector<int> end_cols;
        std::vector<int> ends_x;
        for (const auto& ref : sub.attached_branch_ends) {
            const std::size_t l = *idx.branch(ref.branch);
            const int side = ref.end == BranchEnd::from ? 0 : 1;
            const double lim = net.branches[l].limit_mw / base;
            const int x = lm.add_variable(0.0, 1.0, VarType::binary);
            const int theta_end = lm.add_variable(-th, th);
            const int pb = lm.add_variable(-lim, lim);
            // end on A when x = 0, on B when x = 1
            lm.add_row({theta_end, theta_a, x}, {1.0, -1.0, -m_theta}, -kInf, 0.0);
            lm.add_row({theta_end, theta_a, x}, {1.0, -1.0, m_theta}, 0.0, kInf);
            lm.add_row({theta_end, theta_b, x}, {1.0, -1.0, m_theta}, -kInf, m_theta);
            lm.add_row({theta_end, theta_b, x}, {1.0, -1.0, -m_theta}, -m_theta, kInf);
            // flow share on B: |PB| <= lim x, |P - PB| <= lim (1 - x)
            lm.add_row({pb, x}, {1.0, -lim}, -kInf, 0.0);
            lm.add_row({pb, x}, {1.0, lim}, 0.0, kInf);
            const int p = m.flow_col_[l];
            lm.add_row({p, pb, x}, {1.0, -1.0, lim}, -kInf, lim);
            lm.add_row({p, pb, x}, {1.0, -1.0, -lim}, -lim, kInf);
            lm.add_row({x, zb}, {1.0, -1.0}, -kInf, 0.0);

            side_theta[l][side] = theta_end;
            side_split[l][side] = true;
            const double sign = side == 0 ? -1.0 : 1.0;
            add_term(a_node, p, sign);
            add_term(a_node, pb, -sign);
            add_term(b_node, pb, sign);
            end_cols.push_back(x);
            ends_x.push_back(x);
        }
        // each busbar keeps at least one line end once split
        {
            std::vector<int> vars = ends_x;
            std::vector<double> coefs(ends_x.size(), 1.0);
            vars.push_back(zb);
            coefs.push_back(-1.0);
            lm.add_row(vars, coefs, 0.0, kInf);
            coefs.back() = -(static_cast<double>(ends_x.size()) - 1.0);
            lm.add_row(vars, coefs, -kInf, 0.0);
        }
        m.end_b_col_.push_back(std::move(end_cols));

        std::vector<int> inj_cols;
        for (const auto& inj : sub.attached_injections) {
            if (inj.kind == InjectionKind::generator) {
                const std::size_t g = *idx.generator(inj.id);
                if (!opts.reassign_generators) {
                    inj_cols.push_back(-1);
                    continue;
                }
                const double pmax = net.generators[g].p_max / base;
                const int x = lm.add_variable(0.0, 1.0, VarType::binary);
                const int pb = lm.add_variable(0.0, pmax);
                const int p = m.gen_col_[g];
                lm.add_row({pb, x}, {1.0, -pmax}, -kInf, 0.0);
                lm.add_row({p, pb, x}, {1.0, -1.0, pmax}, -kInf, pmax);
                lm.add_row({p, pb}, {1.0, -1.0}, 0.0, kInf);
                lm.add_row({x, zb}, {1.0, -1.0}, -kInf, 0.0);
                m.gen_b_col_[g] = pb;
                inj_cols.push_back(x);
            } else {
                const std::size_t i = *idx.bus(inj.id);
                if (!opts.reassign_loads) {
                    inj_cols.push_back(-1);
                    continue;
                }
                const int x = lm.add_variable(0.0, 1.0, VarType::binary);
                lm.add_row({x, zb}, {1.0, -1.0}, -kInf, 0.0);
                load_x[i] = x;
                inj_cols.push_back(x);
            }
        }
        m.inj_b_col_.push_back(std::move(inj_cols));
    }

    // flow definition and capacity
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& br = net.branches[l];
        const double b = br.susceptance;
        const double lim = br.limit_mw / base;
        const int p = m.flow_col_[l];
        const int tf = side_theta[l][0];
        const int tt = side_theta[l][1];
        if (line_z[l] < 0) {
            lm.add_row({p, tf, tt}, {1.0, -b, b}, 0.0, 0.0);
        } else {
            const double big_m = b * m_theta;
            const int z = line_z[l];
            lm.add_row({p, tf, tt, z}, {1.0, -b, b, -big_m}, -kInf, 0.0);
            lm.add_row({p, tf, tt, z}, {1.0, -b, b, big_m}, 0.0, kInf);
            lm.add_row({p, z}, {1.0, lim}, -kInf, lim);
            lm.add_row({p, z}, {1.0, -lim}, -lim, kInf);
        }
        const std::size_t fi = *idx.bus(br.from_bus);
        const std::size_t ti = *idx.bus(br.to_bus);
        if (!side_split[l][0]) add_term(fi, p, -1.0);
        if (!side_split[l][1]) add_term(ti, p, 1.0);
    }

    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const std::size_t bi = *idx.bus(net.generators[g].bus);
        add_term(bi, m.gen_col_[g], 1.0);
        if (m.gen_b_col_[g] >= 0) {
            const auto k = static_cast<std::size_t>(
                std::find_if(splittable.begin(), splittable.end(),
                             [&](std::size_t s) { return net.substations[s].bus == net.generators[g].bus; }) -
                splittable.begin());
            add_term(bi, m.gen_b_col_[g], -1.0);
            add_term(nb + k, m.gen_b_col_[g], 1.0);
        }
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const double load = net.buses[i].load_mw / base;
        bal_rhs[i] += load;
        if (load_x[i] >= 0) {
            const auto k = static_cast<std::size_t>(
                std::find_if(splittable.begin(), splittable.end(),
                             [&](std::size_t s) { return net.substations[s].bus == net.buses[i].id; }) -
                splittable.begin());
            add_term(i, load_x[i], load);
            add_term(nb + k, load_x[i], -load);
        }
    }
    for (std::size_t v = 0; v < nodes; ++v) lm.add_row(bal_vars[v], bal_coefs[v], bal_rhs[v], bal_rhs[v]);
    m.balance_rows_ = nodes;

    // budgets
    {
        std::vector<int> vars;
        for (auto c : line_z)
            if (c >= 0) vars.push_back(c);
        m.line_budget_row_ = lm.add_row(vars, std::vector<double>(vars.size(), 1.0), -kInf,
                                        static_cast<double>(opts.max_line_actions));
        m.busbar_budget_row_ = lm.add_row(split_z, std::vector<double>(split_z.size(), 1.0), -kInf,
                                          static_cast<double>(opts.max_busbar_actions));
    }

    // generation cost, linked to the slack through the epsilon row (inactive until activated)
    m.cost_.assign(lm.num_cols(), 0.0);
    std::vector<int> eps_vars;
    std::vector<double> eps_coefs;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        m.cost_[m.gen_col_[g]] = net.generators[g].cost_per_mwh * base;
        eps_vars.push_back(m.gen_col_[g]);
        eps_coefs.push_back(net.generators[g].cost_per_mwh * base);
    }
    eps_vars.push_back(m.slack_col_);
    eps_coefs.push_back(1.0);
    m.eps_row_ = lm.add_row(eps_vars, eps_coefs, -kInf, kInf);
    return m;
}

double ReconfigModel::cost_of(std::span<const double> values) const {
    double c = 0.0;
    for (std::size_t g = 0; g < gen_col_.size(); ++g) c += cost_[gen_col_[g]] * values[gen_col_[g]];
    return c;
}

Alternative ReconfigModel::extract(std::span<const double> values) const {
    const double base = net_.base_mva;
    Alternative alt;
    std::vector<std::uint8_t> z(z_col_.size());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = values[z_col_[j]] > 0.5 ? 1 : 0;
    alt.topology = Topology::from_flat(z, line_dims_);
    alt.layouts = default_layouts(net_);
    for (std::size_t k = 0; k < alt.layouts.size(); ++k) {
        if (!alt.topology.busbar_split[k]) continue;
        for (std::size_t e = 0; e < end_b_col_[k].size(); ++e)
            alt.layouts[k].end_on_b[e] = values[end_b_col_[k][e]] > 0.5 ? 1 : 0;
        for (std::size_t i = 0; i < inj_b_col_[k].size(); ++i)
            if (inj_b_col_[k][i] >= 0) alt.layouts[k].injection_on_b[i] = values[inj_b_col_[k][i]] > 0.5 ? 1 : 0;
    }
    for (auto c : gen_col_) alt.dispatch_mw.push_back(values[c] * base);
    for (auto c : flow_col_) alt.flows_mw.push_back(values[c] * base);
    for (auto c : theta_col_) alt.angles_rad.push_back(values[c]);
    alt.cost = cost_of(values);
    alt.slack = values[slack_col_];
    return alt;
}

namespace {

constexpr double kPolishGap = 1e-9;

void set_objective(LinearModel& lm, const std::vector<double>& coefs) {
    lm.objective = coefs;
    lm.objective.resize(lm.num_cols(), 0.0);
}

void activate_epsilon(LinearModel& lm, const ReconfigModel& m, double rhs) {
    lm.col_upper[m.slack_column()] = kInf;
    lm.rows[m.epsilon_row()].lower = rhs;
    lm.rows[m.epsilon_row()].upper = rhs;
}

void fix_topology(LinearModel& lm, const ReconfigModel& m, const Topology& t) {
    if (t.size() != m.z_count() || t.line_open.size() != m.line_dims())
        throw DomainError("topology does not match the model's z-dimensions");
    for (std::size_t j = 0; j < t.size(); ++j) {
        const int c = m.z_column(j);
        const double v = t[j];
        if (v > lm.col_upper[c]) throw DomainError("topology uses a disabled switching mode");
        lm.col_lower[c] = lm.col_upper[c] = v;
    }
}

void add_no_good_cut(LinearModel& lm, const ReconfigModel& m, const Topology& t) {
    std::vector<int> vars;
    std::vector<double> coefs;
    double ones = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        vars.push_back(m.z_column(j));
        coefs.push_back(t[j] ? -1.0 : 1.0);
        ones += t[j];
    }
    lm.add_row(vars, coefs, 1.0 - ones, kInf);
}

bool feasible(const LinearModel& lm, const SolverSettings& settings) {
    SolverSettings quick = settings;
    quick.gap = 1.0;
    const auto res = solve_linear_model(lm, quick);
    return res.has_solution;
}

/// Names the constraint groups whose relaxation restores feasibility.
std::vector<std::string> diagnose(const ReconfigModel& m, const LinearModel& failed, bool epsilon_active,
                                  const SolverSettings& settings) {
    std::vector<std::string> causes;
    const auto& net = m.network();
    double pmax = 0.0, pmin = 0.0;
    for (const auto& g : net.generators) {
        pmax += g.p_max;
        pmin += g.p_min;
    }
    const double load = net.total_load_mw();
    if (pmax < load - kInjectionTolerance) causes.push_back("generation capacity below total load");
    if (pmin > load + kInjectionTolerance) causes.push_back("minimum generation above total load");

    {
        LinearModel lm = failed;
        lm.rows[m.line_budget_row()].upper = kInf;
        lm.rows[m.busbar_budget_row()].upper = kInf;
        if (feasible(lm, settings)) causes.push_back("switching action budget");
    }
    {
        Network relaxed = net;
        for (auto& br : relaxed.branches) br.limit_mw *= 1e3;
        SwitchingOptions opts = m.options();
        auto rm = build_reconfiguration_model(relaxed, opts, m.bounds());
        LinearModel lm = rm.base();
        for (std::size_t j = 0; j < m.z_count(); ++j) {
            lm.col_lower[rm.z_column(j)] = failed.col_lower[m.z_column(j)];
            lm.col_upper[rm.z_column(j)] = failed.col_upper[m.z_column(j)];
        }
        if (epsilon_active) {
            lm.col_upper[rm.slack_column()] = kInf;
            lm.rows[rm.epsilon_row()].lower = failed.rows[m.epsilon_row()].lower;
            lm.rows[rm.epsilon_row()].upper = failed.rows[m.epsilon_row()].upper;
        }
        if (feasible(lm, settings)) causes.push_back("line limits");
    }
    if (epsilon_active) {
        LinearModel lm = failed;
        lm.rows[m.epsilon_row()].lower = -kInf;
        lm.rows[m.epsilon_row()].upper = kInf;
        lm.col_upper[m.slack_column()] = 0.0;
        if (feasible(lm, settings)) causes.push_back("epsilon cost budget");
    }
    if (causes.empty()) causes.push_back("combined network constraints");
    return causes;
}

[[noreturn]] void raise_for(const SolveResult& res, const ReconfigModel& m, const LinearModel& lm,
                            bool epsilon_active, const SolverSettings& settings, const std::string& what) {
    if (res.status == SolveStatus::time_limit)
        throw TimeoutError(what + ": solver time limit reached", res.has_solution, res.objective);
    if (res.status == SolveStatus::infeasible) {
        auto causes = diagnose(m, lm, epsilon_active, settings);
        std::string msg = what + ": model is infeasible (";
        for (std::size_t i = 0; i < causes.size(); ++i) msg += (i ? ", " : "") + causes[i];
        throw InfeasibleError(msg + ")", std::move(causes));
    }
    throw Error(what + ": solver returned status " + to_string(res.status));
}

std::optional<Alternative> polish(const ReconfigModel& m, const Topology& t, const SolverSettings& settings) {
    LinearModel lm = m.base();
    fix_topology(lm, m, t);
    set_objective(lm, m.cost_vector());
    SolverSettings s = settings;
    s.gap = kPolishGap;
    const auto res = solve_linear_model(lm, s);
    if (!res.has_solution) return std::nullopt;
    auto alt = m.extract(res.values);
    alt.topology = t;
    return alt;
}

void take_dispatch(Alternative& into, Alternative&& from) {
    into.layouts = std::move(from.layouts);
    into.dispatch_mw = std::move(from.dispatch_mw);
    into.flows_mw = std::move(from.flows_mw);
    into.angles_rad = std::move(from.angles_rad);
    into.cost = from.cost;
}

double z_dot(const std::vector<double>& w, const Topology& t) {
    double s = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) s += w[j] * t[j];
    return s;
}

/// Solves `lm`, polishes the dispatch and re-solves with a no-good cut while
/// the topology islands an injection.
Alternative solve_with_island_cuts(const ReconfigModel& m, LinearModel lm, bool epsilon_active,
                                   const SolverSettings& settings, const std::string& what,
                                   const std::function<void(Alternative&)>& finish) {
    for (std::size_t attempt = 0; attempt <= settings.max_island_cuts; ++attempt) {
        const auto res = solve_linear_model(lm, settings);
        if (res.status != SolveStatus::optimal || !res.has_solution) raise_for(res, m, lm, epsilon_active, settings, what);
        auto alt = m.extract(res.values);
        alt.objective_value = res.objective;
        alt.solver_gap = res.gap;
        if (settings.polish_dispatch) {
            if (auto p = polish(m, alt.topology, settings); p && p->cost <= alt.cost + 1e-9 * std::max(1.0, alt.cost))
                take_dispatch(alt, std::move(*p));
        }
        finish(alt);
        const auto islanded = islanded_injection_buses(m.network(), alt.topology, alt.layouts, alt.dispatch_mw);
        if (islanded.empty()) return alt;
        spdlog::debug("{}: topology islands bus {}, adding no-good cut", what, islanded.front());
        add_no_good_cut(lm, m, alt.topology);
    }
    throw InfeasibleError(what + ": no non-islanding topology found within the cut limit", {"islanding"});
}

}  // namespace

LeastCostResult solve_least_cost(const ReconfigModel& model, const SolverSettings& settings) {
    if (!(settings.gap > 0.0)) throw DomainError("MIP gap must be positive");
    LinearModel lm = model.base();
    set_objective(lm, model.cost_vector());
    auto best = solve_with_island_cuts(model, std::move(lm), false, settings, "least-cost solve", [](Alternative& a) {
        a.slack = 0.0;
        a.objective_value = a.cost;
    });
    best.round = "least-cost";
    spdlog::info("least-cost solve: f* = {:.6f}, {} switching actions", best.cost, best.topology.action_count());
    return {best.cost, std::move(best)};
}

Alternative solve_alternative(const ReconfigModel& model, const ObjectiveSpec& obj, double f_star, double epsilon,
                              const SolverSettings& settings) {
    if (epsilon < 0.0 || !std::isfinite(epsilon)) throw DomainError("epsilon must be non-negative");
    if (obj.z_coefficients.size() != model.z_count())
        throw DomainError("objective has " + std::to_string(obj.z_coefficients.size()) + " z-coefficients, model has " +
                          std::to_string(model.z_count()));
    for (double c : obj.z_coefficients)
        if (!std::isfinite(c)) throw DomainError("objective coefficients must be finite");
    if (!std::isfinite(obj.slack_coefficient)) throw DomainError("slack coefficient must be finite");
    augmentation_coefficient(f_star);

    const double rhs = f_star * (1.0 + epsilon);
    LinearModel lm = model.base();
    activate_epsilon(lm, model, rhs);
    std::vector<double> c(lm.num_cols(), 0.0);
    for (std::size_t j = 0; j < model.z_count(); ++j) c[model.z_column(j)] = obj.z_coefficients[j];
    c[model.slack_column()] = obj.slack_coefficient;
    set_objective(lm, c);

    return solve_with_island_cuts(model, std::move(lm), true, settings, "alternative solve", [&](Alternative& a) {
        a.slack = std::max(0.0, rhs - a.cost);
        a.objective_value = z_dot(obj.z_coefficients, a.topology) + obj.slack_coefficient * a.slack;
    });
}

Alternative solve_fixed_topology(const ReconfigModel& model, const Topology& topology,
                                 const SolverSettings& settings) {
    LinearModel lm = model.base();
    fix_topology(lm, model, topology);
    set_objective(lm, model.cost_vector());
    SolverSettings s = settings;
    s.gap = std::min(settings.gap, kPolishGap);
    const auto res = solve_linear_model(lm, s);
    if (res.status != SolveStatus::optimal || !res.has_solution)
        raise_for(res, model, lm, false, settings, "fixed-topology dispatch");
    auto alt = model.extract(res.values);
    alt.topology = topology;
    alt.objective_value = alt.cost;
    alt.solver_gap = res.gap;
    alt.round = "fixed";
    return alt;
}

EvalOptimum solve_eval_optimum(const ReconfigModel& model, FunctionId fn, const EvalContext& ctx, double f_star,
                               double epsilon, const SolverSettings& settings) {
    if (fn == FunctionId::u6) throw UnsupportedError("switching sequence feasibility cannot be optimized directly");
    if (epsilon < 0.0) throw DomainError("epsilon must be non-negative");
    augmentation_coefficient(f_star);

    const auto& net = model.network();
    LinearModel lm = model.base();
    activate_epsilon(lm, model, f_star * (1.0 + epsilon));
    std::vector<double> c(lm.num_cols(), 0.0);
    const bool maximize = direction_of(fn) == Direction::maximize;
    auto check_dim = [&](std::size_t j) {
        if (j >= model.z_count()) throw DomainError("evaluation context references z-dimension " + std::to_string(j));
    };

    std::vector<int> q_cols;
    switch (fn) {
        case FunctionId::u1:
            for (auto j : ctx.j_spec) {
                check_dim(j);
                c[model.z_column(j)] -= 1.0;
            }
            break;
        case FunctionId::u2: {
            const int y = lm.add_variable(0.0, 1.0);
            for (std::size_t k = 0; k < ctx.s_spec.size(); ++k) {
                const auto j = ctx.s_spec[k];
                check_dim(j);
                if (ctx.target_for(k)) lm.add_row({y, model.z_column(j)}, {1.0, -1.0}, -kInf, 0.0);
                else lm.add_row({y, model.z_column(j)}, {1.0, 1.0}, -kInf, 1.0);
            }
            c.push_back(-1.0);
            break;
        }
        case FunctionId::u3:
            if (ctx.base.size() != model.z_count()) throw DomainError("base topology does not match the model");
            for (std::size_t j = 0; j < model.z_count(); ++j) c[model.z_column(j)] = ctx.base[j] ? -1.0 : 1.0;
            break;
        case FunctionId::u4:
            for (std::size_t l = 0; l < net.branches.size(); ++l) {
                const double inv = net.base_mva / net.branches[l].limit_mw;
                const int o = lm.add_variable(0.0, kInf);
                const int p = model.flow_column(l);
                lm.add_row({o, p}, {1.0, -inv}, -ctx.overload_threshold, kInf);
                lm.add_row({o, p}, {1.0, inv}, -ctx.overload_threshold, kInf);
                c.push_back(1.0);
            }
            break;
        case FunctionId::u5:
            for (std::size_t l = 0; l < net.branches.size(); ++l) {
                const double inv = net.base_mva / net.branches[l].limit_mw;
                const int q = lm.add_variable(0.0, kInf);
                const int p = model.flow_column(l);
                for (std::size_t k = 1; k <= kQuadraticLoadSegments; ++k) {
                    const double a = kQuadraticLoadRange * static_cast<double>(k) / kQuadraticLoadSegments;
                    lm.add_row({q, p}, {1.0, -2.0 * a * inv}, -a * a, kInf);
                    lm.add_row({q, p}, {1.0, 2.0 * a * inv}, -a * a, kInf);
                }
                q_cols.push_back(q);
                c.push_back(1.0);
            }
            break;
        case FunctionId::u6: break;
    }
    double offset = 0.0;
    if (fn == FunctionId::u3)
        for (std::size_t j = 0; j < model.z_count(); ++j) offset += ctx.base[j];
    set_objective(lm, c);
    lm.objective_offset = offset;

    const auto res = solve_linear_model(lm, settings);
    if (res.status != SolveStatus::optimal || !res.has_solution)
        raise_for(res, model, lm, true, settings, "evaluation optimum (" + to_string(fn) + ")");

    EvalOptimum out;
    out.fn = fn;
    out.direction = direction_of(fn);
    out.bound = maximize ? -res.dual_bound : res.dual_bound;
    out.incumbent = maximize ? -res.objective : res.objective;
    out.solver_gap = res.gap;
    std::vector<std::uint8_t> z(model.z_count());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = res.values[model.z_column(j)] > 0.5 ? 1 : 0;
    out.topology = Topology::from_flat(z, model.line_dims());
    if (fn == FunctionId::u5) {
        double exact = 0.0, pwl = 0.0;
        for (std::size_t l = 0; l < net.branches.size(); ++l) {
            const double loading = res.values[model.flow_column(l)] * net.base_mva / net.branches[l].limit_mw;
            exact += loading * loading;
            pwl += res.values[q_cols[l]];
        }
        out.approximation_gap = std::max(0.0, exact - pwl);
        out.incumbent = exact;
    }
    return out;
}

}  // namespace gridmga
