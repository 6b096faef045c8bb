#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gridmga/errors.hpp"
#include "gridmga/evaluation.hpp"
#include "gridmga/reconfig_model.hpp"
#include "support.hpp"

using namespace gridmga;

namespace {

constexpr double kEps = 0.05;

SolverSettings tight() {
    SolverSettings s;
    s.gap = 1e-9;
    return s;
}

struct Candidate {
    Topology topology;
    double cost = 0.0;
};

std::vector<Candidate> feasible_topologies(const Network& net, std::size_t max_actions) {
    std::vector<Candidate> out;
    for (auto& e : oracle::enumerate_topologies(net, max_actions)) {
        if (!e.opf.feasible) continue;
        auto t = base_topology(net);
        t.line_open = e.open;
        out.push_back({t, e.opf.cost});
    }
    return out;
}

double oracle_least_cost(const std::vector<Candidate>& c) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : c) best = std::min(best, x.cost);
    return best;
}

double dot(const std::vector<double>& w, const Topology& t) {
    double s = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) s += w[j] * t[j];
    return s;
}

/// Optimum of w.z + sc * s over the epsilon-feasible enumeration, s = f*(1+eps) - cost.
double oracle_alternative_objective(const std::vector<Candidate>& c, const std::vector<double>& w, double f_star,
                                    double eps, std::vector<Topology>* argmin = nullptr) {
    const double rhs = f_star * (1.0 + eps), sc = augmentation_coefficient(f_star);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : c) {
        if (x.cost > rhs * (1.0 + 1e-12)) continue;
        best = std::min(best, dot(w, x.topology) + sc * (rhs - x.cost));
    }
    if (argmin) {
        for (const auto& x : c)
            if (x.cost <= rhs * (1.0 + 1e-12) && dot(w, x.topology) + sc * (rhs - x.cost) <= best + 1e-9)
                argmin->push_back(x.topology);
    }
    return best;
}

bool within_relative_gap(double value, double reference, double gap) {
    return std::abs(value - reference) <= gap * std::max(1.0, std::abs(reference)) + 1e-9;
}

// Two-generator networks: dispatch is one-dimensional once the load is fixed.
// Flows are affine in p1, so loading-based functions can be minimized directly.
struct LineDispatch {
    double lo = 0.0, hi = 0.0;  // feasible range of generator 0
    std::vector<double> f0, slope;  // flow at p1 = 0 and d flow / d p1 (MW)
};

std::optional<LineDispatch> dispatch_range(const Network& net, const Topology& t, double cost_cap) {
    REQUIRE(net.generators.size() == 2);
    const double load = net.total_load_mw();
    const auto g = testing::graph_of(net, t);
    const auto& g0 = net.generators[0];
    const auto& g1 = net.generators[1];
    LineDispatch d;
    d.lo = std::max(g0.p_min, load - g1.p_max);
    d.hi = std::min(g0.p_max, load - g1.p_min);
    // a generator cut off from the slack must stay at zero
    const auto reach = oracle::reachable_from_slack(g);
    if (!reach[g.gen_node[0]]) d.lo = d.hi = 0.0;
    if (!reach[g.gen_node[1]]) d.lo = d.hi = load;
    const double a = d.lo, b = d.hi > d.lo ? d.hi : d.lo + 1.0;
    const auto pa = oracle::dc_pf(net, g, {a, load - a});
    const auto pb = oracle::dc_pf(net, g, {b, load - b});
    if (!pa.solvable) return std::nullopt;
    // cost(p1) = c0 p1 + c1 (load - p1) <= cap
    const double dc = g0.cost_per_mwh - g1.cost_per_mwh;
    const double c_at0 = g1.cost_per_mwh * load;
    if (dc > 0) d.hi = std::min(d.hi, (cost_cap - c_at0) / dc);
    else if (dc < 0) d.lo = std::max(d.lo, (cost_cap - c_at0) / dc);
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const double s = pb.solvable ? (pb.flows_mw[l] - pa.flows_mw[l]) / (b - a) : 0.0;
        const double f0 = pa.flows_mw[l] - s * a;
        d.f0.push_back(f0);
        d.slope.push_back(s);
        const double lim = net.branches[l].limit_mw;
        if (std::abs(s) < 1e-12) {
            if (std::abs(f0) > lim * (1 + 1e-9)) return std::nullopt;
            continue;
        }
        double x1 = (lim - f0) / s, x2 = (-lim - f0) / s;
        if (x1 > x2) std::swap(x1, x2);
        d.lo = std::max(d.lo, x1);
        d.hi = std::min(d.hi, x2);
    }
    if (d.lo > d.hi + 1e-9) return std::nullopt;
    return d;
}

double loading_sum(const Network& net, const LineDispatch& d, double p1, bool quadratic, double threshold) {
    double s = 0.0;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const double load = std::abs(d.f0[l] + d.slope[l] * p1) / net.branches[l].limit_mw;
        s += quadratic ? load * load : std::max(0.0, load - threshold);
    }
    return s;
}

// Convex in p1; golden-section search to machine precision.
double minimize_loading(const Network& net, const LineDispatch& d, bool quadratic, double threshold) {
    double lo = d.lo, hi = d.hi;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
        if (loading_sum(net, d, m1, quadratic, threshold) <= loading_sum(net, d, m2, quadratic, threshold)) hi = m2;
        else lo = m1;
    }
    return loading_sum(net, d, 0.5 * (lo + hi), quadratic, threshold);
}

}  // namespace

TEST_CASE("model dimensions") {
    const auto net = testing::fixture("three_bus.json");
    const auto m = build_reconfiguration_model(net, {});
    CHECK(m.z_count() == 3);
    CHECK(m.line_dims() == 3);
    CHECK(m.balance_rows() == 3);

    auto c57 = testing::bundled("case57.m");
    mark_splittable_by_degree(c57, 5);
    SwitchingOptions both;
    both.allow_busbar_splitting = true;
    both.max_busbar_actions = 3;
    const auto m57 = build_reconfiguration_model(c57, both);
    CHECK(m57.z_count() == 80 + c57.splittable_substations().size());
    CHECK(m57.balance_rows() == 57 + c57.splittable_substations().size());

    SwitchingOptions bad;
    bad.allow_line_switching = false;
    bad.max_line_actions = 2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("uncongested triangle: least cost 600 with 40/20 MW flows") {
    const auto net = testing::fixture("three_bus.json");
    CHECK(solve_least_cost(build_reconfiguration_model(net, {}), tight()).f_star ==
          doctest::Approx(600.0).epsilon(1e-9));
    // with the triangle kept closed the flows split 2:1
    SwitchingOptions closed;
    closed.allow_line_switching = false;
    closed.max_line_actions = 0;
    const auto lc = solve_least_cost(build_reconfiguration_model(net, closed), tight());
    CHECK(lc.f_star == doctest::Approx(600.0).epsilon(1e-9));
    CHECK(lc.best.flows_mw[1] == doctest::Approx(40.0).epsilon(1e-8));
    CHECK(lc.best.flows_mw[0] == doctest::Approx(20.0).epsilon(1e-8));
    CHECK(lc.best.flows_mw[2] == doctest::Approx(20.0).epsilon(1e-8));
}

TEST_CASE("fixed zero topology reduces to plain dc-opf") {
    for (const char* name : {"three_bus.json", "three_bus_congested.json", "four_bus_congested.json"}) {
        const auto net = testing::fixture(name);
        const auto m = build_reconfiguration_model(net, {});
        const auto alt = solve_fixed_topology(m, base_topology(net), tight());
        const auto ref = oracle::dc_opf(net, oracle::line_graph(net, {}));
        REQUIRE(ref.feasible);
        CHECK(alt.cost == doctest::Approx(ref.cost).epsilon(1e-9));
        // flows are the DC power flow of the returned dispatch, to 1e-8 pu
        const auto pf = oracle::dc_pf(net, oracle::line_graph(net, {}), alt.dispatch_mw);
        REQUIRE(pf.solvable);
        for (std::size_t l = 0; l < net.branches.size(); ++l)
            CHECK(std::abs(alt.flows_mw[l] - pf.flows_mw[l]) / net.base_mva <= 1e-8);
    }
}

TEST_CASE("congested four-bus values frozen from the enumeration oracle") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto cands = feasible_topologies(net, 3);
    // base topology 5625; opening 1-3 (alone or with 3-4) gives 3600; 3-4 alone gives 5400
    REQUIRE(oracle_least_cost(cands) == doctest::Approx(3600.0));
    const auto m = build_reconfiguration_model(net, {});
    CHECK(solve_fixed_topology(m, base_topology(net), tight()).cost == doctest::Approx(5625.0));
    const auto lc = solve_least_cost(m, tight());
    CHECK(lc.f_star == doctest::Approx(3600.0).epsilon(1e-9));
    CHECK(lc.best.topology.line_open[0] == 1);
    CHECK(lc.best.topology.line_open[1] == 0);
}

TEST_CASE("least cost matches enumeration on small congested networks") {
    for (const char* name : {"three_bus_congested.json", "four_bus_congested.json"}) {
        const auto net = testing::fixture(name);
        for (std::size_t budget : {1u, 2u, 3u}) {
            SwitchingOptions opts;
            opts.max_line_actions = budget;
            const auto m = build_reconfiguration_model(net, opts);
            const auto lc = solve_least_cost(m, SolverSettings{});
            CHECK(within_relative_gap(lc.f_star, oracle_least_cost(feasible_topologies(net, budget)), 1e-3));
            CHECK(lc.best.topology.action_count() <= budget);
        }
    }
}

TEST_CASE("congested triangle with weights (1, 1, 0.1) opens line 2-3") {
    const auto net = testing::fixture("three_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const auto lc = solve_least_cost(m, tight());
    CHECK(lc.f_star == doctest::Approx(600.0));
    const std::vector<double> w{1.0, 1.0, 0.1};
    ObjectiveSpec obj{w, augmentation_coefficient(lc.f_star)};
    const auto alt = solve_alternative(m, obj, lc.f_star, kEps, SolverSettings{});
    std::vector<Topology> best;
    const auto cands = feasible_topologies(net, 3);
    const double ref = oracle_alternative_objective(cands, w, lc.f_star, kEps, &best);
    CHECK(within_relative_gap(alt.objective_value, ref, 1e-3));
    CHECK(std::find(best.begin(), best.end(), alt.topology) != best.end());
    CHECK(alt.topology.line_open == std::vector<std::uint8_t>{0, 0, 1});
}

TEST_CASE("alternatives match enumeration for random weights") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const char* name : {"three_bus_congested.json", "four_bus_congested.json"}) {
        const auto net = testing::fixture(name);
        const auto m = build_reconfiguration_model(net, {});
        const auto cands = feasible_topologies(net, 3);
        const double f_star = oracle_least_cost(cands);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> w(m.z_count());
            for (auto& x : w) x = u(rng);
            const ObjectiveSpec obj{w, augmentation_coefficient(f_star)};
            const auto alt = solve_alternative(m, obj, f_star, kEps, SolverSettings{});
            const double ref = oracle_alternative_objective(cands, w, f_star, kEps);
            CHECK(within_relative_gap(alt.objective_value, ref, 1e-3));
            CHECK(alt.cost <= f_star * (1 + kEps) + 1e-6);
            const auto it = std::find_if(cands.begin(), cands.end(),
                                         [&](const Candidate& c) { return c.topology == alt.topology; });
            REQUIRE(it != cands.end());
            CHECK(alt.cost == doctest::Approx(it->cost).epsilon(1e-6));
        }
    }
}

TEST_CASE("action budgets hold for adversarial weights") {
    const auto net = testing::fixture("four_bus_congested.json");
    for (std::size_t budget : {1u, 2u}) {
        SwitchingOptions opts;
        opts.max_line_actions = budget;
        const auto m = build_reconfiguration_model(net, opts);
        const double f_star = solve_least_cost(m, tight()).f_star;
        const ObjectiveSpec obj{std::vector<double>(m.z_count(), -1.0), augmentation_coefficient(f_star)};
        const auto alt = solve_alternative(m, obj, f_star, 0.5, SolverSettings{});
        CHECK(alt.topology.action_count() <= budget);
    }
}

TEST_CASE("epsilon zero returns a least-cost alternative") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const auto lc = solve_least_cost(m, tight());
    const ObjectiveSpec obj{{0.3, -0.2, 0.9}, augmentation_coefficient(lc.f_star)};
    const auto alt = solve_alternative(m, obj, lc.f_star, 0.0, SolverSettings{});
    CHECK(alt.cost == doctest::Approx(lc.f_star).epsilon(1e-3));
    CHECK_THROWS_AS(solve_alternative(m, obj, lc.f_star, -0.1, SolverSettings{}), DomainError);
    CHECK_THROWS_AS(solve_alternative(m, ObjectiveSpec{{1.0}, -1e-4}, lc.f_star, 0.05, SolverSettings{}),
                    DomainError);
}

TEST_CASE("positive weights on an uncongested net keep the base topology") {
    const auto net = testing::fixture("three_bus.json");
    const auto m = build_reconfiguration_model(net, {});
    const double f_star = solve_least_cost(m, tight()).f_star;
    const ObjectiveSpec obj{{0.4, 0.7, 0.2}, augmentation_coefficient(f_star)};
    const auto alt = solve_alternative(m, obj, f_star, kEps, tight());
    CHECK(alt.topology.action_count() == 0);
    CHECK(alt.cost == doctest::Approx(f_star).epsilon(1e-9));
    CHECK(alt.slack == doctest::Approx(kEps * f_star).epsilon(1e-9));
}

TEST_CASE("the augmentation term yields cost-optimal dispatch for the chosen topology") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const double f_star = solve_least_cost(m, tight()).f_star;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SolverSettings raw;
    raw.polish_dispatch = false;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(m.z_count());
        for (auto& x : w) x = u(rng);
        const auto alt = solve_alternative(m, ObjectiveSpec{w, augmentation_coefficient(f_star)}, f_star, kEps, raw);
        const auto ref = oracle::dc_opf(net, testing::graph_of(net, alt.topology));
        REQUIRE(ref.feasible);
        CHECK(alt.cost - ref.cost <= 1e-3 * f_star + 0.005 * f_star);
    }
}

TEST_CASE("infeasible models name a cause") {
    auto net = testing::fixture("three_bus.json");
    for (auto& br : net.branches) br.limit_mw = 1.0;
    try {
        solve_least_cost(build_reconfiguration_model(net, {}), SolverSettings{});
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        const auto& c = e.causes();
        CHECK(std::find(c.begin(), c.end(), "line limits") != c.end());
    }

    auto short_gen = testing::fixture("three_bus.json");
    for (auto& g : short_gen.generators) g.p_max = 10.0;
    try {
        solve_least_cost(build_reconfiguration_model(short_gen, {}), SolverSettings{});
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(e.causes().front() == "generation capacity below total load");
    }

    SolverSettings no_gap;
    no_gap.gap = 0.0;
    CHECK_THROWS_AS(solve_least_cost(build_reconfiguration_model(testing::fixture("three_bus.json"), {}), no_gap),
                    DomainError);
}

TEST_CASE("busbar splitting matches enumeration over layouts") {
    auto net = testing::fixture("four_bus_congested.json");
    for (auto& br : net.branches) br.switchable = false;
    rebuild_substations(net);
    mark_splittable(net, std::vector<int>{1, 2, 3});
    SwitchingOptions opts;
    opts.allow_line_switching = false;
    opts.max_line_actions = 0;
    opts.allow_busbar_splitting = true;
    const auto split = net.splittable_substations();
    REQUIRE(split.size() == 3);

    for (std::size_t budget : {1u, 2u}) {
        opts.max_busbar_actions = budget;
        const auto m = build_reconfiguration_model(net, opts);
        CHECK(m.z_count() == 3);

        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t mask = 0; mask < 8u; ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) > budget) continue;
            auto t = base_topology(net);
            for (std::size_t k = 0; k < 3; ++k) t.busbar_split[k] = (mask >> k) & 1u;
            auto layouts = default_layouts(net);
            std::vector<std::size_t> active;
            for (std::size_t k = 0; k < 3; ++k)
                if (t.busbar_split[k]) active.push_back(k);
            // odometer over (end mask, injection mask) per active substation
            std::function<void(std::size_t)> rec = [&](std::size_t i) {
                if (i == active.size()) {
                    const auto r = oracle::dc_opf(net, testing::split_graph(net, t, layouts));
                    if (r.feasible) best = std::min(best, r.cost);
                    return;
                }
                const auto k = active[i];
                const auto& sub = net.substations[split[k]];
                const std::size_t deg = sub.attached_branch_ends.size(), ninj = sub.attached_injections.size();
                for (std::uint32_t em = 1; em + 1 < (1u << deg); ++em)
                    for (std::uint32_t im = 0; im < (1u << ninj); ++im) {
                        for (std::size_t e = 0; e < deg; ++e) layouts[k].end_on_b[e] = (em >> e) & 1u;
                        for (std::size_t x = 0; x < ninj; ++x) layouts[k].injection_on_b[x] = (im >> x) & 1u;
                        rec(i + 1);
                    }
                layouts[k] = default_layouts(net)[k];
            };
            rec(0);
        }
        const auto lc = solve_least_cost(m, tight());
        CHECK(lc.f_star == doctest::Approx(best).epsilon(1e-7));
        CHECK(lc.best.topology.action_count() <= budget);
        // the returned layout is consistent with an oracle re-solve
        const auto check = oracle::dc_opf(net, testing::split_graph(net, lc.best.topology, lc.best.layouts));
        REQUIRE(check.feasible);
        CHECK(check.cost == doctest::Approx(lc.f_star).epsilon(1e-7));
    }
}

TEST_CASE("evaluation optima match enumeration") {
    for (const char* name : {"three_bus_congested.json", "four_bus_congested.json"}) {
        CAPTURE(name);
        const auto net = testing::fixture(name);
        const auto m = build_reconfiguration_model(net, {});
        const auto lc = solve_least_cost(m, tight());
        const auto ctx = make_eval_context(lc.best);
        const auto cands = feasible_topologies(net, 3);
        const double cap = lc.f_star * (1 + kEps);

        double u1 = -1, u2 = 0, u3 = 1e9, u4 = 1e9, u5 = 1e9;
        for (const auto& c : cands) {
            if (c.cost > cap + 1e-9) continue;
            u1 = std::max(u1, eval_specific_actions(c.topology, ctx));
            u2 = std::max(u2, eval_specific_set(c.topology, ctx));
            u3 = std::min(u3, eval_topological_depth(c.topology, ctx));
            const auto d = dispatch_range(net, c.topology, cap);
            if (!d) continue;
            u4 = std::min(u4, minimize_loading(net, *d, false, ctx.overload_threshold));
            u5 = std::min(u5, minimize_loading(net, *d, true, 0.0));
        }
        const auto s = tight();
        CHECK(solve_eval_optimum(m, FunctionId::u1, ctx, lc.f_star, kEps, s).bound == doctest::Approx(u1));
        CHECK(solve_eval_optimum(m, FunctionId::u2, ctx, lc.f_star, kEps, s).bound == doctest::Approx(u2));
        CHECK(solve_eval_optimum(m, FunctionId::u3, ctx, lc.f_star, kEps, s).bound == doctest::Approx(u3));
        const auto o4 = solve_eval_optimum(m, FunctionId::u4, ctx, lc.f_star, kEps, s);
        CHECK(o4.bound == doctest::Approx(u4).epsilon(1e-6));
        const auto o5 = solve_eval_optimum(m, FunctionId::u5, ctx, lc.f_star, kEps, s);
        // tangent under-approximation: 12 segments on [0, 1.2], at most 0.0025 per line
        CHECK(o5.bound <= u5 + 1e-7);
        CHECK(u5 - o5.bound <= 0.0025 * net.branches.size() + 1e-7);
        CHECK(o5.incumbent >= u5 - 1e-7);
        CHECK(o5.approximation_gap >= 0.0);
        CHECK(o5.incumbent - o5.approximation_gap == doctest::Approx(o5.bound).epsilon(1e-6));
        CHECK_THROWS_AS(solve_eval_optimum(m, FunctionId::u6, ctx, lc.f_star, kEps, s), UnsupportedError);
    }
}

TEST_CASE("evaluation optima on trivial inputs") {
    const auto net = testing::fixture("three_bus.json");
    const auto m = build_reconfiguration_model(net, {});
    const auto lc = solve_least_cost(m, tight());
    const auto ctx = make_eval_context(lc.best);
    for (double eps : {0.0, 0.05, 0.3}) {
        CHECK(solve_eval_optimum(m, FunctionId::u3, ctx, lc.f_star, eps, tight()).bound == doctest::Approx(0.0));
        CHECK(solve_eval_optimum(m, FunctionId::u4, ctx, lc.f_star, eps, tight()).bound == doctest::Approx(0.0));
    }
}
