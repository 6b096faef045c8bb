#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridmga/errors.hpp"
#include "gridmga/evaluation.hpp"
#include "gridmga/powerflow.hpp"
#include "support.hpp"

using namespace gridmga;

namespace {

Alternative with_topology(std::vector<std::uint8_t> line_open) {
    Alternative a;
    a.topology.line_open = std::move(line_open);
    return a;
}

// Three-branch network with 100 MW limits; flows are set directly.
Alternative loaded(const Network& net, std::vector<double> flows) {
    Alternative a = with_topology(std::vector<std::uint8_t>(net.switchable_branches().size(), 0));
    a.flows_mw = std::move(flows);
    return a;
}

Network hundred_mw_triangle() {
    auto net = testing::fixture("three_bus.json");
    for (auto& b : net.branches) b.limit_mw = 100.0;
    return net;
}

}  // namespace

TEST_CASE("action-count functions on hand examples") {
    const auto lc = with_topology({1, 0, 1});
    const auto ctx = make_eval_context(lc);
    CHECK(ctx.j_spec == std::vector<std::size_t>{0, 2});
    CHECK(ctx.s_spec == std::vector<std::size_t>{0, 2});
    const auto match = make_eval_context(lc, SetTarget::match_optimum);

    const auto a = with_topology({1, 1, 0});
    CHECK(eval_specific_actions(a.topology, ctx) == 1.0);
    CHECK(eval_specific_set(a.topology, ctx) == 0.0);
    CHECK(eval_specific_set(a.topology, match) == 0.0);
    CHECK(eval_topological_depth(a.topology, ctx) == 2.0);

    const auto same = with_topology({1, 0, 1});
    CHECK(eval_specific_actions(same.topology, ctx) == 2.0);
    CHECK(eval_specific_set(same.topology, match) == 1.0);
    CHECK(eval_specific_set(same.topology, ctx) == 0.0);

    const auto other = with_topology({0, 1, 0});
    CHECK(eval_specific_actions(other.topology, ctx) == 0.0);
    CHECK(eval_specific_set(other.topology, ctx) == 1.0);
    CHECK(eval_topological_depth(other.topology, ctx) == 1.0);

    CHECK_THROWS_AS(make_eval_context(lc, SetTarget::zero, 0.0), DomainError);
    CHECK_THROWS_AS(make_eval_context(lc, SetTarget::zero, 1.5), DomainError);
    CHECK_THROWS_AS(eval_specific_actions(with_topology({1}).topology, ctx), DomainError);
}

TEST_CASE("overload and quadratic load on hand examples") {
    const auto net = hundred_mw_triangle();
    const auto ctx = make_eval_context(with_topology({0, 0, 0}));
    CHECK(eval_cumulative_overload(net, loaded(net, {95.0, 89.0, 110.0}), ctx) == doctest::Approx(0.25));
    CHECK(eval_cumulative_quadratic_load(net, loaded(net, {50.0, 100.0, 20.0})) == doctest::Approx(1.29));
    // flow direction does not matter
    CHECK(eval_cumulative_overload(net, loaded(net, {-95.0, 89.0, -110.0}), ctx) == doctest::Approx(0.25));
    CHECK(eval_cumulative_quadratic_load(net, loaded(net, {-50.0, -100.0, 20.0})) == doctest::Approx(1.29));

    // an open line reads zero loading even if a stale flow is attached
    auto open = loaded(net, {95.0, 89.0, 110.0});
    open.topology.line_open = {0, 0, 1};
    CHECK(eval_cumulative_overload(net, open, ctx) == doctest::Approx(0.05));

    auto bad = net;
    bad.branches[1].limit_mw = 0.0;
    CHECK_THROWS_AS(line_loadings(bad, loaded(bad, {1.0, 1.0, 1.0})), DataError);
    CHECK_THROWS_AS(line_loadings(net, loaded(net, {1.0})), DomainError);
}

TEST_CASE("overload is zero exactly when no line exceeds the threshold") {
    const auto net = hundred_mw_triangle();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-120.0, 120.0);
    for (double thr : {0.5, 0.9, 1.0}) {
        const auto ctx = make_eval_context(with_topology({0, 0, 0}), SetTarget::zero, thr);
        for (int i = 0; i < 300; ++i) {
            const auto a = loaded(net, {u(rng), u(rng), u(rng)});
            const auto p = line_loadings(net, a);
            const double u4 = eval_cumulative_overload(net, a, ctx);
            CHECK(u4 >= 0.0);
            CHECK((u4 == 0.0) == (*std::max_element(p.begin(), p.end()) <= thr));
        }
    }
}

TEST_CASE("loadings of a solved alternative agree with oracle power flows") {
    const auto net = testing::fixture("three_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const auto lc = solve_least_cost(m, SolverSettings{});
    const auto& alt = lc.best;
    const auto pf = oracle::dc_pf(net, testing::graph_of(net, alt.topology), alt.dispatch_mw);
    REQUIRE(pf.solvable);
    const auto open = testing::open_branches(net, alt.topology);
    double u4 = 0.0, u5 = 0.0;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const bool is_open = std::find(open.begin(), open.end(), l) != open.end();
        const double p = is_open ? 0.0 : std::abs(pf.flows_mw[l]) / net.branches[l].limit_mw;
        u4 += std::max(0.0, p - 0.9);
        u5 += p * p;
    }
    const auto ctx = make_eval_context(alt);
    CHECK(evaluate(FunctionId::u4, net, alt, ctx).value == doctest::Approx(u4).epsilon(1e-6));
    CHECK(evaluate(FunctionId::u5, net, alt, ctx).value == doctest::Approx(u5).epsilon(1e-6));
    CHECK(evaluate(FunctionId::u5, net, alt, ctx).loadings.size() == net.branches.size());
}

TEST_CASE("switching sequence: trivial and single-action cases") {
    const auto net = testing::fixture("four_bus_congested.json");
    Alternative none = with_topology({0, 0, 0});
    none.dispatch_mw = {120.0, 60.0};
    const auto r0 = eval_switching_sequence(net, none);
    CHECK(r0.value == 1.0);
    CHECK(r0.feasible_order.empty());
    CHECK(r0.direction == Direction::maximize);

    for (std::size_t j = 0; j < 3; ++j) {
        for (std::vector<double> dispatch : {std::vector<double>{120.0, 60.0}, std::vector<double>{180.0, 0.0}}) {
            Alternative a = with_topology({0, 0, 0});
            a.topology.line_open[j] = 1;
            a.dispatch_mw = dispatch;
            const bool final_ok = switching_state_feasible(net, a, a.topology);
            const auto r = eval_switching_sequence(net, a);
            CHECK(r.value == (final_ok ? 1.0 : 0.0));
            if (final_ok) CHECK(r.feasible_order == std::vector<std::size_t>{j});
        }
    }
}

TEST_CASE("switching sequence: only one order avoids the overload") {
    // With 120 / 60 MW dispatch, opening 3-4 alone pushes 94 MW over the 60 MW line 1-3,
    // while opening 1-3 first is fine. Branch 3-4 is listed first so the natural order fails.
    auto net = testing::fixture("four_bus_congested.json");
    std::rotate(net.branches.begin(), net.branches.end() - 1, net.branches.end());
    rebuild_substations(net);
    REQUIRE(net.branches[0].id == 5);
    REQUIRE(net.switchable_branches() == std::vector<std::size_t>{0, 2, 3});

    Alternative a = with_topology({1, 1, 0});
    a.dispatch_mw = {120.0, 60.0};
    CHECK_FALSE(switching_state_feasible(net, a, with_topology({1, 0, 0}).topology));
    CHECK(switching_state_feasible(net, a, with_topology({0, 1, 0}).topology));
    CHECK(switching_state_feasible(net, a, a.topology));

    const auto r = eval_switching_sequence(net, a);
    CHECK(r.value == 1.0);
    CHECK(r.feasible_order == std::vector<std::size_t>{1, 0});

    // a dispatch that overloads every intermediate state
    a.dispatch_mw = {150.0, 30.0};
    const auto bad = eval_switching_sequence(net, a);
    CHECK(bad.value == 0.0);
    CHECK(bad.feasible_order.empty());
}

TEST_CASE("switching sequence agrees with the oracle on random five-bus instances") {
    std::mt19937_64 rng(555);
    std::size_t feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        CAPTURE(trial);
        const auto inst = testing::random_sequence_instance(rng, 4);
        Alternative a;
        a.topology = inst.target;
        a.dispatch_mw = inst.dispatch_mw;
        const auto r = eval_switching_sequence(inst.net, a);
        const bool expected = testing::oracle_sequence_feasible(inst);
        CHECK((r.value == 1.0) == expected);
        if (!expected) {
            ++infeasible;
            continue;
        }
        ++feasible;
        // the returned order uses each action once and keeps every state operable
        auto state = base_topology(inst.net);
        std::vector<std::size_t> sorted = r.feasible_order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> actions;
        for (std::size_t j = 0; j < inst.target.line_open.size(); ++j)
            if (inst.target.line_open[j]) actions.push_back(j);
        CHECK(sorted == actions);
        for (auto j : r.feasible_order) {
            state.line_open[j] = 1;
            CHECK(oracle::state_operable(inst.net, testing::graph_of(inst.net, state), inst.dispatch_mw));
        }
    }
    CHECK(feasible > 20);
    CHECK(infeasible > 20);
}

TEST_CASE("ordering search matches a subset dynamic program") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = rng() % 6;
        std::vector<bool> table(std::size_t{1} << n);
        for (std::size_t m = 0; m < table.size(); ++m) table[m] = rng() % 4 != 0;
        const auto pred = [&](std::uint32_t m) { return static_cast<bool>(table[m]); };
        const auto order = find_feasible_order(n, pred);
        CHECK(order.has_value() == oracle::sequence_exists(n, pred));
        if (order) {
            REQUIRE(order->size() == n);
            std::uint32_t mask = 0;
            for (auto a : *order) {
                CHECK((mask & (1u << a)) == 0u);
                mask |= 1u << a;
                CHECK(table[mask]);
            }
        }
    }
    CHECK_THROWS_AS(find_feasible_order(17, [](std::uint32_t) { return true; }), DomainError);
}

TEST_CASE("ranking by values") {
    CHECK(rank_by_values({3.2, 1.1, 2.0}, Direction::minimize).ranked_ids == std::vector<std::size_t>{1, 2, 0});
    CHECK(rank_by_values({3.2, 1.1, 2.0}, Direction::maximize).ranked_ids == std::vector<std::size_t>{0, 2, 1});
    CHECK(rank_by_values({1.0, 0.0, 1.0, 0.0}, Direction::maximize).ranked_ids ==
          std::vector<std::size_t>{0, 2, 1, 3});
    CHECK(rank_by_values({1.0, 0.0, 1.0, 0.0}, Direction::minimize).ranked_ids ==
          std::vector<std::size_t>{1, 3, 0, 2});
    CHECK(rank_by_values({}, Direction::minimize).ranked_ids.empty());
}

TEST_CASE("bounds, directions and names") {
    CHECK(respects_bound(Direction::minimize, 5.0, 4.0, 0.0));
    CHECK_FALSE(respects_bound(Direction::minimize, 3.9, 4.0, 0.0));
    CHECK(respects_bound(Direction::minimize, 3.95, 4.0, 0.1));
    CHECK(respects_bound(Direction::maximize, 3.0, 4.0, 0.0));
    CHECK_FALSE(respects_bound(Direction::maximize, 4.2, 4.0, 0.1));

    CHECK(direction_of(FunctionId::u1) == Direction::maximize);
    CHECK(direction_of(FunctionId::u2) == Direction::maximize);
    CHECK(direction_of(FunctionId::u3) == Direction::minimize);
    CHECK(direction_of(FunctionId::u4) == Direction::minimize);
    CHECK(direction_of(FunctionId::u5) == Direction::minimize);
    CHECK(direction_of(FunctionId::u6) == Direction::maximize);
    for (auto fn : kAllFunctions) CHECK(parse_function_id(to_string(fn)) == fn);
    CHECK(parse_function_id("U4") == FunctionId::u4);
    CHECK_THROWS_AS(parse_function_id("u7"), DomainError);
    CHECK_THROWS_AS(parse_function_id("x1"), DomainError);
}

TEST_CASE("evaluating and ranking a set") {
    const auto net = testing::fixture("four_bus_congested.json");
    AlternativeSet set;
    for (auto t : {std::vector<std::uint8_t>{1, 1, 0}, {0, 0, 0}, {1, 0, 0}, {1, 1, 1}})
        set.alternatives.push_back(with_topology(t));
    const auto ctx = make_eval_context(with_topology({1, 0, 0}));
    CHECK(evaluate_set(FunctionId::u3, net, set, ctx) == std::vector<double>{2, 0, 1, 3});
    CHECK(evaluate_set(FunctionId::u1, net, set, ctx) == std::vector<double>{1, 0, 1, 1});
    const auto r = rank_alternatives(set, FunctionId::u3, net, ctx);
    CHECK(r.ranked_ids == std::vector<std::size_t>{1, 2, 0, 3});
    CHECK(r.source == "simulated:u3");
    CHECK(rank_alternatives(set, FunctionId::u1, net, ctx).ranked_ids == std::vector<std::size_t>{0, 2, 3, 1});
}
