#include <doctest.h>

#include "support.hpp"

using oracle::kUnbounded;
using oracle::Lp;
using oracle::LpStatus;

TEST_CASE("oracle simplex on small hand-solved programs") {
    SUBCASE("bounded maximization") {
        Lp lp;
        const auto x = lp.add_var(0.0, 3.0, -1.0);
        const auto y = lp.add_var(0.0, 2.0, -1.0);
        lp.add_row({{x, 1.0}, {y, 1.0}}, '<', 4.0);
        const auto s = oracle::solve_lp(lp);
        REQUIRE(s.status == LpStatus::optimal);
        CHECK(s.objective == doctest::Approx(-4.0));
    }
    SUBCASE("infeasible bounds and rows") {
        Lp lp;
        const auto x = lp.add_var(0.0, 3.0, 1.0);
        lp.add_row({{x, 1.0}}, '>', 5.0);
        CHECK(oracle::solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("unbounded ray") {
        Lp lp;
        const auto x = lp.add_var(0.0, kUnbounded, -1.0);
        const auto y = lp.add_var(0.0, kUnbounded, 0.0);
        lp.add_row({{x, 1.0}, {y, -1.0}}, '<', 1.0);
        CHECK(oracle::solve_lp(lp).status == LpStatus::unbounded);
    }
    SUBCASE("free variable and equality") {
        Lp lp;
        const auto x = lp.add_var(-kUnbounded, kUnbounded, 1.0);
        const auto y = lp.add_var(-2.0, kUnbounded, 0.0);
        lp.add_row({{x, 1.0}, {y, -1.0}}, '=', -1.0);
        const auto s = oracle::solve_lp(lp);
        REQUIRE(s.status == LpStatus::optimal);
        CHECK(s.objective == doctest::Approx(-3.0));
        CHECK(s.x[y] == doctest::Approx(-2.0));
    }
    SUBCASE("upper-bounded only variable") {
        Lp lp;
        const auto x = lp.add_var(-kUnbounded, 5.0, -2.0);
        lp.add_row({{x, 1.0}}, '>', -1.0);
        const auto s = oracle::solve_lp(lp);
        REQUIRE(s.status == LpStatus::optimal);
        CHECK(s.x[x] == doctest::Approx(5.0));
    }
}

TEST_CASE("oracle power flows on the uncongested triangle match the hand solution") {
    // theta2, theta3 from [20 -10; -10 20] theta = [0; -0.6] with b = 10 pu
    const auto net = testing::fixture("three_bus.json");
    const auto g = oracle::line_graph(net, {});
    const auto pf = oracle::dc_pf(net, g, {60.0, 0.0});
    REQUIRE(pf.solvable);
    CHECK(pf.flows_mw[0] == doctest::Approx(20.0));
    CHECK(pf.flows_mw[1] == doctest::Approx(40.0));
    CHECK(pf.flows_mw[2] == doctest::Approx(20.0));

    const auto opf = oracle::dc_opf(net, g);
    REQUIRE(opf.feasible);
    CHECK(opf.cost == doctest::Approx(600.0));
    CHECK(opf.flows_mw[1] == doctest::Approx(40.0));
}

TEST_CASE("oracle enumeration on the congested triangle") {
    // flow 1->2 is (P1 - P2) / 3 with equal reactances, so its 10 MW limit caps the cheap unit at 45 MW
    const auto net = testing::fixture("three_bus_congested.json");
    const auto all = oracle::enumerate_topologies(net, 3);
    REQUIRE(all.size() == 8);
    CHECK(all[0].opf.feasible);
    CHECK(all[0].opf.cost == doctest::Approx(900.0));
    CHECK(all[1].opf.cost == doctest::Approx(600.0));  // line 1-2 open
    CHECK(all[4].opf.cost == doctest::Approx(600.0));  // line 2-3 open
    CHECK(all[2].opf.cost == doctest::Approx(1600.0)); // line 1-3 open
    CHECK_FALSE(all[3].opf.feasible);                  // bus 1 cut off, load lost
    CHECK(all[5].opf.cost == doctest::Approx(600.0));  // bus 2 isolated without load
}

TEST_CASE("oracle pf detects islands and slack limits") {
    const auto net = testing::fixture("four_bus_congested.json");
    // opening 1-3, 2-3 and 3-4 isolates the loaded bus 3
    const auto g = oracle::line_graph(net, {1, 2, 4});
    CHECK_FALSE(oracle::dc_pf(net, g, {120.0, 60.0}).solvable);
    // slack must pick up 180 MW but the generator stops at 300
    const auto ok = oracle::dc_pf(net, oracle::line_graph(net, {}), {0.0, 0.0});
    CHECK(ok.solvable);
    auto small = net;
    small.generators[0].p_max = 100.0;
    CHECK_FALSE(oracle::dc_pf(small, oracle::line_graph(small, {}), {0.0, 0.0}).solvable);
}

TEST_CASE("oracle sequence search") {
    CHECK(oracle::sequence_exists(0, [](std::uint32_t) { return false; }));
    CHECK(oracle::sequence_exists(2, [](std::uint32_t m) { return m != 1u; }));
    CHECK_FALSE(oracle::sequence_exists(2, [](std::uint32_t m) { return m == 3u; }));
    CHECK_FALSE(oracle::sequence_exists(3, [](std::uint32_t m) { return m != 7u; }));
}
