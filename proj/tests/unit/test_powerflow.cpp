#include <doctest.h>

#include <random>

#include "gridmga/errors.hpp"
#include "gridmga/powerflow.hpp"
#include "support.hpp"

using namespace gridmga;

TEST_CASE("triangle flows: 40 MW direct, 20 MW over two hops") {
    const auto net = testing::fixture("three_bus.json");
    const auto pf = dc_power_flow(net, base_topology(net), default_layouts(net), std::vector<double>{60.0, 0.0});
    CHECK(pf.flows_mw[0] == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(pf.flows_mw[1] == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(pf.flows_mw[2] == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(pf.islanded_buses.empty());
    CHECK(pf.slack_within_bounds);
    CHECK(pf.slack_adjustment_mw == doctest::Approx(0.0));
}

TEST_CASE("slack bus absorbs the dispatch mismatch") {
    const auto net = testing::fixture("three_bus.json");
    const auto pf = dc_power_flow(net, base_topology(net), default_layouts(net), std::vector<double>{0.0, 30.0});
    CHECK(pf.slack_adjustment_mw == doctest::Approx(30.0));
    CHECK(pf.slack_within_bounds);
    // the slack unit would have to run at -40 MW
    const auto over = dc_power_flow(net, base_topology(net), default_layouts(net), std::vector<double>{10.0, 100.0});
    CHECK_FALSE(over.slack_within_bounds);
}

TEST_CASE("islands with injection are reported") {
    const auto net = testing::fixture("four_bus_congested.json");
    auto t = base_topology(net);
    t.line_open = {1, 1, 1};
    const auto pf = dc_power_flow(net, t, default_layouts(net), std::vector<double>{180.0, 0.0});
    CHECK(pf.islanded_buses == std::vector<int>{3});
    CHECK(islanded_injection_buses(net, t, default_layouts(net), std::vector<double>{180.0, 0.0}) ==
          std::vector<int>{3});
}

TEST_CASE("topology and layout dimensions are checked") {
    const auto net = testing::fixture("three_bus.json");
    Topology t;
    t.line_open = {0, 0};
    CHECK_THROWS_AS(dc_power_flow(net, t, default_layouts(net), std::vector<double>{60.0, 0.0}), DomainError);
}

TEST_CASE("line power flows agree with the elimination oracle on random states") {
    const auto net = testing::bundled("case57.m");
    std::mt19937_64 rng(2024);
    std::size_t compared = 0, unsolvable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto t = base_topology(net);
        const std::size_t opened = rng() % 5;
        for (std::size_t k = 0; k < opened; ++k) t.line_open[rng() % t.line_open.size()] = 1;
        // random shares of the total load, so the slack adjustment stays small
        std::vector<double> dispatch;
        double sum = 0.0;
        for (const auto& g : net.generators) {
            std::uniform_real_distribution<double> u(0.0, g.p_max);
            dispatch.push_back(u(rng));
            sum += dispatch.back();
        }
        for (auto& p : dispatch) p *= net.total_load_mw() / sum;
        const auto lib = dc_power_flow(net, t, default_layouts(net), dispatch);
        const auto ref = oracle::dc_pf(net, testing::graph_of(net, t), dispatch);
        const bool lib_ok = lib.islanded_buses.empty() && lib.slack_within_bounds;
        CHECK(lib_ok == ref.solvable);
        if (!ref.solvable || !lib_ok) {
            ++unsolvable;
            continue;
        }
        ++compared;
        for (std::size_t l = 0; l < net.branches.size(); ++l)
            CHECK(std::abs(lib.flows_mw[l] - ref.flows_mw[l]) <= 1e-6 * std::max(1.0, std::abs(ref.flows_mw[l])));
    }
    CHECK(compared > 100);
}

TEST_CASE("busbar split flows agree with the oracle graph") {
    auto net = testing::fixture("four_bus_congested.json");
    mark_splittable(net, std::vector<int>{2});
    auto t = base_topology(net);
    t.busbar_split = {1};
    auto layouts = default_layouts(net);
    REQUIRE(layouts.size() == 1);
    // bus 2 ends: branch 1 (to), branch 3 (from), branch 4 (from); move branch 4 and the generator to B
    const auto& sub = net.substations[net.splittable_substations()[0]];
    REQUIRE(sub.attached_branch_ends.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) layouts[0].end_on_b[e] = sub.attached_branch_ends[e].branch == 4;
    layouts[0].injection_on_b = {1};

    const ElectricalGraph graph(net, t, layouts);
    CHECK(graph.node_count() == 5);
    CHECK(graph.generator_node(1) == 4);
    CHECK(graph.from_node(3) == 4);

    const std::vector<double> dispatch{120.0, 60.0};
    const auto lib = dc_power_flow(net, t, layouts, dispatch);
    const auto ref = oracle::dc_pf(net, testing::split_graph(net, t, layouts), dispatch);
    REQUIRE(ref.solvable);
    REQUIRE(lib.islanded_buses.empty());
    for (std::size_t l = 0; l < net.branches.size(); ++l)
        CHECK(lib.flows_mw[l] == doctest::Approx(ref.flows_mw[l]).epsilon(1e-9));
    // generator 2 on its own busbar with branch 4 only: it feeds bus 4 directly
    CHECK(lib.flows_mw[3] == doctest::Approx(60.0));

    // an unsplit substation ignores its layout
    auto unsplit = t;
    unsplit.busbar_split = {0};
    const auto plain = dc_power_flow(net, unsplit, layouts, dispatch);
    const auto plain_default = dc_power_flow(net, unsplit, default_layouts(net), dispatch);
    CHECK(plain.flows_mw == plain_default.flows_mw);
}
