#include <doctest.h>

#include <random>

#include "gridmga/errors.hpp"
#include "gridmga/network.hpp"
#include "support.hpp"

using namespace gridmga;

namespace {

const char* kThreeBusCase = R"(function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	138	1	1.1	0.9;
	2	2	0	0	0	0	1	1	0	138	1	1.1	0.9;
	3	1	60	0	0	0	1	1	0	138	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0;
	2	0	0	100	-100	1	100	1	200	0;
];
mpc.branch = [
	1	2	0	0.1	0	500	0	0	0	0	1	-360	360;
	1	3	0	0.1	0	500	0	0	0	0	1	-360	360;
	2	3	0	0.1	0	0	0	0	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.01	10	0;
	2	0	0	2	30	0;
];
)";

Topology random_topology(std::mt19937_64& rng, std::size_t lines, std::size_t busbars) {
    Topology t;
    for (std::size_t i = 0; i < lines; ++i) t.line_open.push_back(rng() & 1u);
    for (std::size_t i = 0; i < busbars; ++i) t.busbar_split.push_back(rng() & 1u);
    return t;
}

}  // namespace

TEST_CASE("matpower text with three buses parses into the expected structure") {
    const auto net = parse_matpower_case(kThreeBusCase, "tiny");
    CHECK(net.buses.size() == 3);
    CHECK(net.branches.size() == 3);
    CHECK(net.generators.size() == 2);
    CHECK(net.buses[0].is_slack);
    CHECK(net.buses[2].load_mw == doctest::Approx(60.0));
    CHECK(net.branches[0].susceptance == doctest::Approx(10.0));
    CHECK(net.branches[0].limit_mw == doctest::Approx(500.0));
    CHECK(net.generators[0].cost_per_mwh == doctest::Approx(10.0));
    CHECK(net.generators[1].cost_per_mwh == doctest::Approx(30.0));
    // unrated branch gets a limit that cannot bind
    CHECK(net.branches[2].limit_mw >= 10.0 * net.total_load_mw());
    CHECK(validate_network(net).empty());
}

TEST_CASE("two slack buses are rejected") {
    std::string text = kThreeBusCase;
    text.replace(text.find("2\t2\t0"), 5, "2\t3\t0");
    try {
        parse_matpower_case(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("multiple slack buses") != std::string::npos);
    }
}

TEST_CASE("malformed matpower text reports the offending line") {
    std::string text = kThreeBusCase;
    text.replace(text.find("0.1\t0\t500"), 3, "abc");
    try {
        parse_matpower_case(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 14);
    }
    CHECK_THROWS_AS(parse_matpower_case("mpc.baseMVA = 100;"), ParseError);
}

TEST_CASE("bundled cases load with the published table sizes") {
    const auto c57 = testing::bundled("case57.m");
    CHECK(c57.buses.size() == 57);
    CHECK(c57.branches.size() == 80);
    CHECK(c57.generators.size() == 7);
    CHECK(validate_network(c57).empty());

    const auto c118 = testing::bundled("case118.m");
    CHECK(c118.buses.size() == 118);
    CHECK(c118.branches.size() == 186);
    CHECK(c118.generators.size() == 54);
    CHECK(validate_network(c118).empty());
}

TEST_CASE("native document round trip is lossless") {
    for (const char* name : {"case57.m", "case118.m"}) {
        auto net = testing::bundled(name);
        mark_splittable_by_degree(net, 4);
        const auto text = to_network_document(net);
        const auto back = parse_network_document(text);
        CHECK(to_network_document(back) == text);
        REQUIRE(back.buses.size() == net.buses.size());
        REQUIRE(back.branches.size() == net.branches.size());
        REQUIRE(back.generators.size() == net.generators.size());
        REQUIRE(back.substations.size() == net.substations.size());
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            CHECK(back.buses[i].id == net.buses[i].id);
            CHECK(back.buses[i].is_slack == net.buses[i].is_slack);
            CHECK(back.buses[i].load_mw == net.buses[i].load_mw);
            CHECK(back.buses[i].base_kv == net.buses[i].base_kv);
        }
        for (std::size_t i = 0; i < net.branches.size(); ++i) {
            const auto &a = net.branches[i], &b = back.branches[i];
            CHECK(a.id == b.id);
            CHECK(a.from_bus == b.from_bus);
            CHECK(a.to_bus == b.to_bus);
            CHECK(a.susceptance == b.susceptance);
            CHECK(a.limit_mw == b.limit_mw);
            CHECK(a.switchable == b.switchable);
        }
        for (std::size_t i = 0; i < net.generators.size(); ++i) {
            const auto &a = net.generators[i], &b = back.generators[i];
            CHECK(a.id == b.id);
            CHECK(a.bus == b.bus);
            CHECK(a.p_min == b.p_min);
            CHECK(a.p_max == b.p_max);
            CHECK(a.cost_per_mwh == b.cost_per_mwh);
            CHECK(a.p_setpoint == b.p_setpoint);
        }
        for (std::size_t i = 0; i < net.substations.size(); ++i) {
            CHECK(back.substations[i].bus == net.substations[i].bus);
            CHECK(back.substations[i].splittable == net.substations[i].splittable);
            CHECK(back.substations[i].attached_branch_ends == net.substations[i].attached_branch_ends);
            CHECK(back.substations[i].attached_injections == net.substations[i].attached_injections);
        }
        CHECK(back.splittable_substations() == net.splittable_substations());
    }
}

TEST_CASE("native document errors") {
    CHECK_THROWS_AS(parse_network_document("{"), ParseError);
    CHECK_THROWS_AS(parse_network_document(R"({"format": "other"})"), ParseError);
    CHECK_THROWS_AS(parse_network_document(R"({"format": "gridmga-network", "version": 1, "buses": []})"), ParseError);
}

TEST_CASE("validation reports dangling references and isolated buses") {
    auto net = testing::fixture("three_bus.json");
    CHECK(validate_network(net).empty());

    auto dangling = net;
    dangling.branches[0].to_bus = 99;
    auto report = validate_network(dangling);
    // the branch and the substation that still lists it both dangle
    REQUIRE_FALSE(report.empty());
    for (const auto& v : report) CHECK(v.code == "dangling-reference");

    auto isolated = net;
    isolated.buses.push_back({4, 138.0, false, 0.0});
    rebuild_substations(isolated);
    report = validate_network(isolated);
    REQUIRE(report.size() == 1);
    CHECK(report[0].code == "disconnected");

    auto bad_limit = net;
    bad_limit.branches[1].limit_mw = 0.0;
    report = validate_network(bad_limit);
    REQUIRE(report.size() == 1);
    CHECK(report[0].code == "nonpositive-limit");
    CHECK_THROWS_AS(require_valid(bad_limit), ValidationError);
}

TEST_CASE("capacity scaling") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto same = scale_line_capacities(net, 1.0);
    CHECK(to_network_document(same) == to_network_document(net));

    auto hundred = net;
    hundred.branches[0].limit_mw = 100.0;
    CHECK(scale_line_capacities(hundred, 0.5).branches[0].limit_mw == doctest::Approx(50.0));

    CHECK_THROWS_AS(scale_line_capacities(net, 0.0), DomainError);
    CHECK_THROWS_AS(scale_line_capacities(net, 1.5), DomainError);

    // composition is multiplicative
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const auto c57 = testing::bundled("case57.m");
    for (int trial = 0; trial < 20; ++trial) {
        const double a = u(rng), b = u(rng);
        const auto twice = scale_line_capacities(scale_line_capacities(c57, a), b);
        const auto once = scale_line_capacities(c57, a * b);
        for (std::size_t l = 0; l < c57.branches.size(); ++l)
            CHECK(std::abs(twice.branches[l].limit_mw - once.branches[l].limit_mw) <=
                  1e-12 * once.branches[l].limit_mw);
    }
}

TEST_CASE("limit derivation follows the setpoint power flow") {
    const auto net = testing::fixture("three_bus.json");
    // setpoints: gen 1 at 60 MW, load 60 MW at bus 3 -> flows 40 / 20 / 20
    const auto rated = derive_limits_from_setpoint_flows(net, 1.5, 25.0);
    CHECK(rated.branches[0].limit_mw == doctest::Approx(30.0));  // 1.5 * 20
    CHECK(rated.branches[1].limit_mw == doctest::Approx(60.0));  // 1.5 * 40
    CHECK(rated.branches[2].limit_mw == doctest::Approx(30.0));
    const auto floored = derive_limits_from_setpoint_flows(net, 1.0, 25.0);
    CHECK(floored.branches[0].limit_mw == doctest::Approx(25.0));
    CHECK(floored.branches[1].limit_mw == doctest::Approx(40.0));
    CHECK_THROWS_AS(derive_limits_from_setpoint_flows(net, 0.0, 1.0), DomainError);
}

TEST_CASE("hamming distance examples") {
    Topology a, b;
    a.line_open = {0, 1, 1, 0};
    b.line_open = {0, 0, 1, 1};
    CHECK(hamming_distance(a, b) == 2);
    CHECK(hamming_distance(a, a) == 0);

    Topology t, c;
    t.line_open = {1, 0, 1};
    t.busbar_split = {0, 1};
    c.line_open = {0, 1, 0};
    c.busbar_split = {1, 0};
    CHECK(hamming_distance(t, c) == 5);

    Topology shorter;
    shorter.line_open = {0, 1, 1};
    CHECK_THROWS_AS(hamming_distance(a, shorter), DomainError);
}

TEST_CASE("hamming distance is a metric") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t lines = 1 + rng() % 12, busbars = rng() % 4;
        const auto x = random_topology(rng, lines, busbars);
        const auto y = random_topology(rng, lines, busbars);
        const auto z = random_topology(rng, lines, busbars);
        CHECK(hamming_distance(x, y) == hamming_distance(y, x));
        CHECK((hamming_distance(x, y) == 0) == (x == y));
        CHECK(hamming_distance(x, z) <= hamming_distance(x, y) + hamming_distance(y, z));
    }
}

TEST_CASE("flat topology layout lists lines before busbars") {
    Topology t;
    t.line_open = {1, 0};
    t.busbar_split = {1};
    CHECK(t.flat() == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(t.action_count() == 2);
    const std::vector<std::uint8_t> z{0, 1, 1};
    const auto back = Topology::from_flat(z, 2);
    CHECK(back.line_open == std::vector<std::uint8_t>{0, 1});
    CHECK(back.busbar_split == std::vector<std::uint8_t>{1});
}

TEST_CASE("substation table and split marks") {
    auto net = testing::fixture("four_bus_congested.json");
    REQUIRE(net.substations.size() == 4);
    const auto& s2 = net.substations[1];
    CHECK(s2.bus == 2);
    CHECK(s2.attached_branch_ends.size() == 3);
    CHECK(s2.attached_injections.size() == 1);  // generator 2, no load

    mark_splittable(net, std::vector<int>{2});
    CHECK(net.splittable_substations() == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(mark_splittable(net, std::vector<int>{42}), DomainError);

    auto c57 = testing::bundled("case57.m");
    mark_splittable_by_degree(c57, 4);
    for (auto k : c57.splittable_substations()) CHECK(c57.substations[k].attached_branch_ends.size() >= 4);
    const auto base = base_topology(c57);
    CHECK(base.line_open.size() == 80);
    CHECK(base.busbar_split.size() == c57.splittable_substations().size());
    CHECK(base.action_count() == 0);
}
