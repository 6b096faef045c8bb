#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "gridmga/errors.hpp"
#include "gridmga/mga.hpp"
#include "support.hpp"

using namespace gridmga;

TEST_CASE("diversity weights are a pure function of seed and index") {
    const auto a = sample_diversity_weights(4, 7, 0);
    const auto b = sample_diversity_weights(4, 7, 0);
    CHECK(a.values == b.values);
    CHECK(a.kind == WeightKind::diversity);
    CHECK(sample_diversity_weights(4, 7, 1).values != a.values);
    CHECK(sample_diversity_weights(4, 8, 0).values != a.values);
    // high halves of seed and index matter too
    CHECK(sample_diversity_weights(4, 7 + (1ull << 32), 0).values != a.values);
    CHECK(sample_diversity_weights(4, 7, 1ull << 32).values != a.values);
    CHECK_THROWS_AS(sample_diversity_weights(0, 1, 0), DomainError);
}

TEST_CASE("diversity weights look uniform on [0, 1)") {
    constexpr std::size_t n = 6, samples = 10000;
    std::vector<double> mean(n, 0.0);
    for (std::size_t i = 0; i < samples; ++i) {
        const auto w = sample_diversity_weights(n, 99, i);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK_FALSE(w.values[j] < 0.0);
            CHECK(w.values[j] < 1.0);
            mean[j] += w.values[j] / samples;
        }
    }
    for (double m : mean) {
        CHECK(m >= 0.45);
        CHECK(m <= 0.55);
    }
}

TEST_CASE("uniqueness flags") {
    std::vector<Alternative> alts(4);
    alts[0].topology.line_open = {1, 0};
    alts[1].topology.line_open = {0, 1};
    alts[2].topology.line_open = {1, 0};
    alts[3].topology.line_open = {0, 0};
    flag_unique(alts);
    CHECK(alts[0].unique);
    CHECK(alts[1].unique);
    CHECK_FALSE(alts[2].unique);
    CHECK(alts[3].unique);

    Topology ref;
    ref.line_open = {0, 1};
    flag_unique(alts, std::span<const Topology>(&ref, 1));
    CHECK(alts[0].unique);
    CHECK_FALSE(alts[1].unique);
}

TEST_CASE("solve_batch keeps order and rethrows the first failure") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const double f_star = 3600.0;
    const auto coef = augmentation_coefficient(f_star);
    const std::vector<std::vector<double>> weights{{1, 1, 1}, {1, -1, -1}, {-1, 1, 1}, {1, 1, -1}};
    const auto out = solve_batch(
        m, weights.size(), [&](std::size_t i) { return ObjectiveSpec{weights[i], coef}; }, f_star, 0.05,
        SolverSettings{}, 3);
    REQUIRE(out.size() == weights.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto single = solve_alternative(m, ObjectiveSpec{weights[i], coef}, f_star, 0.05, SolverSettings{});
        CHECK(out[i].topology == single.topology);
    }
    CHECK_THROWS_WITH_AS(solve_batch(
                             m, 6,
                             [&](std::size_t i) {
                                 if (i == 2) throw std::runtime_error("boom");
                                 return ObjectiveSpec{weights[0], coef};
                             },
                             f_star, 0.05, SolverSettings{}, 2),
                         "boom", std::runtime_error);
}

TEST_CASE("mga sets stay inside the epsilon bound and the oracle's feasible topologies") {
    for (const char* name : {"three_bus_congested.json", "four_bus_congested.json"}) {
        CAPTURE(name);
        const auto net = testing::fixture(name);
        const auto m = build_reconfiguration_model(net, {});
        const auto lc = solve_least_cost(m, SolverSettings{});
        const double eps = 0.05;
        const auto set = generate_mga_set(m, lc.f_star, eps, 20, 5, SolverSettings{}, {.workers = 2, .least_cost = std::nullopt});
        REQUIRE(set.size() == 20);
        CHECK(set.label == "mga");
        CHECK(set.seed == 5);

        std::set<std::vector<std::uint8_t>> allowed;
        for (const auto& e : oracle::enumerate_topologies(net, 3))
            if (e.opf.feasible && e.opf.cost <= lc.f_star * (1 + eps) + 1e-6) allowed.insert(e.open);

        std::set<std::vector<std::uint8_t>> seen;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& a = set.alternatives[i];
            CHECK(a.cost <= lc.f_star * (1 + eps) + 1e-6);
            CHECK(a.slack == doctest::Approx(lc.f_star * (1 + eps) - a.cost));
            CHECK(a.weight_index == i);
            CHECK(a.weight_seed == 5);
            CHECK(allowed.contains(a.topology.line_open));
            CHECK(a.unique == seen.insert(a.topology.line_open).second);
        }
    }
}

TEST_CASE("mga sets are reproducible and count one equals a single solve") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const double f_star = solve_least_cost(m, SolverSettings{}).f_star;
    const auto a = generate_mga_set(m, f_star, 0.05, 8, 11, SolverSettings{}, {.workers = 1, .least_cost = std::nullopt});
    const auto b = generate_mga_set(m, f_star, 0.05, 8, 11, SolverSettings{}, {.workers = 3, .least_cost = std::nullopt});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.alternatives[i].topology == b.alternatives[i].topology);

    const auto one = generate_mga_set(m, f_star, 0.05, 1, 11, SolverSettings{});
    REQUIRE(one.size() == 1);
    const auto direct = solve_alternative(
        m, ObjectiveSpec{sample_diversity_weights(m.z_count(), 11, 0).values, augmentation_coefficient(f_star)},
        f_star, 0.05, SolverSettings{});
    CHECK(one.alternatives[0].topology == direct.topology);
    CHECK(one.alternatives[0].objective_value == doctest::Approx(direct.objective_value));

    CHECK_THROWS_AS(generate_mga_set(m, f_star, 0.05, 0, 1, SolverSettings{}), DomainError);
}

TEST_CASE("least-cost solution can be prepended") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const auto lc = solve_least_cost(m, SolverSettings{});
    MgaOptions opts;
    opts.least_cost = lc.best;
    const auto set = generate_mga_set(m, lc.f_star, 0.05, 4, 2, SolverSettings{}, opts);
    REQUIRE(set.size() == 5);
    CHECK(set.alternatives[0].round == "least-cost");
    CHECK(set.alternatives[0].slack == doctest::Approx(0.05 * lc.f_star));
    CHECK(set.alternatives[0].unique);
}
