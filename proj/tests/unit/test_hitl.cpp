#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridmga/errors.hpp"
#include "gridmga/hitl.hpp"
#include "support.hpp"

using namespace gridmga;

namespace {

/// rows[i] is the line_open vector of alternative i.
AlternativeSet make_set(const std::vector<std::vector<std::uint8_t>>& rows, double f_star = 100.0) {
    AlternativeSet s;
    s.f_star = f_star;
    for (const auto& r : rows) {
        Alternative a;
        a.topology.line_open = r;
        s.alternatives.push_back(a);
    }
    return s;
}

RankingFeedback ranking(std::vector<std::size_t> ids) { return {std::move(ids), "test"}; }

/// Column 0 takes `ones` ones followed by zeros; column 1 is always zero.
AlternativeSet column_set(std::size_t count, std::size_t ones) {
    std::vector<std::vector<std::uint8_t>> rows;
    for (std::size_t i = 0; i < count; ++i) rows.push_back({static_cast<std::uint8_t>(i < ones), 0});
    return make_set(rows);
}

}  // namespace

TEST_CASE("baseline encoding examples") {
    // column (1,1,1,0,...,0), top alternative has z = 1: delta = 0.3 - 1 = -0.7
    const auto set = column_set(10, 3);
    const auto deltas = baseline_deltas(set, ranking({0}));
    CHECK(deltas[0][0] == doctest::Approx(-0.7));
    const auto w = encode_feedback_baseline(set, ranking({0}), 0.15);
    REQUIRE(w.size() == 2);
    CHECK(w[0].values[0] == -1.0);
    CHECK(w[0].values[1] == 0.0);
    CHECK(w[0].kind == WeightKind::feedback);

    CHECK(threshold_weight(0.1, 0.15) == 0.0);
    CHECK(threshold_weight(-0.1, 0.15) == 0.0);
    CHECK(threshold_weight(0.15, 0.15) == 0.0);
    CHECK(threshold_weight(0.16, 0.15) == 1.0);

    // two top alternatives with w = -1 each sum to -2
    const auto two = encode_feedback_baseline(set, ranking({0, 1}), 0.15);
    REQUIRE(two.size() == 3);
    CHECK(two[0].values[0] == -1.0);
    CHECK(two[1].values[0] == -1.0);
    CHECK(two[2].values[0] == -2.0);
}

TEST_CASE("v1 encoding examples") {
    // mean over the set 0.3, top three (1, 1, 0): delta = 0.3 - 2/3
    const auto set = column_set(10, 3);
    const auto v2 = encode_feedback_v2(set, ranking({0, 1, 5}));
    CHECK(v2.values[0] == doctest::Approx(0.3 - 2.0 / 3.0));
    const auto w = encode_feedback_v1(set, ranking({0, 1, 5}), 0.15);
    CHECK(w.values[0] == -1.0);
    CHECK(w.values[1] == 0.0);

    // ranking the whole set gives equal means
    CHECK(encode_feedback_v1(set, ranking({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), 0.15).values[0] == 0.0);

    // identical alternatives give a zero vector
    const auto same = make_set({{1, 0, 1}, {1, 0, 1}, {1, 0, 1}});
    for (double v : encode_feedback_v1(same, ranking({2}), 0.15).values) CHECK(v == 0.0);
}

TEST_CASE("v2 encoding examples") {
    // 30 alternatives, 18 ones: mean 0.6; ten ranked with a single one: mean 0.1
    const auto set = column_set(30, 18);
    const auto w = encode_feedback_v2(set, ranking({0, 18, 19, 20, 21, 22, 23, 24, 25, 26}));
    CHECK(w.values[0] == doctest::Approx(0.5));
    CHECK(w.values[1] == 0.0);

    // mean 0.3, top mean 1.0
    const auto s10 = column_set(10, 3);
    CHECK(encode_feedback_v2(s10, ranking({0, 1, 2})).values[0] == doctest::Approx(-0.7));
    CHECK(encode_feedback_v2(s10, ranking({0, 1, 2, 3, 4, 5, 6, 7, 8, 9})).values[0] == doctest::Approx(0.0));
}

TEST_CASE("composition examples") {
    const WeightVector wd{{1.0, 0.0}}, wh{{0.0, -2.0}, WeightKind::feedback};
    auto obj = compose_hitl_objective(wd, wh, 1.0, 1.0, 250.0);
    CHECK(obj.z_coefficients == std::vector<double>{1.0, -1.0});
    CHECK(obj.slack_coefficient == doctest::Approx(-1.0 / (100.0 * 250.0)));

    const WeightVector wd2{{3.0, 1.0}};
    obj = compose_hitl_objective(wd2, wh, 2.0, 0.0, 250.0);
    CHECK(obj.z_coefficients[0] == doctest::Approx(2.0 * 3.0 / std::sqrt(10.0)));
    CHECK(obj.z_coefficients[1] == doctest::Approx(2.0 * 1.0 / std::sqrt(10.0)));

    const WeightVector wh34{{3.0, 4.0}, WeightKind::feedback};
    for (double b : {1.0, 2.5}) {
        obj = compose_hitl_objective(wd2, wh34, 0.0, b, 250.0);
        CHECK(obj.z_coefficients[0] == doctest::Approx(0.6 * b));
        CHECK(obj.z_coefficients[1] == doctest::Approx(0.8 * b));
    }

    bool dropped = false;
    obj = compose_hitl_objective(wd2, WeightVector{{0.0, 0.0}}, 1.0, 1.0, 250.0, &dropped);
    CHECK(dropped);
    CHECK(obj.z_coefficients[0] == doctest::Approx(3.0 / std::sqrt(10.0)));
    compose_hitl_objective(wd2, wh34, 1.0, 1.0, 250.0, &dropped);
    CHECK_FALSE(dropped);

    CHECK_THROWS_AS(compose_hitl_objective(wd2, WeightVector{{1.0}}, 1.0, 1.0, 250.0), DomainError);
    CHECK_THROWS_AS(compose_hitl_objective(wd2, wh34, -1.0, 1.0, 250.0), DomainError);
    CHECK_THROWS_AS(compose_hitl_objective(WeightVector{{0.0, 0.0}}, wh34, 1.0, 1.0, 250.0), DomainError);
}

TEST_CASE("composed coefficients are invariant to positive scaling of either input") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0), scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 10;
        WeightVector wd, wh;
        for (std::size_t j = 0; j < n; ++j) {
            wd.values.push_back(std::abs(u(rng)) + 1e-3);
            wh.values.push_back(u(rng));
        }
        const double a = std::abs(u(rng)), b = std::abs(u(rng));
        const auto ref = compose_hitl_objective(wd, wh, a, b, 1234.0);
        auto wd2 = wd, wh2 = wh;
        const double s1 = scale(rng), s2 = scale(rng);
        for (auto& v : wd2.values) v *= s1;
        for (auto& v : wh2.values) v *= s2;
        const auto got = compose_hitl_objective(wd2, wh2, a, b, 1234.0);
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(got.z_coefficients[j] - ref.z_coefficients[j]) <= 1e-12);
        CHECK(got.slack_coefficient == ref.slack_coefficient);
    }
}

namespace {

AlternativeSet random_set(std::mt19937_64& rng, std::size_t count, std::size_t n) {
    std::vector<std::vector<std::uint8_t>> rows(count, std::vector<std::uint8_t>(n));
    for (auto& r : rows)
        for (auto& v : r) v = (rng() % 3) == 0;
    return make_set(rows);
}

RankingFeedback random_ranking(std::mt19937_64& rng, std::size_t count, std::size_t k) {
    std::vector<std::size_t> ids(count);
    for (std::size_t i = 0; i < count; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(k);
    return ranking(ids);
}

}  // namespace

TEST_CASE("encoding value ranges and single-rank equivalence") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t count = 2 + rng() % 30, n = 1 + rng() % 8, k = 1 + rng() % count;
        const auto set = random_set(rng, count, n);
        const auto r = random_ranking(rng, count, k);
        const double tau = (rng() % 100) / 100.0;
        const auto base = encode_feedback_baseline(set, r, tau);
        REQUIRE(base.size() == k + 1);
        for (std::size_t i = 0; i < k; ++i)
            for (double v : base[i].values) CHECK((v == -1.0 || v == 0.0 || v == 1.0));
        for (double v : encode_feedback_v1(set, r, tau).values) CHECK((v == -1.0 || v == 0.0 || v == 1.0));
        for (double v : encode_feedback_v2(set, r).values) CHECK((v >= -1.0 && v <= 1.0));

        const auto single = random_ranking(rng, count, 1);
        CHECK(encode_feedback_v1(set, single, tau).values == encode_feedback_baseline(set, single, tau)[0].values);
    }
}

TEST_CASE("baseline vectors do not depend on tau between delta magnitudes") {
    std::mt19937_64 rng(31);
    std::size_t equal_cases = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t count = 3 + rng() % 20, n = 1 + rng() % 6, k = 1 + rng() % std::min<std::size_t>(count, 5);
        const auto set = random_set(rng, count, n);
        const auto r = random_ranking(rng, count, k);
        const double t1 = 0.15, t2 = 0.75;
        bool between = false;
        for (const auto& d : baseline_deltas(set, r))
            for (double x : d)
                if (std::abs(x) > t1 && std::abs(x) <= t2) between = true;
        const auto a = encode_feedback_baseline(set, r, t1);
        const auto b = encode_feedback_baseline(set, r, t2);
        bool same = true;
        for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].values == b[i].values;
        if (!between) {
            CHECK(same);
            ++equal_cases;
        } else {
            CHECK_FALSE(same);
        }
    }
    CHECK(equal_cases > 0);
}

TEST_CASE("a delta of 0.5 flips the baseline vector between tau 0.15 and 0.75") {
    // column 0: half ones, top alternative has z = 0, so delta = 0.5
    const auto set = column_set(10, 5);
    const auto r = ranking({7});
    CHECK(baseline_deltas(set, r)[0][0] == doctest::Approx(0.5));
    CHECK(encode_feedback_baseline(set, r, 0.15)[0].values[0] == 1.0);
    CHECK(encode_feedback_baseline(set, r, 0.75)[0].values[0] == 0.0);
}

TEST_CASE("ranking validation and parameters") {
    const auto set = column_set(4, 2);
    CHECK_THROWS_AS(validate_ranking(set, ranking({})), DomainError);
    CHECK_THROWS_AS(validate_ranking(set, ranking({1, 1})), DomainError);
    CHECK_THROWS_AS(validate_ranking(set, ranking({4})), DomainError);
    CHECK_NOTHROW(validate_ranking(set, ranking({3, 0})));

    HitlParams p;
    CHECK(p.variant == HitlVariant::v2);
    CHECK(p.tau == 0.15);
    CHECK_NOTHROW(p.validate());
    p.tau = 1.5;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.tau = 0.15;
    p.b = -1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);

    CHECK(parse_variant("v1") == HitlVariant::v1);
    CHECK(parse_variant("baseline") == HitlVariant::baseline);
    CHECK_THROWS_AS(parse_variant("v3"), DomainError);
    CHECK(round_label(HitlVariant::v2) == "hitl-v2");
    CHECK(to_string(HitlVariant::baseline) == "baseline");
}

TEST_CASE("feedback rounds on the congested four-bus network") {
    const auto net = testing::fixture("four_bus_congested.json");
    const auto m = build_reconfiguration_model(net, {});
    const double f_star = solve_least_cost(m, SolverSettings{}).f_star;
    const auto set = generate_mga_set(m, f_star, 0.05, 10, 1, SolverSettings{});

    HitlParams p;
    p.round_count = 10;
    const auto round = run_hitl_round(m, set, ranking({0, 1, 2}), p, 9, SolverSettings{}, 2);
    REQUIRE(round.set.size() == 10);
    CHECK(round.set.label == "hitl-v2");
    CHECK(round.feedback.size() == 1);
    for (const auto& a : round.set.alternatives) {
        CHECK(a.round == "hitl-v2");
        CHECK(a.cost <= f_star * 1.05 + 1e-6);
        // topologies already in the base set are not unique
        const bool in_base = std::any_of(set.alternatives.begin(), set.alternatives.end(),
                                         [&](const Alternative& b) { return b.topology == a.topology; });
        if (in_base) CHECK_FALSE(a.unique);
    }

    p.round_count = 0;
    CHECK(run_hitl_round(m, set, ranking({0}), p, 9, SolverSettings{}).set.size() == 0);

    p.variant = HitlVariant::baseline;
    p.round_count = 12;
    const auto base = run_hitl_round(m, set, ranking({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), p, 9, SolverSettings{});
    CHECK(base.feedback.size() == 11);
    CHECK(base.set.size() == 12);
    CHECK(base.set.label == "hitl-baseline");

    // identical alternatives leave no feedback signal
    AlternativeSet flat = set;
    for (auto& a : flat.alternatives) a.topology = flat.alternatives[0].topology;
    p.variant = HitlVariant::v2;
    p.round_count = 2;
    const auto dropped = run_hitl_round(m, flat, ranking({0}), p, 9, SolverSettings{});
    CHECK(dropped.feedback_dropped);
    CHECK(dropped.set.size() == 2);
}
