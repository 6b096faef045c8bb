#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "gridmga/errors.hpp"
#include "gridmga/experiment.hpp"
#include "support.hpp"

using namespace gridmga;
namespace fs = std::filesystem;

namespace {

Json small_config() {
    return Json{{"case", testing::fixture_path("four_bus_congested.json").string()},
                {"congestion_factor", 1.0},
                {"alt_count", 6},
                {"top_k", 2},
                {"seeds", 2},
                {"base_seed", 10},
                {"workers", 1}};
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("gridmga-exp-" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("valuable classification") {
    // all equal: nothing to learn from the set
    CHECK_FALSE(mga_valuable({2.0, 2.0, 2.0}));
    CHECK(mga_valuable({2.0, 2.0, 3.0}));
    CHECK_FALSE(mga_valuable({}));
    CHECK_FALSE(mga_valuable({1.0, 1.0 + 1e-12}));

    // strictly better best value
    CHECK(hitl_more_valuable({3.0, 2.0}, {1.5, 4.0}, Direction::minimize));
    CHECK_FALSE(hitl_more_valuable({3.0, 2.0}, {2.5, 4.0}, Direction::minimize));
    CHECK(hitl_more_valuable({0.0, 1.0}, {2.0}, Direction::maximize));
    // equal best, more alternatives reaching it
    CHECK(hitl_more_valuable({1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, Direction::maximize));
    CHECK_FALSE(hitl_more_valuable({1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, Direction::maximize));
    CHECK_FALSE(hitl_more_valuable({1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}, Direction::maximize));
    CHECK_FALSE(hitl_more_valuable({1.0}, {}, Direction::maximize));
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({7.0}) == 7.0);
    CHECK_THROWS_AS(median({}), DomainError);
}

TEST_CASE("experiment configs") {
    const auto cfg = experiment_config_from_json(small_config());
    CHECK(cfg.alt_count == 6);
    CHECK(cfg.feedback_count() == 6);
    CHECK(cfg.functions.size() == 6);
    CHECK(cfg.variants.size() == 3);
    CHECK(cfg.tau == 0.15);
    CHECK(cfg.a == 1.0);
    CHECK(cfg.b == 1.0);

    // the written form reads back to the same document
    const auto again = experiment_config_from_json(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));

    auto rel = small_config();
    rel["case"] = "four_bus_congested.json";
    CHECK(experiment_config_from_json(rel, testing::fixture_path("")).case_path ==
          testing::fixture_path("") / "four_bus_congested.json");

    for (const char* key : {"case", "congestion_factor"}) {
        auto j = small_config();
        j.erase(key);
        CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    }
    auto j = small_config();
    j["top_k"] = 7;
    CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    j = small_config();
    j["congestion_factor"] = 1.5;
    CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    j = small_config();
    j["u2_target"] = "sometimes";
    CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    j = small_config();
    j["alt_count"] = "many";
    CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
    j = small_config();
    j["tau"] = -0.1;
    CHECK_THROWS_AS(experiment_config_from_json(j), DomainError);
    CHECK_THROWS_AS(experiment_config_from_json(Json::array()), ConfigError);
}

TEST_CASE("a small experiment runs every round and exports consistent files") {
    const auto cfg = experiment_config_from_json(small_config());
    const auto report = run_experiment(cfg);
    REQUIRE(report.seeds.size() == 2);
    CHECK(report.bounds.size() == 5);
    CHECK_FALSE(report.bounds.contains("u6"));

    for (const auto& seed : report.seeds) {
        CHECK(seed.error.empty());
        CHECK(seed.f_star == doctest::Approx(3600.0));
        CHECK(seed.least_cost_topology == "100");
        REQUIRE(seed.rounds.size() == 1 + 6 * 3);
        CHECK(seed.rounds[0].label == "mga");
        CHECK(seed.rounds[0].driver.empty());
        std::size_t min_hamming = 99;
        for (const auto& r : seed.rounds) {
            CHECK(r.alternatives.size() == 6);
            if (r.label != "mga") {
                CHECK(r.driver.size() == 2);
                CHECK(r.label.rfind("hitl-", 0) == 0);
            }
            for (const auto& a : r.alternatives) {
                CHECK(a.cost <= seed.f_star * 1.05 + 1e-6);
                CHECK(a.values.size() == 6);
                min_hamming = std::min(min_hamming, a.hamming_to_reference);
            }
        }
        CHECK(min_hamming == 0);
    }
    CHECK(report.seeds[0].seed == 10);
    CHECK(report.seeds[1].seed == 11);

    // summary rows are the medians of the recorded values
    const auto rows = summarize(report);
    CHECK(rows.size() == report.summary.size());
    for (const auto& row : report.summary) {
        const auto& seed = row.seed == 10 ? report.seeds[0] : report.seeds[1];
        for (const auto& r : seed.rounds) {
            if (r.label != row.round || r.driver != row.driver || r.sweep != row.sweep) continue;
            std::vector<double> vs;
            for (const auto& a : r.alternatives) vs.push_back(a.values.at(row.fn));
            CHECK(row.median == median(vs));
            CHECK(row.min == *std::min_element(vs.begin(), vs.end()));
            CHECK(row.max == *std::max_element(vs.begin(), vs.end()));
        }
    }
    CHECK(report.valuable.size() == 2 * 6);
    for (const auto& f : report.valuable) CHECK(f.more_valuable.size() == 3);

    TempDir dir;
    export_report(report, dir.path);
    for (const char* name : {"alternatives.csv", "summary.csv", "report.json", "series.json"})
        CHECK(fs::exists(dir.path / name));
    const auto back = read_report(dir.path);
    CHECK(to_json(back) == to_json(report));
    const auto alts = read_csv(dir.path / "alternatives.csv");
    CHECK(alts.header.size() == 10 + 6);
    CHECK(alts.rows.size() == 2 * 19 * 6);
    CHECK(read_csv(dir.path / "summary.csv").rows.size() == report.summary.size());

    // the same config reproduces the same report
    CHECK(to_json(run_experiment(cfg)) == to_json(report));
}

TEST_CASE("sweeps add labelled rounds") {
    auto j = small_config();
    j["seeds"] = 1;
    j["functions"] = {"u3"};
    j["variants"] = {"v2"};
    j["compute_bounds"] = false;
    j["sweeps"] = {{"tau_values", {0.5}}, {"ab_values", {{1.0, 2.0}}}, {"reduced_count", 3}, {"reduced_top_k", 2}};
    const auto report = run_experiment(experiment_config_from_json(j));
    REQUIRE(report.seeds.size() == 1);
    CHECK(report.bounds.empty());
    std::vector<std::pair<std::string, std::string>> seen;
    for (const auto& r : report.seeds[0].rounds) seen.emplace_back(r.label, r.sweep);
    const std::vector<std::pair<std::string, std::string>> expected{{"mga", ""},
                                                                   {"hitl-v2", ""},
                                                                   {"hitl-baseline", "tau=0.5"},
                                                                   {"hitl-v2", "a=1 b=2"},
                                                                   {"mga", "reduced"},
                                                                   {"hitl-v2", "reduced"}};
    CHECK(seen == expected);
    const auto& rounds = report.seeds[0].rounds;
    CHECK(rounds[2].params.tau == 0.5);
    CHECK(rounds[3].params.b == 2.0);
    CHECK(rounds[4].alternatives.size() == 3);
    CHECK(rounds[5].alternatives.size() == 3);
}

TEST_CASE("report parsing rejects foreign documents") {
    CHECK_THROWS_AS(experiment_report_from_json(Json{{"format", "x"}}), ParseError);
    CHECK_THROWS_AS(experiment_report_from_json(Json{{"format", "gridmga-experiment-report"}}), ParseError);
}
