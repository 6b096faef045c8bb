#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "gridmga/errors.hpp"
#include "gridmga/session.hpp"
#include "support.hpp"

using namespace gridmga;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("gridmga-sess-" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

HitlParams params_with_count(std::size_t n) {
    HitlParams p;
    p.round_count = n;
    return p;
}

}  // namespace

TEST_CASE("bundled networks are the case files in the case directory") {
    TempDir dir;
    SessionManager mgr(dir.path, testing::fixture_path(""), 1);
    CHECK(mgr.bundled_networks() == std::vector<std::string>{"four_bus_congested", "three_bus", "three_bus_congested"});
    CHECK_THROWS_AS(mgr.create_session_from_case("case9999", {}), NotFoundError);
}

TEST_CASE("a session runs MGA and feedback rounds and survives a restart") {
    TempDir dir;
    std::string id;
    Json summary_before;
    {
        SessionManager mgr(dir.path, testing::fixture_path(""), 1);
        id = mgr.create_session_from_case("four_bus_congested", {});
        CHECK(mgr.snapshot(id).status == SessionStatus::idle);
        CHECK(mgr.session_ids() == std::vector<std::string>{id});

        // ranking before any round exists
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{0}, "human"}, params_with_count(2), 1), ConflictError);

        CHECK(mgr.generate_round(id, 6, 4) == 0);
        REQUIRE(mgr.wait_until_settled(id, 120.0));
        auto s = mgr.snapshot(id);
        REQUIRE(s.status == SessionStatus::awaiting_ranking);
        REQUIRE(s.least_cost.has_value());
        CHECK(s.least_cost->cost == doctest::Approx(3600.0));
        REQUIRE(s.rounds.size() == 1);
        CHECK(s.rounds[0].set.size() == 6);

        const auto alts = mgr.round_alternatives(id, 0);
        CHECK(alts["f_star"].get<double>() == doctest::Approx(3600.0));
        REQUIRE(alts["alternatives"].size() == 6);
        for (const auto& a : alts["alternatives"]) {
            CHECK(a["cost"].get<double>() <= 3600.0 * 1.05 + 1e-6);
            CHECK(a["cost_delta_pct"].get<double>() <= 5.0 + 1e-6);
            CHECK(a["metrics"].size() == 6);
            CHECK(a["loadings"].size() == 5);
            const auto bits = a["topology"]["line_open"].get<std::string>();
            CHECK(a["opened_branches"].size() == static_cast<std::size_t>(std::count(bits.begin(), bits.end(), '1')));
        }
        CHECK_THROWS_AS(mgr.round_alternatives(id, 1), NotFoundError);

        // invalid rankings leave the session untouched
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{9}, "human"}, params_with_count(2), 1), ValidationError);
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{1, 1}, "human"}, params_with_count(2), 1), ValidationError);
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{}, "human"}, params_with_count(2), 1), ValidationError);
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{0}, "human"}, params_with_count(0), 1), ValidationError);
        CHECK_THROWS_AS(mgr.submit_ranking(id, 3, {{0}, "human"}, params_with_count(2), 1), NotFoundError);
        CHECK(mgr.snapshot(id).status == SessionStatus::awaiting_ranking);

        CHECK(mgr.submit_ranking(id, 0, {{2, 0}, "human"}, params_with_count(4), 9) == 1);
        REQUIRE(mgr.wait_until_settled(id, 120.0));
        s = mgr.snapshot(id);
        REQUIRE(s.status == SessionStatus::awaiting_ranking);
        REQUIRE(s.rounds.size() == 2);
        CHECK(s.rounds[0].ranking->ranked_ids == std::vector<std::size_t>{2, 0});
        CHECK(s.rounds[1].set.size() == 4);
        CHECK(s.rounds[1].set.label == "hitl-v2");
        CHECK(s.rounds[1].feedback.size() == 1);
        for (const auto& a : s.rounds[1].set.alternatives) CHECK(a.cost <= 3600.0 * 1.05 + 1e-6);

        // round 0 is now stale
        CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{0}, "human"}, params_with_count(2), 1), ValidationError);

        CHECK(mgr.submit_simulated_ranking(id, 1, FunctionId::u3, 2, params_with_count(3), 2) == 2);
        REQUIRE(mgr.wait_until_settled(id, 120.0));
        s = mgr.snapshot(id);
        REQUIRE(s.rounds.size() == 3);
        CHECK(s.rounds[1].ranking->source == "simulated:u3");
        CHECK(s.rounds[1].ranking->ranked_ids.size() == 2);
        CHECK_THROWS_AS(mgr.submit_simulated_ranking(id, 2, FunctionId::u3, 0, params_with_count(3), 2),
                        ValidationError);
        summary_before = mgr.session_summary(id);
        CHECK(summary_before["rounds"].size() == 3);
        CHECK(summary_before["status"] == "awaiting_ranking");
        CHECK(summary_before["z_dimensions"] == 3);
    }
    SessionManager again(dir.path, testing::fixture_path(""), 1);
    CHECK(again.session_summary(id) == summary_before);
    const auto s = again.snapshot(id);
    REQUIRE(s.rounds.size() == 3);
    CHECK(s.rounds[2].set.size() == 3);
}

TEST_CASE("solves interrupted by a restart surface as errors") {
    TempDir dir;
    std::string id;
    {
        SessionManager mgr(dir.path, testing::fixture_path(""), 1);
        id = mgr.create_session_from_case("three_bus", {});
    }
    // simulate a crash while solving
    const auto file = dir.path / (id + ".json");
    auto doc = parse_json_text(read_text_file(file));
    doc["status"] = "solving";
    write_text_file_atomic(file, doc.dump());
    // and a corrupt neighbour that must be skipped
    write_text_file_atomic(dir.path / "broken.json", "{not json");

    SessionManager mgr(dir.path, testing::fixture_path(""), 1);
    CHECK(mgr.session_ids() == std::vector<std::string>{id});
    const auto s = mgr.snapshot(id);
    CHECK(s.status == SessionStatus::error);
    CHECK(s.last_error.find("restart") != std::string::npos);
    // an errored session can be solved again
    mgr.generate_round(id, 2, 1);
    REQUIRE(mgr.wait_until_settled(id, 120.0));
    CHECK(mgr.snapshot(id).status == SessionStatus::awaiting_ranking);
    CHECK(mgr.snapshot(id).last_error.empty());
}

TEST_CASE("infeasible sessions report their causes") {
    TempDir dir;
    SessionManager mgr(dir.path, testing::fixture_path(""), 1);
    auto net = testing::fixture("three_bus.json");
    net.buses[2].load_mw = 1000.0;
    const auto id = mgr.create_session(net, "overloaded", {});
    mgr.generate_round(id, 2, 1);
    REQUIRE(mgr.wait_until_settled(id, 120.0));
    const auto s = mgr.snapshot(id);
    CHECK(s.status == SessionStatus::error);
    CHECK(std::find(s.error_causes.begin(), s.error_causes.end(), "generation capacity below total load") !=
          s.error_causes.end());
    CHECK(mgr.session_summary(id)["error_causes"].size() >= 1);
}

TEST_CASE("concurrent solves on one session conflict") {
    TempDir dir;
    SessionManager mgr(dir.path, GRIDMGA_DATA_DIR, 1);
    const auto id = mgr.create_session_from_case("case57", {});
    mgr.generate_round(id, 3, 1);
    CHECK_THROWS_AS(mgr.generate_round(id, 3, 2), ConflictError);
    CHECK_THROWS_AS(mgr.submit_ranking(id, 0, {{0}, "human"}, params_with_count(2), 1), ConflictError);
    REQUIRE(mgr.wait_until_settled(id, 600.0));
    CHECK(mgr.snapshot(id).rounds.size() == 1);
}

TEST_CASE("session creation validates its input") {
    TempDir dir;
    SessionManager mgr(dir.path, testing::fixture_path(""), 1);
    auto net = testing::fixture("three_bus.json");
    net.branches[0].limit_mw = -1.0;
    CHECK_THROWS_AS(mgr.create_session(net, "bad", {}), ValidationError);
    CHECK_THROWS_AS(mgr.generate_round("nope", 2, 1), NotFoundError);
    const auto id = mgr.create_session(testing::fixture("three_bus.json"), "", {});
    CHECK(mgr.snapshot(id).network_name == testing::fixture("three_bus.json").name);
    CHECK_THROWS_AS(mgr.generate_round(id, 0, 1), ValidationError);

    CHECK_THROWS_AS(session_config_from_json(Json{{"epsilon", -1.0}}), ConfigError);
    CHECK_THROWS_AS(session_config_from_json(Json{{"congestion_factor", 2.0}}), ConfigError);
    CHECK_THROWS_AS(session_config_from_json(Json{{"u2_target", "x"}}), ConfigError);
    CHECK_THROWS_AS(session_config_from_json(Json{{"epsilon", "big"}}), ConfigError);
    const auto c = session_config_from_json(Json{{"epsilon", 0.1}, {"congestion_factor", 0.5}});
    CHECK(c.epsilon == 0.1);
    CHECK(session_config_from_json(to_json(c)).congestion_factor == 0.5);
}
