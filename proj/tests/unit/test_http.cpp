#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "gridmga/http_service.hpp"
#include "support.hpp"

using namespace gridmga;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path dir;
    std::unique_ptr<SessionManager> sessions;
    std::unique_ptr<HttpService> http;
    std::thread thread;
    int port = 0;

    Fixture() : dir(fs::temp_directory_path() / ("gridmga-http-" + std::to_string(std::random_device{}()))) {
        sessions = std::make_unique<SessionManager>(dir, testing::fixture_path(""), 1);
        http = std::make_unique<HttpService>(*sessions);
        port = http->bind("127.0.0.1", 0);
        thread = std::thread([this] { http->listen(); });
        http->server().wait_until_ready();
    }
    ~Fixture() {
        http->stop();
        thread.join();
        http.reset();
        sessions.reset();
        fs::remove_all(dir);
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

Json post(const httplib::Client& c, const std::string& path, const Json& body, int expected) {
    auto& cl = const_cast<httplib::Client&>(c);
    auto res = cl.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expected);
    CHECK(res->get_header_value("Content-Type") == "application/json");
    return Json::parse(res->body);
}

Json get(const httplib::Client& c, const std::string& path, int expected) {
    auto& cl = const_cast<httplib::Client&>(c);
    auto res = cl.Get(path);
    REQUIRE(res);
    CHECK(res->status == expected);
    return Json::parse(res->body);
}

Json wait_settled(const httplib::Client& c, const std::string& id) {
    for (int i = 0; i < 1200; ++i) {
        auto s = get(c, "/sessions/" + id, 200);
        if (s["status"] != "solving") return s;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    FAIL("session never settled");
    return {};
}

}  // namespace

TEST_CASE("http: networks and session creation") {
    Fixture f;
    auto c = f.client();
    const auto nets = get(c, "/networks", 200);
    CHECK(nets["networks"].size() == 3);

    const auto created = post(c, "/sessions", {{"case", "three_bus"}}, 201);
    CHECK(created["status"] == "idle");
    const std::string id = created["id"];
    const auto s = get(c, "/sessions/" + id, 200);
    CHECK(s["id"] == id);
    CHECK(s["network"] == "three_bus");
    CHECK(s["rounds"].empty());

    // inline network document
    const auto doc = Json::parse(to_network_document(testing::fixture("four_bus_congested.json")));
    const auto inline_created = post(c, "/sessions", {{"network", doc}, {"name", "mine"}, {"config", {{"epsilon", 0.1}}}}, 201);
    const auto s2 = get(c, "/sessions/" + inline_created["id"].get<std::string>(), 200);
    CHECK(s2["network"] == "mine");
    CHECK(s2["config"]["epsilon"] == 0.1);

    // error mapping
    CHECK(post(c, "/sessions", {{"case", "nope"}}, 404).contains("error"));
    CHECK(post(c, "/sessions", Json::object(), 422)["issues"].size() == 1);
    CHECK(post(c, "/sessions", {{"network", {{"format", "other"}}}}, 422).contains("issues"));
    auto bad = doc;
    bad["branches"][0]["limit_mw"] = -5.0;
    CHECK(post(c, "/sessions", {{"network", bad}}, 422)["issues"].size() >= 1);
    CHECK(post(c, "/sessions", {{"case", "three_bus"}, {"config", {{"epsilon", -1}}}}, 422).contains("error"));
    auto res = c.Post("/sessions", "{oops", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    res = c.Post("/sessions", "[1, 2]", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(get(c, "/sessions/doesnotexist", 404).contains("error"));
    res = c.Get("/nowhere");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("http: a full feedback loop") {
    Fixture f;
    auto c = f.client();
    const std::string id = post(c, "/sessions", {{"case", "four_bus_congested"}}, 201)["id"];

    CHECK(post(c, "/sessions/" + id + "/rounds", {{"count", 0}}, 422).contains("issues"));
    CHECK(post(c, "/sessions/nobody/rounds", {{"count", 2}}, 404).contains("error"));
    // ranking before the first round
    CHECK(post(c, "/sessions/" + id + "/rounds/0/ranking", {{"ranked_ids", {0}}}, 409).contains("error"));

    const auto started = post(c, "/sessions/" + id + "/rounds", {{"count", 5}, {"seed", 3}}, 202);
    CHECK(started["round"] == 0);
    CHECK(started["status"] == "solving");
    auto s = wait_settled(c, id);
    REQUIRE(s["status"] == "awaiting_ranking");
    CHECK(s["f_star"].get<double>() == doctest::Approx(3600.0));
    REQUIRE(s["rounds"].size() == 1);
    CHECK(s["rounds"][0]["count"] == 5);

    const auto alts = get(c, "/sessions/" + id + "/rounds/0/alternatives", 200);
    REQUIRE(alts["alternatives"].size() == 5);
    CHECK(alts["alternatives"][0].contains("metrics"));
    CHECK(alts["alternatives"][0].contains("loadings"));
    CHECK(alts["alternatives"][0].contains("hamming_to_least_cost"));
    CHECK(get(c, "/sessions/" + id + "/rounds/7/alternatives", 404).contains("error"));
    CHECK(get(c, "/sessions/" + id + "/rounds/99999999999999999999999/alternatives", 404).contains("error"));

    const auto base = "/sessions/" + id + "/rounds/0/ranking";
    CHECK(post(c, base, {{"ranked_ids", {0, 0}}}, 422).contains("issues"));
    CHECK(post(c, base, {{"ranked_ids", {5}}}, 422).contains("issues"));
    CHECK(post(c, base, {{"ranked_ids", {-1}}}, 422).contains("issues"));
    CHECK(post(c, base, {{"ranked_ids", {"a"}}}, 422).contains("issues"));
    CHECK(post(c, base, {{"ranked_ids", {0}}, {"tau", 2.0}}, 422).contains("issues"));
    CHECK(post(c, base, {{"ranked_ids", {0}}, {"variant", "v7"}}, 422).contains("issues"));
    CHECK(post(c, base, {{"simulate", {{"fn", "u9"}}}}, 422).contains("issues"));
    CHECK(post(c, base, Json::object(), 422).contains("issues"));
    CHECK(post(c, "/sessions/" + id + "/rounds/3/ranking", {{"ranked_ids", {0}}}, 404).contains("error"));

    const auto next = post(c, base, {{"ranked_ids", {3, 1}}, {"variant", "v1"}, {"count", 4}, {"seed", 2}}, 202);
    CHECK(next["round"] == 1);
    // a second solve while one is running conflicts, unless the first already finished
    auto res = c.Post("/sessions/" + id + "/rounds", Json{{"count", 2}}.dump(), "application/json");
    REQUIRE(res);
    CHECK((res->status == 409 || res->status == 202));
    s = wait_settled(c, id);
    REQUIRE(s["status"] == "awaiting_ranking");
    const std::size_t rounds_now = s["rounds"].size();
    CHECK(rounds_now >= 2);
    CHECK(s["rounds"][0]["ranking"]["ranked_ids"] == Json{3, 1});
    CHECK(s["rounds"][0]["ranking"]["source"] == "human");
    CHECK(s["rounds"][1]["label"] == "hitl-v1");
    CHECK(s["rounds"][1]["count"] == 4);
    CHECK(s["rounds"][1]["params"]["variant"] == "v1");
    CHECK(s["rounds"][1]["feedback"].size() == 1);

    // stale round references are rejected
    CHECK(post(c, base, {{"ranked_ids", {0}}}, 422).contains("issues"));

    const auto latest = "/sessions/" + id + "/rounds/" + std::to_string(rounds_now - 1) + "/ranking";
    const auto sim = post(c, latest, {{"simulate", {{"fn", "u4"}, {"top_k", 2}}}, {"count", 3}}, 202);
    CHECK(sim["round"] == rounds_now);
    s = wait_settled(c, id);
    REQUIRE(s["status"] == "awaiting_ranking");
    CHECK(s["rounds"][rounds_now - 1]["ranking"]["source"] == "simulated:u4");
    CHECK(s["rounds"][rounds_now - 1]["ranking"]["ranked_ids"].size() == 2);
    CHECK(s["rounds"][rounds_now]["count"] == 3);
}

TEST_CASE("http: solver failures show up in the session status") {
    Fixture f;
    auto c = f.client();
    auto doc = Json::parse(to_network_document(testing::fixture("three_bus.json")));
    doc["buses"][2]["load_mw"] = 1000.0;
    const std::string id = post(c, "/sessions", {{"network", doc}}, 201)["id"];
    post(c, "/sessions/" + id + "/rounds", {{"count", 2}}, 202);
    const auto s = wait_settled(c, id);
    CHECK(s["status"] == "error");
    CHECK(s["error"].get<std::string>().find("infeasible") != std::string::npos);
    CHECK(s["error_causes"].size() >= 1);
}
