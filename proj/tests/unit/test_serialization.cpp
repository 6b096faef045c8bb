#include <doctest.h>

#include <filesystem>

#include "gridmga/errors.hpp"
#include "gridmga/serialization.hpp"
#include "support.hpp"

using namespace gridmga;
namespace fs = std::filesystem;

namespace {

void check_same(const Alternative& a, const Alternative& b) {
    CHECK(a.topology == b.topology);
    REQUIRE(a.layouts.size() == b.layouts.size());
    for (std::size_t k = 0; k < a.layouts.size(); ++k) {
        CHECK(a.layouts[k].end_on_b == b.layouts[k].end_on_b);
        CHECK(a.layouts[k].injection_on_b == b.layouts[k].injection_on_b);
    }
    CHECK(a.dispatch_mw == b.dispatch_mw);
    CHECK(a.flows_mw == b.flows_mw);
    CHECK(a.angles_rad == b.angles_rad);
    CHECK(a.cost == b.cost);
    CHECK(a.slack == b.slack);
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.weight_seed == b.weight_seed);
    CHECK(a.weight_index == b.weight_index);
    CHECK(a.round == b.round);
    CHECK(a.unique == b.unique);
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("gridmga-ser-" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("alternative set documents round-trip exactly") {
    auto net = testing::fixture("four_bus_congested.json");
    mark_splittable(net, std::vector<int>{2});
    SwitchingOptions opts;
    opts.allow_busbar_splitting = true;
    opts.max_busbar_actions = 1;
    const auto m = build_reconfiguration_model(net, opts);
    const auto lc = solve_least_cost(m, SolverSettings{});
    const auto set = generate_mga_set(m, lc.f_star, 0.05, 6, 3, SolverSettings{});

    AlternativeSetDocument doc{net, opts, set, lc.best};
    const auto text = write_alternative_set_document(doc);
    const auto back = read_alternative_set_document(text);
    CHECK(to_network_document(back.network) == to_network_document(net));
    CHECK(back.options.allow_busbar_splitting);
    CHECK(back.options.max_busbar_actions == 1);
    CHECK(back.set.f_star == set.f_star);
    CHECK(back.set.epsilon == set.epsilon);
    CHECK(back.set.seed == 3);
    CHECK(back.set.label == "mga");
    REQUIRE(back.set.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) check_same(back.set.alternatives[i], set.alternatives[i]);
    REQUIRE(back.least_cost.has_value());
    check_same(*back.least_cost, lc.best);
    // writing the parsed document gives the same text
    CHECK(write_alternative_set_document(back) == text);
}

TEST_CASE("small objects round-trip") {
    Topology t;
    t.line_open = {1, 0, 1};
    t.busbar_split = {0, 1};
    CHECK(to_json(t)["line_open"] == "101");
    CHECK(topology_from_json(to_json(t)) == t);

    HitlParams p;
    p.variant = HitlVariant::v1;
    p.tau = 0.75;
    p.a = 2.0;
    p.b = 0.5;
    p.round_count = 7;
    const auto q = hitl_params_from_json(to_json(p));
    CHECK(q.variant == HitlVariant::v1);
    CHECK(q.tau == 0.75);
    CHECK(q.a == 2.0);
    CHECK(q.b == 0.5);
    CHECK(q.round_count == 7);

    RankingFeedback r{{2, 0, 1}, "operator"};
    const auto r2 = ranking_from_json(to_json(r));
    CHECK(r2.ranked_ids == r.ranked_ids);
    CHECK(r2.source == "operator");

    SolverSettings s;
    s.gap = 0.01;
    s.time_limit_s = 5;
    s.polish_dispatch = false;
    const auto s2 = solver_settings_from_json(to_json(s));
    CHECK(s2.gap == 0.01);
    CHECK(s2.time_limit_s == 5);
    CHECK_FALSE(s2.polish_dispatch);

    EvalContext c;
    c.j_spec = {1, 3};
    c.s_spec = {1};
    c.s_target = SetTarget::match_optimum;
    c.s_values = {1};
    c.base = t;
    c.overload_threshold = 0.8;
    const auto c2 = eval_context_from_json(to_json(c));
    CHECK(c2.j_spec == c.j_spec);
    CHECK(c2.s_spec == c.s_spec);
    CHECK(c2.s_target == SetTarget::match_optimum);
    CHECK(c2.s_values == c.s_values);
    CHECK(c2.base == t);
    CHECK(c2.overload_threshold == 0.8);
}

TEST_CASE("malformed documents are rejected") {
    try {
        parse_json_text("{\n  \"a\": 1,\n  \"b\": ]\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(read_alternative_set_document("{\"format\": \"other\"}"), ParseError);
    CHECK_THROWS_AS(read_alternative_set_document("[]"), ParseError);
    CHECK_THROWS_AS(topology_from_json(Json{{"line_open", "10x"}, {"busbar_split", ""}}), ParseError);
    CHECK_THROWS_AS(topology_from_json(Json{{"line_open", "10"}}), ParseError);
    CHECK_THROWS_AS(ranking_from_json(Json{{"ranked_ids", "nope"}}), ParseError);
    CHECK_THROWS_AS(hitl_params_from_json(Json{{"tau", 1.5}}), DomainError);
    CHECK_THROWS_AS(hitl_params_from_json(Json{{"variant", "v9"}}), DomainError);
    CHECK_THROWS_AS(solver_settings_from_json(Json{{"gap", 0.0}}), ConfigError);
    CHECK_THROWS_AS(eval_context_from_json(Json{{"j_spec", Json::array()},
                                                {"s_spec", Json::array()},
                                                {"s_target", "sometimes"},
                                                {"base", to_json(Topology{})}}),
                    ConfigError);
}

TEST_CASE("atomic text writes replace the whole file") {
    TempDir dir;
    const auto file = dir.path / "out.json";
    write_text_file_atomic(file, "first");
    CHECK(read_text_file(file) == "first");
    write_text_file_atomic(file, "second, longer content");
    CHECK(read_text_file(file) == "second, longer content");
    write_text_file_atomic(file, "x");
    CHECK(read_text_file(file) == "x");
    // no temporaries are left behind
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++entries;
    CHECK(entries == 1);

    CHECK_THROWS_AS(write_text_file_atomic(dir.path / "missing" / "f.json", "x"), Error);
    CHECK_THROWS_AS(read_text_file(dir.path / "absent.json"), Error);
}
