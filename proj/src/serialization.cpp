#include "gridmga/serialization.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "gridmga/errors.hpp"

namespace gridmga {

namespace {

constexpr const char* kSetFormat = "gridmga-alternative-set";

std::string bits(const std::vector<std::uint8_t>& v) {
    std::string s;
    for (auto b : v) s += b ? '1' : '0';
    return s;
}

std::vector<std::uint8_t> unbits(const std::string& s) {
    std::vector<std::uint8_t> v;
    for (char c : s) {
        if (c != '0' && c != '1') throw ParseError(0, "topology bits must be 0 or 1");
        v.push_back(c == '1');
    }
    return v;
}

template <class T>
T field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(0, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ParseError(0, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

Json parse_json_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        throw ParseError(1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n')), e.what());
    }
}

Json to_json(const Topology& t) { return {{"line_open", bits(t.line_open)}, {"busbar_split", bits(t.busbar_split)}}; }

Topology topology_from_json(const Json& j) {
    Topology t;
    t.line_open = unbits(field<std::string>(j, "line_open"));
    t.busbar_split = unbits(field<std::string>(j, "busbar_split"));
    return t;
}

Json to_json(const Alternative& a) {
    Json lay = Json::array();
    for (const auto& l : a.layouts) lay.push_back({{"end_on_b", bits(l.end_on_b)}, {"injection_on_b", bits(l.injection_on_b)}});
    return {{"topology", to_json(a.topology)},
            {"layouts", lay},
            {"dispatch_mw", a.dispatch_mw},
            {"flows_mw", a.flows_mw},
            {"angles_rad", a.angles_rad},
            {"cost", a.cost},
            {"slack", a.slack},
            {"objective_value", a.objective_value},
            {"solver_gap", a.solver_gap},
            {"weight_seed", a.weight_seed},
            {"weight_index", a.weight_index},
            {"round", a.round},
            {"unique", a.unique}};
}

Alternative alternative_from_json(const Json& j) {
    Alternative a;
    a.topology = topology_from_json(field<Json>(j, "topology"));
    for (const auto& l : field<Json>(j, "layouts"))
        a.layouts.push_back({unbits(field<std::string>(l, "end_on_b")), unbits(field<std::string>(l, "injection_on_b"))});
    a.dispatch_mw = field<std::vector<double>>(j, "dispatch_mw");
    a.flows_mw = field<std::vector<double>>(j, "flows_mw");
    a.angles_rad = j.value("angles_rad", std::vector<double>{});
    a.cost = field<double>(j, "cost");
    a.slack = field<double>(j, "slack");
    a.objective_value = j.value("objective_value", 0.0);
    a.solver_gap = j.value("solver_gap", 0.0);
    a.weight_seed = j.value("weight_seed", std::uint64_t{0});
    a.weight_index = j.value("weight_index", std::size_t{0});
    a.round = j.value("round", std::string("mga"));
    a.unique = j.value("unique", true);
    return a;
}

Json to_json(const SwitchingOptions& o) {
    return {{"allow_line_switching", o.allow_line_switching},
            {"allow_busbar_splitting", o.allow_busbar_splitting},
            {"max_line_actions", o.max_line_actions},
            {"max_busbar_actions", o.max_busbar_actions},
            {"reassign_generators", o.reassign_generators},
            {"reassign_loads", o.reassign_loads}};
}

SwitchingOptions switching_options_from_json(const Json& j) {
    SwitchingOptions o;
    if (!j.is_object()) throw ConfigError("switching options must be an object");
    o.allow_line_switching = j.value("allow_line_switching", o.allow_line_switching);
    o.allow_busbar_splitting = j.value("allow_busbar_splitting", o.allow_busbar_splitting);
    o.max_line_actions = j.value("max_line_actions", o.max_line_actions);
    o.max_busbar_actions = j.value("max_busbar_actions", o.max_busbar_actions);
    o.reassign_generators = j.value("reassign_generators", o.reassign_generators);
    o.reassign_loads = j.value("reassign_loads", o.reassign_loads);
    o.validate();
    return o;
}

Json to_json(const SolverSettings& s) {
    return {{"backend", s.backend},
            {"gap", s.gap},
            {"time_limit_s", s.time_limit_s},
            {"verbose", s.verbose},
            {"polish_dispatch", s.polish_dispatch},
            {"max_island_cuts", s.max_island_cuts}};
}

SolverSettings solver_settings_from_json(const Json& j) {
    SolverSettings s;
    if (!j.is_object()) throw ConfigError("solver settings must be an object");
    s.backend = j.value("backend", s.backend);
    s.gap = j.value("gap", s.gap);
    s.time_limit_s = j.value("time_limit_s", s.time_limit_s);
    s.verbose = j.value("verbose", s.verbose);
    s.polish_dispatch = j.value("polish_dispatch", s.polish_dispatch);
    s.max_island_cuts = j.value("max_island_cuts", s.max_island_cuts);
    if (!(s.gap > 0.0)) throw ConfigError("gap must be positive");
    return s;
}

Json to_json(const HitlParams& p) {
    return {{"variant", to_string(p.variant)}, {"tau", p.tau}, {"a", p.a}, {"b", p.b}, {"round_count", p.round_count}};
}

HitlParams hitl_params_from_json(const Json& j) {
    HitlParams p;
    if (!j.is_object()) throw DomainError("feedback parameters must be an object");
    if (j.contains("variant")) p.variant = parse_variant(field<std::string>(j, "variant"));
    p.tau = j.value("tau", p.tau);
    p.a = j.value("a", p.a);
    p.b = j.value("b", p.b);
    p.round_count = j.value("round_count", p.round_count);
    p.validate();
    return p;
}

Json to_json(const RankingFeedback& r) { return {{"ranked_ids", r.ranked_ids}, {"source", r.source}}; }

RankingFeedback ranking_from_json(const Json& j) {
    RankingFeedback r;
    r.ranked_ids = field<std::vector<std::size_t>>(j, "ranked_ids");
    r.source = j.value("source", std::string{});
    return r;
}

Json to_json(const WeightVector& w) {
    const char* kind = w.kind == WeightKind::diversity ? "diversity" : w.kind == WeightKind::feedback ? "feedback" : "composed";
    return {{"kind", kind}, {"values", w.values}};
}

Json to_json(const AlternativeSet& s) {
    Json alts = Json::array();
    for (const auto& a : s.alternatives) alts.push_back(to_json(a));
    return {{"f_star", s.f_star}, {"epsilon", s.epsilon}, {"seed", s.seed}, {"label", s.label}, {"alternatives", alts}};
}

AlternativeSet alternative_set_from_json(const Json& j) {
    AlternativeSet s;
    s.f_star = field<double>(j, "f_star");
    s.epsilon = field<double>(j, "epsilon");
    s.seed = j.value("seed", std::uint64_t{0});
    s.label = j.value("label", std::string("mga"));
    for (const auto& a : field<Json>(j, "alternatives")) s.alternatives.push_back(alternative_from_json(a));
    return s;
}

Json to_json(const EvalContext& c) {
    return {{"j_spec", c.j_spec},
            {"s_spec", c.s_spec},
            {"s_target", c.s_target == SetTarget::zero ? "zero" : "match_optimum"},
            {"s_values", c.s_values},
            {"base", to_json(c.base)},
            {"overload_threshold", c.overload_threshold}};
}

EvalContext eval_context_from_json(const Json& j) {
    EvalContext c;
    c.j_spec = field<std::vector<std::size_t>>(j, "j_spec");
    c.s_spec = field<std::vector<std::size_t>>(j, "s_spec");
    const auto target = j.value("s_target", std::string("zero"));
    if (target == "zero") c.s_target = SetTarget::zero;
    else if (target == "match_optimum") c.s_target = SetTarget::match_optimum;
    else throw ConfigError("unknown S_spec target '" + target + "'");
    c.s_values = j.value("s_values", std::vector<std::uint8_t>{});
    c.base = topology_from_json(field<Json>(j, "base"));
    c.overload_threshold = j.value("overload_threshold", 0.9);
    return c;
}

std::string write_alternative_set_document(const AlternativeSetDocument& doc) {
    Json j;
    j["format"] = kSetFormat;
    j["version"] = 1;
    j["network"] = Json::parse(to_network_document(doc.network));
    j["switching"] = to_json(doc.options);
    j["set"] = to_json(doc.set);
    if (doc.least_cost) j["least_cost"] = to_json(*doc.least_cost);
    return j.dump(1);
}

AlternativeSetDocument read_alternative_set_document(std::string_view text) {
    const auto j = parse_json_text(text);
    if (!j.is_object() || j.value("format", "") != kSetFormat)
        throw ParseError(0, std::string("not a ") + kSetFormat + " document");
    AlternativeSetDocument doc;
    doc.network = parse_network_document(field<Json>(j, "network").dump());
    doc.options = switching_options_from_json(field<Json>(j, "switching"));
    doc.set = alternative_set_from_json(field<Json>(j, "set"));
    if (j.contains("least_cost")) doc.least_cost = alternative_from_json(j["least_cost"]);
    return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "-" +
           std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot replace " + path.string() + ": " + ec.message());
    }
}

}  // namespace gridmga
