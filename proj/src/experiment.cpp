#include "gridmga/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

void ExperimentConfig::validate() const {
    if (case_path.empty()) throw ConfigError("experiment needs a case path");
    if (!(congestion_factor > 0.0 && congestion_factor <= 1.0)) throw ConfigError("congestion_factor must lie in (0, 1]");
    if (epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
    if (alt_count == 0 || top_k == 0 || seeds == 0) throw ConfigError("alt_count, top_k and seeds must be at least 1");
    if (top_k > alt_count + (include_least_cost ? 1 : 0)) throw ConfigError("top_k exceeds the alternative count");
    if (!(overload_threshold > 0.0 && overload_threshold <= 1.0))
        throw ConfigError("overload_threshold must lie in (0, 1]");
    if (!(solver.gap > 0.0)) throw ConfigError("gap must be positive");
    switching.validate();
    HitlParams{HitlVariant::v2, tau, a, b, feedback_count()}.validate();
    if (derive_limits && !(derive_limits->headroom > 0.0 && derive_limits->floor_mw > 0.0))
        throw ConfigError("limit derivation needs positive headroom and floor");
    if (sweeps.enabled) {
        if (sweeps.reduced_count == 0 || sweeps.reduced_top_k == 0 || sweeps.reduced_top_k > sweeps.reduced_count)
            throw ConfigError("reduced sweep needs 1 <= top_k <= count");
        for (double t : sweeps.tau_values)
            if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("sweep tau values must lie in [0, 1]");
        for (auto [sa, sb] : sweeps.ab_values)
            if (!(sa >= 0.0 && sb >= 0.0)) throw ConfigError("sweep a/b values must be non-negative");
    }
}

namespace {

std::string target_name(SetTarget t) { return t == SetTarget::zero ? "zero" : "match_optimum"; }

template <class T>
T opt(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& relative_to) {
    if (!j.is_object()) throw ConfigError("experiment config must be an object");
    ExperimentConfig c;
    if (!j.contains("case")) throw ConfigError("experiment config needs 'case'");
    if (!j.contains("congestion_factor")) throw ConfigError("experiment config needs 'congestion_factor'");
    c.case_path = opt<std::string>(j, "case", "");
    if (c.case_path.is_relative() && !relative_to.empty()) c.case_path = relative_to / c.case_path;
    c.congestion_factor = opt<double>(j, "congestion_factor", 1.0);
    if (j.contains("derive_limits")) {
        const auto& d = j["derive_limits"];
        c.derive_limits = LimitDerivation{opt<double>(d, "headroom", 1.0), opt<double>(d, "floor_mw", 1.0)};
    }
    c.splittable_buses = opt<std::vector<int>>(j, "splittable_buses", {});
    if (j.contains("switching")) c.switching = switching_options_from_json(j["switching"]);
    c.epsilon = opt(j, "epsilon", c.epsilon);
    c.alt_count = opt(j, "alt_count", c.alt_count);
    c.hitl_count = opt(j, "hitl_count", c.hitl_count);
    c.top_k = opt(j, "top_k", c.top_k);
    c.seeds = opt(j, "seeds", c.seeds);
    c.base_seed = opt(j, "base_seed", c.base_seed);
    if (j.contains("solver")) c.solver = solver_settings_from_json(j["solver"]);
    c.tau = opt(j, "tau", c.tau);
    c.a = opt(j, "a", c.a);
    c.b = opt(j, "b", c.b);
    if (j.contains("functions")) {
        c.functions.clear();
        for (const auto& f : opt<std::vector<std::string>>(j, "functions", {})) c.functions.push_back(parse_function_id(f));
    }
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : opt<std::vector<std::string>>(j, "variants", {})) c.variants.push_back(parse_variant(v));
    }
    const auto target = opt<std::string>(j, "u2_target", "zero");
    if (target == "zero") c.u2_target = SetTarget::zero;
    else if (target == "match_optimum") c.u2_target = SetTarget::match_optimum;
    else throw ConfigError("u2_target must be 'zero' or 'match_optimum'");
    c.overload_threshold = opt(j, "overload_threshold", c.overload_threshold);
    c.compute_bounds = opt(j, "compute_bounds", c.compute_bounds);
    c.include_least_cost = opt(j, "include_least_cost", c.include_least_cost);
    c.workers = opt(j, "workers", c.workers);
    if (j.contains("sweeps")) {
        const auto& s = j["sweeps"];
        c.sweeps.enabled = opt(s, "enabled", true);
        c.sweeps.tau_values = opt(s, "tau_values", c.sweeps.tau_values);
        c.sweeps.ab_values = opt(s, "ab_values", c.sweeps.ab_values);
        c.sweeps.reduced_count = opt(s, "reduced_count", c.sweeps.reduced_count);
        c.sweeps.reduced_top_k = opt(s, "reduced_top_k", c.sweeps.reduced_top_k);
    }
    c.validate();
    return c;
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["case"] = c.case_path.string();
    j["congestion_factor"] = c.congestion_factor;
    if (c.derive_limits) j["derive_limits"] = {{"headroom", c.derive_limits->headroom}, {"floor_mw", c.derive_limits->floor_mw}};
    j["splittable_buses"] = c.splittable_buses;
    j["switching"] = to_json(c.switching);
    j["epsilon"] = c.epsilon;
    j["alt_count"] = c.alt_count;
    j["hitl_count"] = c.hitl_count;
    j["top_k"] = c.top_k;
    j["seeds"] = c.seeds;
    j["base_seed"] = c.base_seed;
    j["solver"] = to_json(c.solver);
    j["tau"] = c.tau;
    j["a"] = c.a;
    j["b"] = c.b;
    auto& fns = j["functions"] = Json::array();
    for (auto f : c.functions) fns.push_back(to_string(f));
    auto& vs = j["variants"] = Json::array();
    for (auto v : c.variants) vs.push_back(to_string(v));
    j["u2_target"] = target_name(c.u2_target);
    j["overload_threshold"] = c.overload_threshold;
    j["compute_bounds"] = c.compute_bounds;
    j["include_least_cost"] = c.include_least_cost;
    j["workers"] = c.workers;
    j["sweeps"] = {{"enabled", c.sweeps.enabled},
                   {"tau_values", c.sweeps.tau_values},
                   {"ab_values", c.sweeps.ab_values},
                   {"reduced_count", c.sweeps.reduced_count},
                   {"reduced_top_k", c.sweeps.reduced_top_k}};
    return j;
}

Network prepare_network(const ExperimentConfig& cfg) {
    Network net = load_case(cfg.case_path);
    if (cfg.derive_limits) net = derive_limits_from_setpoint_flows(net, cfg.derive_limits->headroom, cfg.derive_limits->floor_mw);
    net = scale_line_capacities(net, cfg.congestion_factor);
    if (!cfg.splittable_buses.empty()) mark_splittable(net, cfg.splittable_buses);
    require_valid(net);
    return net;
}

namespace {

std::string flat_bits(const Topology& t) {
    std::string s;
    for (std::size_t j = 0; j < t.size(); ++j) s += t[j] ? '1' : '0';
    return s;
}

std::size_t bit_distance(const std::string& a, const std::string& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d += a[i] != b[i];
    return d;
}

std::uint64_t feedback_seed(std::uint64_t seed, std::size_t tag) {
    return seed ^ (0x9E3779B97F4A7C15ull * (tag + 1));
}

struct SeedRunner {
    const ExperimentConfig& cfg;
    const Network& net;
    const ReconfigModel& model;
    const EvalContext& ctx;
    double f_star;
    const Alternative& least_cost;

    std::vector<FunctionId> evaluated() const {
        auto fns = cfg.functions;
        if (std::find(fns.begin(), fns.end(), FunctionId::u5) == fns.end()) fns.push_back(FunctionId::u5);
        return fns;
    }

    RoundRecord record(const AlternativeSet& set, std::string label, std::string driver, std::string sweep) const {
        RoundRecord r;
        r.label = std::move(label);
        r.driver = std::move(driver);
        r.sweep = std::move(sweep);
        const auto fns = evaluated();
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& alt = set.alternatives[i];
            AlternativeRecord a;
            a.index = i;
            a.cost = alt.cost;
            a.slack = alt.slack;
            a.unique = alt.unique;
            a.topology = flat_bits(alt.topology);
            for (auto fn : fns) a.values[to_string(fn)] = evaluate(fn, net, alt, ctx).value;
            r.alternatives.push_back(std::move(a));
        }
        return r;
    }

    void feedback_rounds(SeedReport& out, const AlternativeSet& mga, std::uint64_t seed, std::size_t top_k,
                         std::size_t count, const std::vector<HitlParams>& param_list, const std::string& sweep,
                         std::size_t tag_base) const {
        std::size_t tag = tag_base;
        for (auto fn : cfg.functions) {
            auto ranking = rank_alternatives(mga, fn, net, ctx);
            ranking.ranked_ids.resize(std::min(top_k, ranking.ranked_ids.size()));
            for (auto params : param_list) {
                params.round_count = count;
                auto round = run_hitl_round(model, mga, ranking, params, feedback_seed(seed, tag++), cfg.solver, cfg.workers);
                auto rec = record(round.set, round_label(params.variant), to_string(fn), sweep);
                rec.params = params;
                rec.feedback_dropped = round.feedback_dropped;
                out.rounds.push_back(std::move(rec));
            }
        }
    }

    SeedReport run(std::uint64_t seed) const {
        SeedReport out;
        out.seed = seed;
        out.f_star = f_star;
        out.least_cost_topology = flat_bits(least_cost.topology);
        MgaOptions mo;
        mo.workers = cfg.workers;
        if (cfg.include_least_cost) mo.least_cost = least_cost;
        const auto mga = generate_mga_set(model, f_star, cfg.epsilon, cfg.alt_count, seed, cfg.solver, mo);
        out.rounds.push_back(record(mga, "mga", "", ""));

        std::vector<HitlParams> main;
        for (auto v : cfg.variants) main.push_back({v, cfg.tau, cfg.a, cfg.b, 0});
        feedback_rounds(out, mga, seed, cfg.top_k, cfg.feedback_count(), main, "", 0);

        if (cfg.sweeps.enabled) {
            std::size_t tag = 1000;
            for (double t : cfg.sweeps.tau_values) {
                char name[32];
                std::snprintf(name, sizeof name, "tau=%g", t);
                feedback_rounds(out, mga, seed, cfg.top_k, cfg.feedback_count(),
                                {{HitlVariant::baseline, t, cfg.a, cfg.b, 0}}, name, tag);
                tag += 100;
            }
            for (auto [sa, sb] : cfg.sweeps.ab_values) {
                char name[48];
                std::snprintf(name, sizeof name, "a=%g b=%g", sa, sb);
                feedback_rounds(out, mga, seed, cfg.top_k, cfg.feedback_count(),
                                {{HitlVariant::v2, cfg.tau, sa, sb, 0}}, name, tag);
                tag += 100;
            }
            const auto reduced = generate_mga_set(model, f_star, cfg.epsilon, cfg.sweeps.reduced_count,
                                                  feedback_seed(seed, tag), cfg.solver, mo);
            out.rounds.push_back(record(reduced, "mga", "", "reduced"));
            feedback_rounds(out, reduced, seed, cfg.sweeps.reduced_top_k, cfg.sweeps.reduced_count, main, "reduced",
                            tag + 1);
        }

        // Hamming reference: minimal cumulative quadratic load over everything generated
        const AlternativeRecord* ref = nullptr;
        for (const auto& r : out.rounds)
            for (const auto& a : r.alternatives)
                if (!ref || a.values.at("u5") < ref->values.at("u5")) ref = &a;
        const std::string ref_bits = ref ? ref->topology : std::string{};
        for (auto& r : out.rounds)
            for (auto& a : r.alternatives) a.hamming_to_reference = bit_distance(a.topology, ref_bits);
        return out;
    }
};

long long rounded(double v) { return std::llround(v * 1e9); }

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Network net = prepare_network(cfg);
    const auto model = build_reconfiguration_model(net, cfg.switching);
    ExperimentReport report;
    report.config = to_json(cfg);

    const auto lc = solve_least_cost(model, cfg.solver);
    const auto ctx = make_eval_context(lc.best, cfg.u2_target, cfg.overload_threshold);
    if (cfg.compute_bounds) {
        for (auto fn : cfg.functions) {
            if (fn == FunctionId::u6) continue;
            const auto opt = solve_eval_optimum(model, fn, ctx, lc.f_star, cfg.epsilon, cfg.solver);
            report.bounds[to_string(fn)] = {opt.bound, opt.incumbent, opt.approximation_gap};
        }
    }

    const SeedRunner runner{cfg, net, model, ctx, lc.f_star, lc.best};
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
        const std::uint64_t seed = cfg.base_seed + s;
        try {
            report.seeds.push_back(runner.run(seed));
        } catch (const Error& e) {
            spdlog::error("seed {} aborted: {}", seed, e.what());
            SeedReport failed;
            failed.seed = seed;
            failed.f_star = lc.f_star;
            failed.error = e.what();
            report.seeds.push_back(std::move(failed));
        }
    }
    report.summary = summarize(report);
    report.valuable = classify_valuable(report);
    return report;
}

bool mga_valuable(const std::vector<double>& mga_values) {
    if (mga_values.empty()) return false;
    const auto first = rounded(mga_values.front());
    return std::any_of(mga_values.begin(), mga_values.end(), [&](double v) { return rounded(v) != first; });
}

bool hitl_more_valuable(const std::vector<double>& mga_values, const std::vector<double>& hitl_values,
                        Direction direction) {
    if (hitl_values.empty()) return false;
    if (mga_values.empty()) return true;
    auto better = [&](long long x, long long y) { return direction == Direction::minimize ? x < y : x > y; };
    auto best_of = [&](const std::vector<double>& vs) {
        long long b = rounded(vs.front());
        for (double v : vs)
            if (better(rounded(v), b)) b = rounded(v);
        return b;
    };
    const auto mga_best = best_of(mga_values);
    const auto hitl_best = best_of(hitl_values);
    if (better(hitl_best, mga_best)) return true;
    const auto count_at = [&](const std::vector<double>& vs) {
        return std::count_if(vs.begin(), vs.end(), [&](double v) { return !better(mga_best, rounded(v)); });
    };
    return count_at(hitl_values) > count_at(mga_values);
}

namespace {

std::vector<double> values_of(const RoundRecord& r, const std::string& fn) {
    std::vector<double> out;
    for (const auto& a : r.alternatives)
        if (auto it = a.values.find(fn); it != a.values.end()) out.push_back(it->second);
    return out;
}

std::vector<std::string> report_functions(const ExperimentReport& report) {
    std::vector<std::string> fns;
    if (report.config.contains("functions")) fns = report.config["functions"].get<std::vector<std::string>>();
    return fns;
}

}  // namespace

std::vector<ValuableFlags> classify_valuable(const ExperimentReport& report) {
    std::vector<ValuableFlags> out;
    for (const auto& seed : report.seeds) {
        const RoundRecord* mga = nullptr;
        for (const auto& r : seed.rounds)
            if (r.label == "mga" && r.sweep.empty()) mga = &r;
        if (!mga) continue;
        for (const auto& fn : report_functions(report)) {
            ValuableFlags f;
            f.seed = seed.seed;
            f.fn = fn;
            const auto mv = values_of(*mga, fn);
            f.mga_valuable = mga_valuable(mv);
            for (const auto& r : seed.rounds)
                if (r.driver == fn && r.sweep.empty())
                    f.more_valuable[r.label] = hitl_more_valuable(mv, values_of(r, fn), direction_of(parse_function_id(fn)));
            out.push_back(std::move(f));
        }
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SummaryRow> summarize(const ExperimentReport& report) {
    std::vector<SummaryRow> out;
    for (const auto& seed : report.seeds)
        for (const auto& r : seed.rounds)
            for (const auto& fn : report_functions(report)) {
                const auto vs = values_of(r, fn);
                if (vs.empty()) continue;
                out.push_back({seed.seed, r.label, r.driver, r.sweep, fn, median(vs),
                               *std::min_element(vs.begin(), vs.end()), *std::max_element(vs.begin(), vs.end())});
            }
    return out;
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AlternativeRecord, index, cost, slack, unique, hamming_to_reference, topology, values)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BoundRecord, bound, incumbent, approximation_gap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SummaryRow, seed, round, driver, sweep, fn, median, min, max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ValuableFlags, seed, fn, mga_valuable, more_valuable)

Json to_json(const ExperimentReport& report) {
    Json j;
    j["format"] = "gridmga-experiment-report";
    j["config"] = report.config;
    j["bounds"] = report.bounds;
    auto& seeds = j["seeds"] = Json::array();
    for (const auto& s : report.seeds) {
        Json js{{"seed", s.seed}, {"f_star", s.f_star}, {"least_cost_topology", s.least_cost_topology}, {"error", s.error}};
        auto& rounds = js["rounds"] = Json::array();
        for (const auto& r : s.rounds)
            rounds.push_back({{"label", r.label},
                              {"driver", r.driver},
                              {"sweep", r.sweep},
                              {"params", to_json(r.params)},
                              {"feedback_dropped", r.feedback_dropped},
                              {"alternatives", r.alternatives}});
        seeds.push_back(std::move(js));
    }
    j["summary"] = report.summary;
    j["valuable"] = report.valuable;
    return j;
}

ExperimentReport experiment_report_from_json(const Json& j) {
    if (!j.is_object() || j.value("format", "") != "gridmga-experiment-report")
        throw ParseError(0, "not a gridmga-experiment-report document");
    ExperimentReport r;
    try {
        r.config = j.at("config");
        r.bounds = j.at("bounds").get<std::map<std::string, BoundRecord>>();
        for (const auto& js : j.at("seeds")) {
            SeedReport s;
            s.seed = js.at("seed").get<std::uint64_t>();
            s.f_star = js.at("f_star").get<double>();
            s.least_cost_topology = js.at("least_cost_topology").get<std::string>();
            s.error = js.at("error").get<std::string>();
            for (const auto& jr : js.at("rounds")) {
                RoundRecord rr;
                rr.label = jr.at("label").get<std::string>();
                rr.driver = jr.at("driver").get<std::string>();
                rr.sweep = jr.at("sweep").get<std::string>();
                rr.params = hitl_params_from_json(jr.at("params"));
                rr.feedback_dropped = jr.at("feedback_dropped").get<bool>();
                rr.alternatives = jr.at("alternatives").get<std::vector<AlternativeRecord>>();
                s.rounds.push_back(std::move(rr));
            }
            r.seeds.push_back(std::move(s));
        }
        r.summary = j.at("summary").get<std::vector<SummaryRow>>();
        r.valuable = j.at("valuable").get<std::vector<ValuableFlags>>();
    } catch (const Json::exception& e) {
        throw ParseError(0, std::string("experiment report: ") + e.what());
    }
    return r;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void export_report(const ExperimentReport& report, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    const auto fns = report_functions(report);

    std::ostringstream rows;
    rows << "seed,round,driver,sweep,index,cost,slack,unique,hamming_to_reference,topology";
    for (const auto& fn : fns) rows << ',' << fn;
    rows << '\n';
    for (const auto& s : report.seeds)
        for (const auto& r : s.rounds)
            for (const auto& a : r.alternatives) {
                rows << s.seed << ',' << r.label << ',' << r.driver << ',' << r.sweep << ',' << a.index << ','
                     << num(a.cost) << ',' << num(a.slack) << ',' << (a.unique ? 1 : 0) << ',' << a.hamming_to_reference
                     << ",z" << a.topology;
                for (const auto& fn : fns) {
                    rows << ',';
                    if (auto it = a.values.find(fn); it != a.values.end()) rows << num(it->second);
                }
                rows << '\n';
            }
    write_text_file_atomic(directory / "alternatives.csv", rows.str());

    std::ostringstream sum;
    sum << "seed,round,driver,sweep,fn,median,min,max\n";
    for (const auto& r : report.summary)
        sum << r.seed << ',' << r.round << ',' << r.driver << ',' << r.sweep << ',' << r.fn << ',' << num(r.median) << ','
            << num(r.min) << ',' << num(r.max) << '\n';
    write_text_file_atomic(directory / "summary.csv", sum.str());

    // plot-ready series: cost vs value and hamming vs value per seed, function and round
    Json series = Json::array();
    for (const auto& s : report.seeds)
        for (const auto& r : s.rounds)
            for (const auto& fn : fns) {
                Json cost = Json::array(), value = Json::array(), hamming = Json::array();
                for (const auto& a : r.alternatives) {
                    auto it = a.values.find(fn);
                    if (it == a.values.end()) continue;
                    cost.push_back(a.cost);
                    value.push_back(it->second);
                    hamming.push_back(a.hamming_to_reference);
                }
                series.push_back({{"seed", s.seed}, {"round", r.label}, {"driver", r.driver}, {"sweep", r.sweep},
                                  {"fn", fn}, {"cost", cost}, {"value", value}, {"hamming", hamming}});
            }
    write_text_file_atomic(directory / "series.json", series.dump(1));
    write_text_file_atomic(directory / "report.json", to_json(report).dump(1));
}

ExperimentReport read_report(const std::filesystem::path& directory) {
    return experiment_report_from_json(parse_json_text(read_text_file(directory / "report.json")));
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (std::getline(in, line)) t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) throw ParseError(lineno, "expected " + std::to_string(t.header.size()) + " cells");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace gridmga
