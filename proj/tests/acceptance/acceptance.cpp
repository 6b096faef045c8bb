// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.
//
// Criterion 5 always runs the reduced case57 configuration (count 20, top 5,
// 2 seeds). The full configuration (count 100, top 10, 4 seeds) takes about
// twenty minutes on one core and runs only with GRIDMGA_FULL_ACCEPTANCE=1.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "gridmga/errors.hpp"
#include "gridmga/evaluation.hpp"
#include "gridmga/experiment.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/mga.hpp"
#include "gridmga/reconfig_model.hpp"
#include "support.hpp"

using namespace gridmga;

namespace {

constexpr double kEps = 0.05;

class Checker {
public:
    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (ok) return;
        if (failures_++ < 3) messages_ += (messages_.empty() ? "" : "; ") + what;
    }
    bool ok() const { return failures_ == 0; }
    std::string summary(const std::string& extra = {}) const {
        std::ostringstream s;
        s << checks_ << " checks";
        if (failures_) s << ", " << failures_ << " failed: " << messages_;
        if (!extra.empty()) s << "; " << extra;
        return s.str();
    }

private:
    std::size_t checks_ = 0, failures_ = 0;
    std::string messages_;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)) + 1e-9; }

ExperimentConfig case57_config(std::size_t count, std::size_t top_k, std::size_t seeds) {
    const std::filesystem::path dir(GRIDMGA_CONFIG_DIR);
    auto cfg = experiment_config_from_json(parse_json_text(read_text_file(dir / "case57_congested.json")), dir);
    cfg.alt_count = count;
    cfg.top_k = top_k;
    cfg.seeds = seeds;
    cfg.functions = {FunctionId::u4, FunctionId::u5};
    cfg.variants = {HitlVariant::v2};
    cfg.compute_bounds = false;
    cfg.validate();
    return cfg;
}

ExperimentConfig four_bus_config() {
    ExperimentConfig cfg;
    cfg.case_path = testing::fixture_path("four_bus_congested.json");
    cfg.alt_count = 8;
    cfg.top_k = 3;
    cfg.seeds = 2;
    cfg.workers = 1;
    return cfg;
}

// Runs shared by several criteria, computed on first use.
struct Runs {
    std::optional<ExperimentReport> four_bus, case57_reduced, case57_full;
    std::optional<Network> case57_net;

    const ExperimentReport& four() {
        if (!four_bus) four_bus = run_experiment(four_bus_config());
        return *four_bus;
    }
    const ExperimentReport& reduced() {
        if (!case57_reduced) case57_reduced = run_experiment(case57_config(20, 5, 2));
        return *case57_reduced;
    }
    const Network& net57() {
        if (!case57_net) case57_net = prepare_network(case57_config(20, 5, 2));
        return *case57_net;
    }
    bool full_enabled() const {
        const char* v = std::getenv("GRIDMGA_FULL_ACCEPTANCE");
        return v && std::string(v) == "1";
    }
    const ExperimentReport* full() {
        if (!full_enabled()) return nullptr;
        if (!case57_full) case57_full = run_experiment(case57_config(100, 10, 4));
        return &*case57_full;
    }
};

Runs runs;

void check_report_bounds(Checker& c, const ExperimentReport& r, const std::string& name) {
    for (const auto& s : r.seeds) {
        c.expect(s.error.empty(), name + " seed " + std::to_string(s.seed) + " failed: " + s.error);
        for (const auto& round : s.rounds)
            for (const auto& a : round.alternatives)
                c.expect(a.cost <= s.f_star * (1.0 + kEps) + 1e-6,
                         name + " " + round.label + " alternative " + std::to_string(a.index) + " cost " + num(a.cost));
    }
}

std::string criterion_1() {
    Checker c;
    std::size_t total = 0;
    auto count = [&](const ExperimentReport& r) {
        for (const auto& s : r.seeds)
            for (const auto& round : s.rounds) total += round.alternatives.size();
    };
    check_report_bounds(c, runs.four(), "4-bus");
    count(runs.four());
    check_report_bounds(c, runs.reduced(), "case57");
    count(runs.reduced());
    if (const auto* full = runs.full()) {
        check_report_bounds(c, *full, "case57 full");
        count(*full);
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(total) + " alternatives across MGA and all HITL variants");
}

// Oracle dispatch-only re-solve of each alternative with its topology fixed.
void check_dispatch_resolve(Checker& c, const Network& net, double f_star, const std::string& bits, double cost,
                            std::map<std::string, double>& cache, const std::string& name) {
    auto it = cache.find(bits);
    if (it == cache.end()) {
        std::vector<std::uint8_t> z;
        for (char ch : bits) z.push_back(ch == '1');
        const auto t = Topology::from_flat(z, net.switchable_branches().size());
        const auto opf = oracle::dc_opf(net, testing::graph_of(net, t));
        it = cache.emplace(bits, opf.feasible ? opf.cost : std::numeric_limits<double>::infinity()).first;
    }
    const double tol = 0.001 * f_star + 0.005 * f_star;
    c.expect(std::abs(cost - it->second) <= tol, name + " topology " + bits + ": cost " + num(cost) +
                                                     " vs re-solve " + num(it->second));
}

std::string flat(const Topology& t) {
    std::string s;
    for (auto v : t.flat()) s += v ? '1' : '0';
    return s;
}

std::string criterion_2() {
    Checker c;
    std::size_t n = 0;
    // congested 3-bus: produced alternatives, and raw MILP dispatch without the polish step
    {
        const auto net = testing::fixture("three_bus_congested.json");
        const auto m = build_reconfiguration_model(net, {});
        const auto lc = solve_least_cost(m, SolverSettings{});
        std::map<std::string, double> cache;
        for (bool polish : {true, false}) {
            SolverSettings s;
            s.polish_dispatch = polish;
            const auto set = generate_mga_set(m, lc.f_star, kEps, 20, 3, s);
            for (const auto& a : set.alternatives) {
                check_dispatch_resolve(c, net, lc.f_star, flat(a.topology), a.cost, cache, "3-bus");
                ++n;
            }
        }
    }
    // congested case57: every alternative of the reduced experiment, plus raw MILP dispatch
    {
        const auto& r = runs.reduced();
        const auto& net = runs.net57();
        std::map<std::string, double> cache;
        for (const auto& s : r.seeds)
            for (const auto& round : s.rounds)
                for (const auto& a : round.alternatives) {
                    check_dispatch_resolve(c, net, s.f_star, a.topology, a.cost, cache, "case57");
                    ++n;
                }
        const auto cfg = case57_config(20, 5, 2);
        const auto m = build_reconfiguration_model(net, cfg.switching);
        SolverSettings raw = cfg.solver;
        raw.polish_dispatch = false;
        const double f_star = r.seeds.at(0).f_star;
        const auto set = generate_mga_set(m, f_star, kEps, 8, 77, raw);
        for (const auto& a : set.alternatives) {
            check_dispatch_resolve(c, net, f_star, flat(a.topology), a.cost, cache, "case57 raw");
            ++n;
        }
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(n) + " alternatives re-solved by the oracle LP");
}

AlternativeSet column_set(std::size_t count, std::size_t ones) {
    AlternativeSet s;
    s.f_star = 100.0;
    for (std::size_t i = 0; i < count; ++i) {
        Alternative a;
        a.topology.line_open = {static_cast<std::uint8_t>(i < ones), 0};
        s.alternatives.push_back(a);
    }
    return s;
}

std::string criterion_3() {
    Checker c;
    // baseline: mean 0.3, top alternative z = 1, delta -0.7 -> -1
    {
        const auto set = column_set(10, 3);
        const auto w = encode_feedback_baseline(set, {{0}, "t"}, 0.15);
        c.expect(w.size() == 2 && w[0].values == std::vector<double>{-1.0, 0.0}, "baseline example");
        c.expect(std::abs(baseline_deltas(set, {{0}, "t"})[0][0] + 0.7) < 1e-15, "baseline delta");
        const auto two = encode_feedback_baseline(set, {{0, 1}, "t"}, 0.15);
        c.expect(two.size() == 3 && two[2].values[0] == -2.0, "baseline sum");
    }
    // v1: mean 0.3, ranked mean 2/3 -> -1
    {
        const auto set = column_set(10, 3);
        const auto w = encode_feedback_v1(set, {{0, 1, 5}, "t"}, 0.15);
        c.expect(w.values == std::vector<double>{-1.0, 0.0}, "v1 example");
    }
    // v2: mean 0.6, ranked mean 0.1 -> 0.5
    {
        const auto set = column_set(30, 18);
        const auto w = encode_feedback_v2(set, {{0, 18, 19, 20, 21, 22, 23, 24, 25, 26}, "t"});
        c.expect(std::abs(w.values[0] - 0.5) < 1e-15 && w.values[1] == 0.0, "v2 example");
    }
    // composition: unit vectors combine with a and b
    {
        const auto obj = compose_hitl_objective({{1.0, 0.0}}, {{0.0, -2.0}, WeightKind::feedback}, 1.0, 1.0, 250.0);
        c.expect(obj.z_coefficients == std::vector<double>{1.0, -1.0}, "composition example");
        c.expect(obj.slack_coefficient == -1.0 / 25000.0, "slack coefficient");
        const auto half = compose_hitl_objective({{3.0, 4.0}}, {{0.0, 5.0}, WeightKind::feedback}, 2.0, 0.5, 250.0);
        c.expect(std::abs(half.z_coefficients[0] - 1.2) < 1e-15 && std::abs(half.z_coefficients[1] - 2.1) < 1e-15,
                 "weighted composition");
    }
    std::mt19937_64 rng(3);
    // V1 equals the per-k baseline vector when K = 1
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t count = 2 + rng() % 25, n = 1 + rng() % 8;
        AlternativeSet set;
        for (std::size_t i = 0; i < count; ++i) {
            Alternative a;
            for (std::size_t j = 0; j < n; ++j) a.topology.line_open.push_back(rng() % 3 == 0);
            set.alternatives.push_back(a);
        }
        const RankingFeedback r{{rng() % count}, "t"};
        const double tau = (rng() % 100) / 100.0;
        c.expect(encode_feedback_v1(set, r, tau).values == encode_feedback_baseline(set, r, tau)[0].values,
                 "v1 vs baseline K=1");
    }
    // composed coefficients are invariant to positive scaling of both inputs
    std::uniform_real_distribution<double> u(-1.0, 1.0), scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 10;
        WeightVector wd, wh{{}, WeightKind::feedback};
        for (std::size_t j = 0; j < n; ++j) {
            wd.values.push_back(std::abs(u(rng)) + 1e-3);
            wh.values.push_back(u(rng));
        }
        const double a = std::abs(u(rng)), b = std::abs(u(rng));
        const auto ref = compose_hitl_objective(wd, wh, a, b, 999.0);
        const double s1 = scale(rng), s2 = scale(rng);
        for (auto& v : wd.values) v *= s1;
        for (auto& v : wh.values) v *= s2;
        const auto got = compose_hitl_objective(wd, wh, a, b, 999.0);
        for (std::size_t j = 0; j < n; ++j)
            c.expect(std::abs(got.z_coefficients[j] - ref.z_coefficients[j]) <= 1e-12, "scaling invariance");
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary();
}

struct Candidate {
    Topology topology;
    double cost;
};

std::string criterion_4() {
    Checker c;
    std::size_t trials = 0;
    for (const char* name : {"three_bus_congested.json", "four_bus_congested.json"}) {
        const auto net = testing::fixture(name);
        const auto m = build_reconfiguration_model(net, {});
        std::vector<Candidate> feasible;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : oracle::enumerate_topologies(net, 3)) {
            if (!e.opf.feasible) continue;
            auto t = base_topology(net);
            t.line_open = e.open;
            feasible.push_back({t, e.opf.cost});
            best = std::min(best, e.opf.cost);
        }
        const SolverSettings settings;
        const auto lc = solve_least_cost(m, settings);
        c.expect(close_rel(lc.f_star, best, settings.gap), std::string(name) + ": least cost " + num(lc.f_star) +
                                                                " vs oracle " + num(best));
        const double rhs = best * (1.0 + kEps), sc = augmentation_coefficient(best);
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 40; ++trial, ++trials) {
            std::vector<double> w;
            if (trial % 2) w = sample_diversity_weights(m.z_count(), 5, trial).values;
            else
                for (std::size_t j = 0; j < m.z_count(); ++j) w.push_back(u(rng));
            double ref = std::numeric_limits<double>::infinity();
            for (const auto& x : feasible) {
                if (x.cost > rhs * (1.0 + 1e-12)) continue;
                double d = sc * (rhs - x.cost);
                for (std::size_t j = 0; j < x.topology.size(); ++j) d += w[j] * x.topology[j];
                ref = std::min(ref, d);
            }
            const auto alt = solve_alternative(m, ObjectiveSpec{w, sc}, best, kEps, settings);
            c.expect(close_rel(alt.objective_value, ref, settings.gap),
                     std::string(name) + ": objective " + num(alt.objective_value) + " vs oracle " + num(ref));
        }
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(trials) + " weighted solves against full enumeration");
}

struct MedianTally {
    std::size_t seeds = 0;
    std::map<std::string, std::size_t> improved;  // by function
    std::string detail;

    std::size_t count(const std::string& fn) const {
        auto it = improved.find(fn);
        return it == improved.end() ? 0 : it->second;
    }
};

MedianTally tally_medians(const ExperimentReport& r) {
    MedianTally t;
    std::ostringstream d;
    for (const auto& s : r.seeds) {
        if (!s.error.empty()) continue;
        ++t.seeds;
        for (const std::string fn : {"u4", "u5"}) {
            std::optional<double> mga, hitl;
            for (const auto& row : r.summary) {
                if (row.seed != s.seed || row.fn != fn || !row.sweep.empty()) continue;
                if (row.round == "mga") mga = row.median;
                if (row.round == "hitl-v2" && row.driver == fn) hitl = row.median;
            }
            if (!mga || !hitl) continue;
            if (*hitl <= *mga) ++t.improved[fn];
            d << " s" << s.seed << ' ' << fn << ' ' << num(*hitl) << (*hitl <= *mga ? "<=" : ">") << num(*mga);
        }
    }
    t.detail = d.str();
    return t;
}

std::string criterion_5() {
    const auto reduced = tally_medians(runs.reduced());
    const bool reduced_ok = reduced.seeds == 2 && reduced.count("u4") >= 1 && reduced.count("u5") >= 1;
    std::string detail = "reduced: U4 " + std::to_string(reduced.count("u4")) + "/2, U5 " +
                         std::to_string(reduced.count("u5")) + "/2 seeds (" + reduced.detail + " )";
    bool full_ok = true;
    if (const auto* full = runs.full()) {
        auto t = tally_medians(*full);
        full_ok = t.seeds == 4 && t.count("u4") >= 3 && t.count("u5") >= 3;
        detail += "; full: U4 " + std::to_string(t.count("u4")) + "/4, U5 " + std::to_string(t.count("u5")) +
                  "/4 seeds (" + t.detail + " )";
    } else {
        detail += "; full config not run (set GRIDMGA_FULL_ACCEPTANCE=1)";
    }
    if (!reduced_ok || !full_ok) throw std::runtime_error(detail);
    return detail;
}

std::string criterion_6() {
    Checker c;
    std::size_t n = 0;
    std::string ratios;
    // The 2% cap is asserted on the congested study network. On the small fixtures most
    // lines run far below their limits, where 12 uniform segments leave a fixed 0.0025
    // absolute error per line; their ratios are reported only.
    const auto check_network = [&](const Network& net, const SwitchingOptions& opts, const SolverSettings& settings,
                                   std::size_t count, const std::string& name, bool cap_gap) {
        const auto m = build_reconfiguration_model(net, opts);
        const auto lc = solve_least_cost(m, settings);
        const auto ctx = make_eval_context(lc.best);
        std::map<FunctionId, EvalOptimum> bounds;
        for (auto fn : {FunctionId::u1, FunctionId::u2, FunctionId::u3, FunctionId::u4, FunctionId::u5})
            bounds[fn] = solve_eval_optimum(m, fn, ctx, lc.f_star, kEps, settings);
        const auto& u5 = bounds[FunctionId::u5];
        const double ratio = u5.approximation_gap / std::max(std::abs(u5.bound), 1e-12);
        ratios += (ratios.empty() ? "" : ", ") + name + " " + num(100.0 * ratio) + "%";
        if (cap_gap) {
            c.expect(ratio <= 0.02, name + ": U5 approximation gap " + num(u5.approximation_gap) + " exceeds 2% of " +
                                        num(u5.bound));
        }

        std::vector<Alternative> alts;
        MgaOptions mo;
        mo.least_cost = lc.best;
        const auto set = generate_mga_set(m, lc.f_star, kEps, count, 9, settings, mo);
        alts = set.alternatives;
        for (auto fn : {FunctionId::u4, FunctionId::u5}) {
            auto r = rank_alternatives(set, fn, net, ctx);
            r.ranked_ids.resize(std::min<std::size_t>(3, r.ranked_ids.size()));
            HitlParams p;
            p.round_count = count;
            const auto round = run_hitl_round(m, set, r, p, 19, settings);
            alts.insert(alts.end(), round.set.alternatives.begin(), round.set.alternatives.end());
        }
        for (const auto& a : alts) {
            ++n;
            for (const auto& [fn, b] : bounds) {
                const double v = evaluate(fn, net, a, ctx).value;
                const double tol = fn == FunctionId::u5 ? b.approximation_gap + 1e-6 : 1e-6;
                c.expect(respects_bound(b.direction, v, b.bound, tol),
                         name + " " + to_string(fn) + ": value " + num(v) + " vs bound " + num(b.bound));
            }
        }
    };
    check_network(testing::fixture("three_bus_congested.json"), {}, {}, 10, "3-bus", false);
    check_network(testing::fixture("four_bus_congested.json"), {}, {}, 10, "4-bus", false);
    const auto cfg = case57_config(20, 5, 2);
    check_network(runs.net57(), cfg.switching, cfg.solver, 15, "case57", true);
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(n) + " alternatives; U5 gap / bound: " + ratios);
}

std::string criterion_7() {
    Checker c;
    std::mt19937_64 rng(7);
    std::size_t insensitive = 0, sensitive = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t count = 3 + rng() % 20, n = 1 + rng() % 6, k = 1 + rng() % std::min<std::size_t>(count, 5);
        AlternativeSet set;
        for (std::size_t i = 0; i < count; ++i) {
            Alternative a;
            for (std::size_t j = 0; j < n; ++j) a.topology.line_open.push_back(rng() % 3 == 0);
            set.alternatives.push_back(a);
        }
        std::vector<std::size_t> ids(count);
        for (std::size_t i = 0; i < count; ++i) ids[i] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(k);
        const RankingFeedback r{ids, "t"};
        bool between = false;
        for (const auto& d : baseline_deltas(set, r))
            for (double x : d) between = between || (std::abs(x) > 0.15 && std::abs(x) <= 0.75);
        const auto a = encode_feedback_baseline(set, r, 0.15);
        const auto b = encode_feedback_baseline(set, r, 0.75);
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].values == b[i].values;
        if (between) {
            ++sensitive;
            c.expect(!same, "a delta in (0.15, 0.75] must change the vector");
        } else {
            ++insensitive;
            c.expect(same, "vectors differ without a delta in (0.15, 0.75]");
        }
    }
    const auto set = column_set(10, 5);
    const RankingFeedback r{{7}, "t"};
    c.expect(std::abs(baseline_deltas(set, r)[0][0] - 0.5) < 1e-15, "constructed delta 0.5");
    c.expect(encode_feedback_baseline(set, r, 0.15)[0].values[0] == 1.0, "tau 0.15 keeps the 0.5 entry");
    c.expect(encode_feedback_baseline(set, r, 0.75)[0].values[0] == 0.0, "tau 0.75 drops the 0.5 entry");
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(insensitive) + " identical and " + std::to_string(sensitive) +
                     " flipped random cases, plus the delta = 0.5 fixture");
}

std::string criterion_8() {
    Checker c;
    std::mt19937_64 rng(808);
    std::size_t feasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = testing::random_sequence_instance(rng, 4);
        Alternative a;
        a.topology = inst.target;
        a.dispatch_mw = inst.dispatch_mw;
        const auto r = eval_switching_sequence(inst.net, a);
        const bool expected = testing::oracle_sequence_feasible(inst);
        feasible += expected;
        c.expect((r.value == 1.0) == expected, "instance " + std::to_string(trial));
    }
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = testing::random_sequence_instance(rng, 1);
        Alternative a;
        a.topology = inst.target;
        a.dispatch_mw = inst.dispatch_mw;
        const bool final_ok = oracle::state_operable(inst.net, testing::graph_of(inst.net, inst.target), inst.dispatch_mw);
        c.expect((eval_switching_sequence(inst.net, a).value == 1.0) == final_ok, "single action " + std::to_string(trial));
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary(std::to_string(feasible) + "/200 random instances sequenceable");
}

std::string criterion_9() {
    Checker c;
    const struct {
        const char* file;
        std::size_t buses, branches;
    } cases[] = {{"case57.m", 57, 80}, {"case118.m", 118, 186}};
    for (const auto& k : cases) {
        const auto net = testing::bundled(k.file);
        c.expect(net.buses.size() == k.buses, std::string(k.file) + " bus count " + std::to_string(net.buses.size()));
        c.expect(net.branches.size() == k.branches,
                 std::string(k.file) + " branch count " + std::to_string(net.branches.size()));
        const auto text = to_network_document(net);
        const auto back = parse_network_document(text);
        c.expect(to_network_document(back) == text, std::string(k.file) + " round trip text");
        bool same = back.buses.size() == net.buses.size() && back.branches.size() == net.branches.size() &&
                    back.generators.size() == net.generators.size();
        for (std::size_t i = 0; same && i < net.buses.size(); ++i)
            same = back.buses[i].id == net.buses[i].id && back.buses[i].load_mw == net.buses[i].load_mw &&
                   back.buses[i].is_slack == net.buses[i].is_slack;
        for (std::size_t i = 0; same && i < net.branches.size(); ++i)
            same = back.branches[i].from_bus == net.branches[i].from_bus &&
                   back.branches[i].to_bus == net.branches[i].to_bus &&
                   back.branches[i].susceptance == net.branches[i].susceptance &&
                   back.branches[i].limit_mw == net.branches[i].limit_mw;
        for (std::size_t i = 0; same && i < net.generators.size(); ++i)
            same = back.generators[i].bus == net.generators[i].bus &&
                   back.generators[i].p_max == net.generators[i].p_max &&
                   back.generators[i].cost_per_mwh == net.generators[i].cost_per_mwh;
        c.expect(same, std::string(k.file) + " round trip fields");
    }
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary();
}

RoundRecord synthetic_round(std::string label, std::string driver, const std::vector<double>& values) {
    RoundRecord r;
    r.label = std::move(label);
    r.driver = std::move(driver);
    for (std::size_t i = 0; i < values.size(); ++i) {
        AlternativeRecord a;
        a.index = i;
        a.values["u1"] = values[i];
        a.values["u4"] = values[i];
        r.alternatives.push_back(a);
    }
    return r;
}

std::string criterion_10() {
    Checker c;
    ExperimentReport report;
    report.config = Json{{"functions", {"u1", "u4"}}};
    auto add_seed = [&](std::uint64_t seed, const std::vector<double>& mga, const std::vector<double>& hitl) {
        SeedReport s;
        s.seed = seed;
        s.rounds.push_back(synthetic_round("mga", "", mga));
        s.rounds.push_back(synthetic_round("hitl-v2", "u1", hitl));
        s.rounds.push_back(synthetic_round("hitl-v2", "u4", hitl));
        report.seeds.push_back(s);
    };
    add_seed(1, {2.0, 2.0, 2.0}, {2.0, 2.0, 2.0});  // all equal
    add_seed(2, {3.0, 1.0, 2.0}, {0.5, 3.0, 3.0});  // strictly better for minimize
    add_seed(3, {4.0, 1.0, 1.0}, {4.0, 4.0, 1.0});  // equal best, higher count for maximize
    const auto flags = classify_valuable(report);
    auto flag = [&](std::uint64_t seed, const std::string& fn) {
        for (const auto& f : flags)
            if (f.seed == seed && f.fn == fn) return f;
        throw std::runtime_error("missing flags");
    };
    c.expect(flags.size() == 6, "one flag set per seed and function");
    c.expect(!flag(1, "u4").mga_valuable && !flag(1, "u1").mga_valuable, "all-equal MGA set is not valuable");
    c.expect(!flag(1, "u4").more_valuable.at("hitl-v2"), "all-equal HITL set is not more valuable");
    c.expect(flag(2, "u4").mga_valuable, "varied MGA set is valuable");
    c.expect(flag(2, "u4").more_valuable.at("hitl-v2"), "strictly better minimum is more valuable");
    c.expect(flag(2, "u1").more_valuable.at("hitl-v2"), "equal maximum reached more often is more valuable");
    c.expect(flag(3, "u1").more_valuable.at("hitl-v2"), "equal best with a higher count is more valuable");
    c.expect(!flag(3, "u4").more_valuable.at("hitl-v2"), "equal minimum reached less often is not more valuable");
    if (!c.ok()) throw std::runtime_error(c.summary());
    return c.summary();
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
        {"epsilon bound", criterion_1},
        {"augmentation effectiveness", criterion_2},
        {"weight encoding", criterion_3},
        {"brute-force equivalence", criterion_4},
        {"HITL median improvement", criterion_5},
        {"bound dominance", criterion_6},
        {"tau insensitivity", criterion_7},
        {"switching sequence oracle", criterion_8},
        {"parser", criterion_9},
        {"valuable classification", criterion_10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        std::string status = "PASS", detail;
        try {
            detail = criteria[i].second();
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = e.what();
            ++failed;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << status << " criterion " << (i + 1) << " (" << criteria[i].first << "): " << detail << " ["
                  << num(secs) << " s]" << std::endl;
    }
    return failed ? 1 : 0;
}
