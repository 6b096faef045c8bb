// gridmga: command-line front end for network checks, alternative
// generation, feedback rounds, evaluation, experiments and the HTTP service.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"
#include "gridmga/evaluation.hpp"
#include "gridmga/experiment.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/http_service.hpp"
#include "gridmga/mga.hpp"
#include "gridmga/serialization.hpp"
#include "gridmga/session.hpp"

using namespace gridmga;

namespace {

struct NetworkArgs {
    std::string path;
    double factor = 1.0;
    std::vector<double> derive;  // headroom, floor
    std::vector<int> splittable;

    void add(CLI::App* app) {
        app->add_option("case", path, "MATPOWER .m case or native .json network")->required()->check(CLI::ExistingFile);
        app->add_option("--factor", factor, "line capacity factor in (0, 1]");
        app->add_option("--derive-limits", derive, "rate lines from setpoint flows: HEADROOM FLOOR_MW")->expected(2);
        app->add_option("--splittable", splittable, "bus ids whose substations may split")->delimiter(',');
    }

    Network load() const {
        Network net = load_case(path);
        if (!derive.empty()) net = derive_limits_from_setpoint_flows(net, derive[0], derive[1]);
        net = scale_line_capacities(net, factor);
        if (!splittable.empty()) mark_splittable(net, splittable);
        return net;
    }
};

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    write_text_file_atomic(path, text + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-optimal transmission reconfiguration alternatives with ranking feedback"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

    SolverSettings solver;
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--gap", solver.gap, "relative MIP gap")->capture_default_str();
        sub->add_option("--time-limit", solver.time_limit_s, "seconds per solve")->capture_default_str();
        sub->add_flag_function("--no-polish", [&](std::int64_t) { solver.polish_dispatch = false; },
                      "keep the MILP dispatch instead of re-solving it with the topology fixed");
    };

    // validate
    auto* validate = app.add_subcommand("validate", "check a case file");
    NetworkArgs vnet;
    vnet.add(validate);

    // scale
    auto* scale = app.add_subcommand("scale", "scale line capacities and write a native network document");
    NetworkArgs snet;
    snet.add(scale);
    std::string scale_out;
    scale->add_option("-o,--out", scale_out, "output file (stdout by default)");

    // mga
    auto* mga = app.add_subcommand("mga", "generate diverse near-optimal alternatives");
    NetworkArgs mnet;
    mnet.add(mga);
    double epsilon = 0.05;
    std::size_t count = 100, workers = 0;
    std::uint64_t seed = 1;
    SwitchingOptions sw;
    bool include_least_cost = false;
    std::string mga_out;
    mga->add_option("--epsilon", epsilon)->capture_default_str();
    mga->add_option("--count", count)->capture_default_str();
    mga->add_option("--seed", seed)->capture_default_str();
    mga->add_option("--max-line-actions", sw.max_line_actions)->capture_default_str();
    mga->add_option("--max-busbar-actions", sw.max_busbar_actions)->capture_default_str();
    mga->add_option("--workers", workers, "parallel solves (0 = all cores)");
    mga->add_flag("--include-least-cost", include_least_cost, "prepend the least-cost solution to the set");
    mga->add_option("-o,--out", mga_out, "alternative-set file (stdout by default)");
    add_solver(mga);

    // hitl
    auto* hitl = app.add_subcommand("hitl", "run a feedback round on an alternative set");
    std::string set_path, ranking_arg, hitl_out, variant = "v2";
    HitlParams params;
    std::size_t top_k = 10;
    hitl->add_option("set", set_path, "alternative-set file")->required()->check(CLI::ExistingFile);
    hitl->add_option("--ranking", ranking_arg, "ranking file or evaluation function u1..u6")->required();
    hitl->add_option("--variant", variant, "baseline, v1 or v2")->capture_default_str();
    hitl->add_option("--tau", params.tau)->capture_default_str();
    hitl->add_option("--a", params.a)->capture_default_str();
    hitl->add_option("--b", params.b)->capture_default_str();
    hitl->add_option("--count", params.round_count)->capture_default_str();
    hitl->add_option("--top-k", top_k, "ranked alternatives kept when ranking by a function")->capture_default_str();
    hitl->add_option("--seed", seed)->capture_default_str();
    hitl->add_option("--workers", workers);
    hitl->add_option("-o,--out", hitl_out, "alternative-set file (stdout by default)");
    add_solver(hitl);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate and rank an alternative set");
    std::string fn_name = "u4", eval_out;
    double threshold = 0.9;
    bool with_bound = false;
    eval->add_option("set", set_path, "alternative-set file")->required()->check(CLI::ExistingFile);
    eval->add_option("--fn", fn_name, "u1..u6")->capture_default_str();
    eval->add_option("--threshold", threshold, "overload threshold")->capture_default_str();
    eval->add_flag("--bound", with_bound, "also optimize the function over the near-optimal set");
    eval->add_option("-o,--out", eval_out, "output file (stdout by default)");
    add_solver(eval);

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run a configured study and export its report");
    std::string config_path, out_dir;
    experiment->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    experiment->add_option("--out", out_dir)->required();

    // serve
    auto* serve = app.add_subcommand("serve", "run the session HTTP service");
    std::string listen = "127.0.0.1:8080";
    std::string data_dir = std::getenv("GRIDMGA_SESSION_DIR") ? std::getenv("GRIDMGA_SESSION_DIR") : "gridmga-sessions";
    std::string case_dir = GRIDMGA_DATA_DIR;
    std::size_t threads = 2;
    serve->add_option("--listen", listen, "host:port")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "session storage (env GRIDMGA_SESSION_DIR)")->capture_default_str();
    serve->add_option("--case-dir", case_dir, "bundled networks")->capture_default_str();
    serve->add_option("--threads", threads, "background solver threads")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("gridmga"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*validate) {
            const auto net = vnet.load();
            const auto report = validate_network(net);
            std::cout << net.name << ": " << net.buses.size() << " buses, " << net.branches.size() << " branches, "
                      << net.generators.size() << " generators, total load " << net.total_load_mw() << " MW\n";
            for (const auto& v : report) std::cout << "  [" << v.code << "] " << v.message << '\n';
            if (!report.empty()) return 1;
            std::cout << "valid\n";
        } else if (*scale) {
            write_output(scale_out, to_network_document(snet.load()));
        } else if (*mga) {
            sw.allow_busbar_splitting = sw.max_busbar_actions > 0;
            sw.allow_line_switching = sw.max_line_actions > 0;
            const auto net = mnet.load();
            const auto model = build_reconfiguration_model(net, sw);
            const auto lc = solve_least_cost(model, solver);
            MgaOptions mo;
            mo.workers = workers;
            if (include_least_cost) mo.least_cost = lc.best;
            AlternativeSetDocument doc{net, sw, generate_mga_set(model, lc.f_star, epsilon, count, seed, solver, mo), lc.best};
            write_output(mga_out, write_alternative_set_document(doc));
        } else if (*hitl) {
            auto doc = read_alternative_set_document(read_text_file(set_path));
            if (!doc.least_cost) throw DataError("alternative set carries no least-cost solution");
            params.variant = parse_variant(variant);
            RankingFeedback ranking;
            if (std::filesystem::exists(ranking_arg)) {
                ranking = ranking_from_json(parse_json_text(read_text_file(ranking_arg)));
            } else {
                const auto ctx = make_eval_context(*doc.least_cost);
                ranking = rank_alternatives(doc.set, parse_function_id(ranking_arg), doc.network, ctx);
                ranking.ranked_ids.resize(std::min(top_k, ranking.ranked_ids.size()));
            }
            const auto model = build_reconfiguration_model(doc.network, doc.options);
            auto round = run_hitl_round(model, doc.set, ranking, params, seed, solver, workers);
            AlternativeSetDocument out{doc.network, doc.options, std::move(round.set), doc.least_cost};
            write_output(hitl_out, write_alternative_set_document(out));
        } else if (*eval) {
            const auto doc = read_alternative_set_document(read_text_file(set_path));
            if (!doc.least_cost) throw DataError("alternative set carries no least-cost solution");
            const auto fn = parse_function_id(fn_name);
            const auto ctx = make_eval_context(*doc.least_cost, SetTarget::zero, threshold);
            Json out;
            out["fn"] = to_string(fn);
            out["direction"] = direction_of(fn) == Direction::maximize ? "maximize" : "minimize";
            auto& rows = out["alternatives"] = Json::array();
            for (std::size_t i = 0; i < doc.set.size(); ++i) {
                const auto r = evaluate(fn, doc.network, doc.set.alternatives[i], ctx);
                Json row{{"id", i}, {"value", r.value}, {"cost", doc.set.alternatives[i].cost}};
                if (fn == FunctionId::u6 && r.value > 0.0) row["order"] = r.feasible_order;
                rows.push_back(std::move(row));
            }
            out["ranking"] = rank_alternatives(doc.set, fn, doc.network, ctx).ranked_ids;
            if (with_bound) {
                const auto model = build_reconfiguration_model(doc.network, doc.options);
                const auto opt = solve_eval_optimum(model, fn, ctx, doc.set.f_star, doc.set.epsilon, solver);
                out["bound"] = {{"bound", opt.bound}, {"incumbent", opt.incumbent}, {"approximation_gap", opt.approximation_gap}};
            }
            write_output(eval_out, out.dump(1));
        } else if (*experiment) {
            const auto cfg = experiment_config_from_json(parse_json_text(read_text_file(config_path)),
                                                         std::filesystem::path(config_path).parent_path());
            const auto report = run_experiment(cfg);
            export_report(report, out_dir);
            for (const auto& f : report.valuable) {
                std::cout << "seed " << f.seed << " " << f.fn << ": mga " << (f.mga_valuable ? "valuable" : "not valuable");
                for (const auto& [label, more] : f.more_valuable) std::cout << ", " << label << (more ? " more" : " not more");
                std::cout << '\n';
            }
        } else if (*serve) {
            const auto colon = listen.rfind(':');
            if (colon == std::string::npos) throw ConfigError("--listen expects host:port");
            SessionManager sessions(data_dir, case_dir, threads);
            HttpService http(sessions);
            const int port = http.bind(listen.substr(0, colon), std::stoi(listen.substr(colon + 1)));
            std::cerr << "listening on " << listen.substr(0, colon) << ':' << port << '\n';
            http.listen();
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
