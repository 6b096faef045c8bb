#include "gridmga/session.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

std::string to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::idle: return "idle";
        case SessionStatus::solving: return "solving";
        case SessionStatus::awaiting_ranking: return "awaiting_ranking";
        case SessionStatus::error: return "error";
    }
    return "unknown";
}

SessionStatus parse_session_status(std::string_view s) {
    if (s == "idle") return SessionStatus::idle;
    if (s == "solving") return SessionStatus::solving;
    if (s == "awaiting_ranking") return SessionStatus::awaiting_ranking;
    if (s == "error") return SessionStatus::error;
    throw ParseError(0, "unknown session status '" + std::string(s) + "'");
}

Json to_json(const SessionConfig& c) {
    Json j{{"epsilon", c.epsilon},
           {"switching", to_json(c.switching)},
           {"solver", to_json(c.solver)},
           {"congestion_factor", c.congestion_factor},
           {"splittable_buses", c.splittable_buses},
           {"u2_target", c.u2_target == SetTarget::zero ? "zero" : "match_optimum"},
           {"overload_threshold", c.overload_threshold},
           {"workers", c.workers}};
    if (c.derive_limits) j["derive_limits"] = {{"headroom", c.derive_limits->headroom}, {"floor_mw", c.derive_limits->floor_mw}};
    return j;
}

SessionConfig session_config_from_json(const Json& j) {
    SessionConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ConfigError("session config must be an object");
    try {
        c.epsilon = j.value("epsilon", c.epsilon);
        if (j.contains("switching")) c.switching = switching_options_from_json(j["switching"]);
        if (j.contains("solver")) c.solver = solver_settings_from_json(j["solver"]);
        if (j.contains("gap")) c.solver.gap = j["gap"].get<double>();
        c.congestion_factor = j.value("congestion_factor", c.congestion_factor);
        c.splittable_buses = j.value("splittable_buses", c.splittable_buses);
        if (j.contains("derive_limits"))
            c.derive_limits = LimitDerivation{j["derive_limits"].value("headroom", 1.0), j["derive_limits"].value("floor_mw", 1.0)};
        const auto target = j.value("u2_target", std::string("zero"));
        if (target != "zero" && target != "match_optimum") throw ConfigError("u2_target must be 'zero' or 'match_optimum'");
        c.u2_target = target == "zero" ? SetTarget::zero : SetTarget::match_optimum;
        c.overload_threshold = j.value("overload_threshold", c.overload_threshold);
        c.workers = j.value("workers", c.workers);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("session config: ") + e.what());
    }
    if (c.epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
    if (!(c.solver.gap > 0.0)) throw ConfigError("gap must be positive");
    if (!(c.congestion_factor > 0.0 && c.congestion_factor <= 1.0)) throw ConfigError("congestion_factor must lie in (0, 1]");
    return c;
}

Json to_json(const Session& s) {
    Json rounds = Json::array();
    for (const auto& r : s.rounds) {
        Json jr{{"set", to_json(r.set)}};
        if (r.ranking) jr["ranking"] = to_json(*r.ranking);
        if (r.params) jr["params"] = to_json(*r.params);
        auto& fb = jr["feedback"] = Json::array();
        for (const auto& w : r.feedback) fb.push_back(to_json(w));
        rounds.push_back(std::move(jr));
    }
    Json j{{"format", "gridmga-session"},
           {"id", s.id},
           {"network_name", s.network_name},
           {"network", Json::parse(to_network_document(s.network))},
           {"config", to_json(s.config)},
           {"status", to_string(s.status)},
           {"last_error", s.last_error},
           {"error_causes", s.error_causes},
           {"rounds", rounds}};
    if (s.least_cost) j["least_cost"] = to_json(*s.least_cost);
    return j;
}

Session session_from_json(const Json& j) {
    if (!j.is_object() || j.value("format", "") != "gridmga-session") throw ParseError(0, "not a gridmga-session document");
    Session s;
    try {
        s.id = j.at("id").get<std::string>();
        s.network_name = j.value("network_name", std::string{});
        s.network = parse_network_document(j.at("network").dump());
        s.config = session_config_from_json(j.at("config"));
        s.status = parse_session_status(j.at("status").get<std::string>());
        s.last_error = j.value("last_error", std::string{});
        s.error_causes = j.value("error_causes", std::vector<std::string>{});
        if (j.contains("least_cost")) s.least_cost = alternative_from_json(j["least_cost"]);
        for (const auto& jr : j.at("rounds")) {
            SessionRound r;
            r.set = alternative_set_from_json(jr.at("set"));
            if (jr.contains("ranking")) r.ranking = ranking_from_json(jr["ranking"]);
            if (jr.contains("params")) r.params = hitl_params_from_json(jr["params"]);
            for (const auto& w : jr.value("feedback", Json::array()))
                r.feedback.push_back({w.at("values").get<std::vector<double>>(), WeightKind::feedback});
            s.rounds.push_back(std::move(r));
        }
    } catch (const Json::exception& e) {
        throw ParseError(0, std::string("session document: ") + e.what());
    }
    return s;
}

WorkerPool::WorkerPool(std::size_t threads) {
    threads = std::max<std::size_t>(1, threads);
    for (std::size_t t = 0; t < threads; ++t)
        threads_.emplace_back([this] {
            for (;;) {
                std::function<void()> job;
                {
                    std::unique_lock lock(mutex_);
                    cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
                    if (stopping_) return;
                    job = std::move(jobs_.front());
                    jobs_.pop_front();
                }
                job();
            }
        });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
        jobs_.clear();
    }
    cv_.notify_all();
}

void WorkerPool::submit(std::function<void()> job) {
    {
        std::lock_guard lock(mutex_);
        jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
}

SessionManager::SessionManager(std::filesystem::path data_dir, std::filesystem::path case_dir, std::size_t solver_threads)
    : data_dir_(std::move(data_dir)),
      case_dir_(std::move(case_dir)),
      id_state_(std::random_device{}() ^ static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())),
      pool_(solver_threads) {
    std::filesystem::create_directories(data_dir_);
    load_all();
}

SessionManager::~SessionManager() = default;

std::vector<std::string> SessionManager::bundled_networks() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(case_dir_, ec)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".m" || ext == ".json")) out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string SessionManager::new_id() {
    std::lock_guard lock(id_mutex_);
    std::mt19937_64 rng(id_state_++ * 0x9E3779B97F4A7C15ull);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

void SessionManager::persist(const Session& s) const {
    write_text_file_atomic(data_dir_ / (s.id + ".json"), to_json(s).dump(1));
}

void SessionManager::load_all() {
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
        if (entry.path().extension() != ".json") continue;
        try {
            auto s = session_from_json(parse_json_text(read_text_file(entry.path())));
            if (s.status == SessionStatus::solving) {
                s.status = SessionStatus::error;
                s.last_error = "solve interrupted by a service restart";
                persist(s);
            }
            auto e = std::make_shared<Entry>();
            const auto id = s.id;
            e->session = std::move(s);
            sessions_[id] = std::move(e);
        } catch (const Error& ex) {
            spdlog::warn("skipping session file {}: {}", entry.path().string(), ex.what());
        }
    }
    spdlog::info("loaded {} sessions from {}", sessions_.size(), data_dir_.string());
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

std::vector<std::string> SessionManager::session_ids() const {
    std::lock_guard lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, e] : sessions_) out.push_back(id);
    return out;
}

std::string SessionManager::register_session(Session s) {
    std::string id;
    {
        std::lock_guard lock(map_mutex_);
        do id = new_id();
        while (sessions_.contains(id));
        s.id = id;
        auto e = std::make_shared<Entry>();
        e->session = std::move(s);
        persist(e->session);
        sessions_[id] = std::move(e);
    }
    return id;
}

std::string SessionManager::create_session(const Network& net, std::string name, const SessionConfig& config) {
    Network prepared = net;
    if (config.derive_limits)
        prepared = derive_limits_from_setpoint_flows(prepared, config.derive_limits->headroom, config.derive_limits->floor_mw);
    prepared = scale_line_capacities(prepared, config.congestion_factor);
    if (!config.splittable_buses.empty()) mark_splittable(prepared, config.splittable_buses);
    const auto report = validate_network(prepared);
    if (!report.empty()) {
        std::vector<std::string> issues;
        for (const auto& v : report) issues.push_back(v.message);
        throw ValidationError(std::move(issues));
    }
    config.switching.validate();
    Session s;
    s.network_name = name.empty() ? prepared.name : std::move(name);
    s.network = std::move(prepared);
    s.config = config;
    return register_session(std::move(s));
}

std::string SessionManager::create_session_from_case(const std::string& case_name, const SessionConfig& config) {
    const auto names = bundled_networks();
    if (std::find(names.begin(), names.end(), case_name) == names.end())
        throw NotFoundError("unknown bundled network '" + case_name + "'");
    auto path = case_dir_ / (case_name + ".m");
    if (!std::filesystem::exists(path)) path = case_dir_ / (case_name + ".json");
    return create_session(load_case(path), case_name, config);
}

void SessionManager::finish(const std::shared_ptr<Entry>& e, const std::function<void(Session&)>& apply) {
    {
        std::lock_guard lock(e->mutex);
        apply(e->session);
        e->session.last_error.clear();
        e->session.error_causes.clear();
        persist(e->session);
    }
    e->settled.notify_all();
}

void SessionManager::fail(const std::shared_ptr<Entry>& e, const std::string& message, std::vector<std::string> causes) {
    {
        std::lock_guard lock(e->mutex);
        e->session.status = SessionStatus::error;
        e->session.last_error = message;
        e->session.error_causes = std::move(causes);
        try {
            persist(e->session);
        } catch (const std::exception& ex) {
            spdlog::error("session {}: {}", e->session.id, ex.what());
        }
    }
    e->settled.notify_all();
}

namespace {

template <class Job>
std::function<void()> guarded(Job job, std::function<void(const std::string&, std::vector<std::string>)> on_error) {
    return [job = std::move(job), on_error = std::move(on_error)] {
        try {
            job();
        } catch (const InfeasibleError& ex) {
            on_error(ex.what(), ex.causes());
        } catch (const std::exception& ex) {
            on_error(ex.what(), {});
        }
    };
}

}  // namespace

std::size_t SessionManager::generate_round(const std::string& id, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw ValidationError({"count must be at least 1"});
    auto e = find(id);
    Network net;
    SessionConfig cfg;
    std::optional<Alternative> lc;
    std::size_t index = 0;
    {
        std::lock_guard lock(e->mutex);
        if (e->session.status == SessionStatus::solving) throw ConflictError("session " + id + " is already solving");
        e->session.status = SessionStatus::solving;
        persist(e->session);
        net = e->session.network;
        cfg = e->session.config;
        lc = e->session.least_cost;
        index = e->session.rounds.size();
    }
    pool_.submit(guarded(
        [this, e, net = std::move(net), cfg, lc, count, seed] {
            const auto model = build_reconfiguration_model(net, cfg.switching);
            Alternative least = lc ? *lc : solve_least_cost(model, cfg.solver).best;
            MgaOptions mo;
            mo.workers = cfg.workers;
            auto set = generate_mga_set(model, least.cost, cfg.epsilon, count, seed, cfg.solver, mo);
            finish(e, [&](Session& s) {
                if (!s.least_cost) s.least_cost = least;
                s.rounds.push_back({std::move(set), std::nullopt, std::nullopt, {}});
                s.status = SessionStatus::awaiting_ranking;
            });
        },
        [this, e](const std::string& msg, std::vector<std::string> causes) { fail(e, msg, std::move(causes)); }));
    return index;
}

std::size_t SessionManager::submit_ranking(const std::string& id, std::size_t round, const RankingFeedback& ranking,
                                           const HitlParams& params, std::uint64_t seed) {
    auto e = find(id);
    Network net;
    SessionConfig cfg;
    AlternativeSet base;
    std::size_t index = 0;
    {
        std::lock_guard lock(e->mutex);
        auto& s = e->session;
        if (s.status == SessionStatus::solving) throw ConflictError("session " + id + " is already solving");
        if (s.rounds.empty() || !s.least_cost) throw ConflictError("session " + id + " has no round to rank");
        if (round >= s.rounds.size()) throw NotFoundError("round " + std::to_string(round) + " does not exist");
        if (round + 1 != s.rounds.size())
            throw ValidationError({"ranking references stale round " + std::to_string(round) + "; latest is " +
                                   std::to_string(s.rounds.size() - 1)});
        try {
            validate_ranking(s.rounds[round].set, ranking);
            params.validate();
        } catch (const DomainError& ex) {
            throw ValidationError({ex.what()});
        }
        if (params.round_count == 0) throw ValidationError({"count must be at least 1"});
        s.rounds[round].ranking = ranking;
        s.status = SessionStatus::solving;
        persist(s);
        net = s.network;
        cfg = s.config;
        base = s.rounds[round].set;
        index = s.rounds.size();
    }
    pool_.submit(guarded(
        [this, e, net = std::move(net), cfg, base = std::move(base), ranking, params, seed] {
            const auto model = build_reconfiguration_model(net, cfg.switching);
            auto r = run_hitl_round(model, base, ranking, params, seed, cfg.solver, cfg.workers);
            finish(e, [&](Session& s) {
                s.rounds.push_back({std::move(r.set), std::nullopt, params, std::move(r.feedback)});
                s.status = SessionStatus::awaiting_ranking;
            });
        },
        [this, e](const std::string& msg, std::vector<std::string> causes) { fail(e, msg, std::move(causes)); }));
    return index;
}

std::size_t SessionManager::submit_simulated_ranking(const std::string& id, std::size_t round, FunctionId fn,
                                                     std::size_t top_k, const HitlParams& params, std::uint64_t seed) {
    if (top_k == 0) throw ValidationError({"top_k must be at least 1"});
    RankingFeedback ranking;
    {
        auto e = find(id);
        std::lock_guard lock(e->mutex);
        const auto& s = e->session;
        if (round >= s.rounds.size()) throw NotFoundError("round " + std::to_string(round) + " does not exist");
        if (!s.least_cost) throw ConflictError("session " + id + " has no least-cost solution yet");
        const auto ctx = make_eval_context(*s.least_cost, s.config.u2_target, s.config.overload_threshold);
        ranking = rank_alternatives(s.rounds[round].set, fn, s.network, ctx);
    }
    ranking.ranked_ids.resize(std::min(top_k, ranking.ranked_ids.size()));
    return submit_ranking(id, round, ranking, params, seed);
}

Session SessionManager::snapshot(const std::string& id) const {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return e->session;
}

Json SessionManager::session_summary(const std::string& id) const {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    const auto& s = e->session;
    Json rounds = Json::array();
    for (std::size_t k = 0; k < s.rounds.size(); ++k) {
        const auto& r = s.rounds[k];
        const auto unique = std::count_if(r.set.alternatives.begin(), r.set.alternatives.end(),
                                          [](const Alternative& a) { return a.unique; });
        Json jr{{"index", k}, {"label", r.set.label}, {"count", r.set.size()}, {"unique_count", unique}, {"seed", r.set.seed}};
        if (r.ranking) jr["ranking"] = to_json(*r.ranking);
        if (r.params) jr["params"] = to_json(*r.params);
        if (!r.feedback.empty()) {
            auto& fb = jr["feedback"] = Json::array();
            for (const auto& w : r.feedback) fb.push_back(w.values);
        }
        rounds.push_back(std::move(jr));
    }
    Json j{{"id", s.id},
           {"network", s.network_name},
           {"status", to_string(s.status)},
           {"error", s.last_error},
           {"error_causes", s.error_causes},
           {"config", to_json(s.config)},
           {"z_dimensions", s.network.switchable_branches().size() + s.network.splittable_substations().size()},
           {"rounds", rounds}};
    if (s.least_cost) j["f_star"] = s.least_cost->cost;
    return j;
}

Json SessionManager::round_alternatives(const std::string& id, std::size_t round) const {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    const auto& s = e->session;
    if (round >= s.rounds.size()) throw NotFoundError("round " + std::to_string(round) + " does not exist");
    const auto& set = s.rounds[round].set;
    const auto& net = s.network;
    const auto switchable = net.switchable_branches();
    const auto splittable = net.splittable_substations();
    std::optional<EvalContext> ctx;
    if (s.least_cost) ctx = make_eval_context(*s.least_cost, s.config.u2_target, s.config.overload_threshold);

    Json items = Json::array();
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& a = set.alternatives[i];
        Json opened = Json::array(), split = Json::array();
        for (std::size_t k = 0; k < a.topology.line_open.size(); ++k)
            if (a.topology.line_open[k]) opened.push_back(net.branches[switchable[k]].id);
        for (std::size_t k = 0; k < a.topology.busbar_split.size(); ++k)
            if (a.topology.busbar_split[k]) split.push_back(net.substations[splittable[k]].bus);
        Json metrics = Json::object();
        if (ctx)
            for (auto fn : kAllFunctions) metrics[to_string(fn)] = evaluate(fn, net, a, *ctx).value;
        Json loadings = Json::array();
        const auto lo = line_loadings(net, a);
        for (std::size_t l = 0; l < net.branches.size(); ++l)
            loadings.push_back({{"branch", net.branches[l].id}, {"loading", lo[l]}, {"flow_mw", a.flows_mw[l]}});
        Json item{{"id", i},
                  {"round", a.round},
                  {"topology", to_json(a.topology)},
                  {"opened_branches", opened},
                  {"split_substations", split},
                  {"cost", a.cost},
                  {"slack", a.slack},
                  {"unique", a.unique},
                  {"metrics", metrics},
                  {"loadings", loadings}};
        if (s.least_cost) {
            item["cost_delta_pct"] = 100.0 * (a.cost - s.least_cost->cost) / s.least_cost->cost;
            item["hamming_to_least_cost"] = hamming_distance(a.topology, s.least_cost->topology);
        }
        items.push_back(std::move(item));
    }
    Json out{{"session", s.id}, {"round", round}, {"label", set.label}, {"epsilon", set.epsilon}, {"alternatives", items}};
    if (s.least_cost) out["f_star"] = s.least_cost->cost;
    return out;
}

bool SessionManager::wait_until_settled(const std::string& id, double timeout_s) const {
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    return e->settled.wait_for(lock, std::chrono::duration<double>(timeout_s),
                               [&] { return e->session.status != SessionStatus::solving; });
}

}  // namespace gridmga
