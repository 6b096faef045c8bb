#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gridmga/evaluation.hpp"
#include "gridmga/experiment.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/mga.hpp"
#include "gridmga/serialization.hpp"

namespace gridmga {

enum class SessionStatus : std::uint8_t { idle, solving, awaiting_ranking, error };

std::string to_string(SessionStatus s);
SessionStatus parse_session_status(std::string_view s);

struct SessionConfig {
    double epsilon = 0.05;
    SwitchingOptions switching;
    SolverSettings solver;
    /// Applied to the network at creation.
    double congestion_factor = 1.0;
    std::optional<LimitDerivation> derive_limits;
    std::vector<int> splittable_buses;
    SetTarget u2_target = SetTarget::zero;
    double overload_threshold = 0.9;
    std::size_t workers = 1;
};

Json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const Json& j);

struct SessionRound {
    AlternativeSet set;
    std::optional<RankingFeedback> ranking;       // feedback given on this round
    std::optional<HitlParams> params;             // parameters that produced this round
    std::vector<WeightVector> feedback;           // weight vectors that produced this round
};

struct Session {
    std::string id;
    std::string network_name;
    Network network;
    SessionConfig config;
    SessionStatus status = SessionStatus::idle;
    std::string last_error;
    std::vector<std::string> error_causes;
    std::optional<Alternative> least_cost;
    std::vector<SessionRound> rounds;
};

Json to_json(const Session& s);
Session session_from_json(const Json& j);

/// Fixed-size pool running queued jobs in submission order.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t threads);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> job);

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::vector<std::jthread> threads_;
};

/// Stateful sessions persisted as one document each under `data_dir`.
/// Mutations of one session are serialized; solves run on the worker pool and
/// clients poll the session status.
class SessionManager {
public:
    SessionManager(std::filesystem::path data_dir, std::filesystem::path case_dir, std::size_t solver_threads = 2);
    ~SessionManager();

    /// Bundled case names (file stems in the case directory).
    std::vector<std::string> bundled_networks() const;

    std::string create_session(const Network& net, std::string name, const SessionConfig& config);
    std::string create_session_from_case(const std::string& case_name, const SessionConfig& config);

    /// Starts an MGA round; the first round also runs the least-cost solve. Returns the round index.
    std::size_t generate_round(const std::string& id, std::size_t count, std::uint64_t seed);
    /// Starts a feedback round on the ranking of round `round`, which must be the latest.
    std::size_t submit_ranking(const std::string& id, std::size_t round, const RankingFeedback& ranking,
                               const HitlParams& params, std::uint64_t seed);
    /// Ranks round `round` by an evaluation function, keeps the top `top_k` and submits that ranking.
    std::size_t submit_simulated_ranking(const std::string& id, std::size_t round, FunctionId fn, std::size_t top_k,
                                         const HitlParams& params, std::uint64_t seed);

    Json session_summary(const std::string& id) const;
    /// Per-alternative payload for a round: bits, actions, cost, metrics, loadings.
    Json round_alternatives(const std::string& id, std::size_t round) const;
    Session snapshot(const std::string& id) const;
    std::vector<std::string> session_ids() const;

    /// Blocks until the session is not solving; false on timeout.
    bool wait_until_settled(const std::string& id, double timeout_s) const;

private:
    struct Entry {
        mutable std::mutex mutex;
        mutable std::condition_variable settled;
        Session session;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    void persist(const Session& s) const;
    void load_all();
    std::string new_id();
    std::string register_session(Session s);
    void finish(const std::shared_ptr<Entry>& e, const std::function<void(Session&)>& apply);
    void fail(const std::shared_ptr<Entry>& e, const std::string& message, std::vector<std::string> causes);

    std::filesystem::path data_dir_;
    std::filesystem::path case_dir_;
    mutable std::mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mutex id_mutex_;
    std::uint64_t id_state_;
    WorkerPool pool_;
};

}  // namespace gridmga
