#include "gridmga/mga.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

WeightVector sample_diversity_weights(std::size_t n, std::uint64_t seed, std::uint64_t index) {
    if (n == 0) throw DomainError("weight vector needs at least one dimension");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    WeightVector w;
    w.kind = WeightKind::diversity;
    w.values.resize(n);
    for (auto& v : w.values) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return w;
}

std::vector<Alternative> solve_batch(const ReconfigModel& model, std::size_t count,
                                     const std::function<ObjectiveSpec(std::size_t)>& objective_for, double f_star,
                                     double epsilon, const SolverSettings& settings, std::size_t workers) {
    std::vector<Alternative> out(count);
    if (count == 0) return out;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = solve_alternative(model, objective_for(i), f_star, epsilon, settings);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

void flag_unique(std::vector<Alternative>& alternatives, std::span<const Topology> reference) {
    for (std::size_t i = 0; i < alternatives.size(); ++i) {
        const auto& t = alternatives[i].topology;
        bool unique = std::find(reference.begin(), reference.end(), t) == reference.end();
        for (std::size_t k = 0; unique && k < i; ++k)
            if (alternatives[k].topology == t) unique = false;
        alternatives[i].unique = unique;
    }
}

AlternativeSet generate_mga_set(const ReconfigModel& model, double f_star, double epsilon, std::size_t count,
                                std::uint64_t seed, const SolverSettings& settings, const MgaOptions& options) {
    if (count == 0) throw DomainError("alternative count must be at least 1");
    if (epsilon < 0.0) throw DomainError("epsilon must be non-negative");
    const double slack_coef = augmentation_coefficient(f_star);
    const std::size_t n = model.z_count();

    auto solved = solve_batch(
        model, count,
        [&](std::size_t i) {
            return ObjectiveSpec{sample_diversity_weights(n, seed, i).values, slack_coef};
        },
        f_star, epsilon, settings, options.workers);
    for (std::size_t i = 0; i < solved.size(); ++i) {
        solved[i].weight_seed = seed;
        solved[i].weight_index = i;
        solved[i].round = "mga";
    }

    AlternativeSet set;
    set.f_star = f_star;
    set.epsilon = epsilon;
    set.seed = seed;
    set.label = "mga";
    if (options.least_cost) {
        set.alternatives.push_back(*options.least_cost);
        set.alternatives.back().slack = f_star * (1.0 + epsilon) - set.alternatives.back().cost;
    }
    for (auto& a : solved) set.alternatives.push_back(std::move(a));
    flag_unique(set.alternatives);
    spdlog::info("mga: {} alternatives (seed {}), {} unique", set.size(), seed,
                 std::count_if(set.alternatives.begin(), set.alternatives.end(),
                               [](const Alternative& a) { return a.unique; }));
    return set;
}

}  // namespace gridmga
