#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridmga {

enum class VarType { continuous, binary };

enum class SolveStatus { optimal, infeasible, time_limit, unbounded, error };

const char* to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::error;
    bool has_solution = false;
    double objective = 0.0;
    double dual_bound = 0.0;  // best proven bound on the (minimized) objective
    double gap = 0.0;         // relative gap reported by the backend
    std::vector<double> values;
};

/// Minimal MILP backend boundary. Objectives are always minimized. One
/// instance per solve; instances share no state and may live on different
/// threads.
class MilpSolver {
public:
    virtual ~MilpSolver() = default;

    virtual int add_variable(double lower, double upper, VarType type) = 0;
    virtual int add_constraint(std::span<const int> vars, std::span<const double> coefs, double lower,
                               double upper) = 0;
    virtual void set_objective(std::span<const double> coefs, double offset = 0.0) = 0;
    virtual void set_relative_gap(double gap) = 0;
    virtual void set_time_limit(double seconds) = 0;
    virtual void set_verbose(bool verbose) = 0;
    virtual SolveResult solve() = 0;
};

std::unique_ptr<MilpSolver> make_solver(std::string_view backend);
std::vector<std::string> available_backends();

/// Solver-independent description of a linear model; rows are sparse.
struct LinearModel {
    struct Row {
        std::vector<int> vars;
        std::vector<double> coefs;
        double lower = 0.0;
        double upper = 0.0;
    };

    std::vector<double> col_lower, col_upper, objective;
    std::vector<VarType> col_type;
    std::vector<Row> rows;
    double objective_offset = 0.0;

    int add_variable(double lower, double upper, VarType type = VarType::continuous);
    int add_row(std::vector<int> vars, std::vector<double> coefs, double lower, double upper);
    std::size_t num_cols() const { return col_lower.size(); }
    std::size_t num_rows() const { return rows.size(); }
    std::size_t num_binaries() const;
};

struct SolverSettings {
    std::string backend = "highs";
    double gap = 0.001;
    double time_limit_s = 600.0;
    bool verbose = false;
    /// Re-solve the continuous part with the topology fixed after each MILP.
    bool polish_dispatch = true;
    /// Islanded alternatives are cut off and re-solved at most this many times.
    std::size_t max_island_cuts = 50;
};

SolveResult solve_linear_model(const LinearModel& model, const SolverSettings& settings);

inline constexpr double kInf = 1e30;

}  // namespace gridmga
