#include "gridmga/milp_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Highs.h>

#include "gridmga/errors.hpp"

namespace gridmga {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::time_limit: return "time_limit";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::error: return "error";
    }
    return "unknown";
}

int LinearModel::add_variable(double lower, double upper, VarType type) {
    col_lower.push_back(lower);
    col_upper.push_back(upper);
    col_type.push_back(type);
    objective.push_back(0.0);
    return static_cast<int>(col_lower.size() - 1);
}

int LinearModel::add_row(std::vector<int> vars, std::vector<double> coefs, double lower, double upper) {
    rows.push_back({std::move(vars), std::move(coefs), lower, upper});
    return static_cast<int>(rows.size() - 1);
}

std::size_t LinearModel::num_binaries() const {
    return static_cast<std::size_t>(std::count(col_type.begin(), col_type.end(), VarType::binary));
}

namespace {

double to_highs_bound(double v) {
    if (v >= kInf) return kHighsInf;
    if (v <= -kInf) return -kHighsInf;
    return v;
}

class HighsBackend final : public MilpSolver {
public:
    int add_variable(double lower, double upper, VarType type) override {
        return model_.add_variable(lower, upper, type);
    }

    int add_constraint(std::span<const int> vars, std::span<const double> coefs, double lower,
                       double upper) override {
        if (vars.size() != coefs.size()) throw DomainError("constraint index/coefficient length mismatch");
        return model_.add_row({vars.begin(), vars.end()}, {coefs.begin(), coefs.end()}, lower, upper);
    }

    void set_objective(std::span<const double> coefs, double offset) override {
        if (coefs.size() > model_.num_cols()) throw DomainError("objective longer than variable count");
        std::fill(model_.objective.begin(), model_.objective.end(), 0.0);
        std::copy(coefs.begin(), coefs.end(), model_.objective.begin());
        model_.objective_offset = offset;
    }

    void set_relative_gap(double gap) override { gap_ = gap; }
    void set_time_limit(double seconds) override { time_limit_ = seconds; }
    void set_verbose(bool verbose) override { verbose_ = verbose; }

    SolveResult solve() override {
        const auto& m = model_;
        HighsLp lp;
        lp.num_col_ = static_cast<HighsInt>(m.num_cols());
        lp.num_row_ = static_cast<HighsInt>(m.num_rows());
        lp.col_cost_ = m.objective;
        lp.offset_ = m.objective_offset;
        lp.col_lower_.resize(m.num_cols());
        lp.col_upper_.resize(m.num_cols());
        for (std::size_t j = 0; j < m.num_cols(); ++j) {
            lp.col_lower_[j] = to_highs_bound(m.col_lower[j]);
            lp.col_upper_[j] = to_highs_bound(m.col_upper[j]);
        }
        lp.row_lower_.resize(m.num_rows());
        lp.row_upper_.resize(m.num_rows());
        lp.a_matrix_.format_ = MatrixFormat::kRowwise;
        lp.a_matrix_.start_.assign(1, 0);
        for (std::size_t i = 0; i < m.num_rows(); ++i) {
            const auto& r = m.rows[i];
            lp.row_lower_[i] = to_highs_bound(r.lower);
            lp.row_upper_[i] = to_highs_bound(r.upper);
            for (std::size_t k = 0; k < r.vars.size(); ++k) {
                if (r.coefs[k] == 0.0) continue;
                lp.a_matrix_.index_.push_back(static_cast<HighsInt>(r.vars[k]));
                lp.a_matrix_.value_.push_back(r.coefs[k]);
            }
            lp.a_matrix_.start_.push_back(static_cast<HighsInt>(lp.a_matrix_.index_.size()));
        }
        const bool is_mip = m.num_binaries() > 0;
        if (is_mip) {
            lp.integrality_.resize(m.num_cols());
            for (std::size_t j = 0; j < m.num_cols(); ++j)
                lp.integrality_[j] =
                    m.col_type[j] == VarType::binary ? HighsVarType::kInteger : HighsVarType::kContinuous;
        }

        Highs h;
        h.setOptionValue("output_flag", verbose_);
        h.setOptionValue("mip_rel_gap", gap_);
        h.setOptionValue("time_limit", time_limit_);
        if (h.passModel(std::move(lp)) == HighsStatus::kError) throw Error("HiGHS rejected the model");
        h.run();

        SolveResult res;
        const auto status = h.getModelStatus();
        const auto& info = h.getInfo();
        res.has_solution = info.primal_solution_status == kSolutionStatusFeasible;
        switch (status) {
            case HighsModelStatus::kOptimal: res.status = SolveStatus::optimal; break;
            case HighsModelStatus::kInfeasible:
            case HighsModelStatus::kUnboundedOrInfeasible: res.status = SolveStatus::infeasible; break;
            case HighsModelStatus::kUnbounded: res.status = SolveStatus::unbounded; break;
            case HighsModelStatus::kTimeLimit:
            case HighsModelStatus::kIterationLimit:
            case HighsModelStatus::kInterrupt: res.status = SolveStatus::time_limit; break;
            default: res.status = SolveStatus::error; break;
        }
        if (res.has_solution) {
            res.objective = info.objective_function_value;
            res.values = h.getSolution().col_value;
        }
        if (is_mip) {
            res.dual_bound = info.mip_dual_bound;
            res.gap = std::isfinite(info.mip_gap) ? info.mip_gap : 0.0;
        } else {
            res.dual_bound = res.objective;
            res.gap = 0.0;
        }
        return res;
    }

private:
    LinearModel model_;
    double gap_ = 1e-4;
    double time_limit_ = 1e9;
    bool verbose_ = false;
};

}  // namespace

std::unique_ptr<MilpSolver> make_solver(std::string_view backend) {
    if (backend == "highs") return std::make_unique<HighsBackend>();
    throw ConfigError("unknown MILP backend '" + std::string(backend) + "'");
}

std::vector<std::string> available_backends() { return {"highs"}; }

SolveResult solve_linear_model(const LinearModel& model, const SolverSettings& settings) {
    auto solver = make_solver(settings.backend);
    for (std::size_t j = 0; j < model.num_cols(); ++j)
        solver->add_variable(model.col_lower[j], model.col_upper[j], model.col_type[j]);
    for (const auto& r : model.rows) solver->add_constraint(r.vars, r.coefs, r.lower, r.upper);
    solver->set_objective(model.objective, model.objective_offset);
    solver->set_relative_gap(settings.gap);
    solver->set_time_limit(settings.time_limit_s);
    solver->set_verbose(settings.verbose);
    return solver->solve();
}

}  // namespace gridmga
