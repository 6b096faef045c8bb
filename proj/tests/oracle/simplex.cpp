#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oracle.hpp"

namespace oracle {

std::size_t Lp::add_var(double lower, double upper, double cost) {
    lo.push_back(lower);
    hi.push_back(upper);
    c.push_back(cost);
    for (auto& r : rows) r.a.push_back(0.0);
    return c.size() - 1;
}

void Lp::add_row(std::vector<std::pair<std::size_t, double>> terms, char sense, double rhs) {
    LpRow r;
    r.a.assign(c.size(), 0.0);
    for (auto [j, v] : terms) r.a.at(j) += v;
    r.sense = sense;
    r.rhs = rhs;
    rows.push_back(std::move(r));
}

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-9;

class Tableau {
public:
    Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_((m + 1) * (n + 1), 0.0), basis_(m, 0) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * (n_ + 1) + j]; }
    double& rhs(std::size_t i) { return at(i, n_); }
    double& cost(std::size_t j) { return at(m_, j); }
    std::size_t& basic(std::size_t i) { return basis_[i]; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

    void pivot(std::size_t r, std::size_t c) {
        const double p = at(r, c);
        for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
            at(i, c) = 0.0;
        }
        basis_[r] = c;
    }

    // Sets the cost row to c - c_B B^-1 A for the given column costs.
    void price(const std::vector<double>& c) {
        for (std::size_t j = 0; j <= n_; ++j) cost(j) = j < n_ ? c[j] : 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) cost(j) -= cb * at(i, j);
        }
    }

    // false when unbounded
    bool optimize(const std::vector<std::uint8_t>& allowed) {
        std::size_t degenerate = 0;
        bool bland = false;
        for (std::size_t iter = 0; iter < 200000; ++iter) {
            std::size_t enter = n_;
            double best = -kCostTol;
            for (std::size_t j = 0; j < n_; ++j) {
                if (!allowed[j] || cost(j) >= -kCostTol) continue;
                if (bland) { enter = j; break; }
                if (cost(j) < best) { best = cost(j); enter = j; }
            }
            if (enter == n_) return true;
            std::size_t leave = m_;
            double ratio = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a <= kPivotTol) continue;
                const double r = rhs(i) / a;
                if (leave == m_ || r < ratio - 1e-12 || (std::abs(r - ratio) <= 1e-12 && basis_[i] < basis_[leave])) {
                    leave = i;
                    ratio = r;
                }
            }
            if (leave == m_) return false;
            if (ratio <= 1e-12) {
                if (++degenerate > 50) bland = true;
            } else {
                degenerate = 0;
            }
            pivot(leave, enter);
        }
        throw std::runtime_error("oracle simplex: iteration limit");
    }

private:
    std::size_t m_, n_;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
};

}  // namespace

LpSolution solve_lp(const Lp& lp) {
    const std::size_t n = lp.c.size();

    // x_j = offset_j + sum(sign * y) over its standard-form columns.
    struct Map {
        double offset = 0.0;
        std::vector<std::pair<std::size_t, double>> cols;
    };
    std::vector<Map> map(n);
    std::size_t ny = 0;
    std::vector<LpRow> rows;
    for (std::size_t j = 0; j < n; ++j) {
        const double l = lp.lo[j], h = lp.hi[j];
        if (std::isfinite(l)) {
            map[j].offset = l;
            map[j].cols.push_back({ny++, 1.0});
            if (std::isfinite(h)) {
                if (h < l) return {};
                LpRow r;
                r.a.assign(n, 0.0);
                r.a[j] = 1.0;
                r.sense = '<';
                r.rhs = h;
                rows.push_back(std::move(r));
            }
        } else if (std::isfinite(h)) {
            map[j].offset = h;
            map[j].cols.push_back({ny++, -1.0});
        } else {
            map[j].cols.push_back({ny++, 1.0});
            map[j].cols.push_back({ny++, -1.0});
        }
    }
    rows.insert(rows.end(), lp.rows.begin(), lp.rows.end());

    // Rows in y with nonnegative right-hand sides.
    const std::size_t m = rows.size();
    std::vector<std::vector<double>> ay(m, std::vector<double>(ny, 0.0));
    std::vector<double> b(m);
    std::vector<char> sense(m);
    for (std::size_t i = 0; i < m; ++i) {
        double rhs = rows[i].rhs;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = rows[i].a[j];
            if (a == 0.0) continue;
            rhs -= a * map[j].offset;
            for (auto [col, s] : map[j].cols) ay[i][col] += a * s;
        }
        sense[i] = rows[i].sense;
        if (rhs < 0) {
            rhs = -rhs;
            for (auto& v : ay[i]) v = -v;
            if (sense[i] == '<') sense[i] = '>';
            else if (sense[i] == '>') sense[i] = '<';
        }
        b[i] = rhs;
    }

    std::size_t n_slack = 0, n_art = 0;
    for (char s : sense) {
        if (s != '=') ++n_slack;
        if (s != '<') ++n_art;
    }
    const std::size_t total = ny + n_slack + n_art;
    Tableau tab(m, total);
    std::vector<std::uint8_t> is_art(total, 0);
    std::size_t next_slack = ny, next_art = ny + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < ny; ++j) tab.at(i, j) = ay[i][j];
        tab.rhs(i) = b[i];
        if (sense[i] == '<') {
            tab.at(i, next_slack) = 1.0;
            tab.basic(i) = next_slack++;
        } else {
            if (sense[i] == '>') tab.at(i, next_slack++) = -1.0;
            tab.at(i, next_art) = 1.0;
            is_art[next_art] = 1;
            tab.basic(i) = next_art++;
        }
    }

    std::vector<std::uint8_t> all(total, 1);
    std::vector<double> phase1(total, 0.0);
    for (std::size_t j = 0; j < total; ++j)
        if (is_art[j]) phase1[j] = 1.0;
    tab.price(phase1);
    tab.optimize(all);
    double scale = 1.0;
    for (double v : b) scale = std::max(scale, v);
    if (-tab.cost(total) > 1e-8 * scale) return {};

    for (std::size_t i = 0; i < m; ++i) {
        if (!is_art[tab.basic(i)]) continue;
        for (std::size_t j = 0; j < total; ++j) {
            if (is_art[j] || std::abs(tab.at(i, j)) <= 1e-9) continue;
            tab.pivot(i, j);
            break;
        }
    }

    std::vector<double> cy(total, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (auto [col, s] : map[j].cols) cy[col] += lp.c[j] * s;
    }
    std::vector<std::uint8_t> allowed(total, 1);
    for (std::size_t j = 0; j < total; ++j)
        if (is_art[j]) allowed[j] = 0;
    tab.price(cy);
    if (!tab.optimize(allowed)) return {LpStatus::unbounded, 0.0, {}};

    std::vector<double> y(total, 0.0);
    for (std::size_t i = 0; i < m; ++i) y[tab.basic(i)] = tab.rhs(i);
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.x.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double v = map[j].offset;
        for (auto [col, s] : map[j].cols) v += s * y[col];
        sol.x[j] = v;
    }
    for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * sol.x[j];
    return sol;
}

}  // namespace oracle
