#pragma once

// Reference implementations used only by the tests. Nothing here calls into
// the library's solver, model builder or power flow; the network structs are
// read as plain data.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gridmga/network.hpp"

namespace oracle {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded };

struct LpRow {
    std::vector<double> a;  // dense, one entry per variable
    char sense = '=';       // '<', '>' or '='
    double rhs = 0.0;
};

/// min c.x subject to rows and lo <= x <= hi (either bound may be infinite).
struct Lp {
    std::vector<double> c, lo, hi;
    std::vector<LpRow> rows;

    std::size_t add_var(double lower, double upper, double cost);
    void add_row(std::vector<std::pair<std::size_t, double>> terms, char sense, double rhs);
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

/// Dense two-phase tableau simplex, Bland's rule after a run of degenerate pivots.
LpSolution solve_lp(const Lp& lp);

/// Electrical graph described node by node.
struct NodeGraph {
    std::size_t nodes = 0;
    std::size_t slack = 0;
    std::vector<std::size_t> from, to;  // per branch
    std::vector<std::uint8_t> closed;   // per branch
    std::vector<std::size_t> gen_node;  // per generator
    std::vector<double> load_mw;        // per node
};

/// One node per bus, branches listed in `open_branches` removed.
NodeGraph line_graph(const gridmga::Network& net, const std::vector<std::size_t>& open_branches);

/// Node reachability from the slack over closed branches.
std::vector<std::uint8_t> reachable_from_slack(const NodeGraph& g);

struct OpfResult {
    bool feasible = false;
    double cost = 0.0;
    std::vector<double> dispatch_mw;
    std::vector<double> flows_mw;
};

/// Minimum-cost dispatch in the angle formulation. A load cut off from the
/// slack counts as infeasible.
OpfResult dc_opf(const gridmga::Network& net, const NodeGraph& g);

struct PfResult {
    bool solvable = false;  // no injection-bearing island, slack generation within bounds
    std::vector<double> flows_mw;
};

/// Fixed-dispatch power flow; the slack bus generators absorb the mismatch.
PfResult dc_pf(const gridmga::Network& net, const NodeGraph& g, const std::vector<double>& dispatch_mw);

/// Solvable and every closed branch within 1 + 1e-6 of its limit.
bool state_operable(const gridmga::Network& net, const NodeGraph& g, const std::vector<double>& dispatch_mw);

struct EnumeratedTopology {
    std::vector<std::uint8_t> open;  // one bit per switchable branch, branch order
    OpfResult opf;
};

/// Every line-switching topology with at most `max_actions` opened switchable branches.
std::vector<EnumeratedTopology> enumerate_topologies(const gridmga::Network& net, std::size_t max_actions);

/// Is the full set of `actions` reachable from the empty set through states that are all feasible?
bool sequence_exists(std::size_t actions, const std::function<bool(std::uint32_t)>& feasible);

}  // namespace oracle
