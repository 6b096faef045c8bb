#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "oracle.hpp"

namespace oracle {

using gridmga::Network;

namespace {

std::size_t bus_position(const Network& net, int id) {
    for (std::size_t i = 0; i < net.buses.size(); ++i)
        if (net.buses[i].id == id) return i;
    throw std::runtime_error("oracle: unknown bus id");
}

}  // namespace

NodeGraph line_graph(const Network& net, const std::vector<std::size_t>& open_branches) {
    NodeGraph g;
    g.nodes = net.buses.size();
    g.load_mw.assign(g.nodes, 0.0);
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        g.load_mw[i] = net.buses[i].load_mw;
        if (net.buses[i].is_slack) g.slack = i;
    }
    for (const auto& br : net.branches) {
        g.from.push_back(bus_position(net, br.from_bus));
        g.to.push_back(bus_position(net, br.to_bus));
        g.closed.push_back(1);
    }
    for (auto l : open_branches) g.closed.at(l) = 0;
    for (const auto& gen : net.generators) g.gen_node.push_back(bus_position(net, gen.bus));
    return g;
}

std::vector<std::uint8_t> reachable_from_slack(const NodeGraph& g) {
    std::vector<std::uint8_t> seen(g.nodes, 0);
    std::vector<std::size_t> stack{g.slack};
    seen[g.slack] = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (std::size_t l = 0; l < g.from.size(); ++l) {
            if (!g.closed[l]) continue;
            std::size_t w;
            if (g.from[l] == v) w = g.to[l];
            else if (g.to[l] == v) w = g.from[l];
            else continue;
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return seen;
}

OpfResult dc_opf(const Network& net, const NodeGraph& g) {
    OpfResult res;
    const auto reach = reachable_from_slack(g);
    for (std::size_t v = 0; v < g.nodes; ++v)
        if (!reach[v] && g.load_mw[v] > 0.0) return res;

    const double base = net.base_mva;
    Lp lp;
    std::vector<std::size_t> p, th;
    for (const auto& gen : net.generators)
        p.push_back(lp.add_var(gen.p_min / base, gen.p_max / base, gen.cost_per_mwh * base));
    for (std::size_t v = 0; v < g.nodes; ++v)
        th.push_back(v == g.slack ? lp.add_var(0.0, 0.0, 0.0) : lp.add_var(-kUnbounded, kUnbounded, 0.0));

    std::vector<std::vector<std::pair<std::size_t, double>>> balance(g.nodes);
    for (std::size_t k = 0; k < p.size(); ++k) balance[g.gen_node[k]].push_back({p[k], 1.0});
    for (std::size_t l = 0; l < g.from.size(); ++l) {
        if (!g.closed[l]) continue;
        const double b = net.branches[l].susceptance;
        const auto f = g.from[l], t = g.to[l];
        // flow f->t = b (th_f - th_t): leaves f, enters t
        balance[f].push_back({th[f], -b});
        balance[f].push_back({th[t], b});
        balance[t].push_back({th[f], b});
        balance[t].push_back({th[t], -b});
        const double lim = net.branches[l].limit_mw / base;
        lp.add_row({{th[f], b}, {th[t], -b}}, '<', lim);
        lp.add_row({{th[f], b}, {th[t], -b}}, '>', -lim);
    }
    for (std::size_t v = 0; v < g.nodes; ++v) lp.add_row(balance[v], '=', g.load_mw[v] / base);

    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) return res;
    res.feasible = true;
    res.cost = sol.objective;
    for (auto k : p) res.dispatch_mw.push_back(sol.x[k] * base);
    res.flows_mw.assign(g.from.size(), 0.0);
    for (std::size_t l = 0; l < g.from.size(); ++l)
        if (g.closed[l])
            res.flows_mw[l] = net.branches[l].susceptance * (sol.x[th[g.from[l]]] - sol.x[th[g.to[l]]]) * base;
    return res;
}

PfResult dc_pf(const Network& net, const NodeGraph& g, const std::vector<double>& dispatch_mw) {
    PfResult res;
    const double base = net.base_mva;
    std::vector<double> inj(g.nodes, 0.0);
    for (std::size_t v = 0; v < g.nodes; ++v) inj[v] = -g.load_mw[v];
    for (std::size_t k = 0; k < dispatch_mw.size(); ++k) inj[g.gen_node[k]] += dispatch_mw[k];

    const auto reach = reachable_from_slack(g);
    double imbalance = 0.0;
    for (std::size_t v = 0; v < g.nodes; ++v) {
        if (reach[v]) imbalance += inj[v];
        else if (std::abs(inj[v]) > 1e-6) return res;
    }
    double p_slack = 0.0, lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < net.generators.size(); ++k) {
        if (g.gen_node[k] != g.slack) continue;
        any = true;
        p_slack += dispatch_mw[k];
        lo += net.generators[k].p_min;
        hi += net.generators[k].p_max;
    }
    if (!any && std::abs(imbalance) > 1e-6) return res;
    if (any && (p_slack - imbalance < lo - 1e-6 || p_slack - imbalance > hi + 1e-6)) return res;
    inj[g.slack] -= imbalance;

    // B theta = P over the slack component without the slack node; other
    // components carry no injection, so their flows are zero.
    std::map<std::size_t, std::size_t> pos;
    for (std::size_t v = 0; v < g.nodes; ++v)
        if (reach[v] && v != g.slack) pos.emplace(v, pos.size());
    const std::size_t k = pos.size();
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (auto [v, i] : pos) a[i][k] = inj[v] / base;
    for (std::size_t l = 0; l < g.from.size(); ++l) {
        if (!g.closed[l] || !reach[g.from[l]]) continue;
        const double b = net.branches[l].susceptance;
        const auto f = g.from[l], t = g.to[l];
        if (f != g.slack) a[pos[f]][pos[f]] += b;
        if (t != g.slack) a[pos[t]][pos[t]] += b;
        if (f != g.slack && t != g.slack) {
            a[pos[f]][pos[t]] -= b;
            a[pos[t]][pos[f]] -= b;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-12) throw std::runtime_error("oracle: singular susceptance matrix");
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c || a[r][c] == 0.0) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
        }
    }
    std::vector<double> theta(g.nodes, 0.0);
    for (auto [v, i] : pos) theta[v] = a[i][k] / a[i][i];

    res.solvable = true;
    res.flows_mw.assign(g.from.size(), 0.0);
    for (std::size_t l = 0; l < g.from.size(); ++l)
        if (g.closed[l]) res.flows_mw[l] = net.branches[l].susceptance * (theta[g.from[l]] - theta[g.to[l]]) * base;
    return res;
}

bool state_operable(const Network& net, const NodeGraph& g, const std::vector<double>& dispatch_mw) {
    const auto pf = dc_pf(net, g, dispatch_mw);
    if (!pf.solvable) return false;
    for (std::size_t l = 0; l < g.from.size(); ++l)
        if (std::abs(pf.flows_mw[l]) > net.branches[l].limit_mw * (1.0 + 1e-6)) return false;
    return true;
}

std::vector<EnumeratedTopology> enumerate_topologies(const Network& net, std::size_t max_actions) {
    std::vector<std::size_t> sw;
    for (std::size_t l = 0; l < net.branches.size(); ++l)
        if (net.branches[l].switchable) sw.push_back(l);
    if (sw.size() > 20) throw std::runtime_error("oracle: too many switchable branches to enumerate");
    std::vector<EnumeratedTopology> out;
    for (std::uint32_t mask = 0; mask < (1u << sw.size()); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > max_actions) continue;
        EnumeratedTopology e;
        std::vector<std::size_t> open;
        for (std::size_t j = 0; j < sw.size(); ++j) {
            e.open.push_back((mask >> j) & 1u);
            if (e.open.back()) open.push_back(sw[j]);
        }
        e.opf = dc_opf(net, line_graph(net, open));
        out.push_back(std::move(e));
    }
    return out;
}

bool sequence_exists(std::size_t actions, const std::function<bool(std::uint32_t)>& feasible) {
    const std::uint32_t full = (1u << actions) - 1u;
    std::vector<std::uint8_t> ok(full + 1u, 0);
    ok[0] = 1;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        bool from_prev = false;
        for (std::size_t a = 0; a < actions && !from_prev; ++a)
            if ((mask >> a) & 1u) from_prev = ok[mask & ~(1u << a)] != 0;
        ok[mask] = from_prev && feasible(mask);
    }
    return ok[full] != 0;
}

}  // namespace oracle
