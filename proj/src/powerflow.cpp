#include "gridmga/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "gridmga/errors.hpp"

namespace gridmga {

SubstationLayouts default_layouts(const Network& net) {
    SubstationLayouts out;
    for (auto s : net.splittable_substations()) {
        const auto& sub = net.substations[s];
        out.push_back({std::vector<std::uint8_t>(sub.attached_branch_ends.size(), 0),
                       std::vector<std::uint8_t>(sub.attached_injections.size(), 0)});
    }
    return out;
}

ElectricalGraph::ElectricalGraph(const Network& net, const Topology& topology, const SubstationLayouts& layouts)
    : net_(&net) {
    const auto switchable = net.switchable_branches();
    const auto splittable = net.splittable_substations();
    if (topology.line_open.size() != switchable.size() || topology.busbar_split.size() != splittable.size())
        throw DomainError("topology does not match the network's switchable sets");
    if (layouts.size() != splittable.size()) throw DomainError("one busbar layout per splittable substation expected");

    const NetworkIndex idx(net);
    const std::size_t nb = net.buses.size();
    node_count_ = nb + splittable.size();
    slack_node_ = idx.slack_bus();

    from_.resize(net.branches.size());
    to_.resize(net.branches.size());
    closed_.assign(net.branches.size(), 1);
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        from_[l] = *idx.bus(net.branches[l].from_bus);
        to_[l] = *idx.bus(net.branches[l].to_bus);
    }
    for (std::size_t k = 0; k < switchable.size(); ++k) closed_[switchable[k]] = topology.line_open[k] ? 0 : 1;

    gen_node_.resize(net.generators.size());
    for (std::size_t g = 0; g < net.generators.size(); ++g) gen_node_[g] = *idx.bus(net.generators[g].bus);
    load_node_.resize(nb);
    std::iota(load_node_.begin(), load_node_.end(), std::size_t{0});

    for (std::size_t k = 0; k < splittable.size(); ++k) {
        if (!topology.busbar_split[k]) continue;
        const auto& sub = net.substations[splittable[k]];
        const auto& lay = layouts[k];
        if (lay.end_on_b.size() != sub.attached_branch_ends.size() ||
            lay.injection_on_b.size() != sub.attached_injections.size())
            throw DomainError("busbar layout does not match substation at bus " + std::to_string(sub.bus));
        const std::size_t b_node = nb + k;
        for (std::size_t e = 0; e < sub.attached_branch_ends.size(); ++e) {
            if (!lay.end_on_b[e]) continue;
            const auto l = *idx.branch(sub.attached_branch_ends[e].branch);
            (sub.attached_branch_ends[e].end == BranchEnd::from ? from_[l] : to_[l]) = b_node;
        }
        for (std::size_t i = 0; i < sub.attached_injections.size(); ++i) {
            if (!lay.injection_on_b[i]) continue;
            const auto& inj = sub.attached_injections[i];
            if (inj.kind == InjectionKind::generator) gen_node_[*idx.generator(inj.id)] = b_node;
            else load_node_[*idx.bus(inj.id)] = b_node;
        }
    }

    // components by union-find
    std::vector<std::size_t> parent(node_count_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t l = 0; l < net.branches.size(); ++l)
        if (closed_[l]) parent[find(from_[l])] = find(to_[l]);
    component_.resize(node_count_);
    for (std::size_t v = 0; v < node_count_; ++v) component_[v] = find(v);
}

std::vector<double> ElectricalGraph::injections(std::span<const double> dispatch_mw) const {
    if (dispatch_mw.size() != net_->generators.size()) throw DomainError("dispatch size does not match generators");
    std::vector<double> inj(node_count_, 0.0);
    for (std::size_t g = 0; g < dispatch_mw.size(); ++g) inj[gen_node_[g]] += dispatch_mw[g];
    for (std::size_t i = 0; i < net_->buses.size(); ++i) inj[load_node_[i]] -= net_->buses[i].load_mw;
    return inj;
}

namespace {

std::vector<int> islanded_from(const Network& net, const ElectricalGraph& graph, const std::vector<double>& inj) {
    const auto& comp = graph.components();
    const auto slack_comp = comp[graph.slack_node()];
    std::vector<int> out;
    const std::size_t nb = net.buses.size();
    const auto splittable = net.splittable_substations();
    for (std::size_t v = 0; v < graph.node_count(); ++v) {
        if (comp[v] == slack_comp || std::abs(inj[v]) <= kInjectionTolerance) continue;
        const int bus = v < nb ? net.buses[v].id : net.substations[splittable[v - nb]].bus;
        if (std::find(out.begin(), out.end(), bus) == out.end()) out.push_back(bus);
    }
    return out;
}

}  // namespace

std::vector<int> islanded_injection_buses(const Network& net, const Topology& topology,
                                          const SubstationLayouts& layouts, std::span<const double> dispatch_mw) {
    const ElectricalGraph graph(net, topology, layouts);
    return islanded_from(net, graph, graph.injections(dispatch_mw));
}

PowerFlowResult dc_power_flow(const Network& net, const Topology& topology, const SubstationLayouts& layouts,
                              std::span<const double> dispatch_mw) {
    const ElectricalGraph graph(net, topology, layouts);
    auto inj = graph.injections(dispatch_mw);
    const auto& comp = graph.components();
    const std::size_t n = graph.node_count();

    PowerFlowResult res;
    res.islanded_buses = islanded_from(net, graph, inj);

    // Slack-bus generators absorb the imbalance of the slack component.
    const auto slack_comp = comp[graph.slack_node()];
    double imbalance = 0.0;
    for (std::size_t v = 0; v < n; ++v)
        if (comp[v] == slack_comp) imbalance += inj[v];
    res.slack_adjustment_mw = -imbalance;
    inj[graph.slack_node()] -= imbalance;
    {
        double p = 0.0, lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            if (graph.generator_node(g) != graph.slack_node()) continue;
            any = true;
            p += dispatch_mw[g];
            lo += net.generators[g].p_min;
            hi += net.generators[g].p_max;
        }
        const double tol = 1e-6;
        res.slack_within_bounds = any ? (p - imbalance >= lo - tol && p - imbalance <= hi + tol)
                                      : std::abs(imbalance) <= tol;
    }

    // One reference node per component: the slack node for its own component,
    // the lowest node elsewhere.
    std::vector<std::uint8_t> is_ref(n, 0);
    std::vector<std::uint8_t> comp_has_ref(n, 0);
    is_ref[graph.slack_node()] = 1;
    comp_has_ref[slack_comp] = 1;
    for (std::size_t v = 0; v < n; ++v)
        if (!comp_has_ref[comp[v]]) {
            comp_has_ref[comp[v]] = 1;
            is_ref[v] = 1;
        }
    std::vector<std::ptrdiff_t> reduced(n, -1);
    std::ptrdiff_t m = 0;
    for (std::size_t v = 0; v < n; ++v)
        if (!is_ref[v]) reduced[v] = m++;

    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs(m);
    for (std::size_t v = 0; v < n; ++v)
        if (reduced[v] >= 0) rhs[reduced[v]] = inj[v] / net.base_mva;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        if (!graph.closed(l)) continue;
        const double b = net.branches[l].susceptance;
        const auto f = reduced[graph.from_node(l)], t = reduced[graph.to_node(l)];
        if (f >= 0) lap(f, f) += b;
        if (t >= 0) lap(t, t) += b;
        if (f >= 0 && t >= 0) {
            lap(f, t) -= b;
            lap(t, f) -= b;
        }
    }
    Eigen::VectorXd theta_r = m > 0 ? Eigen::VectorXd(lap.ldlt().solve(rhs)) : Eigen::VectorXd();
    res.angles_rad.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        if (reduced[v] >= 0) res.angles_rad[v] = theta_r[reduced[v]];

    res.flows_mw.assign(net.branches.size(), 0.0);
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        if (!graph.closed(l)) continue;
        res.flows_mw[l] = net.base_mva * net.branches[l].susceptance *
                          (res.angles_rad[graph.from_node(l)] - res.angles_rad[graph.to_node(l)]);
    }
    return res;
}

}  // namespace gridmga
