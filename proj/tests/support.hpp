#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include "gridmga/network.hpp"
#include "gridmga/powerflow.hpp"
#include "oracle/oracle.hpp"

namespace testing {

inline std::filesystem::path fixture_path(std::string_view name) {
    return std::filesystem::path(GRIDMGA_TEST_FIXTURES) / name;
}

inline gridmga::Network fixture(std::string_view name) { return gridmga::load_case(fixture_path(name)); }

inline gridmga::Network bundled(std::string_view name) {
    return gridmga::load_case(std::filesystem::path(GRIDMGA_DATA_DIR) / name);
}

/// Branch positions opened by the line bits of a topology.
inline std::vector<std::size_t> open_branches(const gridmga::Network& net, const gridmga::Topology& t) {
    std::vector<std::size_t> out;
    std::size_t j = 0;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        if (!net.branches[l].switchable) continue;
        if (t.line_open.at(j++)) out.push_back(l);
    }
    return out;
}

inline oracle::NodeGraph graph_of(const gridmga::Network& net, const gridmga::Topology& t) {
    return oracle::line_graph(net, open_branches(net, t));
}

inline gridmga::Topology topology_from_bits(const std::vector<std::uint8_t>& open) {
    gridmga::Topology t;
    t.line_open = open;
    return t;
}

/// Oracle graph of a switching state with busbar splits: busbar B of the k-th
/// splittable substation becomes node buses.size() + k.
inline oracle::NodeGraph split_graph(const gridmga::Network& net, const gridmga::Topology& t,
                                     const gridmga::SubstationLayouts& layouts) {
    auto g = graph_of(net, t);
    const auto split = net.splittable_substations();
    g.nodes = net.buses.size() + split.size();
    g.load_mw.resize(g.nodes, 0.0);
    for (std::size_t k = 0; k < split.size(); ++k) {
        if (!t.busbar_split.at(k)) continue;
        const auto& sub = net.substations[split[k]];
        const std::size_t node_b = net.buses.size() + k;
        std::size_t bus_pos = 0;
        while (net.buses[bus_pos].id != sub.bus) ++bus_pos;
        for (std::size_t e = 0; e < sub.attached_branch_ends.size(); ++e) {
            if (!layouts[k].end_on_b.at(e)) continue;
            const auto& ref = sub.attached_branch_ends[e];
            std::size_t l = 0;
            while (net.branches[l].id != ref.branch) ++l;
            if (ref.end == gridmga::BranchEnd::from) g.from[l] = node_b;
            else g.to[l] = node_b;
        }
        for (std::size_t i = 0; i < sub.attached_injections.size(); ++i) {
            if (!layouts[k].injection_on_b.at(i)) continue;
            const auto& inj = sub.attached_injections[i];
            if (inj.kind == gridmga::InjectionKind::load) {
                g.load_mw[node_b] += g.load_mw[bus_pos];
                g.load_mw[bus_pos] = 0.0;
            } else {
                for (std::size_t gi = 0; gi < net.generators.size(); ++gi)
                    if (net.generators[gi].id == inj.id) g.gen_node[gi] = node_b;
            }
        }
    }
    return g;
}

struct SequenceInstance {
    gridmga::Network net;
    std::vector<double> dispatch_mw;
    gridmga::Topology target;
};

/// Random five-bus meshed network with seven switchable lines, a random
/// dispatch and a target of one to `max_actions` opened lines.
inline SequenceInstance random_sequence_instance(std::mt19937_64& rng, std::size_t max_actions) {
    using namespace gridmga;
    std::uniform_real_distribution<double> susc(5.0, 20.0), lim(30.0, 150.0), ld(20.0, 80.0), share(0.0, 1.0);
    SequenceInstance inst;
    auto& net = inst.net;
    net.name = "random5";
    for (int i = 1; i <= 5; ++i) net.buses.push_back({i, 138.0, i == 1, 0.0});
    net.buses[1].load_mw = ld(rng);
    net.buses[2].load_mw = ld(rng);
    net.buses[4].load_mw = ld(rng);
    const int ends[7][2] = {{1, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 5}, {4, 5}, {2, 5}};
    for (int k = 0; k < 7; ++k) net.branches.push_back({k + 1, ends[k][0], ends[k][1], susc(rng), lim(rng), true});
    const double load = net.total_load_mw();
    net.generators.push_back({1, 1, 0.0, 2.0 * load, 10.0, 0.0});
    net.generators.push_back({2, 4, 0.0, load, 20.0, 0.0});
    rebuild_substations(net);
    const double p2 = share(rng) * load;
    inst.dispatch_mw = {load - p2, p2};
    inst.target = base_topology(net);
    const std::size_t actions = 1 + rng() % max_actions;
    std::vector<std::size_t> lines{0, 1, 2, 3, 4, 5, 6};
    std::shuffle(lines.begin(), lines.end(), rng);
    for (std::size_t a = 0; a < actions; ++a) inst.target.line_open[lines[a]] = 1;
    return inst;
}

/// Oracle verdict: some order of the target's actions keeps every state operable.
inline bool oracle_sequence_feasible(const SequenceInstance& inst) {
    std::vector<std::size_t> actions;
    for (std::size_t j = 0; j < inst.target.line_open.size(); ++j)
        if (inst.target.line_open[j]) actions.push_back(j);
    return oracle::sequence_exists(actions.size(), [&](std::uint32_t mask) {
        auto state = inst.target;
        for (auto& v : state.line_open) v = 0;
        for (std::size_t a = 0; a < actions.size(); ++a)
            if ((mask >> a) & 1u) state.line_open[actions[a]] = 1;
        return oracle::state_operable(inst.net, graph_of(inst.net, state), inst.dispatch_mw);
    });
}

}  // namespace testing
