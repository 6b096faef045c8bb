#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridmga/network.hpp"

namespace gridmga {

/// Busbar assignment of one splittable substation. Entries align with the
/// substation's attached_branch_ends / attached_injections; 1 = busbar B.
/// Ignored while the substation is not split.
struct BusbarLayout {
    std::vector<std::uint8_t> end_on_b;
    std::vector<std::uint8_t> injection_on_b;

    friend bool operator==(const BusbarLayout&, const BusbarLayout&) = default;
};

/// One layout per splittable substation, in Network::splittable_substations() order.
using SubstationLayouts = std::vector<BusbarLayout>;

/// Layouts with every element on busbar A.
SubstationLayouts default_layouts(const Network& net);

/// Electrical nodes of a switching state: node i < buses.size() is busbar A of
/// bus i; buses.size() + k is busbar B of the k-th splittable substation.
class ElectricalGraph {
public:
    ElectricalGraph(const Network& net, const Topology& topology, const SubstationLayouts& layouts);

    std::size_t node_count() const { return node_count_; }
    std::size_t from_node(std::size_t branch) const { return from_[branch]; }
    std::size_t to_node(std::size_t branch) const { return to_[branch]; }
    bool closed(std::size_t branch) const { return closed_[branch] != 0; }
    std::size_t slack_node() const { return slack_node_; }
    /// Node-level net injection (generation minus load, MW) for a dispatch.
    std::vector<double> injections(std::span<const double> dispatch_mw) const;
    /// Connected component label per node over closed branches.
    const std::vector<std::size_t>& components() const { return component_; }
    /// Node carrying generator `g` (position into Network::generators).
    std::size_t generator_node(std::size_t g) const { return gen_node_[g]; }

private:
    const Network* net_;
    std::size_t node_count_ = 0;
    std::size_t slack_node_ = 0;
    std::vector<std::size_t> from_, to_, gen_node_, load_node_;
    std::vector<std::uint8_t> closed_;
    std::vector<std::size_t> component_;
};

struct PowerFlowResult {
    std::vector<double> flows_mw;     // per branch, from -> to; 0 for open branches
    std::vector<double> angles_rad;   // per electrical node, slack node at 0
    std::vector<int> islanded_buses;  // buses whose node sits in a slack-free island with nonzero injection
    double slack_adjustment_mw = 0.0; // change of slack-bus generation needed to balance
    bool slack_within_bounds = true;  // adjusted slack generation respects its generator bounds
};

/// Tolerance (MW) under which a node injection counts as zero.
inline constexpr double kInjectionTolerance = 1e-6;

/// DC power flow for a fixed dispatch. The slack node's component balances
/// through the slack-bus generators; every other component is referenced at
/// its lowest node.
PowerFlowResult dc_power_flow(const Network& net, const Topology& topology, const SubstationLayouts& layouts,
                              std::span<const double> dispatch_mw);

/// Buses in slack-free islands that carry a nonzero net injection.
std::vector<int> islanded_injection_buses(const Network& net, const Topology& topology,
                                          const SubstationLayouts& layouts, std::span<const double> dispatch_mw);

}  // namespace gridmga
