#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridmga {

struct Bus {
    int id = 0;
    double base_kv = 0.0;
    bool is_slack = false;
    double load_mw = 0.0;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double susceptance = 0.0;  // per unit, 1/x
    double limit_mw = 0.0;
    bool switchable = true;
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double cost_per_mwh = 0.0;
    double p_setpoint = 0.0;  // Pg column of the case file, used only for limit derivation
};

enum class BranchEnd : std::uint8_t { from, to };

struct BranchEndRef {
    int branch = 0;
    BranchEnd end = BranchEnd::from;
    friend bool operator==(const BranchEndRef&, const BranchEndRef&) = default;
};

enum class InjectionKind : std::uint8_t { generator, load };

/// A generator (id = generator id) or the load of a bus (id = bus id).
struct InjectionRef {
    InjectionKind kind = InjectionKind::generator;
    int id = 0;
    friend bool operator==(const InjectionRef&, const InjectionRef&) = default;
};

struct Substation {
    int bus = 0;
    bool splittable = false;
    std::vector<BranchEndRef> attached_branch_ends;
    std::vector<InjectionRef> attached_injections;
};

struct Network {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Substation> substations;

    double total_load_mw() const;
    /// Positions (into `branches`) of switchable branches, in branch order.
    std::vector<std::size_t> switchable_branches() const;
    /// Positions (into `substations`) of splittable substations, in order.
    std::vector<std::size_t> splittable_substations() const;
};

/// Constant-time id -> position lookups for a network. Does not own the network.
class NetworkIndex {
public:
    explicit NetworkIndex(const Network& net);

    std::optional<std::size_t> bus(int id) const;
    std::optional<std::size_t> branch(int id) const;
    std::optional<std::size_t> generator(int id) const;
    std::size_t slack_bus() const { return slack_; }

private:
    std::unordered_map<int, std::size_t> bus_, branch_, gen_;
    std::size_t slack_ = 0;
};

/// Switching decision vector. The flat z-index lists line-open bits first
/// (one per switchable branch, branch order), then busbar-split bits (one per
/// splittable substation, substation order).
struct Topology {
    std::vector<std::uint8_t> line_open;
    std::vector<std::uint8_t> busbar_split;

    std::size_t size() const { return line_open.size() + busbar_split.size(); }
    std::uint8_t operator[](std::size_t j) const {
        return j < line_open.size() ? line_open[j] : busbar_split[j - line_open.size()];
    }
    void set(std::size_t j, std::uint8_t v) {
        if (j < line_open.size()) line_open[j] = v;
        else busbar_split[j - line_open.size()] = v;
    }
    std::vector<std::uint8_t> flat() const;
    std::size_t action_count() const;
    static Topology from_flat(std::span<const std::uint8_t> z, std::size_t line_dims);

    friend bool operator==(const Topology&, const Topology&) = default;
};

/// All switches closed, no busbar split.
Topology base_topology(const Network& net);

/// Number of differing z-entries. Throws DomainError on a dimension mismatch.
std::size_t hamming_distance(const Topology& a, const Topology& b);

struct Violation {
    std::string code;
    std::string message;
};
using ValidationReport = std::vector<Violation>;

ValidationReport validate_network(const Network& net);
/// Throws ValidationError listing every violation.
void require_valid(const Network& net);

/// Rebuilds the substation table (one per bus) from branches, generators and
/// loads, keeping the splittable flag of substations that already existed.
void rebuild_substations(Network& net);
void mark_splittable(Network& net, std::span<const int> bus_ids);
/// Marks every substation with at least `min_branch_ends` attached line ends.
void mark_splittable_by_degree(Network& net, std::size_t min_branch_ends);

/// Every limit_mw multiplied by `factor`; requires 0 < factor <= 1.
Network scale_line_capacities(const Network& net, double factor);

/// Replaces every branch limit by max(headroom * |flow|, floor_mw), where flow
/// is the DC power flow at the generators' setpoints with the slack bus
/// balancing. Used to rate cases that ship without branch ratings.
Network derive_limits_from_setpoint_flows(const Network& net, double headroom, double floor_mw);

Network parse_matpower_case(std::string_view text, std::string name = {});
Network parse_network_document(std::string_view text);
std::string to_network_document(const Network& net);
/// Loads a `.m` MATPOWER case or a native `.json` network document.
Network load_case(const std::filesystem::path& path);

}  // namespace gridmga
