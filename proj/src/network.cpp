#include "gridmga/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridmga/errors.hpp"
#include "gridmga/powerflow.hpp"

namespace gridmga {

double Network::total_load_mw() const {
    return std::accumulate(buses.begin(), buses.end(), 0.0,
                           [](double acc, const Bus& b) { return acc + b.load_mw; });
}

std::vector<std::size_t> Network::switchable_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < branches.size(); ++i)
        if (branches[i].switchable) out.push_back(i);
    return out;
}

std::vector<std::size_t> Network::splittable_substations() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < substations.size(); ++i)
        if (substations[i].splittable) out.push_back(i);
    return out;
}

NetworkIndex::NetworkIndex(const Network& net) {
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        bus_.emplace(net.buses[i].id, i);
        if (net.buses[i].is_slack) slack_ = i;
    }
    for (std::size_t i = 0; i < net.branches.size(); ++i) branch_.emplace(net.branches[i].id, i);
    for (std::size_t i = 0; i < net.generators.size(); ++i) gen_.emplace(net.generators[i].id, i);
}

namespace {
std::optional<std::size_t> find_in(const std::unordered_map<int, std::size_t>& m, int id) {
    if (auto it = m.find(id); it != m.end()) return it->second;
    return std::nullopt;
}
}  // namespace

std::optional<std::size_t> NetworkIndex::bus(int id) const { return find_in(bus_, id); }
std::optional<std::size_t> NetworkIndex::branch(int id) const { return find_in(branch_, id); }
std::optional<std::size_t> NetworkIndex::generator(int id) const { return find_in(gen_, id); }

// ---------------------------------------------------------------------------
// Topology

std::vector<std::uint8_t> Topology::flat() const {
    std::vector<std::uint8_t> z(line_open);
    z.insert(z.end(), busbar_split.begin(), busbar_split.end());
    return z;
}

std::size_t Topology::action_count() const {
    return static_cast<std::size_t>(std::count(line_open.begin(), line_open.end(), 1) +
                                    std::count(busbar_split.begin(), busbar_split.end(), 1));
}

Topology Topology::from_flat(std::span<const std::uint8_t> z, std::size_t line_dims) {
    if (line_dims > z.size()) throw DomainError("line dimension exceeds topology size");
    Topology t;
    t.line_open.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(line_dims));
    t.busbar_split.assign(z.begin() + static_cast<std::ptrdiff_t>(line_dims), z.end());
    return t;
}

Topology base_topology(const Network& net) {
    Topology t;
    t.line_open.assign(net.switchable_branches().size(), 0);
    t.busbar_split.assign(net.splittable_substations().size(), 0);
    return t;
}

std::size_t hamming_distance(const Topology& a, const Topology& b) {
    if (a.line_open.size() != b.line_open.size() || a.busbar_split.size() != b.busbar_split.size())
        throw DomainError("topology dimension mismatch");
    std::size_t d = 0;
    for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] != b[j]) ? 1 : 0;
    return d;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_network(const Network& net) {
    ValidationReport report;
    auto add = [&](std::string code, std::string msg) { report.push_back({std::move(code), std::move(msg)}); };

    std::set<int> bus_ids, branch_ids, gen_ids;
    std::size_t slack_count = 0;
    for (const auto& b : net.buses) {
        if (!bus_ids.insert(b.id).second) add("duplicate-id", "duplicate bus id " + std::to_string(b.id));
        if (b.is_slack) ++slack_count;
        if (!(b.load_mw >= 0.0)) add("negative-load", "bus " + std::to_string(b.id) + " has negative load");
    }
    if (slack_count == 0) add("missing-slack", "no slack bus");
    if (slack_count > 1) add("multiple-slack", "multiple slack buses");

    for (const auto& br : net.branches) {
        const std::string name = "branch " + std::to_string(br.id);
        if (!branch_ids.insert(br.id).second) add("duplicate-id", "duplicate " + name);
        if (!bus_ids.contains(br.from_bus) || !bus_ids.contains(br.to_bus))
            add("dangling-reference", name + " references a missing bus");
        if (br.from_bus == br.to_bus) add("self-loop", name + " connects a bus to itself");
        if (!(br.susceptance > 0.0)) add("nonpositive-susceptance", name + " has nonpositive susceptance");
        if (!(br.limit_mw > 0.0)) add("nonpositive-limit", name + " has nonpositive limit");
    }
    for (const auto& g : net.generators) {
        const std::string name = "generator " + std::to_string(g.id);
        if (!gen_ids.insert(g.id).second) add("duplicate-id", "duplicate " + name);
        if (!bus_ids.contains(g.bus)) add("dangling-reference", name + " references a missing bus");
        if (!(g.p_min >= 0.0 && g.p_min <= g.p_max)) add("generator-bounds", name + " violates 0 <= p_min <= p_max");
        if (!std::isfinite(g.cost_per_mwh)) add("generator-cost", name + " has a non-finite cost");
    }
    for (const auto& s : net.substations) {
        const std::string name = "substation at bus " + std::to_string(s.bus);
        if (!bus_ids.contains(s.bus)) add("dangling-reference", name + " references a missing bus");
        for (const auto& e : s.attached_branch_ends) {
            const auto it = std::find_if(net.branches.begin(), net.branches.end(),
                                         [&](const Branch& b) { return b.id == e.branch; });
            const bool ok = it != net.branches.end() &&
                            (e.end == BranchEnd::from ? it->from_bus : it->to_bus) == s.bus;
            if (!ok) add("dangling-reference", name + " lists branch " + std::to_string(e.branch) + " which does not end there");
        }
        for (const auto& inj : s.attached_injections) {
            const bool ok = inj.kind == InjectionKind::load
                                ? inj.id == s.bus
                                : std::any_of(net.generators.begin(), net.generators.end(),
                                              [&](const Generator& g) { return g.id == inj.id && g.bus == s.bus; });
            if (!ok) add("dangling-reference", name + " lists an injection located elsewhere");
        }
        if (s.splittable && s.attached_branch_ends.size() < 2)
            add("split-degree", name + " is splittable but has fewer than two line ends");
    }

    // Connectivity with all switches closed.
    if (!net.buses.empty() && report.end() == std::find_if(report.begin(), report.end(), [](const Violation& v) {
            return v.code == "dangling-reference";
        })) {
        NetworkIndex idx(net);
        std::vector<std::vector<std::size_t>> adj(net.buses.size());
        for (const auto& br : net.branches) {
            const auto f = *idx.bus(br.from_bus), t = *idx.bus(br.to_bus);
            adj[f].push_back(t);
            adj[t].push_back(f);
        }
        std::vector<std::uint8_t> seen(net.buses.size(), 0);
        std::queue<std::size_t> q;
        q.push(idx.slack_bus());
        seen[idx.slack_bus()] = 1;
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (auto v : adj[u])
                if (!seen[v]) {
                    seen[v] = 1;
                    q.push(v);
                }
        }
        for (std::size_t i = 0; i < net.buses.size(); ++i)
            if (!seen[i]) add("disconnected", "bus " + std::to_string(net.buses[i].id) + " is not connected to the network");
    }
    return report;
}

void require_valid(const Network& net) {
    const auto report = validate_network(net);
    if (report.empty()) return;
    std::vector<std::string> issues;
    for (const auto& v : report) issues.push_back(v.message);
    throw ValidationError(std::move(issues));
}

// ---------------------------------------------------------------------------
// Substations

void rebuild_substations(Network& net) {
    std::set<int> splittable;
    for (const auto& s : net.substations)
        if (s.splittable) splittable.insert(s.bus);

    std::vector<Substation> subs;
    subs.reserve(net.buses.size());
    std::unordered_map<int, std::size_t> at;
    for (const auto& b : net.buses) {
        at.emplace(b.id, subs.size());
        Substation s;
        s.bus = b.id;
        s.splittable = splittable.contains(b.id);
        subs.push_back(std::move(s));
    }
    for (const auto& br : net.branches) {
        if (auto it = at.find(br.from_bus); it != at.end())
            subs[it->second].attached_branch_ends.push_back({br.id, BranchEnd::from});
        if (auto it = at.find(br.to_bus); it != at.end())
            subs[it->second].attached_branch_ends.push_back({br.id, BranchEnd::to});
    }
    for (const auto& g : net.generators)
        if (auto it = at.find(g.bus); it != at.end())
            subs[it->second].attached_injections.push_back({InjectionKind::generator, g.id});
    for (const auto& b : net.buses)
        if (b.load_mw != 0.0) subs[at[b.id]].attached_injections.push_back({InjectionKind::load, b.id});
    net.substations = std::move(subs);
}

void mark_splittable(Network& net, std::span<const int> bus_ids) {
    for (int id : bus_ids) {
        auto it = std::find_if(net.substations.begin(), net.substations.end(),
                               [&](const Substation& s) { return s.bus == id; });
        if (it == net.substations.end()) throw DomainError("no substation at bus " + std::to_string(id));
        if (it->attached_branch_ends.size() < 2)
            throw DomainError("substation at bus " + std::to_string(id) + " has fewer than two line ends");
        it->splittable = true;
    }
}

void mark_splittable_by_degree(Network& net, std::size_t min_branch_ends) {
    for (auto& s : net.substations)
        s.splittable = s.attached_branch_ends.size() >= std::max<std::size_t>(min_branch_ends, 2);
}

// ---------------------------------------------------------------------------
// Capacity transforms

Network scale_line_capacities(const Network& net, double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) throw DomainError("capacity factor must lie in (0, 1]");
    Network out = net;
    for (auto& br : out.branches) br.limit_mw *= factor;
    return out;
}

Network derive_limits_from_setpoint_flows(const Network& net, double headroom, double floor_mw) {
    if (!(headroom > 0.0) || !(floor_mw > 0.0)) throw DomainError("headroom and floor must be positive");
    std::vector<double> dispatch;
    dispatch.reserve(net.generators.size());
    for (const auto& g : net.generators) dispatch.push_back(g.p_setpoint);
    const Topology base = base_topology(net);
    const auto pf = dc_power_flow(net, base, default_layouts(net), dispatch);
    Network out = net;
    for (std::size_t l = 0; l < out.branches.size(); ++l)
        out.branches[l].limit_mw = std::max(headroom * std::abs(pf.flows_mw[l]), floor_mw);
    return out;
}

// ---------------------------------------------------------------------------
// MATPOWER parsing

namespace {

struct Table {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  // source line of each row
    std::size_t start_line = 0;
};

std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\'') in_quote = !in_quote;
        if (line[i] == '%' && !in_quote) return line.substr(0, i);
    }
    return line;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& tok, std::size_t line) {
    if (tok == "Inf" || tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-Inf" || tok == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError(line, "invalid number '" + tok + "'");
    return v;
}

/// Splits matrix content into rows separated by ';' or newlines; tokens by
/// whitespace or commas.
void append_matrix_text(Table& table, const std::string& text, std::size_t line, std::vector<double>& pending) {
    std::string token;
    auto flush_token = [&] {
        if (!token.empty()) {
            pending.push_back(parse_number(token, line));
            token.clear();
        }
    };
    for (char c : text) {
        if (c == ';') {
            flush_token();
            if (!pending.empty()) {
                table.rows.push_back(std::move(pending));
                table.lines.push_back(line);
                pending.clear();
            }
        } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
            flush_token();
        } else {
            token.push_back(c);
        }
    }
    flush_token();
}

void require_columns(const Table& t, std::size_t n, const char* name) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r].size() < n)
            throw ParseError(t.lines[r], std::string(name) + " row has " + std::to_string(t.rows[r].size()) +
                                             " columns, expected at least " + std::to_string(n));
}

}  // namespace

Network parse_matpower_case(std::string_view text, std::string name) {
    std::map<std::string, Table> tables;
    std::optional<double> base_mva;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    Table* open_table = nullptr;
    std::vector<double> pending;
    bool in_cell = false;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_comment(raw);
        if (in_cell) {
            if (line.find('}') != std::string::npos) in_cell = false;
            continue;
        }
        if (open_table) {
            const auto close = line.find(']');
            append_matrix_text(*open_table, line.substr(0, close), line_no, pending);
            if (close != std::string::npos) {
                if (!pending.empty()) {
                    open_table->rows.push_back(std::move(pending));
                    open_table->lines.push_back(line_no);
                    pending.clear();
                }
                open_table = nullptr;
            } else if (!pending.empty()) {
                // newline terminates a row as well
                open_table->rows.push_back(std::move(pending));
                open_table->lines.push_back(line_no);
                pending.clear();
            }
            continue;
        }
        const std::string t = trim(line);
        if (t.empty() || t.starts_with("function")) continue;
        if (!t.starts_with("mpc.")) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected assignment");
        const std::string key = trim(std::string_view(t).substr(4, eq - 4));
        std::string rhs = trim(std::string_view(t).substr(eq + 1));
        if (rhs.starts_with("[")) {
            auto& table = tables[key];
            if (!table.rows.empty()) throw ParseError(line_no, "table '" + key + "' defined twice");
            table.start_line = line_no;
            rhs = rhs.substr(1);
            const auto close = rhs.find(']');
            append_matrix_text(table, rhs.substr(0, close), line_no, pending);
            if (!pending.empty()) {
                table.rows.push_back(std::move(pending));
                table.lines.push_back(line_no);
                pending.clear();
            }
            if (close == std::string::npos) open_table = &table;
        } else if (rhs.starts_with("{")) {
            in_cell = rhs.find('}') == std::string::npos;
        } else if (key == "baseMVA") {
            if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
            base_mva = parse_number(trim(rhs), line_no);
        }
    }
    if (open_table) throw ParseError(line_no, "unterminated table starting at line " + std::to_string(open_table->start_line));

    for (const char* required : {"bus", "gen", "branch", "gencost"})
        if (!tables.contains(required)) throw ParseError(0, std::string("missing table mpc.") + required);

    const auto& bus_t = tables["bus"];
    const auto& gen_t = tables["gen"];
    const auto& br_t = tables["branch"];
    const auto& cost_t = tables["gencost"];
    require_columns(bus_t, 10, "bus");
    require_columns(gen_t, 10, "gen");
    require_columns(br_t, 11, "branch");
    require_columns(cost_t, 4, "gencost");
    if (cost_t.rows.size() < gen_t.rows.size())
        throw ParseError(cost_t.start_line, "gencost has fewer rows than gen");

    Network net;
    net.name = std::move(name);
    net.base_mva = base_mva.value_or(100.0);

    std::size_t slack_count = 0;
    for (std::size_t r = 0; r < bus_t.rows.size(); ++r) {
        const auto& row = bus_t.rows[r];
        Bus b;
        b.id = static_cast<int>(row[0]);
        b.is_slack = static_cast<int>(row[1]) == 3;
        b.load_mw = row[2];
        b.base_kv = row[9];
        slack_count += b.is_slack ? 1 : 0;
        net.buses.push_back(b);
    }
    if (slack_count == 0) throw ValidationError({"no slack bus"});
    if (slack_count > 1) throw ValidationError({"multiple slack buses"});

    for (std::size_t r = 0; r < gen_t.rows.size(); ++r) {
        const auto& row = gen_t.rows[r];
        const auto& cost = cost_t.rows[r];
        if (static_cast<int>(row[7]) <= 0) continue;  // out of service
        Generator g;
        g.id = static_cast<int>(r) + 1;
        g.bus = static_cast<int>(row[0]);
        g.p_setpoint = row[1];
        g.p_max = row[8];
        g.p_min = row[9];
        const int model = static_cast<int>(cost[0]);
        if (model != 2) throw ParseError(cost_t.lines[r], "only polynomial gencost (model 2) is supported");
        const auto n = static_cast<std::size_t>(cost[3]);
        if (cost.size() < 4 + n) throw ParseError(cost_t.lines[r], "gencost row shorter than its coefficient count");
        g.cost_per_mwh = n >= 2 ? cost[4 + n - 2] : 0.0;
        net.generators.push_back(g);
    }

    for (std::size_t r = 0; r < br_t.rows.size(); ++r) {
        const auto& row = br_t.rows[r];
        if (static_cast<int>(row[10]) <= 0) continue;
        Branch br;
        br.id = static_cast<int>(r) + 1;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        const double x = row[3];
        if (x == 0.0) throw ParseError(br_t.lines[r], "branch " + std::to_string(br.id) + " has zero reactance");
        br.susceptance = 1.0 / x;
        br.limit_mw = row[5];
        net.branches.push_back(br);
    }
    // Unrated branches get a limit that can never bind.
    const double sentinel = 10.0 * std::max(net.total_load_mw(), 1.0);
    for (auto& br : net.branches)
        if (br.limit_mw <= 0.0) br.limit_mw = sentinel;

    rebuild_substations(net);
    return net;
}

// ---------------------------------------------------------------------------
// Native format

namespace {
using nlohmann::json;
constexpr const char* kNetworkFormat = "gridmga-network";

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(0, where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(0, where + ": field '" + key + "': " + e.what());
    }
}
}  // namespace

std::string to_network_document(const Network& net) {
    json doc;
    doc["format"] = kNetworkFormat;
    doc["version"] = 1;
    doc["name"] = net.name;
    doc["base_mva"] = net.base_mva;
    auto& buses = doc["buses"] = json::array();
    for (const auto& b : net.buses)
        buses.push_back({{"id", b.id}, {"base_kv", b.base_kv}, {"slack", b.is_slack}, {"load_mw", b.load_mw}});
    auto& branches = doc["branches"] = json::array();
    for (const auto& br : net.branches)
        branches.push_back({{"id", br.id},
                            {"from", br.from_bus},
                            {"to", br.to_bus},
                            {"susceptance", br.susceptance},
                            {"limit_mw", br.limit_mw},
                            {"switchable", br.switchable}});
    auto& gens = doc["generators"] = json::array();
    for (const auto& g : net.generators)
        gens.push_back({{"id", g.id},
                        {"bus", g.bus},
                        {"p_min", g.p_min},
                        {"p_max", g.p_max},
                        {"cost_per_mwh", g.cost_per_mwh},
                        {"p_setpoint", g.p_setpoint}});
    auto& split = doc["splittable_substations"] = json::array();
    for (const auto& s : net.substations)
        if (s.splittable) split.push_back(s.bus);
    return doc.dump(2);
}

Network parse_network_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line number
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw ParseError(line, e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kNetworkFormat)
        throw ParseError(0, std::string("not a ") + kNetworkFormat + " document");

    Network net;
    net.name = doc.value("name", "");
    net.base_mva = doc.value("base_mva", 100.0);
    for (const auto& b : get_field<json>(doc, "buses", "network")) {
        Bus bus;
        bus.id = get_field<int>(b, "id", "bus");
        bus.base_kv = b.value("base_kv", 0.0);
        bus.is_slack = b.value("slack", false);
        bus.load_mw = b.value("load_mw", 0.0);
        net.buses.push_back(bus);
    }
    for (const auto& b : get_field<json>(doc, "branches", "network")) {
        Branch br;
        br.id = get_field<int>(b, "id", "branch");
        br.from_bus = get_field<int>(b, "from", "branch");
        br.to_bus = get_field<int>(b, "to", "branch");
        br.susceptance = get_field<double>(b, "susceptance", "branch");
        br.limit_mw = get_field<double>(b, "limit_mw", "branch");
        br.switchable = b.value("switchable", true);
        net.branches.push_back(br);
    }
    for (const auto& g : get_field<json>(doc, "generators", "network")) {
        Generator gen;
        gen.id = get_field<int>(g, "id", "generator");
        gen.bus = get_field<int>(g, "bus", "generator");
        gen.p_min = g.value("p_min", 0.0);
        gen.p_max = get_field<double>(g, "p_max", "generator");
        gen.cost_per_mwh = get_field<double>(g, "cost_per_mwh", "generator");
        gen.p_setpoint = g.value("p_setpoint", 0.0);
        net.generators.push_back(gen);
    }
    const auto slack_count = std::count_if(net.buses.begin(), net.buses.end(), [](const Bus& b) { return b.is_slack; });
    if (slack_count == 0) throw ValidationError({"no slack bus"});
    if (slack_count > 1) throw ValidationError({"multiple slack buses"});

    rebuild_substations(net);
    if (doc.contains("splittable_substations")) {
        const auto ids = doc["splittable_substations"].get<std::vector<int>>();
        mark_splittable(net, ids);
    }
    return net;
}

Network load_case(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open case file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{'))
        return parse_network_document(text);
    return parse_matpower_case(text, path.stem().string());
}

}  // namespace gridmga
