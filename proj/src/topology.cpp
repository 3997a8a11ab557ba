#include "maslab/topology.hpp"

#include <algorithm>
#include <queue>

#include <nlohmann/json.hpp>

#include "maslab/error.hpp"

namespace maslab {

const char* errc_name(errc code) {
    switch (code) {
        case errc::invalid_size: return "invalid_size";
        case errc::invalid_index: return "invalid_index";
        case errc::invalid_argument: return "invalid_argument";
        case errc::missing_default_rule: return "missing_default_rule";
        case errc::network_error: return "network_error";
        case errc::rate_limited: return "rate_limited";
        case errc::malformed_remote_reply: return "malformed_remote_reply";
        case errc::unparseable_selection: return "unparseable_selection";
        case errc::wrong_agent_count: return "wrong_agent_count";
        case errc::malformed_assignment: return "malformed_assignment";
        case errc::non_monotonic_update: return "non_monotonic_update";
        case errc::malformed_template: return "malformed_template";
        case errc::unparseable_domain: return "unparseable_domain";
        case errc::empty_input: return "empty_input";
        case errc::no_scorable_responses: return "no_scorable_responses";
        case errc::missing_turn: return "missing_turn";
        case errc::io_error: return "io_error";
        case errc::schema_mismatch: return "schema_mismatch";
        case errc::invalid_table: return "invalid_table";
        case errc::safety_gate: return "safety_gate";
    }
    return "unknown";
}

std::string to_string(topology_kind kind) {
    switch (kind) {
        case topology_kind::chain: return "chain";
        case topology_kind::tree: return "tree";
        case topology_kind::star: return "star";
        case topology_kind::circle: return "circle";
        case topology_kind::hierarchy: return "hierarchy";
        case topology_kind::complete: return "complete";
    }
    return "unknown";
}

std::optional<topology_kind> parse_topology_kind(const std::string& name) {
    for (topology_kind kind : all_topology_kinds) {
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

namespace {

adjacency_matrix zero_matrix(int n) {
    return adjacency_matrix(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
}

void add_edge_pair(adjacency_matrix& a, int i, int j) {
    a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
    a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
}

int min_nodes_for(topology_kind kind) {
    // Circle needs three nodes to close a loop; a 2-node star is just a chain.
    if (kind == topology_kind::circle || kind == topology_kind::star) return 3;
    return 2;
}

}  // namespace

topology build_topology(topology_kind kind, int n) {
    if (n < min_nodes_for(kind)) {
        throw error(errc::invalid_size, "topology '" + to_string(kind) + "' requires at least " +
                                            std::to_string(min_nodes_for(kind)) + " nodes, got " +
                                            std::to_string(n));
    }

    adjacency_matrix a = zero_matrix(n);
    switch (kind) {
        case topology_kind::chain:
            for (int i = 0; i + 1 < n; ++i) add_edge_pair(a, i, i + 1);
            break;
        case topology_kind::tree:
            // Balanced binary tree rooted at node 0; children of i at 2i+1, 2i+2.
            for (int i = 0; i < n; ++i) {
                if (2 * i + 1 < n) add_edge_pair(a, i, 2 * i + 1);
                if (2 * i + 2 < n) add_edge_pair(a, i, 2 * i + 2);
            }
            break;
        case topology_kind::star:
            for (int i = 1; i < n; ++i) add_edge_pair(a, 0, i);
            break;
        case topology_kind::circle:
            for (int i = 0; i < n; ++i) add_edge_pair(a, i, (i + 1) % n);
            break;
        case topology_kind::hierarchy:
            // Balanced binary tree plus hub edges from node 0 to every node.
            for (int i = 0; i < n; ++i) {
                if (2 * i + 1 < n) add_edge_pair(a, i, 2 * i + 1);
                if (2 * i + 2 < n) add_edge_pair(a, i, 2 * i + 2);
            }
            for (int i = 1; i < n; ++i) add_edge_pair(a, 0, i);
            break;
        case topology_kind::complete:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            break;
    }

    return topology{kind, n, std::move(a)};
}

namespace {

void check_index(const topology& t, int i) {
    if (i < 0 || i >= t.node_count) {
        throw error(errc::invalid_index,
                    "agent index " + std::to_string(i) + " out of range for " +
                        std::to_string(t.node_count) + " nodes");
    }
}

}  // namespace

std::vector<int> in_neighbors(const topology& t, int i) {
    check_index(t, i);
    std::vector<int> result;
    for (int j = 0; j < t.node_count; ++j) {
        if (j != i && t.adjacency[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] == 1) {
            result.push_back(j);
        }
    }
    return result;
}

std::vector<int> out_neighbors(const topology& t, int i) {
    check_index(t, i);
    std::vector<int> result;
    for (int j = 0; j < t.node_count; ++j) {
        if (j != i && t.adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 1) {
            result.push_back(j);
        }
    }
    return result;
}

std::vector<std::string> validate(const topology& t) {
    std::vector<std::string> report;

    if (t.node_count <= 0) report.push_back("node_count must be positive");
    if (static_cast<int>(t.adjacency.size()) != t.node_count) {
        report.push_back("non-square: " + std::to_string(t.adjacency.size()) + " rows for node_count " +
                         std::to_string(t.node_count));
    }
    for (std::size_t i = 0; i < t.adjacency.size(); ++i) {
        if (static_cast<int>(t.adjacency[i].size()) != t.node_count) {
            report.push_back("non-square: row " + std::to_string(i) + " has " +
                             std::to_string(t.adjacency[i].size()) + " columns");
        }
    }
    if (!report.empty()) return report;  // shape is broken, skip entry checks

    for (int i = 0; i < t.node_count; ++i) {
        for (int j = 0; j < t.node_count; ++j) {
            int v = t.adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (v != 0 && v != 1) {
                report.push_back("entry (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") is " + std::to_string(v) + ", expected 0 or 1");
            }
        }
        if (t.adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] != 0) {
            report.push_back("self-loop at " + std::to_string(i));
        }
    }

    // Custom graphs get structural checks only.
    if (t.kind.has_value() && report.empty()) {
        topology canonical = build_topology(*t.kind, t.node_count);
        if (canonical.adjacency != t.adjacency) {
            report.push_back("adjacency does not match the canonical '" + to_string(*t.kind) +
                             "' generator for n=" + std::to_string(t.node_count));
        }
    }

    return report;
}

nlohmann::json topology_to_json(const topology& t) {
    return nlohmann::json{
        {"kind", t.kind ? to_string(*t.kind) : "custom"},
        {"n", t.node_count},
        {"adjacency", t.adjacency},
    };
}

topology topology_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("n") || !j.contains("adjacency")) {
        throw error(errc::schema_mismatch, "topology object requires kind, n, adjacency");
    }
    topology t;
    try {
        std::string kind_name = j.at("kind").get<std::string>();
        if (kind_name != "custom") {
            auto kind = parse_topology_kind(kind_name);
            if (!kind) throw error(errc::schema_mismatch, "unknown topology kind '" + kind_name + "'");
            t.kind = *kind;
        }
        t.node_count = j.at("n").get<int>();
        t.adjacency = j.at("adjacency").get<adjacency_matrix>();
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::schema_mismatch, std::string("malformed topology json: ") + e.what());
    }
    auto report = validate(t);
    if (!report.empty()) {
        throw error(errc::schema_mismatch, "invalid topology: " + report.front());
    }
    return t;
}

}  // namespace maslab
