#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace maslab {

// The six canonical communication structures. Parsing any other name fails;
// arbitrary graphs enter only through topology_from_json (kind "custom").
enum class topology_kind { chain, tree, star, circle, hierarchy, complete };

inline constexpr topology_kind all_topology_kinds[] = {
    topology_kind::chain,  topology_kind::tree,      topology_kind::star,
    topology_kind::circle, topology_kind::hierarchy, topology_kind::complete,
};

std::string to_string(topology_kind kind);
std::optional<topology_kind> parse_topology_kind(const std::string& name);

using adjacency_matrix = std::vector<std::vector<int>>;

// Directed communication graph over agent indices. adjacency[i][j] == 1 means
// agent i's output is delivered to agent j. Immutable after construction.
struct topology {
    // nullopt marks a custom graph loaded for testing; validation is then
    // structural only (square, 0/1 entries, zero diagonal).
    std::optional<topology_kind> kind;
    int node_count = 0;
    adjacency_matrix adjacency;
};

// Canonical generator for (kind, n). All six kinds emit symmetric directed
// pairs; the star center and hierarchy hub are node 0. Throws invalid_size
// when n is below the kind's minimum (2 in general, 3 for circle and star).
topology build_topology(topology_kind kind, int n);

// Agents whose output reaches i, i.e. { j : adjacency[j][i] == 1 }, ascending.
std::vector<int> in_neighbors(const topology& t, int i);
// Agents i's output reaches, i.e. { j : adjacency[i][j] == 1 }, ascending.
std::vector<int> out_neighbors(const topology& t, int i);

// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate(const topology& t);

nlohmann::json topology_to_json(const topology& t);
topology topology_from_json(const nlohmann::json& j);

}  // namespace maslab
