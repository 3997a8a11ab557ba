#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "maslab/gateway.hpp"
#include "maslab/topology.hpp"

namespace maslab {

struct build_request {
    std::string description;
    std::string task;
    int agent_count = 5;
};

struct agent_spec {
    int index = 0;
    std::string role_name;
    std::string system_prompt;
};

struct scenario_info {
    std::string subdomain;
    std::string description;
};

// A fully instantiated system: graph plus one role-specialized agent per node.
struct mas_instance {
    topology topo;
    std::vector<agent_spec> agents;  // indices 0..n-1 exactly once
    scenario_info scenario;
};

// Returns messages for every violated instance invariant; empty means valid.
std::vector<std::string> validate(const mas_instance& mas);

// Asks the selector backend to pick a structure and parses the reply by
// scanning for the first topology kind name (case-insensitive). When nothing
// matches, falls back to complete, or throws unparseable_selection with the
// fallback disabled.
topology_kind select_topology(const build_request& request, model_backend& selector,
                              bool fallback_to_complete = true);

// Asks the assigner backend for one "AGENT <i> | ROLE: ... | PROMPT: ..." block
// per agent and builds the per-node system prompts. Throws wrong_agent_count
// when the reply has the wrong number of blocks, malformed_assignment on
// unparseable or empty blocks.
std::vector<agent_spec> assign_roles(const build_request& request, topology_kind kind,
                                     model_backend& assigner);

mas_instance construct(const build_request& request, model_backend& selector,
                       model_backend& assigner, bool fallback_to_complete = true);

nlohmann::json instance_to_json(const mas_instance& mas);
mas_instance instance_from_json(const nlohmann::json& j);

}  // namespace maslab
