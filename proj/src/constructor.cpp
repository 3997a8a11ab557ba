#include "maslab/constructor.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "maslab/error.hpp"
#include "maslab/prompts.hpp"

namespace maslab {

namespace {

std::string to_lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

void check_request(const build_request& request) {
    if (request.description.empty()) throw error(errc::invalid_argument, "description is empty");
    if (request.task.empty()) throw error(errc::invalid_argument, "task is empty");
    if (request.agent_count < 1) throw error(errc::invalid_argument, "agent_count must be positive");
}

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::string> validate(const mas_instance& mas) {
    std::vector<std::string> report = validate(mas.topo);
    if (static_cast<int>(mas.agents.size()) != mas.topo.node_count) {
        report.push_back("agent count " + std::to_string(mas.agents.size()) +
                         " does not match node count " + std::to_string(mas.topo.node_count));
        return report;
    }
    std::vector<bool> seen(mas.agents.size(), false);
    for (const auto& agent : mas.agents) {
        if (agent.index < 0 || agent.index >= static_cast<int>(mas.agents.size())) {
            report.push_back("agent index " + std::to_string(agent.index) + " out of range");
            continue;
        }
        if (seen[static_cast<std::size_t>(agent.index)]) {
            report.push_back("duplicate agent index " + std::to_string(agent.index));
        }
        seen[static_cast<std::size_t>(agent.index)] = true;
        if (agent.system_prompt.empty()) {
            report.push_back("agent " + std::to_string(agent.index) + " has an empty system prompt");
        }
    }
    return report;
}

topology_kind select_topology(const build_request& request, model_backend& selector,
                              bool fallback_to_complete) {
    check_request(request);

    chat_request req;
    req.system_prompt = prompts::render(prompts::selector_template(),
                                        {{"description", request.description},
                                         {"task", request.task},
                                         {"n", std::to_string(request.agent_count)},
                                         {"topologies", prompts::topology_catalog()}});
    req.messages.push_back({chat_role::user, "Select the topology."});

    const std::string reply = to_lower(selector.complete(req).text);

    // First kind name appearing in the reply wins.
    std::size_t best_at = std::string::npos;
    topology_kind best = topology_kind::complete;
    for (topology_kind kind : all_topology_kinds) {
        auto at = reply.find(to_string(kind));
        if (at != std::string::npos && (best_at == std::string::npos || at < best_at)) {
            best_at = at;
            best = kind;
        }
    }
    if (best_at != std::string::npos) return best;
    if (fallback_to_complete) return topology_kind::complete;
    throw error(errc::unparseable_selection, "no topology name in reply: '" + reply + "'");
}

std::vector<agent_spec> assign_roles(const build_request& request, topology_kind kind,
                                     model_backend& assigner) {
    check_request(request);
    topology topo = build_topology(kind, request.agent_count);

    std::string nodes;
    for (int i = 0; i < topo.node_count; ++i) {
        nodes += "agent " + std::to_string(i) + " talks to:";
        for (int j : in_neighbors(topo, i)) nodes += " " + std::to_string(j);
        nodes += "\n";
    }

    chat_request req;
    req.system_prompt = prompts::render(prompts::assigner_template(),
                                        {{"description", request.description},
                                         {"task", request.task},
                                         {"n", std::to_string(request.agent_count)},
                                         {"kind", to_string(kind)},
                                         {"nodes", nodes}});
    req.messages.push_back({chat_role::user, "Assign the roles."});

    const std::string reply = assigner.complete(req).text;

    // Blocks start at "AGENT <i> |"; the prompt text runs to the next block.
    struct block {
        int index;
        std::string body;
    };
    std::vector<block> blocks;
    std::istringstream lines(reply);
    std::string line;
    while (std::getline(lines, line)) {
        std::string trimmed = trim(line);
        if (trimmed.rfind("AGENT", 0) == 0) {
            std::istringstream head(trimmed.substr(5));
            int index = -1;
            head >> index;
            if (index < 0) throw error(errc::malformed_assignment, "bad agent header: '" + line + "'");
            blocks.push_back({index, trimmed});
        } else if (!blocks.empty() && !trimmed.empty()) {
            blocks.back().body += "\n" + trimmed;
        }
    }

    if (static_cast<int>(blocks.size()) != request.agent_count) {
        throw error(errc::wrong_agent_count, "assigner returned " + std::to_string(blocks.size()) +
                                                 " roles for " + std::to_string(request.agent_count) +
                                                 " agents");
    }

    std::vector<agent_spec> specs(static_cast<std::size_t>(request.agent_count));
    std::vector<bool> seen(specs.size(), false);
    for (const auto& b : blocks) {
        if (b.index >= request.agent_count || seen[static_cast<std::size_t>(b.index)]) {
            throw error(errc::malformed_assignment,
                        "agent index " + std::to_string(b.index) + " duplicated or out of range");
        }
        seen[static_cast<std::size_t>(b.index)] = true;

        auto role_at = b.body.find("ROLE:");
        auto prompt_at = b.body.find("PROMPT:");
        if (role_at == std::string::npos || prompt_at == std::string::npos || prompt_at < role_at) {
            throw error(errc::malformed_assignment,
                        "agent " + std::to_string(b.index) + " block lacks ROLE:/PROMPT: fields");
        }
        std::string role = trim(b.body.substr(role_at + 5, prompt_at - role_at - 5));
        while (!role.empty() && role.back() == '|') role = trim(role.substr(0, role.size() - 1));
        std::string prompt = trim(b.body.substr(prompt_at + 7));
        if (role.empty() || prompt.empty()) {
            throw error(errc::malformed_assignment,
                        "agent " + std::to_string(b.index) + " has an empty role or prompt");
        }

        agent_spec& spec = specs[static_cast<std::size_t>(b.index)];
        spec.index = b.index;
        spec.role_name = role;
        spec.system_prompt = prompts::render(prompts::agent_system_template(),
                                             {{"role", role},
                                              {"prompt", prompt},
                                              {"description", request.description}});
    }
    return specs;
}

mas_instance construct(const build_request& request, model_backend& selector,
                       model_backend& assigner, bool fallback_to_complete) {
    topology_kind kind = select_topology(request, selector, fallback_to_complete);
    mas_instance mas;
    mas.topo = build_topology(kind, request.agent_count);
    mas.agents = assign_roles(request, kind, assigner);
    mas.scenario = {"", request.description};
    auto report = validate(mas);
    if (!report.empty()) {
        throw error(errc::invalid_argument, "constructed instance invalid: " + report.front());
    }
    return mas;
}

nlohmann::json instance_to_json(const mas_instance& mas) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& agent : mas.agents) {
        agents.push_back({{"index", agent.index},
                          {"role", agent.role_name},
                          {"system_prompt", agent.system_prompt}});
    }
    return nlohmann::json{
        {"scenario", {{"subdomain", mas.scenario.subdomain}, {"description", mas.scenario.description}}},
        {"topology", topology_to_json(mas.topo)},
        {"agents", agents},
    };
}

mas_instance instance_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("topology") || !j.contains("agents")) {
        throw error(errc::schema_mismatch, "instance object requires topology and agents");
    }
    mas_instance mas;
    try {
        mas.topo = topology_from_json(j.at("topology"));
        for (const auto& entry : j.at("agents")) {
            agent_spec spec;
            spec.index = entry.at("index").get<int>();
            spec.role_name = entry.at("role").get<std::string>();
            spec.system_prompt = entry.at("system_prompt").get<std::string>();
            mas.agents.push_back(std::move(spec));
        }
        if (j.contains("scenario")) {
            mas.scenario.subdomain = j.at("scenario").value("subdomain", "");
            mas.scenario.description = j.at("scenario").value("description", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::schema_mismatch, std::string("malformed instance json: ") + e.what());
    }
    auto report = validate(mas);
    if (!report.empty()) {
        throw error(errc::schema_mismatch, "invalid instance: " + report.front());
    }
    return mas;
}

}  // namespace maslab
