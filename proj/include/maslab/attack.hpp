#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maslab/engine.hpp"

namespace maslab {

// The seven application domains the adaptive trait strategy targets.
enum class domain {
    information_dissemination,
    production_and_life,
    data_management,
    education_and_teaching,
    research_and_development,
    healthcare,
    financial_services,
};

inline constexpr std::size_t domain_count = 7;

inline constexpr domain all_domains[] = {
    domain::information_dissemination, domain::production_and_life,
    domain::data_management,           domain::education_and_teaching,
    domain::research_and_development,  domain::healthcare,
    domain::financial_services,
};

std::string to_string(domain d);
std::optional<domain> parse_domain(const std::string& name);

// Built-in entries are fixed reference strings; user additions live in a
// separate extension map so the built-ins stay verifiable.
struct trait_table {
    std::array<std::string, domain_count> builtin;
    std::map<std::string, std::string> extensions;
};

trait_table default_trait_table();
std::string select_traits(domain d, const trait_table& table);

// What probing recovered about the target system.
struct mas_profile {
    std::map<int, std::string> roles;               // agent -> claimed role text
    std::map<int, std::vector<int>> topology_sketch;  // agent -> claimed neighbors
    std::vector<int> parse_gaps;                    // agents whose reports were unparseable
    std::vector<std::string> warnings;              // e.g. probe coverage shortfalls
    transcript probe_transcript;
};

std::string profile_to_text(const mas_profile& profile);

struct attack_config {
    std::string trigger = "omega-switch-47Q";
    std::string normal_task = "Continue the team's regular work on the current assignment.";
    std::string intro_task;           // empty = default asset
    std::string injection_template;   // must contain {traits}; empty = default asset
    std::string role_template;        // {roles}; empty = default asset
    std::string topo_template;        // {links}; empty = default asset
    int probe_rounds = 8;
    int inject_rounds = 8;
    int activate_rounds = 8;
    int propagation_degree = 1;              // how many agents get the injection directly
    std::vector<int> target_selection = {0};  // ordered; first `degree` entries are hit
    bool fallback_domain = true;
    bool allow_live = false;  // campaigns over live backends refuse without this
};

// Stage 1: runs the self-introduction dialogue and parses each agent's final
// self-report ("I am <role>. My neighbors are <ids>.") into the profile.
// Unparseable reports degrade to raw role text with an empty neighbor set.
mas_profile probe(session& sess, const attack_config& cfg);

// Stage 2a: first domain keyword found in the classifier reply; falls back to
// information_dissemination (or throws unparseable_domain with fallback off).
domain classify_domain(const std::string& text, model_backend& classifier, bool fallback = true);

// Multi-label variant: every domain keyword present in the reply.
std::vector<domain> classify_domains_multi(const std::string& text, model_backend& classifier);

// Stage 2b: renders the injection prompt and delivers it as the round-0 task
// of the first propagation_degree targets; everyone else sees it only through
// normal propagation. Throws malformed_template when {traits} is missing.
transcript inject(session& sess, const std::string& traits, const attack_config& cfg);

// Stage 3 prompt: trigger, normal task, role part, topo part, in that order.
std::string compose_activation_parts(const std::string& trigger, const std::string& normal_task,
                                     const std::string& role_part, const std::string& topo_part);
std::string compose_activation(const attack_config& cfg, const mas_profile& profile);

// Stage 3: runs the activation dialogue in the same session.
transcript activate(session& sess, const std::string& activation_prompt, const attack_config& cfg);

struct campaign_result {
    mas_profile profile;
    domain classified = domain::information_dissemination;
    std::string traits;
    std::string activation_prompt;
    transcript inject_transcript;
    transcript activation_transcript;
};

// Full pipeline over one persistent session: probe, classify, select traits,
// inject, compose, activate.
campaign_result run_campaign(const mas_instance& mas, const attack_config& cfg,
                             const run_config& engine_cfg, model_backend& classifier,
                             const trait_table& table = default_trait_table());

}  // namespace maslab
