#pragma once

#include <map>
#include <string>

namespace maslab::prompts {

// Section labels used when assembling an agent's per-round input. Fixed
// ordering keeps scripted pipelines byte-reproducible.
inline constexpr const char* task_header = "TASK:\n";
inline constexpr const char* neighbor_header = "MESSAGES FROM CONNECTED AGENTS (previous round):\n";
inline constexpr const char* own_previous_header = "YOUR PREVIOUS RESPONSE:\n";
inline constexpr const char* memory_header_label = "YOUR MEMORY:\n";

// Updater wire format: the memory-update request body carries these two
// sections; make_concat_updater parses the same labels.
inline constexpr const char* updater_memory_header = "CURRENT MEMORY:\n";
inline constexpr const char* updater_response_header = "NEW RESPONSE:\n";

// Sentinel rendered when an activation prompt is composed from an empty probe
// profile.
inline constexpr const char* unknown_roles_sentinel = "roles: unknown";
inline constexpr const char* unknown_links_sentinel = "links: unknown";

// Marker appended by preemptive hardening; its presence makes a second
// hardening pass a no-op.
inline constexpr const char* hardening_marker = "### security hardening ###";

// Replaces every {name} placeholder present in `values`. Unknown placeholders
// are left verbatim so callers can layer substitutions.
std::string render(const std::string& text, const std::map<std::string, std::string>& values);

// Reads a whole UTF-8 text file; throws io_error.
std::string load_text_file(const std::string& path);

// Default prompt assets. All are plain authored text; any of them can be
// swapped for file contents through the CLI config.
const std::string& selector_template();        // {description} {task} {n} {topologies}
const std::string& assigner_template();        // {description} {task} {n} {kind} {nodes}
const std::string& agent_system_template();    // {role} {prompt} {description}
const std::string& intro_task();
const std::string& injection_template();       // {traits} {trigger}
const std::string& role_info_template();       // {roles}
const std::string& topo_info_template();       // {links}
const std::string& updater_system_prompt();
const std::string& classifier_system_prompt();
const std::string& detector_system_prompt();
const std::string& importance_system_prompt();
const std::string& monitor_system_prompt();
const std::string& asr_judge_system_prompt();
const std::string& role_judge_system_prompt();
const std::string& coop_judge_system_prompt();
const std::string& default_warning_text();
const std::string& corpus_generator_template();  // {subdomain} {index}

// The six kind names with their one-line definitions, for {topologies}.
std::string topology_catalog();

}  // namespace maslab::prompts
