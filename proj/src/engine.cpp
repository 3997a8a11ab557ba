#include "maslab/engine.hpp"

#include <algorithm>
#include <future>
#include <sstream>

#include <nlohmann/json.hpp>

#include "maslab/digest.hpp"
#include "maslab/prompts.hpp"

namespace maslab {

std::string fnv1a64_hex(std::string_view text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t hash = fnv1a64(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

namespace {

void check_agent_index(const mas_instance& mas, int agent) {
    if (agent < 0 || agent >= mas.topo.node_count) {
        throw error(errc::invalid_index, "agent index " + std::to_string(agent) +
                                             " out of range for " +
                                             std::to_string(mas.topo.node_count) + " agents");
    }
}

const agent_response* find_response(const round_record& record, int agent) {
    for (const auto& response : record.responses) {
        if (response.agent_index == agent) return &response;
    }
    return nullptr;
}

// Splits a reply into the tagged sections. Unknown structure leaves all
// fields empty; raw always keeps the full text.
void parse_sections(const std::string& reply, agent_response& out) {
    static const std::pair<const char*, std::string agent_response::*> tags[] = {
        {"EXPRESSED:", &agent_response::expressed},
        {"ACTION:", &agent_response::action},
        {"RESULT:", &agent_response::result},
        {"MEMORY:", &agent_response::memory_note},
    };

    std::istringstream lines(reply);
    std::string line;
    std::string agent_response::* current = nullptr;
    while (std::getline(lines, line)) {
        std::string trimmed = line;
        auto begin = trimmed.find_first_not_of(" \t");
        if (begin != std::string::npos) trimmed = trimmed.substr(begin);
        if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();

        bool matched = false;
        for (const auto& [tag, field] : tags) {
            if (trimmed.rfind(tag, 0) == 0) {
                current = field;
                std::string content = trimmed.substr(std::string(tag).size());
                auto content_begin = content.find_first_not_of(" \t");
                out.*field = content_begin == std::string::npos ? "" : content.substr(content_begin);
                matched = true;
                break;
            }
        }
        if (!matched && current != nullptr && !trimmed.empty()) {
            if (!(out.*current).empty()) (out.*current) += "\n";
            (out.*current) += trimmed;
        }
    }
}

std::string round0_prompt(const std::string& task) {
    return std::string(prompts::task_header) + task;
}

}  // namespace

agent_response activate_start(const mas_instance& mas, const std::string& task,
                              const run_config& cfg) {
    check_agent_index(mas, cfg.start);
    if (!cfg.generation) throw error(errc::invalid_argument, "run config has no generation backend");
    return generate_response(mas, cfg.start, 0, round0_prompt(task), *cfg.generation);
}

std::optional<std::string> construct_input(const mas_instance& mas, int agent, int round,
                                           const transcript& so_far, const agent_memory& memory,
                                           std::size_t char_budget) {
    check_agent_index(mas, agent);
    if (round < 1 || round > static_cast<int>(so_far.rounds.size())) {
        throw error(errc::invalid_argument,
                    "round " + std::to_string(round) + " has no finalized predecessor");
    }
    const round_record& previous = so_far.rounds[static_cast<std::size_t>(round - 1)];

    std::vector<std::string> neighbor_blocks;
    for (int j : in_neighbors(mas.topo, agent)) {
        if (const agent_response* response = find_response(previous, j)) {
            neighbor_blocks.push_back("[agent " + std::to_string(j) + " | " +
                                      mas.agents[static_cast<std::size_t>(j)].role_name + "]\n" +
                                      response->raw);
        }
    }
    if (neighbor_blocks.empty()) return std::nullopt;  // sleep: no inputs

    std::string tail;
    if (const agent_response* own = find_response(previous, agent)) {
        tail += "\n\n";
        tail += prompts::own_previous_header;
        tail += own->raw;
    }
    if (!memory.summary.empty()) {
        tail += "\n\n";
        tail += prompts::memory_header_label;
        tail += memory.summary;
    }

    // Drop neighbor blocks lowest-index-first when over the character budget.
    std::size_t drop = 0;
    std::string prompt;
    do {
        prompt = round0_prompt(so_far.task);
        prompt += "\n\n";
        prompt += prompts::neighbor_header;
        for (std::size_t b = drop; b < neighbor_blocks.size(); ++b) {
            prompt += neighbor_blocks[b];
            prompt += "\n";
        }
        prompt += tail;
        ++drop;
    } while (prompt.size() > char_budget && drop < neighbor_blocks.size());
    if (prompt.size() > char_budget) prompt.resize(char_budget);

    return prompt;
}

agent_response generate_response(const mas_instance& mas, int agent, int round,
                                 const std::string& prompt, model_backend& backend) {
    check_agent_index(mas, agent);
    chat_request request;
    request.system_prompt = mas.agents[static_cast<std::size_t>(agent)].system_prompt;
    request.messages.push_back({chat_role::user, prompt});

    agent_response response;
    response.agent_index = agent;
    response.round = round;
    response.raw = backend.complete(request).text;
    parse_sections(response.raw, response);
    return response;
}

agent_memory update_memory(const agent_memory& memory, const agent_response& response,
                           model_backend& updater) {
    if (memory.agent_index != response.agent_index) {
        throw error(errc::invalid_argument, "memory/response agent mismatch");
    }
    if (response.round <= memory.updated_round) {
        throw error(errc::non_monotonic_update,
                    "memory of agent " + std::to_string(memory.agent_index) + " already at round " +
                        std::to_string(memory.updated_round));
    }

    chat_request request;
    request.system_prompt = prompts::updater_system_prompt();
    request.messages.push_back({chat_role::user, std::string(prompts::updater_memory_header) +
                                                     memory.summary + "\n" +
                                                     prompts::updater_response_header + response.raw});

    agent_memory updated;
    updated.agent_index = memory.agent_index;
    updated.summary = updater.complete(request).text;
    updated.updated_round = response.round;
    return updated;
}

// --- session ------------------------------------------------------------------

session::session(mas_instance mas, run_config cfg) : mas_(std::move(mas)), cfg_(std::move(cfg)) {
    auto report = validate(mas_);
    if (!report.empty()) throw error(errc::invalid_argument, "invalid instance: " + report.front());
    if (cfg_.rounds < 1) throw error(errc::invalid_argument, "rounds must be >= 1");
    check_agent_index(mas_, cfg_.start);
    if (!cfg_.generation) throw error(errc::invalid_argument, "run config has no generation backend");
    if (!cfg_.updater) cfg_.updater = cfg_.generation;

    memories_.reserve(static_cast<std::size_t>(mas_.topo.node_count));
    for (int i = 0; i < mas_.topo.node_count; ++i) memories_.push_back(agent_memory{i, "", -1});
}

void session::add_hook(std::shared_ptr<round_hook> hook) { hooks_.push_back(std::move(hook)); }

std::string session::drain_warnings(int agent, std::string prompt) {
    auto it = pending_warnings_.find(agent);
    if (it == pending_warnings_.end() || it->second.empty()) return prompt;
    for (const auto& warning : it->second) {
        prompt += "\n\n";
        prompt += warning;
    }
    pending_warnings_.erase(it);
    return prompt;
}

agent_response session::generate_at(int agent, int round, const std::string& prompt) {
    return generate_response(mas_, agent, round, prompt, *cfg_.generation);
}

void session::commit_memory(int agent, const agent_response& response) {
    // Dialogue rounds restart at 0, memories must keep increasing: feed the
    // updater a copy stamped with the session-global step.
    agent_response stamped = response;
    stamped.round = global_step_;
    memories_[static_cast<std::size_t>(agent)] =
        update_memory(memories_[static_cast<std::size_t>(agent)], stamped, *cfg_.updater);
}

transcript session::run(const std::string& task) {
    return run_from_rounds({cfg_.start}, task, cfg_.rounds);
}

transcript session::run_rounds(const std::string& task, int rounds) {
    return run_from_rounds({cfg_.start}, task, rounds);
}

transcript session::run_from(const std::vector<int>& starts, const std::string& task) {
    return run_from_rounds(starts, task, cfg_.rounds);
}

transcript session::run_from_rounds(const std::vector<int>& starts, const std::string& task,
                                    int rounds) {
    if (rounds < 1) throw error(errc::invalid_argument, "rounds must be >= 1");
    if (starts.empty()) throw error(errc::invalid_argument, "no starting agents");
    std::vector<int> ordered = starts;
    std::sort(ordered.begin(), ordered.end());
    if (std::adjacent_find(ordered.begin(), ordered.end()) != ordered.end()) {
        throw error(errc::invalid_argument, "duplicate starting agent");
    }
    for (int s : ordered) check_agent_index(mas_, s);

    last_inputs_.clear();
    transcript out;
    out.task = task;

    class queue_sink : public warning_sink {
      public:
        explicit queue_sink(std::map<int, std::vector<std::string>>& queue) : queue_(queue) {}
        void queue_warning(int agent, const std::string& text) override {
            queue_[agent].push_back(text);
        }

      private:
        std::map<int, std::vector<std::string>>& queue_;
    };
    queue_sink sink(pending_warnings_);

    auto generate_round = [&](const std::vector<std::pair<int, std::string>>& work, int round) {
        round_record record;
        try {
            if (cfg_.jobs > 1 && work.size() > 1) {
                std::vector<std::future<agent_response>> futures;
                futures.reserve(work.size());
                std::size_t next = 0;
                std::vector<agent_response> results(work.size());
                while (next < work.size()) {
                    std::size_t batch_end =
                        std::min(work.size(), next + static_cast<std::size_t>(cfg_.jobs));
                    futures.clear();
                    for (std::size_t k = next; k < batch_end; ++k) {
                        futures.push_back(std::async(std::launch::async, [&, k] {
                            return generate_at(work[k].first, round, work[k].second);
                        }));
                    }
                    for (std::size_t k = next; k < batch_end; ++k) {
                        results[k] = futures[k - next].get();
                    }
                    next = batch_end;
                }
                record.responses = std::move(results);
            } else {
                for (const auto& [agent, prompt] : work) {
                    record.responses.push_back(generate_at(agent, round, prompt));
                }
            }
        } catch (const error& e) {
            throw run_aborted(e.code(), std::string("round ") + std::to_string(round) +
                                            " generation failed: " + e.what(),
                              std::move(out));
        }
        return record;
    };

    auto finish_round = [&](round_record record, int round) {
        std::vector<bool> active(static_cast<std::size_t>(mas_.topo.node_count), false);
        for (const auto& response : record.responses) {
            active[static_cast<std::size_t>(response.agent_index)] = true;
        }
        for (int i = 0; i < mas_.topo.node_count; ++i) {
            if (!active[static_cast<std::size_t>(i)]) record.dormant.push_back(i);
        }
        out.rounds.push_back(std::move(record));

        ++global_step_;
        const round_record& stored = out.rounds.back();
        try {
            for (const auto& response : stored.responses) {
                commit_memory(response.agent_index, response);
            }
        } catch (const error& e) {
            throw run_aborted(e.code(), std::string("round ") + std::to_string(round) +
                                            " memory update failed: " + e.what(),
                              std::move(out));
        }
        for (const auto& hook : hooks_) hook->on_round_complete(round, stored, mas_, sink);
    };

    // Round 0: the task is every starting agent's whole input.
    std::vector<std::pair<int, std::string>> work;
    for (int s : ordered) {
        std::string prompt = drain_warnings(s, round0_prompt(task));
        last_inputs_.push_back({0, s, prompt});
        work.emplace_back(s, std::move(prompt));
    }
    finish_round(generate_round(work, 0), 0);

    // Internal propagation against the previous-round snapshot.
    for (int t = 1; t <= rounds; ++t) {
        work.clear();
        for (int i = 0; i < mas_.topo.node_count; ++i) {
            auto base = construct_input(mas_, i, t, out, memories_[static_cast<std::size_t>(i)],
                                        cfg_.input_char_budget);
            if (!base) continue;
            std::string prompt = drain_warnings(i, std::move(*base));
            last_inputs_.push_back({t, i, prompt});
            work.emplace_back(i, std::move(prompt));
        }
        finish_round(generate_round(work, t), t);
    }

    return out;
}

transcript run(const mas_instance& mas, const std::string& task, const run_config& cfg) {
    session s(mas, cfg);
    return s.run(task);
}

std::vector<transcript> run_dialogue_sequence(const mas_instance& mas,
                                              const std::vector<std::string>& tasks,
                                              const run_config& cfg) {
    if (tasks.empty()) throw error(errc::invalid_argument, "no tasks");
    session s(mas, cfg);
    std::vector<transcript> transcripts;
    transcripts.reserve(tasks.size());
    for (const auto& task : tasks) transcripts.push_back(s.run(task));
    return transcripts;
}

// --- serialization --------------------------------------------------------------

std::vector<std::string> role_names(const mas_instance& mas) {
    std::vector<std::string> names;
    names.reserve(mas.agents.size());
    for (const auto& agent : mas.agents) names.push_back(agent.role_name);
    return names;
}

namespace {

std::string jsonl_body(const transcript& t, const std::vector<std::string>& roles, int dialogue) {
    std::string body;
    for (std::size_t round = 0; round < t.rounds.size(); ++round) {
        const round_record& record = t.rounds[round];
        for (const auto& response : record.responses) {
            nlohmann::json line{
                {"dialogue", dialogue},
                {"round", static_cast<int>(round)},
                {"agent", response.agent_index},
                {"role", response.agent_index < static_cast<int>(roles.size())
                             ? roles[static_cast<std::size_t>(response.agent_index)]
                             : ""},
                {"raw", response.raw},
                {"expressed", response.expressed},
                {"action", response.action},
                {"result", response.result},
                {"memory_note", response.memory_note},
            };
            body += line.dump();
            body += '\n';
        }
        nlohmann::json dormancy{{"round", static_cast<int>(round)}, {"dormant", record.dormant}};
        body += dormancy.dump();
        body += '\n';
    }
    return body;
}

}  // namespace

std::string transcript_to_jsonl(const transcript& t, const std::vector<std::string>& roles,
                                int dialogue) {
    std::string body = jsonl_body(t, roles, dialogue);
    nlohmann::json digest_line{{"digest", fnv1a64_hex(body)}};
    return body + digest_line.dump() + '\n';
}

std::string transcript_digest(const transcript& t, const std::vector<std::string>& roles,
                              int dialogue) {
    return fnv1a64_hex(jsonl_body(t, roles, dialogue));
}

transcript transcript_from_jsonl(const std::string& text) {
    transcript t;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        auto parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            throw error(errc::schema_mismatch, "bad transcript line: '" + line + "'");
        }
        if (parsed.contains("digest")) continue;
        if (!parsed.contains("round")) {
            throw error(errc::schema_mismatch, "transcript line lacks a round: '" + line + "'");
        }
        int round = parsed.at("round").get<int>();
        if (round < 0) throw error(errc::schema_mismatch, "negative round");
        while (static_cast<int>(t.rounds.size()) <= round) t.rounds.emplace_back();

        if (parsed.contains("dormant")) {
            t.rounds[static_cast<std::size_t>(round)].dormant =
                parsed.at("dormant").get<std::vector<int>>();
        } else {
            agent_response response;
            response.round = round;
            response.agent_index = parsed.at("agent").get<int>();
            response.raw = parsed.value("raw", "");
            response.expressed = parsed.value("expressed", "");
            response.action = parsed.value("action", "");
            response.result = parsed.value("result", "");
            response.memory_note = parsed.value("memory_note", "");
            t.rounds[static_cast<std::size_t>(round)].responses.push_back(std::move(response));
        }
    }
    return t;
}

transcript truncate_to_turn(const transcript& t, int turn) {
    if (turn < 0) throw error(errc::invalid_argument, "turn must be >= 0");
    transcript out;
    out.task = t.task;
    for (std::size_t round = 0; round < t.rounds.size() && static_cast<int>(round) <= turn; ++round) {
        out.rounds.push_back(t.rounds[round]);
    }
    return out;
}

}  // namespace maslab
