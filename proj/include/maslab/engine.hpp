#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maslab/constructor.hpp"
#include "maslab/gateway.hpp"

namespace maslab {

// One agent's output for one round. The tagged sections of the reply are
// split into expressed/action/result/memory_note when present; raw always
// carries the full backend reply.
struct agent_response {
    int agent_index = 0;
    int round = 0;
    std::string expressed;
    std::string action;
    std::string result;
    std::string memory_note;
    std::string raw;
};

struct agent_memory {
    int agent_index = 0;
    std::string summary;
    int updated_round = -1;  // strictly increases across updates
};

struct round_record {
    std::vector<agent_response> responses;  // ascending agent index
    std::vector<int> dormant;               // agents with no response this round
};

struct transcript {
    std::string task;
    std::vector<round_record> rounds;  // index = round number
};

struct run_config {
    int rounds = 8;  // interaction rounds after the round-0 task input
    int start = 0;
    backend_ptr generation;
    backend_ptr updater;  // defaults to generation when null
    int jobs = 1;         // concurrent generation calls within a round
    std::size_t input_char_budget = 64000;
};

// Abort carrying whatever the run produced before the backend failed.
class run_aborted : public error {
  public:
    run_aborted(errc code, const std::string& message, transcript partial)
        : error(code, message), partial(std::move(partial)) {}
    transcript partial;
};

// Hooks run at the round barrier: after all of a round's generation and
// memory updates, before the next round's inputs are constructed. A queued
// warning is appended once to that agent's next active input.
class warning_sink {
  public:
    virtual ~warning_sink() = default;
    virtual void queue_warning(int agent, const std::string& text) = 0;
};

class round_hook {
  public:
    virtual ~round_hook() = default;
    virtual void on_round_complete(int round, const round_record& record, const mas_instance& mas,
                                   warning_sink& warnings) = 0;
};

struct input_record {
    int round = 0;
    int agent = 0;
    std::string prompt;
};

// Stateful run context: agent memories and queued warnings persist across
// dialogues, so probe/inject/activate sequences share one session.
class session {
  public:
    session(mas_instance mas, run_config cfg);

    void add_hook(std::shared_ptr<round_hook> hook);

    // One user-MAS dialogue: the task activates cfg.start at round 0 and then
    // propagates for cfg.rounds rounds.
    transcript run(const std::string& task);
    transcript run_rounds(const std::string& task, int rounds);

    // Multi-start variant: every agent in `starts` receives the task as its
    // round-0 input (attack injection delivery).
    transcript run_from(const std::vector<int>& starts, const std::string& task);
    transcript run_from_rounds(const std::vector<int>& starts, const std::string& task, int rounds);

    int start_agent() const { return cfg_.start; }
    const mas_instance& mas() const { return mas_; }
    const std::vector<agent_memory>& memories() const { return memories_; }
    // Inputs constructed during the most recent run, for inspection.
    const std::vector<input_record>& last_inputs() const { return last_inputs_; }

  private:
    std::string drain_warnings(int agent, std::string prompt);
    agent_response generate_at(int agent, int round, const std::string& prompt);
    void commit_memory(int agent, const agent_response& response);

    mas_instance mas_;
    run_config cfg_;
    std::vector<agent_memory> memories_;
    std::map<int, std::vector<std::string>> pending_warnings_;
    std::vector<std::shared_ptr<round_hook>> hooks_;
    std::vector<input_record> last_inputs_;
    int global_step_ = 0;  // memory rounds are session-global, dialogue rounds restart at 0
};

// --- fine-grained operations -------------------------------------------------

// Round-0 response of cfg.start: generated from the system prompt and the task
// alone, no neighbor input, no memory.
agent_response activate_start(const mas_instance& mas, const std::string& task,
                              const run_config& cfg);

// Builds agent i's input for round t >= 1 from the round t-1 snapshot:
// task, then in-neighbor responses ascending by index, then the agent's own
// round t-1 response if it was active, then its memory summary if non-empty.
// Returns nullopt when no in-neighbor was active at t-1 (the agent sleeps).
// Oversized inputs are trimmed by dropping neighbor blocks lowest-index-first.
std::optional<std::string> construct_input(const mas_instance& mas, int agent, int round,
                                           const transcript& so_far, const agent_memory& memory,
                                           std::size_t char_budget = 64000);

// Calls the backend with (system prompt of `agent`, prompt) and parses
// EXPRESSED:/ACTION:/RESULT:/MEMORY: sections; an untagged reply degrades to
// raw-only, never errors.
agent_response generate_response(const mas_instance& mas, int agent, int round,
                                 const std::string& prompt, model_backend& backend);

// Folds a response into the memory through the updater backend. Throws
// non_monotonic_update unless response.round > memory.updated_round.
agent_memory update_memory(const agent_memory& memory, const agent_response& response,
                           model_backend& updater);

// Single dialogue over fresh memories.
transcript run(const mas_instance& mas, const std::string& task, const run_config& cfg);

// Sequential dialogues sharing one session (memories persist across tasks).
std::vector<transcript> run_dialogue_sequence(const mas_instance& mas,
                                              const std::vector<std::string>& tasks,
                                              const run_config& cfg);

// --- serialization -----------------------------------------------------------

std::vector<std::string> role_names(const mas_instance& mas);

// One JSON object per response, a dormancy record per round, and a final
// digest line for determinism checks.
std::string transcript_to_jsonl(const transcript& t, const std::vector<std::string>& roles,
                                int dialogue = 0);
std::string transcript_digest(const transcript& t, const std::vector<std::string>& roles,
                              int dialogue = 0);
transcript transcript_from_jsonl(const std::string& text);

// Drops every round after `turn` (keeps rounds 0..turn).
transcript truncate_to_turn(const transcript& t, int turn);

}  // namespace maslab
