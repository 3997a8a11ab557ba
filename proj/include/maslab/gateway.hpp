#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace maslab {

enum class chat_role { user, assistant };

struct chat_message {
    chat_role role = chat_role::user;
    std::string text;
};

// One model invocation: a role-specific system prompt plus the turn content.
struct chat_request {
    std::string system_prompt;
    std::vector<chat_message> messages;  // must be non-empty
};

struct chat_response {
    std::string text;
    std::string backend_id;
    int latency_ms = 0;
    int attempts = 1;  // retry observability for the http backend
};

// Uniform invocation surface. Implementations must be safe to call from many
// threads at once; the engine may fan a round's generation calls out.
class model_backend {
  public:
    virtual ~model_backend() = default;
    virtual chat_response complete(const chat_request& request) = 0;
    virtual std::string id() const = 0;
    // True when complete() leaves the process (network). The attack safety
    // gate refuses campaigns over live backends unless explicitly allowed.
    virtual bool live() const { return false; }
};

using backend_ptr = std::shared_ptr<model_backend>;

// Deterministic rule for the scripted backend. Rules match against the
// concatenated request text (system prompt + message texts).
struct script_rule {
    std::string matcher;
    std::string response;
    int priority = 0;
    bool is_regex = false;
    // A default rule matches everything but is consulted only when no other
    // rule matches, regardless of priority.
    bool is_default = false;
};

// Request text as the scripted matcher sees it; exposed so tests and rule
// authors can reason about match targets.
std::string concat_request_text(const chat_request& request);

// Builds the deterministic scripted backend. Exactly one default rule is
// required (missing_default_rule otherwise). Among matching non-default rules
// the highest priority wins, ties broken by declaration order. Duplicate
// (matcher, priority) pairs are legal but reported through `warnings`.
backend_ptr make_scripted(std::vector<script_rule> rules,
                          std::vector<std::string>* warnings = nullptr);

// Memory-folding backend: replies with "<current memory>\n<new response>"
// parsed from the updater wire format, so scripted pipelines accumulate
// dialogue history deterministically.
backend_ptr make_concat_updater();

struct retry_policy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    double backoff_factor = 2.0;
    double jitter = 0.2;  // +/- fraction of the delay
    std::uint64_t jitter_seed = 0;  // 0 = seed from the clock
};

// Chat-completion client for any endpoint speaking the de-facto JSON shape
// (model + messages array of {role, content}). The credential is read from
// `credential_env` at call time; construction never fails. Transient failures
// (connect errors, 408/429/5xx) are retried per `policy`; exhausting attempts
// on 429 raises rate_limited, other exhaustion raises network_error, and a
// 200 with an unusable body raises malformed_remote_reply.
backend_ptr make_http(const std::string& endpoint, const std::string& model_name,
                      const std::string& credential_env, retry_policy policy = {});

}  // namespace maslab
