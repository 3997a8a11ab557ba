#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "maslab/error.hpp"
#include "maslab/gateway.hpp"

namespace maslab {

namespace {

struct parsed_endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // request path, defaults to the chat-completions route
};

parsed_endpoint parse_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw error(errc::invalid_argument, "endpoint must include a scheme: '" + endpoint + "'");
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    parsed_endpoint out;
    if (path_start == std::string::npos) {
        out.base = endpoint;
        out.path.clear();
    } else {
        out.base = endpoint.substr(0, path_start);
        out.path = endpoint.substr(path_start);
    }
    if (out.base.size() == scheme_end + 3) {
        throw error(errc::invalid_argument, "endpoint has no host: '" + endpoint + "'");
    }
    if (out.path.empty() || out.path == "/") out.path = "/v1/chat/completions";
    return out;
}

bool transient_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

class http_backend : public model_backend {
  public:
    http_backend(parsed_endpoint endpoint, std::string model_name, std::string credential_env,
                 retry_policy policy)
        : endpoint_(std::move(endpoint)),
          model_name_(std::move(model_name)),
          credential_env_(std::move(credential_env)),
          policy_(policy) {
        if (policy_.max_attempts < 1) {
            throw error(errc::invalid_argument, "retry policy needs at least one attempt");
        }
        const auto seed = policy_.jitter_seed != 0
                              ? policy_.jitter_seed
                              : static_cast<std::uint64_t>(
                                    std::chrono::steady_clock::now().time_since_epoch().count());
        rng_seed_ = seed;
    }

    chat_response complete(const chat_request& request) override {
        if (request.messages.empty()) {
            throw error(errc::invalid_argument, "chat request has no messages");
        }
        // Credential is resolved per call so rotation does not require
        // rebuilding the backend.
        const char* credential = std::getenv(credential_env_.c_str());
        if (credential == nullptr || *credential == '\0') {
            throw error(errc::network_error,
                        "missing credential: environment variable '" + credential_env_ + "' unset");
        }

        nlohmann::json body;
        body["model"] = model_name_;
        body["temperature"] = 0;
        auto& messages = body["messages"] = nlohmann::json::array();
        if (!request.system_prompt.empty()) {
            messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        }
        for (const auto& message : request.messages) {
            messages.push_back({{"role", message.role == chat_role::user ? "user" : "assistant"},
                                {"content", message.text}});
        }
        const std::string payload = body.dump();

        std::mt19937_64 rng(rng_seed_ ^ std::hash<std::string>{}(payload));
        const auto started = std::chrono::steady_clock::now();
        int last_status = 0;
        std::string last_detail;

        for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
            // httplib clients are cheap and not thread-safe; one per call keeps
            // concurrent callers independent.
            httplib::Client client(endpoint_.base);
            client.set_connection_timeout(30, 0);
            client.set_read_timeout(120, 0);
            client.set_default_headers({{"Authorization", std::string("Bearer ") + credential}});

            auto result = client.Post(endpoint_.path, payload, "application/json");
            if (result) {
                last_status = result->status;
                if (result->status == 200) {
                    return parse_reply(result->body, started, attempt);
                }
                last_detail = "http status " + std::to_string(result->status);
                if (!transient_status(result->status)) break;
            } else {
                last_status = 0;
                last_detail = "transport failure: " + httplib::to_string(result.error());
            }

            if (attempt < policy_.max_attempts) {
                std::this_thread::sleep_for(delay_for(attempt, rng));
            }
        }

        if (last_status == 429) {
            throw error(errc::rate_limited, "endpoint kept replying 429 after " +
                                                std::to_string(policy_.max_attempts) + " attempts");
        }
        throw error(errc::network_error, last_detail + " (after " +
                                             std::to_string(policy_.max_attempts) + " attempts)");
    }

    std::string id() const override { return "http:" + model_name_; }
    bool live() const override { return true; }

  private:
    std::chrono::milliseconds delay_for(int attempt, std::mt19937_64& rng) const {
        double delay = static_cast<double>(policy_.base_delay.count());
        for (int i = 1; i < attempt; ++i) delay *= policy_.backoff_factor;
        if (policy_.jitter > 0.0) {
            std::uniform_real_distribution<double> spread(1.0 - policy_.jitter, 1.0 + policy_.jitter);
            delay *= spread(rng);
        }
        return std::chrono::milliseconds(static_cast<long long>(delay));
    }

    chat_response parse_reply(const std::string& body,
                              std::chrono::steady_clock::time_point started, int attempts) const {
        auto parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty()) {
            throw error(errc::malformed_remote_reply, "reply lacks a choices array");
        }
        const auto& first = parsed["choices"][0];
        if (!first.contains("message") || !first["message"].contains("content") ||
            !first["message"]["content"].is_string()) {
            throw error(errc::malformed_remote_reply, "reply lacks choices[0].message.content");
        }
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        chat_response response;
        response.text = first["message"]["content"].get<std::string>();
        response.backend_id = id();
        response.latency_ms = static_cast<int>(elapsed.count());
        response.attempts = attempts;
        return response;
    }

    parsed_endpoint endpoint_;
    std::string model_name_;
    std::string credential_env_;
    retry_policy policy_;
    std::uint64_t rng_seed_;
};

}  // namespace

backend_ptr make_http(const std::string& endpoint, const std::string& model_name,
                      const std::string& credential_env, retry_policy policy) {
    return std::make_shared<http_backend>(parse_endpoint(endpoint), model_name, credential_env,
                                          policy);
}

}  // namespace maslab
