#include "maslab/gateway.hpp"

#include <algorithm>
#include <regex>

#include "maslab/error.hpp"
#include "maslab/prompts.hpp"

namespace maslab {

std::string concat_request_text(const chat_request& request) {
    std::string text = request.system_prompt;
    for (const auto& message : request.messages) {
        text += '\n';
        text += message.text;
    }
    return text;
}

namespace {

struct compiled_rule {
    script_rule rule;
    std::regex pattern;  // only populated when is_regex

    bool matches(const std::string& text) const {
        if (rule.is_default) return true;
        if (rule.is_regex) return std::regex_search(text, pattern);
        return text.find(rule.matcher) != std::string::npos;
    }
};

class scripted_backend : public model_backend {
  public:
    explicit scripted_backend(std::vector<compiled_rule> rules, std::size_t default_index)
        : rules_(std::move(rules)), default_index_(default_index) {}

    chat_response complete(const chat_request& request) override {
        if (request.messages.empty()) {
            throw error(errc::invalid_argument, "chat request has no messages");
        }
        const std::string text = concat_request_text(request);

        // Highest priority wins; ties go to the first-declared rule. The
        // default rule answers only when nothing else matches.
        const compiled_rule* best = nullptr;
        for (const auto& candidate : rules_) {
            if (candidate.rule.is_default) continue;
            if (!candidate.matches(text)) continue;
            if (best == nullptr || candidate.rule.priority > best->rule.priority) best = &candidate;
        }
        if (best == nullptr) best = &rules_[default_index_];

        return chat_response{best->rule.response, id(), 0, 1};
    }

    std::string id() const override { return "scripted"; }

  private:
    std::vector<compiled_rule> rules_;
    std::size_t default_index_;
};

}  // namespace

backend_ptr make_scripted(std::vector<script_rule> rules, std::vector<std::string>* warnings) {
    std::size_t default_count = 0;
    std::size_t default_index = 0;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].is_default) {
            if (default_count == 0) default_index = i;
            ++default_count;
        }
    }
    if (default_count != 1) {
        throw error(errc::missing_default_rule,
                    "scripted backend requires exactly one default rule, got " +
                        std::to_string(default_count));
    }

    if (warnings != nullptr) {
        for (std::size_t i = 0; i < rules.size(); ++i) {
            for (std::size_t j = i + 1; j < rules.size(); ++j) {
                if (!rules[i].is_default && !rules[j].is_default &&
                    rules[i].matcher == rules[j].matcher && rules[i].priority == rules[j].priority) {
                    warnings->push_back("rules " + std::to_string(i) + " and " + std::to_string(j) +
                                        " share matcher '" + rules[i].matcher + "' at priority " +
                                        std::to_string(rules[i].priority));
                }
            }
        }
    }

    std::vector<compiled_rule> compiled;
    compiled.reserve(rules.size());
    for (auto& rule : rules) {
        compiled_rule c;
        if (rule.is_regex && !rule.is_default) {
            try {
                c.pattern = std::regex(rule.matcher);
            } catch (const std::regex_error& e) {
                throw error(errc::invalid_argument,
                            "bad regex matcher '" + rule.matcher + "': " + e.what());
            }
        }
        c.rule = std::move(rule);
        compiled.push_back(std::move(c));
    }
    return std::make_shared<scripted_backend>(std::move(compiled), default_index);
}

namespace {

// Folds the two sections of the memory-update wire format into
// "<memory>\n<response>".
class concat_updater : public model_backend {
  public:
    chat_response complete(const chat_request& request) override {
        if (request.messages.empty()) {
            throw error(errc::invalid_argument, "chat request has no messages");
        }
        const std::string& body = request.messages.back().text;
        const std::string memory_header = prompts::updater_memory_header;
        const std::string response_header = prompts::updater_response_header;
        std::string memory;
        std::string response = body;

        auto memory_at = body.find(memory_header);
        auto response_at = body.find(response_header);
        if (memory_at != std::string::npos && response_at != std::string::npos &&
            memory_at < response_at) {
            auto memory_begin = memory_at + memory_header.size();
            memory = body.substr(memory_begin, response_at - memory_begin);
            while (!memory.empty() && memory.back() == '\n') memory.pop_back();
            response = body.substr(response_at + response_header.size());
        }

        std::string summary = memory.empty() ? response : memory + "\n" + response;
        return chat_response{std::move(summary), id(), 0, 1};
    }

    std::string id() const override { return "concat-updater"; }
};

}  // namespace

backend_ptr make_concat_updater() { return std::make_shared<concat_updater>(); }

}  // namespace maslab
