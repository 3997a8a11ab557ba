#pragma once

#include <stdexcept>
#include <string>

namespace maslab {

// Every recoverable failure in the library throws maslab::error with one of
// these codes. The CLI maps codes to exit classes (validation vs backend vs
// safety gate), so keep the taxonomy stable.
enum class errc {
    invalid_size,
    invalid_index,
    invalid_argument,
    missing_default_rule,
    network_error,
    rate_limited,
    malformed_remote_reply,
    unparseable_selection,
    wrong_agent_count,
    malformed_assignment,
    non_monotonic_update,
    malformed_template,
    unparseable_domain,
    empty_input,
    no_scorable_responses,
    missing_turn,
    io_error,
    schema_mismatch,
    invalid_table,
    safety_gate,
};

const char* errc_name(errc code);

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

}  // namespace maslab
