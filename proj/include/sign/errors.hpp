#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sign {

// Invalid configuration. `code()` is a stable machine-readable identifier
// such as "alpha-out-of-range"; the what() string carries the human detail.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Chat-completion endpoint failure (transport, HTTP error, malformed body).
// Aborts the run that raised it.
class EndpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An agent policy could not produce a message (e.g. a scripted agent ran
// out of script). Aborts the run with the partial log preserved.
class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sign
