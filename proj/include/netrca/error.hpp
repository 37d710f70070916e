#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netrca {

enum class ErrorKind {
    MalformedInput,
    EmptyInput,
    DegenerateChannel,
    InvalidWindow,
    NoInvariantsFound,
    InsufficientData,
    InvalidSpec,
    UndefinedMetric,
    ChannelMismatch,
    MissingInput,
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (notably the CLI) can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace netrca
