#pragma once

#include <stdexcept>
#include <string>

namespace missgan {

// Error categories map 1:1 onto the C API status codes and the CLI's
// machine-parsable "error: <category>: ..." line.
enum class ErrorCategory {
    Args = 1,
    Config = 2,
    Data = 3,
    Checkpoint = 4,
    Io = 5,
    Numeric = 6,
    Internal = 7,
};

const char* category_name(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

inline const char* category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Args: return "args";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Checkpoint: return "checkpoint";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Internal: return "internal";
    }
    return "internal";
}

} // namespace missgan
