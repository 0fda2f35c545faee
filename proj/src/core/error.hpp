#pragma once

#include <stdexcept>
#include <string>

namespace krigrid {

// Error categories mirrored one-to-one by the C API status codes.
enum class ErrorCode {
    invalid_argument = 1,
    decode_failure   = 2,
    io_failure       = 3,
    singular_system  = 4,
    degenerate       = 5,
    bad_format       = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

} // namespace krigrid
