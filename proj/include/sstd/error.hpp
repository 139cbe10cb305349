#pragma once

#include <stdexcept>
#include <string>

namespace sstd {

// Error category; the CLI maps validation -> exit 1, io -> exit 2.
enum class ErrorKind { validation, io, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string msg, long long byte_offset = -1)
        : std::runtime_error(std::move(msg)), kind_(kind), byte_offset_(byte_offset) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Byte position in the offending file, or -1 when not applicable.
    long long byte_offset() const noexcept { return byte_offset_; }

private:
    ErrorKind kind_;
    long long byte_offset_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) {
    throw Error(ErrorKind::validation, msg);
}

[[noreturn]] inline void fail_io(const std::string& msg, long long offset = -1) {
    throw Error(ErrorKind::io, msg, offset);
}

[[noreturn]] inline void fail_numeric(const std::string& msg) {
    throw Error(ErrorKind::numeric, msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail_validation(msg);
}

} // namespace sstd
