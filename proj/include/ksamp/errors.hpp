#pragma once

#include <stdexcept>
#include <string>

namespace ksamp {

// Error categories map onto CLI exit codes (see tools/).
enum class ErrorKind {
    InvalidArgument,  // bad operands, shape mismatches, contract violations
    Config,           // unusable configuration                     -> exit 2
    MissingArtifact,  // absent/corrupt input file for a stage      -> exit 3
    Numeric,          // NaN/Inf escaped a computation, divergence  -> exit 4
    Io,               // filesystem failures                        -> exit 3
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) raise(kind, msg);
}

}  // namespace ksamp
