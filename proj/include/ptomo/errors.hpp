#pragma once

#include <stdexcept>
#include <string>

namespace ptomo {

// Base class for all recoverable toolkit errors. Callers that need to map
// failures to process exit codes can catch this one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};

class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& msg) : Error("grid mismatch: " + msg) {}
};

class SingularPivot : public Error {
public:
    explicit SingularPivot(const std::string& msg) : Error("singular pivot: " + msg) {}
};

class UnsupportedFormat : public Error {
public:
    explicit UnsupportedFormat(const std::string& msg) : Error("unsupported format: " + msg) {}
};

class CorruptHeader : public Error {
public:
    explicit CorruptHeader(const std::string& msg) : Error("corrupt header: " + msg) {}
};

class TruncatedPayload : public Error {
public:
    explicit TruncatedPayload(const std::string& msg) : Error("truncated payload: " + msg) {}
};

class UnknownKey : public Error {
public:
    UnknownKey(const std::string& key, int line)
        : Error("unknown key '" + key + "' at line " + std::to_string(line)), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class ValueOutOfRange : public Error {
public:
    explicit ValueOutOfRange(const std::string& msg) : Error("value out of range: " + msg) {}
};

class TooFewSamples : public Error {
public:
    explicit TooFewSamples(const std::string& msg) : Error("too few samples: " + msg) {}
};

class CFLViolation : public Error {
public:
    explicit CFLViolation(const std::string& msg) : Error("CFL violation: " + msg) {}
};

class CoefficientDegenerate : public Error {
public:
    explicit CoefficientDegenerate(const std::string& msg)
        : Error("degenerate coefficient: " + msg) {}
};

class ConjugatePoint : public Error {
public:
    explicit ConjugatePoint(const std::string& msg) : Error("conjugate point: " + msg) {}
};

class ConjugatePointOrBlowup : public Error {
public:
    explicit ConjugatePointOrBlowup(const std::string& msg)
        : Error("conjugate point or blow-up: " + msg) {}
};

class ZeroTruth : public Error {
public:
    explicit ZeroTruth(const std::string& msg) : Error("zero truth field: " + msg) {}
};

class DegenerateIdentity : public Error {
public:
    explicit DegenerateIdentity(const std::string& msg) : Error("degenerate identity: " + msg) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error("invalid argument: " + msg) {}
};

}  // namespace ptomo
