#pragma once

#include <stdexcept>
#include <string>

namespace catgen {

struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateStateError : std::runtime_error {
    explicit DegenerateStateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroProbabilityError : std::runtime_error {
    explicit ZeroProbabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularTargetError : std::runtime_error {
    explicit SingularTargetError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleCascadeError : std::runtime_error {
    explicit InfeasibleCascadeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IllConditionedIntegralError : std::runtime_error {
    explicit IllConditionedIntegralError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridTooCoarseError : std::runtime_error {
    explicit GridTooCoarseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace catgen
