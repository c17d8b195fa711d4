#pragma once

#include <stdexcept>
#include <string>

namespace occis {

struct NonFiniteState : std::runtime_error {
    explicit NonFiniteState(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParams : std::invalid_argument {
    explicit InvalidParams(const std::string& msg) : std::invalid_argument(msg) {}
};

struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnstableSolve : std::runtime_error {
    explicit UnstableSolve(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularTridiagonal : std::runtime_error {
    explicit SingularTridiagonal(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadFit : std::runtime_error {
    explicit BadFit(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateFit : std::runtime_error {
    explicit DegenerateFit(const std::string& msg) : std::runtime_error(msg) {}
};

struct HypothesisViolation : std::invalid_argument {
    explicit HypothesisViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InvalidRates : std::invalid_argument {
    explicit InvalidRates(const std::string& msg) : std::invalid_argument(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace occis
