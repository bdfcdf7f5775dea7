#ifndef CDECOMP_ERROR_HPP
#define CDECOMP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cdecomp {

// Taxonomy mirrors the CLI exit codes: configuration/ingestion -> 2,
// estimation/inference -> 3, positivity (strict mode) -> 4.

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class IngestError : public ConfigError {
public:
    explicit IngestError(const std::string& msg) : ConfigError(msg) {}
};

class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConvergenceError : public EstimationError {
public:
    explicit ConvergenceError(const std::string& msg) : EstimationError(msg) {}
};

class SeparationError : public EstimationError {
public:
    explicit SeparationError(const std::string& msg) : EstimationError(msg) {}
};

class PredictionError : public EstimationError {
public:
    explicit PredictionError(const std::string& msg) : EstimationError(msg) {}
};

class InferenceError : public EstimationError {
public:
    explicit InferenceError(const std::string& msg) : EstimationError(msg) {}
};

class PositivityError : public std::runtime_error {
public:
    explicit PositivityError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cdecomp

#endif
