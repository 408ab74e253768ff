#ifndef ROBUSTIFY_ERRORS_HPP
#define ROBUSTIFY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace robustify {

// Process exit codes used by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitFormatError = 3,
    kExitRuntimeError = 4,
};

// Bad configuration: invalid parameter values, inconsistent settings.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data: truncated files, out-of-range labels, bad headers.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Model-level failures: shape mismatches, unsupported operations.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Requested operation not supported by this classifier (e.g. gradients
// of a non-differentiable stub).
class UnsupportedOperationError : public ModelError {
public:
    explicit UnsupportedOperationError(const std::string& what) : ModelError(what) {}
};

// Training diverged or failed; carries epoch/step context in the message.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace robustify

#endif
