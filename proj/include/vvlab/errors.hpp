#pragma once

#include <stdexcept>
#include <string>

namespace vvlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoincidentPointsError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ParameterError : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct SupportError : Error { using Error::Error; };
struct SeparationError : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };
struct BudgetError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

/// Raised by a pipeline stage; the message carries the stage name.
struct StageError : Error {
    StageError(const std::string& stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_name(stage) {}
    std::string stage_name;
};

}  // namespace vvlab
