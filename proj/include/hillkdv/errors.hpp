#pragma once

#include <stdexcept>
#include <string>

namespace hillkdv {

/// Failure categories. Validation errors map to CLI exit code 2,
/// numerical failures to exit code 3.
enum class ErrorKind {
    // validation
    NonZeroMean,
    NotReal,
    InvalidWeight,
    GridTooCoarse,
    WindowTooSmall,
    InvalidConfig,
    IllConditionedFit,
    PreconditionViolated,
    // numerical
    ConvergenceFailure,
    OrderingAmbiguity,
    NewtonDivergence,
    NotConverged,
    ContourTouchesGap,
    OnCut,
    PathCrossesCut,
    RootCountMismatch,
    NeumannDivergence,
    NegativeAction,
    LadderTooShallow,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::NonZeroMean: return "NonZeroMean";
    case ErrorKind::NotReal: return "NotReal";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IllConditionedFit: return "IllConditionedFit";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::OrderingAmbiguity: return "OrderingAmbiguity";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::ContourTouchesGap: return "ContourTouchesGap";
    case ErrorKind::OnCut: return "OnCut";
    case ErrorKind::PathCrossesCut: return "PathCrossesCut";
    case ErrorKind::RootCountMismatch: return "RootCountMismatch";
    case ErrorKind::NeumannDivergence: return "NeumannDivergence";
    case ErrorKind::NegativeAction: return "NegativeAction";
    case ErrorKind::LadderTooShallow: return "LadderTooShallow";
    }
    return "Unknown";
}

inline bool is_validation(ErrorKind k) {
    return k <= ErrorKind::PreconditionViolated;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    bool validation() const noexcept { return is_validation(kind_); }

private:
    ErrorKind kind_;
};

} // namespace hillkdv
