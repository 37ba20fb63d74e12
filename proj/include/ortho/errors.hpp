#pragma once

#include <stdexcept>
#include <string>

namespace ortho {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform (matmul, elementwise ops, ...).
struct DimensionError : Error {
    using Error::Error;
};

/// Structural shape violation (e.g. asymmetric input to a symmetric solver).
struct ShapeError : Error {
    using Error::Error;
};

/// Iterative method exhausted its sweep/iteration budget.
struct ConvergenceError : Error {
    using Error::Error;
};

/// Input expected to be symmetric positive definite is not.
struct NotPositiveDefiniteError : Error {
    using Error::Error;
};

/// Numerically rank-deficient input where full column rank is required.
struct RankError : Error {
    using Error::Error;
};

/// Two tangent vectors do not share a base point.
struct BasePointError : Error {
    using Error::Error;
};

/// Parameter slot kind does not match the update rule.
struct KindError : Error {
    using Error::Error;
};

/// Activation tape does not match the network or upstream gradient.
struct TapeError : Error {
    using Error::Error;
};

/// Invalid classification labels.
struct LabelError : Error {
    using Error::Error;
};

/// Scalar hyperparameter out of range (e.g. temperature <= 0).
struct ParameterError : Error {
    using Error::Error;
};

/// Missing index in an indexed patch set.
struct IndexError : Error {
    using Error::Error;
};

/// Bad key or value in a run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// File read/write failure.
struct IoError : Error {
    using Error::Error;
};

/// Training loss became non-finite; carries the last-good checkpoint path.
struct TrainingDivergedError : Error {
    TrainingDivergedError(const std::string& what, std::string checkpoint)
        : Error(what), checkpoint_path(std::move(checkpoint)) {}
    std::string checkpoint_path;
};

}  // namespace ortho
