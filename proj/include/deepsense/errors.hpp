#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace deepsense {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or lengths of the inputs do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument value was violated.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A symmetric factorization hit a non-positive pivot.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(std::size_t pivot, double value)
        : Error("matrix is not positive definite: pivot " + std::to_string(pivot) +
                " = " + std::to_string(value)),
          pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// The scenario has no closed form for the requested quantity.
class UnsupportedScenarioError : public Error {
public:
    using Error::Error;
};

/// Signal generation could not satisfy its own preconditions.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// A binary file is malformed. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Checkpoint tensor shape does not match the network spec.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergedTrainingError : public Error {
public:
    DivergedTrainingError(std::size_t epoch, std::size_t batch)
        : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                ", batch " + std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

/// Kernel matrix or problem size cannot be handled by the dense TCA solver.
class FitError : public Error {
public:
    using Error::Error;
};

/// Object used before it was ready (e.g. untrained classifier).
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace deepsense
