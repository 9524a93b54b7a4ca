#pragma once

#include <stdexcept>
#include <string>

namespace torusflow {

/// Base class for all numerical / geometric failures raised by the library.
class FlowError : public std::runtime_error {
public:
    explicit FlowError(const std::string& what) : std::runtime_error(what) {}
};

/// A height field left the tubular neighborhood in which the graph
/// representation over the reference boundary is valid.
class TubularViolation : public FlowError {
public:
    using FlowError::FlowError;
};

/// Some curvature factor 1 + kappa*u became nonpositive.
class DegenerateFactor : public FlowError {
public:
    using FlowError::FlowError;
};

/// The induced metric lost positivity (det g <= 0 somewhere).
class MetricDegenerate : public FlowError {
public:
    using FlowError::FlowError;
};

/// A field was evaluated against a reference it does not belong to.
class GridMismatch : public FlowError {
public:
    using FlowError::FlowError;
};

/// Time stepping failed after exhausting all step-size halvings.
class StepFailed : public FlowError {
public:
    using FlowError::FlowError;
};

/// A translated graph stopped being a graph (projection not injective).
class FoldOver : public FlowError {
public:
    using FlowError::FlowError;
};

/// An iterative solve (Newton, fixed point) did not converge.
class NoConvergence : public FlowError {
public:
    using FlowError::FlowError;
};

/// Configuration file could not be parsed; carries line/column.
class ConfigError : public FlowError {
public:
    ConfigError(const std::string& what, int line, int col)
        : FlowError(what + " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")"),
          line_(line), col_(col) {}
    int line() const { return line_; }
    int column() const { return col_; }

private:
    int line_;
    int col_;
};

} // namespace torusflow
