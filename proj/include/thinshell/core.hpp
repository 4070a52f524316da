#pragma once

// Shared aliases and the exception hierarchy used across the library.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thinshell {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Sample matrices store one point per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

class LandmarkFailure : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class NoRootError : public Error {
public:
    NoRootError(const std::string& what, double lo, double hi)
        : Error(what + " in bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
          bracket_lo(lo), bracket_hi(hi) {}
    double bracket_lo;
    double bracket_hi;
};

class StepSizeError : public Error {
public:
    using Error::Error;
};

class BodyConstructionError : public Error {
public:
    BodyConstructionError(const std::string& what, Point witness)
        : Error(what), witness_direction(std::move(witness)) {}
    Point witness_direction;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class OracleInconsistency : public Error {
public:
    OracleInconsistency(const std::string& what, Point witness)
        : Error(what), witness_point(std::move(witness)) {}
    Point witness_point;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key_name = {})
        : Error(what), key(std::move(key_name)) {}
    std::string key;
};

class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace thinshell
