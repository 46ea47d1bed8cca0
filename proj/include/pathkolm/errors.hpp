#pragma once

#include <stdexcept>
#include <string>

namespace pathkolm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time argument does not coincide with a node of the uniform grid.
class GridAlignmentError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain on which the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Derivatives were requested from a functional flagged as non-smooth.
class UnsupportedDerivativeError : public Error {
 public:
  using Error::Error;
};

/// Bumped Monte Carlo evaluations were not driven by the same noise.
class CouplingError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; `field` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Euler-Maruyama produced a non-finite or runaway state.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(int node, const std::string& message)
      : Error("simulation diverged at node " + std::to_string(node) + ": " + message), node_(node) {}

  int node() const noexcept { return node_; }

 private:
  int node_;
};

}  // namespace pathkolm
