#pragma once

#include <stdexcept>
#include <string>

namespace gridcoord {

/// Structural problem in a scenario or network.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested operating point or scenario admits no feasible dispatch.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The LP engine failed to produce a trustworthy answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridcoord
