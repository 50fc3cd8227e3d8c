#pragma once

#include <stdexcept>
#include <string>

namespace dls {

/// A mechanics map was evaluated at a point where it is undefined
/// (zero twist in the twist-to-wrench map, zero gravity in a division).
class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver failed to reach its tolerance.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Goal or start poses lie outside the palm workspace.
class InfeasibleScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dls
