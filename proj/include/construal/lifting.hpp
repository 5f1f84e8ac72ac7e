#pragma once

#include <optional>
#include <vector>

#include "construal/homomorphism.hpp"
#include "construal/solver.hpp"

namespace construal {

/// Ground policy obtained by pulling an abstract policy back through a map.
/// `gaps` are states in f's domain where no in-scope ground action maps to
/// the abstract choice.
struct LiftedPolicy {
  Policy base;
  std::vector<StateId> coverage;
  std::vector<StateId> gaps;
};

/// At each non-terminal ground state in f's domain, picks the smallest ground
/// action a with (s,a) in scope and g(s,a) equal to the abstract choice.
LiftedPolicy lift_policy(const Policy& abstract_policy, const HomomorphismMap& map, const GroundMdp& ground);

/// V(s) = V_abstract(f(s)) on f's domain, 0 elsewhere.
ValueFunction lift_values(const ValueFunction& abstract_values, const HomomorphismMap& map, const GroundMdp& ground);

struct TransferReport {
  // Return of the lifted policy per state; nullopt where excluded.
  std::vector<std::optional<double>> ground_return;
  double optimality_gap = 0.0;
  // Covered states excluded because a gap is reachable from them.
  std::vector<StateId> excluded;
  bool warning = false;
};

/// Evaluates the lifted policy in the ground MDP and reports the sup-norm gap
/// to the ground optimum over evaluated states. In strict mode any reachable
/// gap raises Error(coverage_gap).
TransferReport transfer_report(const GroundMdp& ground, const LiftedPolicy& lifted,
                               double tolerance = kDefaultTolerance, bool strict = false);

/// Completes a partial lifted policy by planning: warm-started value
/// iteration on the ground MDP, greedy actions on the gap and uncovered
/// states. Returns the full policy and the solver run used.
struct GapFill {
  Policy policy;
  ValueIterationResult solve;
};
GapFill fill_gaps(const GroundMdp& ground, const LiftedPolicy& lifted, const ValueFunction& warm_start,
                  const SolverOptions& options = {});

}  // namespace construal
