#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "construal/mdp.hpp"

namespace construal {

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr std::size_t kDefaultMaxSweeps = 10000;

struct SolverOptions {
  double tolerance = kDefaultTolerance;
  std::size_t max_sweeps = kDefaultMaxSweeps;
};

struct ValueIterationResult {
  ValueFunction values;
  std::size_t sweeps = 0;
  // Individual (s,a) expectation evaluations; the unit of solve cost.
  std::uint64_t backups = 0;
  bool converged = false;
  // Sup-norm change per sweep.
  std::vector<double> residuals;
};

/// Synchronous (Jacobi) value iteration. Sweeps stop once the change between
/// sweeps drops below tolerance*(1-discount)/discount, which keeps both the
/// Bellman residual and the distance to the fixed point under `tolerance`.
ValueIterationResult value_iteration(const GroundMdp& mdp, const SolverOptions& options = {},
                                     const ValueFunction* init = nullptr);

/// Deterministic greedy policy over all non-terminal states; ties go to the
/// smallest action id.
Policy greedy_policy(const GroundMdp& mdp, const ValueFunction& values);

/// Q(s,a) = R(s,a) + discount * E[V(s')], indexed like mdp.states[s].actions.
std::vector<std::vector<double>> q_values(const GroundMdp& mdp, const ValueFunction& values);

/// States reachable from `starts` when following `policy`. Uncovered
/// non-terminal states are returned in `gaps` and not expanded.
struct Reachability {
  std::vector<bool> reached;
  std::vector<StateId> gaps;
};
Reachability reachable_under(const GroundMdp& mdp, const Policy& policy, std::span<const StateId> starts);

/// V^pi on the closure of `starts` under `policy` (every non-terminal state
/// when `starts` is empty); other entries are 0. Throws
/// Error(coverage_gap) listing reachable states the policy does not cover.
ValueFunction policy_evaluation(const GroundMdp& mdp, const Policy& policy, double tolerance = kDefaultTolerance,
                                std::span<const StateId> starts = {});

/// Change-per-sweep threshold that guarantees sup-norm error <= tolerance.
double sweep_threshold(double tolerance, double discount);

}  // namespace construal
