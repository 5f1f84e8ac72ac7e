#include "construal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace construal {

double sweep_threshold(double tolerance, double discount) {
  if (discount <= 0.0) return std::numeric_limits<double>::infinity();
  return tolerance * (1.0 - discount) / discount;
}

namespace {

double expectation(const ActionSpec& a, const std::vector<double>& v) {
  double e = 0.0;
  for (const auto& o : a.outcomes) e += o.prob * v[o.next];
  return e;
}

void check_finite(double x, StateId s) {
  if (!std::isfinite(x))
    throw Error(Errc::numeric_failure, "non-finite value at state " + std::to_string(s), {s});
}

}  // namespace

ValueIterationResult value_iteration(const GroundMdp& mdp, const SolverOptions& options, const ValueFunction* init) {
  if (!(options.tolerance > 0.0)) throw Error(Errc::invalid_parameter, "tolerance must be positive");
  const std::size_t n = mdp.state_count();
  ValueIterationResult result;
  result.values.mdp_name = mdp.name;
  if (init) {
    if (init->values.size() != n)
      throw Error(Errc::pairing_mismatch, "initial values do not match the state space of '" + mdp.name + "'");
    result.values.values = init->values;
    for (StateId s = 0; s < n; ++s)
      if (mdp.is_terminal(s)) result.values.values[s] = 0.0;
  } else {
    result.values.values.assign(n, 0.0);
  }

  const double threshold = sweep_threshold(options.tolerance, mdp.discount);
  std::vector<double>& v = result.values.values;
  std::vector<double> next(n, 0.0);
  while (result.sweeps < options.max_sweeps) {
    double residual = 0.0;
    for (StateId s = 0; s < n; ++s) {
      const auto& acts = mdp.actions(s);
      if (acts.empty()) {
        next[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& a : acts) {
        const double q = a.reward + mdp.discount * expectation(a, v);
        best = std::max(best, q);
      }
      result.backups += acts.size();
      check_finite(best, s);
      next[s] = best;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v.swap(next);
    ++result.sweeps;
    result.residuals.push_back(residual);
    if (residual <= threshold) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<std::vector<double>> q_values(const GroundMdp& mdp, const ValueFunction& values) {
  if (values.values.size() != mdp.state_count())
    throw Error(Errc::pairing_mismatch, "values do not match mdp '" + mdp.name + "'");
  std::vector<std::vector<double>> q(mdp.state_count());
  for (StateId s = 0; s < mdp.state_count(); ++s)
    for (const auto& a : mdp.actions(s)) q[s].push_back(a.reward + mdp.discount * expectation(a, values.values));
  return q;
}

Policy greedy_policy(const GroundMdp& mdp, const ValueFunction& values) {
  if (!values.paired_with(mdp))
    throw Error(Errc::pairing_mismatch, "values are not paired with mdp '" + mdp.name + "'");
  const auto q = q_values(mdp, values);
  Policy policy(mdp.state_count());
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    const auto& acts = mdp.actions(s);
    if (acts.empty()) continue;
    // actions are sorted by id, so strict comparison keeps the smallest id on ties
    std::size_t best = 0;
    for (std::size_t i = 1; i < acts.size(); ++i)
      if (q[s][i] > q[s][best]) best = i;
    policy.set(s, acts[best].id);
  }
  return policy;
}

Reachability reachable_under(const GroundMdp& mdp, const Policy& policy, std::span<const StateId> starts) {
  Reachability r;
  r.reached.assign(mdp.state_count(), false);
  std::vector<StateId> stack;
  for (StateId s : starts) {
    if (s >= mdp.state_count()) throw Error(Errc::invalid_parameter, "start state out of range", {s});
    if (!r.reached[s]) {
      r.reached[s] = true;
      stack.push_back(s);
    }
  }
  std::vector<bool> gap(mdp.state_count(), false);
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    if (mdp.is_terminal(s)) continue;
    if (!policy.covers(s)) {
      gap[s] = true;
      continue;
    }
    for (const auto& [a, p] : policy.choice[s]) {
      if (p <= 0.0) continue;
      const ActionSpec* spec = mdp.find_action(s, a);
      if (!spec) throw Error(Errc::invalid_mdp, "policy chooses unavailable action at state " + std::to_string(s), {s});
      for (const auto& o : spec->outcomes) {
        if (o.prob > 0.0 && !r.reached[o.next]) {
          r.reached[o.next] = true;
          stack.push_back(o.next);
        }
      }
    }
  }
  for (StateId s = 0; s < gap.size(); ++s)
    if (gap[s]) r.gaps.push_back(s);
  return r;
}

ValueFunction policy_evaluation(const GroundMdp& mdp, const Policy& policy, double tolerance,
                                std::span<const StateId> starts) {
  if (!(tolerance > 0.0)) throw Error(Errc::invalid_parameter, "tolerance must be positive");
  if (policy.state_count() != mdp.state_count())
    throw Error(Errc::pairing_mismatch, "policy is not sized for mdp '" + mdp.name + "'");
  std::vector<StateId> all;
  if (starts.empty()) {
    for (StateId s = 0; s < mdp.state_count(); ++s)
      if (!mdp.is_terminal(s)) all.push_back(s);
    starts = all;
  }
  const Reachability reach = reachable_under(mdp, policy, starts);
  if (!reach.gaps.empty()) {
    std::string msg = "policy does not cover reachable states:";
    for (StateId s : reach.gaps) msg += " " + std::to_string(s);
    throw Error(Errc::coverage_gap, msg, reach.gaps);
  }

  const std::size_t n = mdp.state_count();
  std::vector<StateId> active;
  for (StateId s = 0; s < n; ++s)
    if (reach.reached[s] && !mdp.is_terminal(s)) active.push_back(s);

  // Resolve action specs once.
  std::vector<std::vector<std::pair<const ActionSpec*, double>>> rows(n);
  for (StateId s : active)
    for (const auto& [a, p] : policy.choice[s]) rows[s].emplace_back(mdp.find_action(s, a), p);

  const double threshold = sweep_threshold(tolerance, mdp.discount);
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (std::size_t sweep = 0; sweep < kDefaultMaxSweeps * 10; ++sweep) {
    double residual = 0.0;
    for (StateId s : active) {
      double value = 0.0;
      for (const auto& [spec, p] : rows[s]) value += p * (spec->reward + mdp.discount * expectation(*spec, v));
      check_finite(value, s);
      next[s] = value;
      residual = std::max(residual, std::abs(value - v[s]));
    }
    for (StateId s : active) v[s] = next[s];
    if (residual <= threshold) break;
  }
  return ValueFunction{mdp.name, std::move(v)};
}

}  // namespace construal
