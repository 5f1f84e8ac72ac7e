#include "construal/lifting.hpp"

#include <algorithm>

namespace construal {

LiftedPolicy lift_policy(const Policy& abstract_policy, const HomomorphismMap& map, const GroundMdp& ground) {
  if (map.ground_id != ground.name)
    throw Error(Errc::endpoint_mismatch, "map ground '" + map.ground_id + "' is not '" + ground.name + "'");

  // In-scope ground actions per state, grouped by abstract image.
  std::map<StateId, std::map<ActionId, ActionId>> smallest;
  std::set<StateId> touched;
  for (const auto& sa : map.scope) {
    touched.insert(sa.first);
    const ActionId b = map.g.at(sa);
    auto& slot = smallest[sa.first];
    auto it = slot.find(b);
    if (it == slot.end() || sa.second < it->second) slot[b] = sa.second;
  }

  LiftedPolicy out;
  out.base = Policy(ground.state_count(), abstract_policy.kind);
  for (const auto& [s, x] : map.f) {
    if (s >= ground.state_count()) throw Error(Errc::invalid_map, "f maps out-of-range ground state", {s});
    if (ground.is_terminal(s)) continue;
    if (!abstract_policy.covers(x)) {
      if (touched.count(s))
        throw Error(Errc::missing_abstract_choice,
                    "abstract policy undefined at abstract state " + std::to_string(x) + " (image of ground state " +
                        std::to_string(s) + ")",
                    {s});
      out.gaps.push_back(s);
      continue;
    }
    auto slot = smallest.find(s);
    std::vector<std::pair<ActionId, double>> row;
    bool ok = slot != smallest.end();
    if (ok) {
      for (const auto& [b, p] : abstract_policy.choice[x]) {
        auto it = slot->second.find(b);
        if (it == slot->second.end()) {
          if (p > 0.0) ok = false;
          continue;
        }
        row.emplace_back(it->second, p);
      }
    }
    if (!ok || row.empty()) {
      out.gaps.push_back(s);
      continue;
    }
    if (abstract_policy.kind == PolicyKind::deterministic) {
      out.base.set(s, row.front().first);
    } else {
      std::sort(row.begin(), row.end());
      out.base.choice[s] = std::move(row);
    }
    out.coverage.push_back(s);
  }
  return out;
}

ValueFunction lift_values(const ValueFunction& abstract_values, const HomomorphismMap& map, const GroundMdp& ground) {
  if (abstract_values.mdp_name != map.abstract_id)
    throw Error(Errc::pairing_mismatch,
                "values of '" + abstract_values.mdp_name + "' are not paired with '" + map.abstract_id + "'");
  ValueFunction v{ground.name, std::vector<double>(ground.state_count(), 0.0)};
  for (const auto& [s, x] : map.f) {
    if (s >= ground.state_count() || x >= abstract_values.values.size())
      throw Error(Errc::invalid_map, "map does not fit the value function", {s});
    if (!ground.is_terminal(s)) v.values[s] = abstract_values.values[x];
  }
  return v;
}

TransferReport transfer_report(const GroundMdp& ground, const LiftedPolicy& lifted, double tolerance, bool strict) {
  const Policy& pi = lifted.base;
  const std::size_t n = ground.state_count();
  const Reachability reach = reachable_under(ground, pi, lifted.coverage);
  if (strict && !reach.gaps.empty()) {
    std::string msg = "lifted policy reaches uncovered states:";
    for (StateId s : reach.gaps) msg += " " + std::to_string(s);
    throw Error(Errc::coverage_gap, msg, reach.gaps);
  }

  // A covered state is unsafe when an uncovered non-terminal state is
  // reachable from it.
  std::vector<bool> bad(n, false);
  for (StateId s = 0; s < n; ++s) bad[s] = !ground.is_terminal(s) && !pi.covers(s);
  for (bool changed = true; changed;) {
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (bad[s] || !pi.covers(s)) continue;
      for (const auto& [a, p] : pi.choice[s]) {
        if (p <= 0.0) continue;
        for (const auto& o : ground.find_action(s, a)->outcomes)
          if (o.prob > 0.0 && bad[o.next]) bad[s] = true;
      }
      if (bad[s]) changed = true;
    }
  }

  TransferReport report;
  report.ground_return.assign(n, std::nullopt);
  std::vector<StateId> safe;
  for (StateId s : lifted.coverage) {
    if (bad[s])
      report.excluded.push_back(s);
    else
      safe.push_back(s);
  }
  report.warning = !report.excluded.empty() || !reach.gaps.empty() || !lifted.gaps.empty();
  if (safe.empty()) return report;

  const ValueFunction v_pi = policy_evaluation(ground, pi, tolerance, safe);
  const ValueIterationResult opt = value_iteration(ground, SolverOptions{tolerance, kDefaultMaxSweeps});
  double gap = 0.0;
  for (StateId s : safe) {
    report.ground_return[s] = v_pi.values[s];
    gap = std::max(gap, opt.values.values[s] - v_pi.values[s]);
  }
  report.optimality_gap = gap;
  return report;
}

GapFill fill_gaps(const GroundMdp& ground, const LiftedPolicy& lifted, const ValueFunction& warm_start,
                  const SolverOptions& options) {
  GapFill out;
  out.solve = value_iteration(ground, options, &warm_start);
  const Policy greedy = greedy_policy(ground, out.solve.values);
  out.policy = lifted.base;
  for (StateId s = 0; s < ground.state_count(); ++s)
    if (!ground.is_terminal(s) && !out.policy.covers(s)) out.policy.choice[s] = greedy.choice[s];
  return out;
}

}  // namespace construal
