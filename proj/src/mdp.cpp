#include "construal/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace construal {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_mdp: return "invalid-mdp";
    case Errc::parse: return "parse";
    case Errc::numeric_failure: return "numeric-failure";
    case Errc::pairing_mismatch: return "pairing-mismatch";
    case Errc::coverage_gap: return "coverage-gap";
    case Errc::unmapped_mass: return "unmapped-mass";
    case Errc::endpoint_mismatch: return "endpoint-mismatch";
    case Errc::empty_scope: return "empty-scope";
    case Errc::invalid_map: return "invalid-map";
    case Errc::inconsistent_interface: return "inconsistent-interface";
    case Errc::missing_abstract_choice: return "missing-abstract-choice";
    case Errc::hint_conflict: return "hint-conflict";
    case Errc::invalid_budget: return "invalid-budget";
    case Errc::dangling_endpoint: return "dangling-endpoint";
    case Errc::composition_conflict: return "composition-conflict";
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::io: return "io";
  }
  return "unknown";
}

GroundMdp::GroundMdp(std::string name, std::size_t state_count, double discount)
    : name(std::move(name)), discount(discount), states(state_count) {}

const ActionSpec* GroundMdp::find_action(StateId s, ActionId a) const {
  const auto& acts = states.at(s).actions;
  auto it = std::lower_bound(acts.begin(), acts.end(), a,
                             [](const ActionSpec& x, ActionId id) { return x.id < id; });
  if (it == acts.end() || it->id != a) return nullptr;
  return &*it;
}

std::size_t GroundMdp::pair_count() const {
  std::size_t n = 0;
  for (const auto& st : states) n += st.actions.size();
  return n;
}

std::vector<StateAction> GroundMdp::pairs() const {
  std::vector<StateAction> out;
  out.reserve(pair_count());
  for (StateId s = 0; s < states.size(); ++s)
    for (const auto& a : states[s].actions) out.emplace_back(s, a.id);
  return out;
}

void GroundMdp::set_action(StateId s, ActionSpec spec) {
  std::sort(spec.outcomes.begin(), spec.outcomes.end(),
            [](const Outcome& x, const Outcome& y) { return x.next < y.next; });
  std::vector<Outcome> merged;
  for (const auto& o : spec.outcomes) {
    if (!merged.empty() && merged.back().next == o.next)
      merged.back().prob += o.prob;
    else
      merged.push_back(o);
  }
  spec.outcomes = std::move(merged);
  auto& acts = states.at(s).actions;
  auto it = std::lower_bound(acts.begin(), acts.end(), spec.id,
                             [](const ActionSpec& x, ActionId id) { return x.id < id; });
  if (it != acts.end() && it->id == spec.id)
    *it = std::move(spec);
  else
    acts.insert(it, std::move(spec));
}

void GroundMdp::add_tag(StateId s, const std::string& tag) {
  auto& tags = states.at(s).tags;
  auto it = std::lower_bound(tags.begin(), tags.end(), tag);
  if (it == tags.end() || *it != tag) tags.insert(it, tag);
}

void GroundMdp::mark_terminal(StateId s) {
  states.at(s).terminal = true;
  states.at(s).actions.clear();
}

double GroundMdp::reward_range() const {
  double r = 0.0;
  for (const auto& st : states)
    for (const auto& a : st.actions) r = std::max(r, std::abs(a.reward));
  return r;
}

std::vector<double> GroundMdp::start_weights() const {
  std::vector<double> w(states.size(), 0.0);
  if (states.empty()) return w;
  if (starts.empty()) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(states.size()));
    return w;
  }
  double total = 0.0;
  for (const auto& [s, p] : starts) total += p;
  for (const auto& [s, p] : starts) w.at(s) += p / total;
  return w;
}

void GroundMdp::validate() const {
  auto fail = [&](StateId s, const std::string& msg) {
    std::ostringstream os;
    os << "mdp '" << name << "' state " << s << ": " << msg;
    throw Error(Errc::invalid_mdp, os.str(), {s});
  };
  if (states.empty()) throw Error(Errc::invalid_mdp, "mdp '" + name + "' has no states");
  if (!(discount >= 0.0 && discount < 1.0))
    throw Error(Errc::invalid_mdp, "mdp '" + name + "' discount must lie in [0, 1)");
  const std::size_t n = states.size();
  for (StateId s = 0; s < n; ++s) {
    const auto& st = states[s];
    if (st.terminal && !st.actions.empty()) fail(s, "terminal state has actions");
    if (!st.terminal && st.actions.empty()) fail(s, "non-terminal state has no actions");
    for (std::size_t i = 0; i < st.actions.size(); ++i) {
      const auto& a = st.actions[i];
      if (i > 0 && st.actions[i - 1].id >= a.id) fail(s, "actions not sorted by id");
      if (!std::isfinite(a.reward)) fail(s, "non-finite reward");
      if (a.outcomes.empty()) fail(s, "action " + std::to_string(a.id) + " has no outcomes");
      double sum = 0.0;
      for (std::size_t k = 0; k < a.outcomes.size(); ++k) {
        const auto& o = a.outcomes[k];
        if (o.next >= n) fail(s, "successor out of range");
        if (k > 0 && a.outcomes[k - 1].next >= o.next) fail(s, "outcomes not sorted");
        if (!(o.prob >= 0.0) || !std::isfinite(o.prob)) fail(s, "negative probability");
        sum += o.prob;
      }
      if (std::abs(sum - 1.0) > kDistributionTolerance)
        fail(s, "action " + std::to_string(a.id) + " distribution sums to " + std::to_string(sum));
    }
  }
  double total = 0.0;
  for (const auto& [s, p] : starts) {
    if (s >= n) throw Error(Errc::invalid_mdp, "start state out of range", {s});
    if (!(p > 0.0) || !std::isfinite(p)) throw Error(Errc::invalid_mdp, "start weight must be positive", {s});
    total += p;
  }
  (void)total;
}

std::optional<ActionId> Policy::action(StateId s) const {
  if (!covers(s)) return std::nullopt;
  const auto& row = choice[s];
  auto best = row.front();
  for (const auto& c : row)
    if (c.second > best.second || (c.second == best.second && c.first < best.first)) best = c;
  return best.first;
}

std::vector<StateId> Policy::coverage() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < choice.size(); ++s)
    if (!choice[s].empty()) out.push_back(s);
  return out;
}

void Policy::validate(const GroundMdp& mdp) const {
  if (choice.size() != mdp.state_count())
    throw Error(Errc::pairing_mismatch, "policy size does not match mdp '" + mdp.name + "'");
  for (StateId s = 0; s < choice.size(); ++s) {
    if (choice[s].empty()) continue;
    double sum = 0.0;
    for (const auto& [a, p] : choice[s]) {
      if (!mdp.find_action(s, a))
        throw Error(Errc::invalid_mdp,
                    "policy chooses unavailable action " + std::to_string(a) + " at state " + std::to_string(s),
                    {s});
      if (p < 0.0) throw Error(Errc::invalid_mdp, "negative policy probability", {s});
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance)
      throw Error(Errc::invalid_mdp, "policy row does not sum to 1 at state " + std::to_string(s), {s});
    if (kind == PolicyKind::deterministic && choice[s].size() != 1)
      throw Error(Errc::invalid_mdp, "deterministic policy with several choices", {s});
  }
}

double total_variation(const std::vector<Outcome>& p, const std::vector<Outcome>& q) {
  double l1 = 0.0;
  std::size_t i = 0, j = 0;
  while (i < p.size() || j < q.size()) {
    if (j == q.size() || (i < p.size() && p[i].next < q[j].next)) {
      l1 += std::abs(p[i++].prob);
    } else if (i == p.size() || q[j].next < p[i].next) {
      l1 += std::abs(q[j++].prob);
    } else {
      l1 += std::abs(p[i++].prob - q[j++].prob);
    }
  }
  return 0.5 * l1;
}

}  // namespace construal
