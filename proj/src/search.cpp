#include "construal/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "construal/solver.hpp"

namespace construal {

namespace {

constexpr long kUndecided = -1;
constexpr long kUnmapped = -2;

struct Candidate {
  StateId x;
  std::size_t matched = 0;  // partial mode: actions with an admissible match
  double deviation = 0.0;   // partial mode: summed best deviations
  std::size_t rank = 0;     // position in the static similarity order
};

class Searcher {
 public:
  Searcher(const GroundMdp& target, const GroundMdp& source, const HintSet& hints, const SearchBudget& budget,
           const SearchOptions& options)
      : t_(target), src_(source), budget_(budget), opt_(options), n_(target.state_count()), m_(source.state_count()) {
    strict_ = budget.mode == SearchMode::strict;
    assign_.assign(n_, kUndecided);
    mass_.assign(m_, 0.0);
    load_hints(hints);
    build_graph();
    build_static_candidates();
    if (!strict_ && opt_.occupancy_weighting) build_occupancy();
    total_pairs_ = 0;
    for (StateId s = 0; s < n_; ++s)
      if (strict_ || opt_.allowed.empty() || opt_.allowed[s]) total_pairs_ += t_.actions(s).size();
  }

  SearchResult run() {
    std::size_t decided = 0;
    for (StateId s = 0; s < n_; ++s) {
      if (assign_[s] != kUndecided) {
        ++decided;
      } else if (!strict_ && !opt_.allowed.empty() && !opt_.allowed[s]) {
        assign_[s] = kUnmapped;
        ++decided;
      }
    }
    result_.best_map.ground_id = t_.name;
    result_.best_map.abstract_id = src_.name;
    bool hints_ok = true;
    if (strict_) {
      for (const auto& [s, x] : hinted_states_)
        if (!static_ok(s, x) || !state_consistent(s, static_cast<StateId>(x))) hints_ok = false;
    }
    if (hints_ok) dfs(decided);
    result_.expansions_used = expansions_;
    result_.exhausted = !budget_hit_;
    return std::move(result_);
  }

 private:
  void load_hints(const HintSet& hints) {
    for (const auto& [s, x] : hints.states) {
      if (s >= n_ || x >= m_) throw Error(Errc::hint_conflict, "state hint out of range", {s});
      if (assign_[s] != kUndecided) throw Error(Errc::hint_conflict, "ground state hinted twice", {s});
      assign_[s] = static_cast<long>(x);
      hinted_states_.emplace_back(s, static_cast<long>(x));
    }
    for (const auto& [sa, b] : hints.actions) {
      const auto [s, a] = sa;
      if (s >= n_) throw Error(Errc::hint_conflict, "action hint state out of range", {s});
      if (!t_.find_action(s, a))
        throw Error(Errc::hint_conflict, "action hint names unavailable ground action " + std::to_string(a), {s});
      if (!action_hints_.emplace(sa, b).second) throw Error(Errc::hint_conflict, "ground pair hinted twice", {s});
      if (assign_[s] >= 0 && !src_.find_action(static_cast<StateId>(assign_[s]), b))
        throw Error(Errc::hint_conflict,
                    "action hint maps to action " + std::to_string(b) + " unavailable at the hinted abstract state", {s});
    }
  }

  void build_graph() {
    preds_.assign(n_, {});
    neighbours_.assign(n_, {});
    for (StateId s = 0; s < n_; ++s) {
      const auto& acts = t_.actions(s);
      std::set<StateId> nb;
      for (std::size_t i = 0; i < acts.size(); ++i) {
        for (const auto& o : acts[i].outcomes) {
          if (o.prob <= 0.0) continue;
          if (o.next != s) {
            preds_[o.next].emplace_back(s, i);
            nb.insert(o.next);
          }
        }
      }
      for (StateId x : nb) {
        neighbours_[s].push_back(x);
        neighbours_[x].push_back(s);
      }
    }
    for (auto& p : preds_) {
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    for (auto& nb : neighbours_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  // Terminal flags must agree; in strict mode every ground reward must also
  // occur at the abstract state.
  bool static_ok(StateId s, long x) const {
    const auto xs = static_cast<StateId>(x);
    if (t_.is_terminal(s) != src_.is_terminal(xs)) return false;
    for (const auto& a : t_.actions(s)) {
      auto hint = action_hints_.find({s, a.id});
      if (hint != action_hints_.end() && !src_.find_action(xs, hint->second)) return false;
      if (!strict_) continue;
      bool any = false;
      for (const auto& b : src_.actions(xs))
        if (std::abs(a.reward - b.reward) <= opt_.strictness_tol) any = true;
      if (!any) return false;
    }
    return true;
  }

  void build_static_candidates() {
    const auto sig_t = state_signatures(t_, opt_.signature_horizon);
    const auto sig_s = state_signatures(src_, opt_.signature_horizon);
    static_.assign(n_, {});
    similarity_.assign(n_, std::vector<double>(m_, 0.0));
    for (StateId s = 0; s < n_; ++s) {
      std::vector<std::pair<double, StateId>> scored;
      for (StateId x = 0; x < m_; ++x) {
        similarity_[s][x] = signature_similarity(sig_t[s], sig_s[x]);
        if (static_ok(s, static_cast<long>(x))) scored.emplace_back(-similarity_[s][x], x);
      }
      std::sort(scored.begin(), scored.end());
      for (const auto& [neg, x] : scored) static_[s].push_back(x);
    }
  }

  void build_occupancy() {
    const auto vi = value_iteration(src_);
    const Policy pi = greedy_policy(src_, vi.values);
    std::vector<double> d(m_, 0.0), start(m_, 1.0 / static_cast<double>(m_)), cur = start;
    for (int step = 0; step < 2000; ++step) {
      std::vector<double> next(m_, 0.0);
      double norm = 0.0;
      for (StateId x = 0; x < m_; ++x) {
        d[x] += cur[x];
        if (!pi.covers(x)) continue;
        for (const auto& o : src_.find_action(x, *pi.action(x))->outcomes) next[o.next] += src_.discount * cur[x] * o.prob;
      }
      for (double v : next) norm += v;
      cur.swap(next);
      if (norm < 1e-14) break;
    }
    double peak = 0.0;
    for (StateId x = 0; x < m_; ++x)
      if (pi.covers(x)) peak = std::max(peak, d[x]);
    for (StateId x = 0; x < m_; ++x)
      if (pi.covers(x)) occupancy_[{x, *pi.action(x)}] = peak > 0.0 ? d[x] / peak : 0.0;
  }

  double pair_weight(StateId x, ActionId b) const {
    if (!opt_.occupancy_weighting) return 1.0;
    auto it = occupancy_.find({x, b});
    return 0.5 + 0.5 * (it == occupancy_.end() ? 0.0 : it->second);
  }

  // Deviation lower bound of ground action `a` under abstract action `b` at x
  // given the current assignment: reward gap plus mass that already
  // overshoots the abstract distribution (unmapped successors included).
  double partial_deviation(const ActionSpec& a, const ActionSpec& b) {
    double excess = 0.0;
    touched_.clear();
    for (const auto& o : a.outcomes) {
      const long y = assign_[o.next];
      if (y == kUndecided) continue;
      if (y == kUnmapped) {
        excess += o.prob;
        continue;
      }
      if (mass_[y] == 0.0) touched_.push_back(static_cast<StateId>(y));
      mass_[y] += o.prob;
    }
    for (StateId y : touched_) {
      auto it = std::lower_bound(b.outcomes.begin(), b.outcomes.end(), y,
                                 [](const Outcome& o, StateId v) { return o.next < v; });
      const double q = (it != b.outcomes.end() && it->next == y) ? it->prob : 0.0;
      excess += std::max(0.0, mass_[y] - q);
      mass_[y] = 0.0;
    }
    return std::abs(a.reward - b.reward) + excess;
  }

  double best_pair_deviation(StateId s, const ActionSpec& a, StateId x) {
    auto hint = action_hints_.find({s, a.id});
    if (hint != action_hints_.end()) {
      const ActionSpec* b = src_.find_action(x, hint->second);
      return b ? partial_deviation(a, *b) : std::numeric_limits<double>::infinity();
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : src_.actions(x)) best = std::min(best, partial_deviation(a, b));
    return best;
  }

  bool pair_feasible(StateId s, const ActionSpec& a, StateId x) {
    auto hint = action_hints_.find({s, a.id});
    if (hint != action_hints_.end()) {
      const ActionSpec* b = src_.find_action(x, hint->second);
      return b && std::abs(a.reward - b->reward) <= opt_.strictness_tol &&
             partial_deviation(a, *b) <= 2.0 * opt_.strictness_tol;
    }
    for (const auto& b : src_.actions(x)) {
      if (std::abs(a.reward - b.reward) > opt_.strictness_tol) continue;
      if (partial_deviation(a, b) <= 2.0 * opt_.strictness_tol) return true;
    }
    return false;
  }

  // Strict consistency of s -> x with every decided neighbour.
  bool state_consistent(StateId s, StateId x) {
    const long saved = assign_[s];
    assign_[s] = static_cast<long>(x);
    bool ok = true;
    for (const auto& a : t_.actions(s))
      if (!pair_feasible(s, a, x)) {
        ok = false;
        break;
      }
    if (ok) {
      for (const auto& [p, ai] : preds_[s]) {
        if (assign_[p] < 0) continue;
        if (!pair_feasible(p, t_.actions(p)[ai], static_cast<StateId>(assign_[p]))) {
          ok = false;
          break;
        }
      }
    }
    assign_[s] = saved;
    return ok;
  }

  std::vector<Candidate> candidates(StateId s) {
    std::vector<Candidate> out;
    for (std::size_t rank = 0; rank < static_[s].size(); ++rank) {
      const StateId x = static_[s][rank];
      if (strict_) {
        if (state_consistent(s, x)) out.push_back({x, 0, 0.0, rank});
        continue;
      }
      const long saved = assign_[s];
      assign_[s] = static_cast<long>(x);
      Candidate c{x, 0, 0.0, rank};
      for (const auto& a : t_.actions(s)) {
        const double d = best_pair_deviation(s, a, x);
        if (d <= opt_.max_pair_deviation) {
          ++c.matched;
          c.deviation += d;
        }
      }
      assign_[s] = saved;
      if (t_.is_terminal(s) || c.matched > 0) out.push_back(c);
    }
    if (!strict_) {
      std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.matched != b.matched) return a.matched > b.matched;
        if (a.deviation != b.deviation) return a.deviation < b.deviation;
        return a.rank < b.rank;
      });
    }
    return out;
  }

  std::size_t decided_neighbours(StateId s) const {
    std::size_t k = 0;
    for (StateId v : neighbours_[s])
      if (assign_[v] != kUndecided) ++k;
    return k;
  }

  void dfs(std::size_t decided) {
    if (done_ || budget_hit_) return;
    if (decided == n_) {
      strict_ ? strict_leaf() : partial_leaf();
      return;
    }
    // most constrained variable
    StateId var = n_;
    std::vector<Candidate> best;
    std::size_t best_nb = 0;
    for (StateId s = 0; s < n_; ++s) {
      if (assign_[s] != kUndecided) continue;
      auto c = candidates(s);
      if (strict_ && c.empty()) return;
      const std::size_t nb = decided_neighbours(s);
      if (var == n_ || c.size() < best.size() || (c.size() == best.size() && nb > best_nb)) {
        var = s;
        best = std::move(c);
        best_nb = nb;
      }
    }
    std::vector<long> values;
    for (const auto& c : best) values.push_back(static_cast<long>(c.x));
    if (!strict_) {
      // Equally similar candidates: prefer abstract states with fewer preimages.
      std::vector<std::size_t> used(m_, 0);
      for (long a : assign_)
        if (a >= 0) ++used[static_cast<std::size_t>(a)];
      std::stable_sort(values.begin(), values.end(), [&](long a, long b) {
        const double sa = similarity_[var][static_cast<std::size_t>(a)], sb = similarity_[var][static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return used[static_cast<std::size_t>(a)] < used[static_cast<std::size_t>(b)];
      });
      values.push_back(kUnmapped);
    }
    for (long v : values) {
      if (expansions_ >= budget_.max_node_expansions) {
        budget_hit_ = true;
        return;
      }
      ++expansions_;
      assign_[var] = v;
      dfs(decided + 1);
      assign_[var] = kUndecided;
      if (done_ || budget_hit_) return;
    }
  }

  ActionId choose_action(const std::map<StateId, StateId>& f, StateId s, const ActionSpec& a, StateId x,
                         PairDeviation& dev) const {
    auto hint = action_hints_.find({s, a.id});
    if (hint != action_hints_.end()) {
      dev = pair_deviation(src_, f, a, x, hint->second);
      return hint->second;
    }
    ActionId best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (const auto& b : src_.actions(x)) {
      const PairDeviation d = pair_deviation(src_, f, a, x, b.id);
      if (d.reward + d.transition < best_total) {
        best_total = d.reward + d.transition;
        best = b.id;
        dev = d;
      }
    }
    return best;
  }

  HomomorphismMap assigned_map(std::map<StateAction, PairDeviation>& devs) const {
    HomomorphismMap map;
    map.ground_id = t_.name;
    map.abstract_id = src_.name;
    for (StateId s = 0; s < n_; ++s)
      if (assign_[s] >= 0) map.f[s] = static_cast<StateId>(assign_[s]);
    for (const auto& [s, x] : map.f) {
      for (const auto& a : t_.actions(s)) {
        if (src_.actions(x).empty()) continue;
        PairDeviation d;
        map.g[{s, a.id}] = choose_action(map.f, s, a, x, d);
        devs[{s, a.id}] = d;
      }
    }
    return map;
  }

  void strict_leaf() {
    std::map<StateAction, PairDeviation> devs;
    HomomorphismMap map = assigned_map(devs);
    for (const auto& [sa, b] : map.g) map.scope.insert(sa);
    if (map.scope.empty()) return;
    HomCertificate cert = check_homomorphism(t_, src_, map, opt_.strictness_tol);
    if (!cert.strict || map.scope.size() != total_pairs_) return;
    result_.found = true;
    result_.score = cert.coverage_fraction - budget_.partial_penalty * (cert.max_reward_deviation + cert.max_transition_deviation);
    result_.best_map = std::move(map);
    result_.certificate = std::move(cert);
    done_ = true;
  }

  void partial_leaf() {
    if (total_pairs_ == 0) return;
    std::map<StateAction, PairDeviation> devs;
    HomomorphismMap map = assigned_map(devs);
    std::vector<std::pair<double, StateAction>> order;
    for (const auto& [sa, d] : devs) order.emplace_back(d.reward + d.transition, sa);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    // Best prefix of pairs sorted by deviation.
    const double total = static_cast<double>(total_pairs_);
    double best_score = 0.0;
    std::size_t best_k = 0;
    double covered = 0.0, max_r = 0.0, max_t = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& sa = order[k].second;
      const auto& d = devs.at(sa);
      covered += pair_weight(map.f.at(sa.first), map.g.at(sa));
      max_r = std::max(max_r, d.reward);
      max_t = std::max(max_t, d.transition);
      const double score = covered / total - budget_.partial_penalty * (max_r + max_t);
      if (score >= best_score) {
        best_score = score;
        best_k = k + 1;
      }
    }
    if (best_k == 0) return;
    if (result_.found && best_score <= result_.score) return;
    for (std::size_t k = 0; k < best_k; ++k) map.scope.insert(order[k].second);
    result_.certificate = check_homomorphism(t_, src_, map, opt_.strictness_tol);
    result_.best_map = std::move(map);
    result_.score = best_score;
    result_.found = true;
    if (best_score >= 1.0 - 1e-12) done_ = true;
  }

  const GroundMdp& t_;
  const GroundMdp& src_;
  SearchBudget budget_;
  const SearchOptions& opt_;
  std::size_t n_, m_;
  bool strict_ = true;
  std::size_t total_pairs_ = 0;

  std::vector<long> assign_;
  std::vector<std::pair<StateId, long>> hinted_states_;
  std::map<StateAction, ActionId> action_hints_;
  std::vector<std::vector<std::pair<StateId, std::size_t>>> preds_;
  std::vector<std::vector<StateId>> neighbours_;
  std::vector<std::vector<StateId>> static_;
  std::vector<std::vector<double>> similarity_;
  std::map<StateAction, double> occupancy_;
  std::vector<double> mass_;
  std::vector<StateId> touched_;

  std::uint64_t expansions_ = 0;
  bool budget_hit_ = false;
  bool done_ = false;
  SearchResult result_;
};

}  // namespace

SearchResult find_homomorphism(const GroundMdp& target, const GroundMdp& source, const HintSet& hints,
                               const SearchBudget& budget, const SearchOptions& options) {
  if (budget.max_node_expansions == 0) throw Error(Errc::invalid_budget, "search budget must allow at least one expansion");
  if (budget.partial_penalty < 0.0) throw Error(Errc::invalid_budget, "partial penalty must be non-negative");
  if (!options.allowed.empty() && options.allowed.size() != target.state_count())
    throw Error(Errc::invalid_parameter, "allowed mask does not match the target");
  Searcher searcher(target, source, hints, budget, options);
  return searcher.run();
}

}  // namespace construal
