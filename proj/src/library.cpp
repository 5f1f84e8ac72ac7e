#include "construal/library.hpp"

#include <algorithm>
#include <deque>

#include "construal/signature.hpp"
#include "construal/solver.hpp"

namespace construal {

void Module::validate() const {
  fragment.validate();
  const std::size_t n = fragment.state_count();
  for (StateId s : interface.entries)
    if (s >= n) throw Error(Errc::inconsistent_interface, "module " + id + ": entry out of range", {s});
  for (StateId s : interface.exits)
    if (s >= n || !fragment.is_terminal(s))
      throw Error(Errc::inconsistent_interface, "module " + id + ": exits must be terminal", {s});
  for (const auto& [element, d] : discard_count) {
    const auto it = use_count.find(element);
    if (d > (it == use_count.end() ? 0 : it->second))
      throw Error(Errc::invalid_parameter, "module " + id + ": discard count exceeds use count for " + element);
  }
  if (policy) {
    if (policy->state_count() != n) throw Error(Errc::pairing_mismatch, "module " + id + ": policy size mismatch");
    policy->validate(fragment);
  }
  if (values && values->values.size() != n)
    throw Error(Errc::pairing_mismatch, "module " + id + ": value function size mismatch");
}

void Library::add(Module module) {
  module.validate();
  const std::string id = module.id;
  signature_index[id] = signature_multiset(module.fragment);
  modules[id] = std::move(module);
}

void Library::erase(const std::string& id) {
  modules.erase(id);
  signature_index.erase(id);
}

void Library::rebuild_index() {
  signature_index.clear();
  for (const auto& [id, m] : modules) signature_index[id] = signature_multiset(m.fragment);
}

std::string Library::fresh_id() {
  std::string id;
  do {
    id = "m" + std::to_string(next_serial++);
  } while (modules.count(id));
  return id;
}

const Module* Library::find(const std::string& id) const {
  const auto it = modules.find(id);
  return it == modules.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::uint64_t> distinct(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Retrieval retrieve_candidates(const Library& library, const GroundMdp& target, std::size_t k,
                              const std::set<std::string>& excluded) {
  Retrieval out;
  if (library.modules.empty() || k == 0) return out;
  const auto t = distinct(signature_multiset(target));
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [id, sigs] : library.signature_index) {
    if (excluded.count(id)) continue;
    ++out.comparisons;
    ranked.emplace_back(-multiset_jaccard(t, distinct(sigs)), id);
  }
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.ids.push_back(ranked[i].second);
  return out;
}

ConstrueResult construe(const Library& library, const GroundMdp& task, const SearchBudget& budget,
                        std::size_t max_modules, const ConstrueOptions& options) {
  if (max_modules < 1) throw Error(Errc::invalid_parameter, "max_modules must be at least 1");
  task.validate();
  const std::size_t n = task.state_count();
  const double total_pairs = static_cast<double>(task.pair_count());
  ConstrueResult out;
  out.ledger.budget = options.cost_budget;

  std::vector<bool> owned(n, false);
  std::vector<long> owner(n, -1);  // index into out.uses
  std::size_t covered = 0;
  SearchBudget partial = budget;
  partial.mode = SearchMode::partial;

  for (std::size_t round = 0; round < max_modules; ++round) {
    std::vector<bool> allowed(n);
    bool any = false;
    for (StateId s = 0; s < n; ++s) {
      allowed[s] = !owned[s];
      any = any || (allowed[s] && !task.is_terminal(s));
    }
    if (!any) break;
    const Retrieval r = retrieve_candidates(library, task, options.top_k, options.excluded);
    out.ledger.construal_cost += r.comparisons;
    std::optional<SearchResult> best;
    std::string best_id;
    for (const auto& id : r.ids) {
      SearchOptions so = options.search;
      so.allowed = allowed;
      SearchResult res = find_homomorphism(task, library.modules.at(id).fragment, {}, partial, so);
      out.ledger.construal_cost += res.expansions_used;
      if (res.found && (!best || res.score > best->score)) {
        best = std::move(res);
        best_id = id;
      }
    }
    if (!best) break;

    // Keep only states whose every pair is covered.
    HomomorphismMap map;
    map.ground_id = task.name;
    map.abstract_id = best_id;
    std::size_t gained = 0;
    for (const auto& [s, x] : best->best_map.f) {
      if (!allowed[s]) continue;
      const auto& acts = task.actions(s);
      const bool full = std::all_of(acts.begin(), acts.end(),
                                    [&](const ActionSpec& a) { return best->best_map.scope.count({s, a.id}) > 0; });
      if (!full) continue;
      map.f[s] = x;
      for (const auto& a : acts) {
        map.g[{s, a.id}] = best->best_map.g.at({s, a.id});
        map.scope.insert({s, a.id});
      }
      gained += acts.size();
    }
    if (total_pairs == 0.0 || static_cast<double>(gained) / total_pairs < options.min_gain) break;
    const long use_index = static_cast<long>(out.uses.size());
    for (const auto& [s, x] : map.f) {
      owned[s] = true;
      owner[s] = use_index;
    }
    covered += gained;
    out.uses.push_back({best_id, "i" + std::to_string(out.uses.size() + 1), std::move(map)});
  }

  std::vector<ModuleInstance> instances;
  std::vector<HomomorphismMap> bindings;
  std::vector<Gluing> gluings;
  for (const auto& use : out.uses) {
    const Module& m = library.modules.at(use.module_id);
    ModuleInstance inst{use.instance_id, use.module_id, m.fragment, {}};
    for (StateId x = 0; x < m.fragment.state_count(); ++x) {
      inst.interface.entries.push_back(x);
      if (m.fragment.is_terminal(x)) inst.interface.exits.push_back(x);
    }
    instances.push_back(std::move(inst));
    HomomorphismMap b = use.map;
    b.abstract_id = use.instance_id;
    bindings.push_back(std::move(b));
  }

  std::vector<StateId> rest;
  for (StateId s = 0; s < n; ++s)
    if (!owned[s]) rest.push_back(s);
  if (!rest.empty()) {
    std::map<StateId, StateId> local;
    for (StateId s : rest) local.emplace(s, local.size());
    std::map<StateId, StateId> placeholder;
    for (StateId s : rest)
      for (const auto& a : task.actions(s))
        for (const auto& o : a.outcomes)
          if (owned[o.next]) placeholder.emplace(o.next, 0);
    StateId next = rest.size();
    for (auto& [t, p] : placeholder) p = next++;

    ModuleInstance v{kVerbatim, kVerbatim, GroundMdp(task.name, next, task.discount), {}};
    v.fragment.action_names = task.action_names;
    HomomorphismMap b;
    b.ground_id = task.name;
    b.abstract_id = kVerbatim;
    for (StateId s : rest) {
      const StateId l = local.at(s);
      auto& st = v.fragment.states[l];
      st.label = task.states[s].label;
      st.tags = task.states[s].tags;
      st.terminal = task.states[s].terminal;
      b.f[s] = l;
      for (const auto& a : task.actions(s)) {
        ActionSpec spec{a.id, a.reward, {}};
        for (const auto& o : a.outcomes)
          spec.outcomes.push_back({owned[o.next] ? placeholder.at(o.next) : local.at(o.next), o.prob});
        v.fragment.set_action(l, std::move(spec));
        b.g[{s, a.id}] = a.id;
        b.scope.insert({s, a.id});
        ++out.imported_pairs;
      }
    }
    for (const auto& [t, p] : placeholder) {
      v.fragment.states[p].label = "exit";
      v.fragment.states[p].terminal = true;
      v.interface.exits.push_back(p);
      const auto& use = out.uses[static_cast<std::size_t>(owner[t])];
      gluings.push_back({kVerbatim, p, use.instance_id, use.map.f.at(t)});
    }
    instances.push_back(std::move(v));
    bindings.push_back(std::move(b));
  }
  out.ledger.construal_cost += out.imported_pairs;

  ComposeOptions co;
  co.name = task.name + "/construal";
  out.construal = compose(instances, gluings, bindings, co);
  out.construal.binding.ground_id = task.name;
  out.coverage = total_pairs == 0.0 ? 0.0 : static_cast<double>(covered) / total_pairs;
  out.no_analogy = out.uses.empty();
  return out;
}

SolveResult solve(const Construal& construal, const Library& library, double tolerance) {
  const GroundMdp& m = construal.abstract_mdp;
  ValueFunction init{m.name, std::vector<double>(m.state_count(), 0.0)};
  for (const auto& [element, p] : construal.provenance) {
    if (element[0] != 's') continue;
    const Module* mod = library.find(p.module_id);
    if (!mod || !mod->values) continue;
    const StateId x = std::stoull(element.substr(1));
    const StateId l = std::stoull(p.source_element.substr(1));
    if (l < mod->values->values.size() && !m.is_terminal(x)) init.values[x] = mod->values->values[l];
  }
  const ValueIterationResult vi = value_iteration(m, {tolerance, kDefaultMaxSweeps}, &init);
  SolveResult out;
  out.values = vi.values;
  out.policy = greedy_policy(m, vi.values);
  out.ledger.solve_cost = vi.backups;
  out.sweeps = vi.sweeps;
  return out;
}

std::vector<Fragment> candidate_fragments(const GroundMdp& mdp, std::size_t cap) {
  if (cap < 1) throw Error(Errc::invalid_parameter, "fragment cap must be positive");
  const std::size_t n = mdp.state_count();
  std::vector<std::pair<StateId, std::vector<StateId>>> sets;
  for (StateId root = 0; root < n; ++root) {
    if (mdp.is_terminal(root)) continue;
    std::vector<bool> in(n, false);
    std::vector<StateId> members{root};
    in[root] = true;
    std::deque<StateId> queue{root};
    while (!queue.empty() && members.size() < cap) {
      const StateId s = queue.front();
      queue.pop_front();
      for (const auto& a : mdp.actions(s))
        for (const auto& o : a.outcomes)
          if (!in[o.next] && members.size() < cap) {
            in[o.next] = true;
            members.push_back(o.next);
            queue.push_back(o.next);
          }
    }
    std::sort(members.begin(), members.end());
    if (std::none_of(sets.begin(), sets.end(), [&](const auto& e) { return e.second == members; }))
      sets.emplace_back(root, std::move(members));
  }
  std::vector<Fragment> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& si = sets[i].second;
    bool maximal = true;
    for (std::size_t j = 0; j < sets.size() && maximal; ++j) {
      const auto& sj = sets[j].second;
      if (i != j && sj.size() > si.size() && std::includes(sj.begin(), sj.end(), si.begin(), si.end())) maximal = false;
    }
    if (!maximal) continue;
    std::map<StateId, StateId> local;
    for (StateId s : si) local.emplace(s, local.size());
    std::map<StateId, StateId> exits;
    for (StateId s : si)
      for (const auto& a : mdp.actions(s))
        for (const auto& o : a.outcomes)
          if (!local.count(o.next)) exits.emplace(o.next, 0);
    StateId next = si.size();
    for (auto& [t, e] : exits) e = next++;

    Fragment f;
    f.states = si;
    f.mdp = GroundMdp("fragment", next, mdp.discount);
    f.mdp.action_names = mdp.action_names;
    for (StateId s : si) {
      const StateId l = local.at(s);
      auto& st = f.mdp.states[l];
      st.label = mdp.states[s].label;
      st.tags = mdp.states[s].tags;
      st.terminal = mdp.states[s].terminal;
      for (const auto& a : mdp.actions(s)) {
        ActionSpec spec{a.id, a.reward, {}};
        for (const auto& o : a.outcomes) {
          const auto it = local.find(o.next);
          spec.outcomes.push_back({it != local.end() ? it->second : exits.at(o.next), o.prob});
        }
        f.mdp.set_action(l, std::move(spec));
      }
    }
    for (const auto& [t, e] : exits) {
      f.mdp.states[e].label = "exit";
      f.mdp.states[e].terminal = true;
    }
    f.interface.entries.push_back(local.at(sets[i].first));
    for (StateId x = 0; x < next; ++x)
      if (f.mdp.is_terminal(x)) f.interface.exits.push_back(x);
    f.mdp.validate();
    out.push_back(std::move(f));
  }
  return out;
}

bool strictly_bihomomorphic(const GroundMdp& a, const GroundMdp& b, std::uint64_t budget) {
  const SearchBudget sb{budget, SearchMode::strict, 1.0};
  return find_homomorphism(a, b, {}, sb).found && find_homomorphism(b, a, {}, sb).found;
}

namespace {

bool same_shape(const Library& lib, const std::string& id, const std::vector<std::uint64_t>& sigs, std::size_t pairs) {
  return lib.signature_index.at(id) == sigs && lib.modules.at(id).fragment.pair_count() == pairs;
}

struct ParsedElement {
  bool is_state = true;
  StateId state = 0;
  ActionId action = 0;
};

std::optional<ParsedElement> parse_element(const std::string& e) {
  try {
    if (e.size() > 1 && e[0] == 's') return ParsedElement{true, std::stoull(e.substr(1)), 0};
    const auto colon = e.find(':');
    if (e.size() > 1 && e[0] == 'a' && colon != std::string::npos)
      return ParsedElement{false, std::stoull(e.substr(1, colon - 1)), std::stoull(e.substr(colon + 1))};
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void fold_usage(Library& lib, const EpisodeRecord& rec) {
  for (const auto& use : rec.uses) {
    auto it = lib.modules.find(use.module_id);
    if (it == lib.modules.end()) continue;
    Module& m = it->second;
    std::set<StateId> image_states;
    std::set<StateAction> image_pairs;
    for (const auto& [s, x] : use.map.f) image_states.insert(x);
    for (const auto& sa : use.map.scope) image_pairs.insert({use.map.f.at(sa.first), use.map.g.at(sa)});
    for (StateId x = 0; x < m.fragment.state_count(); ++x) {
      ++m.use_count[state_element(x)];
      if (!image_states.count(x)) ++m.discard_count[state_element(x)];
      for (const auto& a : m.fragment.actions(x)) {
        ++m.use_count[action_element(x, a.id)];
        if (!image_pairs.count({x, a.id})) ++m.discard_count[action_element(x, a.id)];
      }
    }
  }
}

// Removes flagged elements and whatever they strand; nullopt when nothing
// changes or nothing useful remains.
std::optional<Module> prune(const Module& m, const std::set<StateId>& drop_states, const std::set<StateAction>& drop_pairs) {
  const GroundMdp& f = m.fragment;
  const std::size_t n = f.state_count();
  std::vector<bool> gone(n, false);
  for (StateId s : drop_states) gone[s] = true;
  std::set<StateAction> removed = drop_pairs;
  bool changed = true;
  while (changed) {
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (gone[s] || f.is_terminal(s)) continue;
      std::size_t live = 0;
      for (const auto& a : f.actions(s)) {
        if (removed.count({s, a.id})) continue;
        const bool hits = std::any_of(a.outcomes.begin(), a.outcomes.end(), [&](const Outcome& o) { return gone[o.next]; });
        if (hits) {
          removed.insert({s, a.id});
          changed = true;
        } else {
          ++live;
        }
      }
      if (live == 0) {
        gone[s] = true;
        changed = true;
      }
    }
  }
  std::vector<StateId> keep;
  for (StateId s = 0; s < n; ++s)
    if (!gone[s]) keep.push_back(s);
  std::size_t kept_pairs = 0;
  bool any_dynamic = false;
  for (StateId s : keep)
    for (const auto& a : f.actions(s))
      if (!removed.count({s, a.id})) ++kept_pairs, any_dynamic = true;
  if (!any_dynamic || (keep.size() == n && kept_pairs == f.pair_count())) return std::nullopt;

  std::map<StateId, StateId> local;
  for (StateId s : keep) local.emplace(s, local.size());
  Module out;
  out.fragment = GroundMdp(f.name, keep.size(), f.discount);
  out.fragment.action_names = f.action_names;
  for (StateId s : keep) {
    const StateId l = local.at(s);
    auto& st = out.fragment.states[l];
    st.label = f.states[s].label;
    st.tags = f.states[s].tags;
    st.terminal = f.states[s].terminal;
    for (const auto& a : f.actions(s)) {
      if (removed.count({s, a.id})) continue;
      ActionSpec spec{a.id, a.reward, {}};
      for (const auto& o : a.outcomes) spec.outcomes.push_back({local.at(o.next), o.prob});
      out.fragment.set_action(l, std::move(spec));
    }
  }
  for (StateId s : m.interface.entries)
    if (local.count(s)) out.interface.entries.push_back(local.at(s));
  if (out.interface.entries.empty())
    for (StateId l = 0; l < keep.size(); ++l)
      if (!out.fragment.is_terminal(l)) {
        out.interface.entries.push_back(l);
        break;
      }
  for (StateId l = 0; l < keep.size(); ++l)
    if (out.fragment.is_terminal(l)) out.interface.exits.push_back(l);
  if (m.policy) {
    Policy p(keep.size(), m.policy->kind);
    for (StateId s : keep) {
      const auto& row = m.policy->choice[s];
      const bool ok = std::all_of(row.begin(), row.end(), [&](const auto& c) { return out.fragment.find_action(local.at(s), c.first); });
      if (ok) p.choice[local.at(s)] = row;
    }
    out.policy = std::move(p);
  }
  return out;
}

Module extract(Library& lib, const Fragment& frag, const EpisodeRecord& rec, std::vector<std::string> lineage) {
  Module m;
  m.id = lib.fresh_id();
  m.fragment = frag.mdp;
  m.fragment.name = m.id;
  m.interface = frag.interface;
  const std::size_t n = frag.mdp.state_count();
  Policy p(n, rec.policy.kind);
  ValueFunction v{m.id, std::vector<double>(n, 0.0)};
  for (StateId l = 0; l < frag.states.size(); ++l) {
    const StateId s = frag.states[l];
    if (s < rec.policy.state_count()) p.choice[l] = rec.policy.choice[s];
    if (s < rec.values.values.size()) v.values[l] = rec.values.values[s];
  }
  m.policy = std::move(p);
  m.values = std::move(v);
  std::sort(lineage.begin(), lineage.end());
  lineage.erase(std::unique(lineage.begin(), lineage.end()), lineage.end());
  m.lineage = std::move(lineage);
  return m;
}

}  // namespace

Library update_library(const Library& library, const std::vector<EpisodeRecord>& history,
                       std::size_t extraction_threshold, double discard_ratio, const UpdateOptions& options) {
  if (extraction_threshold < 2) throw Error(Errc::invalid_parameter, "extraction threshold must be at least 2");
  if (!(discard_ratio > 0.0 && discard_ratio <= 1.0)) throw Error(Errc::invalid_parameter, "discard ratio must lie in (0, 1]");
  Library lib = library;

  for (const auto& rec : history)
    if (lib.seen_episodes.insert(rec.task_id).second) fold_usage(lib, rec);

  // Extraction.
  struct Candidate {
    std::size_t episode;
    Fragment fragment;
    std::vector<std::uint64_t> sigs;
    std::size_t pairs;
  };
  std::vector<Candidate> cands;
  for (std::size_t e = 0; e < history.size(); ++e)
    for (auto& f : candidate_fragments(history[e].construal.abstract_mdp, options.fragment_cap)) {
      auto sigs = signature_multiset(f.mdp);
      const std::size_t pairs = f.mdp.pair_count();
      cands.push_back({e, std::move(f), std::move(sigs), pairs});
    }
  std::vector<bool> grouped(cands.size(), false);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (grouped[i]) continue;
    grouped[i] = true;
    std::set<std::size_t> episodes{cands[i].episode};
    std::vector<std::string> lineage{history[cands[i].episode].task_id};
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (grouped[j] || episodes.count(cands[j].episode)) continue;
      if (cands[j].sigs != cands[i].sigs || cands[j].pairs != cands[i].pairs) continue;
      if (!strictly_bihomomorphic(cands[i].fragment.mdp, cands[j].fragment.mdp, options.search_budget)) continue;
      grouped[j] = true;
      episodes.insert(cands[j].episode);
      lineage.push_back(history[cands[j].episode].task_id);
    }
    if (episodes.size() < extraction_threshold) continue;
    bool known = false;
    for (const auto& [id, m] : lib.modules)
      if (same_shape(lib, id, cands[i].sigs, cands[i].pairs) &&
          strictly_bihomomorphic(cands[i].fragment.mdp, m.fragment, options.search_budget)) {
        known = true;
        break;
      }
    if (!known) lib.add(extract(lib, cands[i].fragment, history[cands[i].episode], lineage));
  }

  // Refinement.
  std::vector<std::string> ids;
  for (const auto& [id, m] : lib.modules) ids.push_back(id);
  for (const auto& id : ids) {
    const Module& m = lib.modules.at(id);
    std::set<StateId> drop_states;
    std::set<StateAction> drop_pairs;
    for (const auto& [element, uses] : m.use_count) {
      if (uses < options.min_uses) continue;
      const auto d = m.discard_count.find(element);
      const double ratio = d == m.discard_count.end() ? 0.0 : static_cast<double>(d->second) / static_cast<double>(uses);
      if (ratio <= discard_ratio) continue;
      const auto pe = parse_element(element);
      if (!pe) continue;
      if (pe->is_state) {
        if (pe->state < m.fragment.state_count()) drop_states.insert(pe->state);
      } else {
        drop_pairs.insert({pe->state, pe->action});
      }
    }
    if (drop_states.empty() && drop_pairs.empty()) continue;
    auto refined = prune(m, drop_states, drop_pairs);
    if (!refined) continue;
    bool exists = false;
    for (const auto& [other_id, o] : lib.modules) {
      if (std::find(o.lineage.begin(), o.lineage.end(), id) == o.lineage.end()) continue;
      GroundMdp a = o.fragment, b = refined->fragment;
      a.name = b.name = "";
      if (a == b) exists = true;
    }
    if (exists) continue;
    refined->id = lib.fresh_id();
    refined->fragment.name = refined->id;
    refined->lineage = {id};
    lib.add(std::move(*refined));
  }

  // Deduplication of isomorphic modules; the smaller id survives.
  ids.clear();
  for (const auto& [id, m] : lib.modules) ids.push_back(id);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!lib.modules.count(ids[i])) continue;
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (!lib.modules.count(ids[j])) continue;
      const Module& keep = lib.modules.at(ids[i]);
      const Module& drop = lib.modules.at(ids[j]);
      if (!same_shape(lib, ids[i], lib.signature_index.at(ids[j]), drop.fragment.pair_count())) continue;
      const SearchBudget sb{options.search_budget, SearchMode::strict, 1.0};
      const SearchResult to_keep = find_homomorphism(drop.fragment, keep.fragment, {}, sb);
      if (!to_keep.found || !find_homomorphism(keep.fragment, drop.fragment, {}, sb).found) continue;
      Module merged = keep;
      const auto& f = to_keep.best_map;
      auto remap = [&](const std::string& e) -> std::string {
        const auto pe = parse_element(e);
        if (!pe || !f.f.count(pe->state)) return e;
        if (pe->is_state) return state_element(f.f.at(pe->state));
        const auto g = f.g.find({pe->state, pe->action});
        return g == f.g.end() ? e : action_element(f.f.at(pe->state), g->second);
      };
      for (const auto& [e, c] : drop.use_count) merged.use_count[remap(e)] += c;
      for (const auto& [e, c] : drop.discard_count) merged.discard_count[remap(e)] += c;
      merged.lineage.push_back(drop.id);
      for (const auto& l : drop.lineage) merged.lineage.push_back(l);
      std::sort(merged.lineage.begin(), merged.lineage.end());
      merged.lineage.erase(std::unique(merged.lineage.begin(), merged.lineage.end()), merged.lineage.end());
      lib.erase(ids[j]);
      lib.add(std::move(merged));
    }
  }
  lib.rebuild_index();
  return lib;
}

std::vector<Affordance> afford(const GroundMdp& task, StateId state, const Library& library,
                               const std::vector<HomomorphismMap>& bindings) {
  if (state >= task.state_count()) throw Error(Errc::invalid_parameter, "state out of range", {state});
  std::vector<const HomomorphismMap*> order;
  for (const auto& b : bindings) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->abstract_id < b->abstract_id; });
  std::vector<Affordance> out;
  for (const auto* b : order) {
    const auto x = b->image(state);
    if (!x) continue;
    const Module* m = library.find(b->abstract_id);
    if (!m) throw Error(Errc::invalid_parameter, "binding targets unknown module '" + b->abstract_id + "'");
    if (*x >= m->fragment.state_count()) throw Error(Errc::invalid_map, "binding image out of range", {state});
    Affordance a{m->id, *x, {}, {}};
    for (const auto& spec : m->fragment.actions(*x)) {
      a.actions.push_back(spec.id);
      const auto it = m->fragment.action_names.find(spec.id);
      a.names.push_back(it == m->fragment.action_names.end() ? "a" + std::to_string(spec.id) : it->second);
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace construal
