#include "construal/composition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "construal/csv.hpp"
#include "construal/mdp_io.hpp"

namespace construal {

std::string state_element(StateId s) { return "s" + std::to_string(s); }
std::string action_element(StateId s, ActionId a) { return "a" + std::to_string(s) + ":" + std::to_string(a); }

CostLedger& CostLedger::operator+=(const CostLedger& other) {
  solve_cost += other.solve_cost;
  construal_cost += other.construal_cost;
  return *this;
}

std::optional<StateId> Construal::locate(const std::string& instance_id, StateId fragment_state) const {
  // Glued states form classes; any member that kept provenance names the class.
  using Node = std::pair<std::string, StateId>;
  std::vector<Node> frontier{{instance_id, fragment_state}};
  std::set<Node> seen(frontier.begin(), frontier.end());
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const auto [inst, state] = frontier[i];
    const std::string element = state_element(state);
    for (const auto& [name, p] : provenance)
      if (name[0] == 's' && p.instance_id == inst && p.source_element == element)
        return static_cast<StateId>(std::stoull(name.substr(1)));
    for (const auto& g : glue) {
      Node other;
      if (g.exit_instance == inst && g.exit_state == state)
        other = {g.entry_instance, g.entry_state};
      else if (g.entry_instance == inst && g.entry_state == state)
        other = {g.exit_instance, g.exit_state};
      else
        continue;
      if (seen.insert(other).second) frontier.push_back(other);
    }
  }
  return std::nullopt;
}

namespace {

bool valid_id(const std::string& id) {
  return !id.empty() && id.find_first_of(" \t\r\n/,\"#") == std::string::npos;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

bool contains(const std::vector<StateId>& v, StateId s) { return std::find(v.begin(), v.end(), s) != v.end(); }

}  // namespace

Construal compose(const std::vector<ModuleInstance>& instances, const std::vector<Gluing>& gluings,
                  const std::vector<HomomorphismMap>& bindings, const ComposeOptions& options) {
  if (instances.empty()) throw Error(Errc::invalid_parameter, "compose needs at least one instance");
  if (options.name.empty() || options.name.find_first_of(" \t\r\n") != std::string::npos) throw Error(Errc::invalid_parameter, "construal name must be a non-empty token");
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (!valid_id(inst.instance_id) || !valid_id(inst.module_id))
      throw Error(Errc::invalid_parameter, "instance and module ids must be non-empty words");
    if (!index.emplace(inst.instance_id, i).second)
      throw Error(Errc::invalid_parameter, "duplicate instance id '" + inst.instance_id + "'");
    inst.fragment.validate();
    if (inst.fragment.discount != instances[0].fragment.discount)
      throw Error(Errc::composition_conflict, "fragments disagree on the discount");
    const std::size_t n = inst.fragment.state_count();
    for (StateId s : inst.interface.entries)
      if (s >= n) throw Error(Errc::inconsistent_interface, "entry state out of range in " + inst.instance_id, {s});
    for (StateId s : inst.interface.exits)
      if (s >= n || !inst.fragment.is_terminal(s))
        throw Error(Errc::inconsistent_interface, "exit state must be a terminal of " + inst.instance_id, {s});
    offset.push_back(total);
    total += n;
  }
  auto global = [&](std::size_t i, StateId s) { return offset[i] + s; };
  std::vector<std::size_t> owner(total);
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (StateId s = 0; s < instances[i].fragment.state_count(); ++s) owner[global(i, s)] = i;
  auto local = [&](std::size_t g) { return static_cast<StateId>(g - offset[owner[g]]); };

  UnionFind uf(total);
  std::vector<bool> glued_exit(total, false);
  for (const auto& g : gluings) {
    const auto ei = index.find(g.exit_instance);
    const auto ni = index.find(g.entry_instance);
    if (ei == index.end() || ni == index.end())
      throw Error(Errc::dangling_endpoint, "gluing names an unknown instance");
    if (!contains(instances[ei->second].interface.exits, g.exit_state))
      throw Error(Errc::dangling_endpoint, "state " + std::to_string(g.exit_state) + " is not an exit of " +
                                               g.exit_instance, {g.exit_state});
    if (!contains(instances[ni->second].interface.entries, g.entry_state))
      throw Error(Errc::dangling_endpoint, "state " + std::to_string(g.entry_state) + " is not an entry of " +
                                               g.entry_instance, {g.entry_state});
    const std::size_t x = global(ei->second, g.exit_state);
    // An exit glued to several entries merges them.
    glued_exit[x] = true;
    uf.unite(x, global(ni->second, g.entry_state));
  }

  auto rank = [&](std::size_t inst) {
    const auto& p = options.precedence;
    const auto it = std::find(p.begin(), p.end(), instances[inst].instance_id);
    return it == p.end() ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(it - p.begin());
  };
  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t g = 0; g < total; ++g) classes[uf.find(g)].push_back(g);
  std::vector<std::size_t> rep(total);
  for (const auto& [root, members] : classes) {
    std::vector<std::size_t> dynamic;
    for (std::size_t g : members)
      if (!instances[owner[g]].fragment.is_terminal(local(g))) dynamic.push_back(g);
    std::size_t chosen = members.front();
    if (dynamic.size() == 1) {
      chosen = dynamic.front();
    } else if (dynamic.size() > 1) {
      std::stable_sort(dynamic.begin(), dynamic.end(),
                       [&](std::size_t a, std::size_t b) { return rank(owner[a]) < rank(owner[b]); });
      if (rank(owner[dynamic[0]]) == rank(owner[dynamic[1]])) {
        std::vector<StateId> locals;
        for (std::size_t g : dynamic) locals.push_back(local(g));
        throw Error(Errc::composition_conflict, "glued states from several fragments all define dynamics", locals);
      }
      chosen = dynamic.front();
    } else {
      for (std::size_t g : members)
        if (!glued_exit[g]) {
          chosen = g;
          break;
        }
    }
    for (std::size_t g : members) rep[g] = chosen;
  }

  std::vector<std::size_t> compact(total, 0);
  std::vector<std::size_t> survivors;
  for (std::size_t g = 0; g < total; ++g)
    if (rep[g] == g) {
      compact[g] = survivors.size();
      survivors.push_back(g);
    }

  Construal c;
  c.glue = gluings;
  GroundMdp& m = c.abstract_mdp;
  m = GroundMdp(options.name, survivors.size(), instances[0].fragment.discount);
  for (const auto& inst : instances)
    for (const auto& [a, name] : inst.fragment.action_names) m.action_names.emplace(a, name);
  for (StateId x = 0; x < survivors.size(); ++x) {
    const std::size_t g = survivors[x];
    const auto& inst = instances[owner[g]];
    const StateId l = local(g);
    const auto& src = inst.fragment.states[l];
    m.states[x].label = inst.instance_id + ":" + (src.label.empty() ? state_element(l) : src.label);
    m.states[x].tags = src.tags;
    m.states[x].terminal = src.terminal;
    c.provenance[state_element(x)] = {inst.module_id, inst.instance_id, state_element(l)};
    for (const auto& a : src.actions) {
      ActionSpec spec{a.id, a.reward, {}};
      for (const auto& o : a.outcomes) spec.outcomes.push_back({compact[rep[global(owner[g], o.next)]], o.prob});
      m.set_action(x, std::move(spec));
      c.provenance[action_element(x, a.id)] = {inst.module_id, inst.instance_id, action_element(l, a.id)};
    }
  }
  m.validate();

  c.binding.abstract_id = m.name;
  c.binding.ground_id = "unbound";
  bool first = true;
  for (const auto& b : bindings) {
    const auto it = index.find(b.abstract_id);
    if (it == index.end()) throw Error(Errc::invalid_map, "binding targets unknown instance '" + b.abstract_id + "'");
    if (first) c.binding.ground_id = b.ground_id;
    if (b.ground_id != c.binding.ground_id) throw Error(Errc::invalid_map, "bindings disagree on the ground task");
    first = false;
    const std::size_t i = it->second;
    const std::size_t n = instances[i].fragment.state_count();
    for (const auto& [s, x] : b.f) {
      if (x >= n) throw Error(Errc::invalid_map, "binding image out of range", {s});
      const StateId y = compact[rep[global(i, x)]];
      const auto [pos, fresh] = c.binding.f.emplace(s, y);
      if (!fresh && pos->second != y)
        throw Error(Errc::composition_conflict, "bindings map a ground state to different construal states", {s});
    }
    for (const auto& [sa, a] : b.g) {
      const StateId y = c.binding.f.at(sa.first);
      if (!m.find_action(y, a))
        throw Error(Errc::composition_conflict, "bound action is not available after gluing", {sa.first});
      const auto [pos, fresh] = c.binding.g.emplace(sa, a);
      if (!fresh && pos->second != a)
        throw Error(Errc::composition_conflict, "bindings map a ground pair to different actions", {sa.first});
    }
    for (const auto& sa : b.scope)
      if (!c.binding.scope.insert(sa).second)
        throw Error(Errc::composition_conflict, "binding scopes overlap", {sa.first});
  }
  return c;
}

ObjectiveReport evaluate_objective(const GroundMdp& task, const Construal& construal, const Policy& policy,
                                   const CostLedger& ledger, double tolerance, bool strict) {
  const LiftedPolicy lifted = lift_policy(policy, construal.binding, task);
  const ValueIterationResult optimum = value_iteration(task, {tolerance, kDefaultMaxSweeps});
  const std::vector<double> weights = task.start_weights();
  std::vector<StateId> starts;
  for (StateId s = 0; s < task.state_count(); ++s)
    if (weights[s] > 0.0) starts.push_back(s);

  ObjectiveReport out;
  out.within_budget = ledger.within_budget();
  out.gaps = reachable_under(task, lifted.base, starts).gaps;
  if (strict && !out.gaps.empty())
    throw Error(Errc::coverage_gap, "lifted policy has reachable gaps", out.gaps);
  out.ground_policy = lifted.base;
  const Policy fallback = greedy_policy(task, optimum.values);
  for (StateId s = 0; s < task.state_count(); ++s)
    if (!task.is_terminal(s) && !out.ground_policy.covers(s)) out.ground_policy.choice[s] = fallback.choice[s];
  out.ground_values = policy_evaluation(task, out.ground_policy, tolerance, starts);
  for (StateId s : starts) {
    out.ground_expected_return += weights[s] * out.ground_values[s];
    out.optimality_gap = std::max(out.optimality_gap, optimum.values[s] - out.ground_values[s]);
  }
  return out;
}

std::string write_provenance_csv(const Construal& c) {
  std::string out = csv_row({"element", "module_id", "source_element"});
  for (const auto& [element, p] : c.provenance) out += csv_row({element, p.module_id, p.instance_id + "/" + p.source_element});
  return out;
}

std::string write_glue(const std::vector<Gluing>& glue) {
  std::ostringstream os;
  for (const auto& g : glue)
    os << "glue " << g.exit_instance << ' ' << g.exit_state << ' ' << g.entry_instance << ' ' << g.entry_state << '\n';
  return os.str();
}

std::vector<Gluing> parse_glue(std::string_view text) {
  std::vector<Gluing> out;
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view) {
    if (tok[0] != "glue" || tok.size() != 5) throw ParseError(ln, "expected 'glue <instance> <exit> <instance> <entry>'");
    out.push_back({std::string(tok[1]), detail::parse_index(tok[2], ln), std::string(tok[3]),
                   detail::parse_index(tok[4], ln)});
  });
  return out;
}

namespace {
std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return prefix.string() + suffix;
}
}  // namespace

void write_construal(const std::filesystem::path& prefix, const Construal& c) {
  write_mdp_file(with_suffix(prefix, ".mdp"), c.abstract_mdp);
  write_map_file(with_suffix(prefix, ".map"), c.binding);
  detail::spit(with_suffix(prefix, ".provenance.csv"), write_provenance_csv(c));
  detail::spit(with_suffix(prefix, ".glue"), write_glue(c.glue));
}

Construal read_construal(const std::filesystem::path& prefix) {
  Construal c;
  c.abstract_mdp = read_mdp_file(with_suffix(prefix, ".mdp"));
  c.binding = read_map_file(with_suffix(prefix, ".map"));
  const auto rows = parse_csv(detail::slurp(with_suffix(prefix, ".provenance.csv")));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 3) throw ParseError(i + 1, "provenance rows have three fields");
    const auto slash = r[2].rfind('/');
    if (slash == std::string::npos) throw ParseError(i + 1, "source element lacks an instance prefix");
    c.provenance[r[0]] = {r[1], r[2].substr(0, slash), r[2].substr(slash + 1)};
  }
  c.glue = parse_glue(detail::slurp(with_suffix(prefix, ".glue")));
  return c;
}

}  // namespace construal
