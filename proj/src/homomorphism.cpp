#include "construal/homomorphism.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "construal/mdp_io.hpp"

namespace construal {

std::optional<StateId> HomomorphismMap::image(StateId s) const {
  auto it = f.find(s);
  if (it == f.end()) return std::nullopt;
  return it->second;
}

std::optional<ActionId> HomomorphismMap::action_image(StateId s, ActionId a) const {
  auto it = g.find({s, a});
  if (it == g.end()) return std::nullopt;
  return it->second;
}

void HomomorphismMap::validate(const GroundMdp& ground, const GroundMdp& abstract) const {
  if (ground_id != ground.name || abstract_id != abstract.name)
    throw Error(Errc::endpoint_mismatch, "map '" + ground_id + "' -> '" + abstract_id + "' does not connect '" +
                                             ground.name + "' -> '" + abstract.name + "'");
  for (const auto& [s, x] : f) {
    if (s >= ground.state_count()) throw Error(Errc::invalid_map, "f maps out-of-range ground state", {s});
    if (x >= abstract.state_count()) throw Error(Errc::invalid_map, "f maps to out-of-range abstract state", {s});
  }
  for (const auto& [sa, b] : g) {
    const auto [s, a] = sa;
    auto x = image(s);
    if (!x) throw Error(Errc::invalid_map, "g defined at state " + std::to_string(s) + " outside f's domain", {s});
    if (!ground.find_action(s, a))
      throw Error(Errc::invalid_map, "g maps unavailable ground action " + std::to_string(a), {s});
    if (!abstract.find_action(*x, b))
      throw Error(Errc::invalid_map, "g maps to action " + std::to_string(b) + " unavailable at abstract state " +
                                         std::to_string(*x),
                  {s});
  }
  for (const auto& sa : scope)
    if (!g.count(sa)) throw Error(Errc::invalid_map, "scope pair outside g's domain", {sa.first});
}

HomomorphismMap identity_map(const GroundMdp& mdp) {
  HomomorphismMap m;
  m.ground_id = mdp.name;
  m.abstract_id = mdp.name;
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    m.f[s] = s;
    for (const auto& a : mdp.actions(s)) {
      m.g[{s, a.id}] = a.id;
      m.scope.insert({s, a.id});
    }
  }
  return m;
}

namespace {

// Pushforward that reports unmapped mass instead of failing.
std::vector<Outcome> push_partial(const std::vector<Outcome>& dist, const std::map<StateId, StateId>& f,
                                  double& unmapped) {
  std::map<StateId, double> acc;
  unmapped = 0.0;
  for (const auto& o : dist) {
    auto it = f.find(o.next);
    if (it == f.end()) {
      unmapped += o.prob;
      continue;
    }
    acc[it->second] += o.prob;
  }
  std::vector<Outcome> out;
  out.reserve(acc.size());
  for (const auto& [x, p] : acc) out.push_back({x, p});
  return out;
}

}  // namespace

std::vector<Outcome> pushforward(const std::vector<Outcome>& dist, const std::map<StateId, StateId>& f) {
  double unmapped = 0.0;
  auto out = push_partial(dist, f, unmapped);
  if (unmapped > 0.0) {
    std::vector<StateId> missing;
    for (const auto& o : dist)
      if (o.prob > 0.0 && !f.count(o.next)) missing.push_back(o.next);
    throw Error(Errc::unmapped_mass, "pushforward: mass " + format_double(unmapped) + " outside f's domain", missing);
  }
  return out;
}

PairDeviation pair_deviation(const GroundMdp& abstract, const std::map<StateId, StateId>& f,
                             const ActionSpec& ground_action, StateId x, ActionId abstract_action) {
  const ActionSpec* target = abstract.find_action(x, abstract_action);
  if (!target) throw Error(Errc::invalid_map, "abstract action unavailable", {x});
  double unmapped = 0.0;
  const auto pushed = push_partial(ground_action.outcomes, f, unmapped);
  PairDeviation d;
  d.reward = std::abs(ground_action.reward - target->reward);
  // Unmapped mass is an extra outcome the abstract side never produces.
  d.transition = std::min(1.0, total_variation(pushed, target->outcomes) + 0.5 * unmapped);
  return d;
}

HomCertificate check_homomorphism(const GroundMdp& ground, const GroundMdp& abstract, const HomomorphismMap& map,
                                  double strictness_tol) {
  map.validate(ground, abstract);
  if (map.scope.empty()) throw Error(Errc::empty_scope, "homomorphism scope is empty");
  HomCertificate cert;
  for (const auto& sa : map.scope) {
    const auto [s, a] = sa;
    const ActionSpec* spec = ground.find_action(s, a);
    const PairDeviation d = pair_deviation(abstract, map.f, *spec, map.f.at(s), map.g.at(sa));
    cert.deviations.emplace(sa, d);
    cert.max_reward_deviation = std::max(cert.max_reward_deviation, d.reward);
    cert.max_transition_deviation = std::max(cert.max_transition_deviation, d.transition);
  }
  cert.strict = cert.max_reward_deviation <= strictness_tol && cert.max_transition_deviation <= strictness_tol;
  const std::size_t total = ground.pair_count();
  cert.coverage_fraction = total == 0 ? 0.0 : static_cast<double>(map.scope.size()) / static_cast<double>(total);
  return cert;
}

QuotientResult quotient(const GroundMdp& ground, const std::vector<std::size_t>& block_of,
                        const std::map<StateAction, ActionId>& action_map, double strictness_tol) {
  const std::size_t n = ground.state_count();
  if (block_of.size() != n) throw Error(Errc::invalid_parameter, "partition does not cover every state");
  std::size_t blocks = 0;
  for (std::size_t b : block_of) blocks = std::max(blocks, b + 1);
  std::vector<std::vector<StateId>> members(blocks);
  for (StateId s = 0; s < n; ++s) members[block_of[s]].push_back(s);
  for (std::size_t b = 0; b < blocks; ++b)
    if (members[b].empty()) throw Error(Errc::invalid_parameter, "partition block " + std::to_string(b) + " is empty");

  auto label_of = [&](StateId s, ActionId a) {
    auto it = action_map.find({s, a});
    return it == action_map.end() ? a : it->second;
  };

  QuotientResult out;
  out.abstract = GroundMdp(ground.name + "/quotient", blocks, ground.discount);
  out.abstract.action_names = ground.action_names;
  out.map.ground_id = ground.name;
  out.map.abstract_id = out.abstract.name;
  for (StateId s = 0; s < n; ++s) out.map.f[s] = block_of[s];

  for (std::size_t b = 0; b < blocks; ++b) {
    const auto& mem = members[b];
    // Per member: label -> ground actions carrying it.
    std::vector<std::map<ActionId, std::vector<const ActionSpec*>>> by_label(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) {
      for (const auto& a : ground.actions(mem[i])) {
        const ActionId lbl = label_of(mem[i], a.id);
        if (!ground.find_action(mem[i], a.id))
          throw Error(Errc::inconsistent_interface, "action map refers to unavailable action", {mem[i]});
        by_label[i][lbl].push_back(&a);
      }
    }
    for (std::size_t i = 1; i < mem.size(); ++i) {
      bool same = by_label[i].size() == by_label[0].size();
      if (same) {
        auto it0 = by_label[0].begin();
        for (auto it = by_label[i].begin(); it != by_label[i].end(); ++it, ++it0)
          if (it->first != it0->first) same = false;
      }
      if (!same)
        throw Error(Errc::inconsistent_interface,
                    "block " + std::to_string(b) + " members expose different mapped action sets", {mem[0], mem[i]});
    }

    StateInfo& info = out.abstract.states[b];
    info.label = ground.states[mem.front()].label;
    info.tags = ground.states[mem.front()].tags;
    for (StateId s : mem) {
      std::vector<std::string> common;
      const auto& t = ground.states[s].tags;
      std::set_intersection(info.tags.begin(), info.tags.end(), t.begin(), t.end(), std::back_inserter(common));
      info.tags = std::move(common);
    }
    if (by_label[0].empty()) {
      info.terminal = true;
      continue;
    }
    const double inv_members = 1.0 / static_cast<double>(mem.size());
    for (const auto& [lbl, unused] : by_label[0]) {
      (void)unused;
      double reward = 0.0;
      std::map<StateId, double> dist;
      for (std::size_t i = 0; i < mem.size(); ++i) {
        const auto& specs = by_label[i].at(lbl);
        const double w = inv_members / static_cast<double>(specs.size());
        for (const ActionSpec* spec : specs) {
          reward += w * spec->reward;
          for (const auto& o : spec->outcomes) dist[block_of[o.next]] += w * o.prob;
        }
      }
      ActionSpec abs_action{lbl, reward, {}};
      for (const auto& [x, p] : dist) abs_action.outcomes.push_back({x, p});
      out.abstract.set_action(b, std::move(abs_action));
    }
  }
  for (StateId s = 0; s < n; ++s)
    for (const auto& a : ground.actions(s)) {
      out.map.g[{s, a.id}] = label_of(s, a.id);
      out.map.scope.insert({s, a.id});
    }
  out.abstract.validate();
  if (out.map.scope.empty()) {
    out.certificate.strict = true;
    return out;
  }
  out.certificate = check_homomorphism(ground, out.abstract, out.map, strictness_tol);
  return out;
}

double loss_bound(const HomCertificate& cert, double discount, double reward_range) {
  if (!(discount >= 0.0 && discount < 1.0)) throw Error(Errc::invalid_parameter, "discount must lie in [0, 1)");
  const double horizon = 1.0 / (1.0 - discount);
  return 2.0 * (cert.max_reward_deviation + discount * cert.max_transition_deviation * reward_range * horizon) *
         horizon;
}

HomomorphismMap parse_map(std::string_view text) {
  HomomorphismMap m;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::strip_comment(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    auto need = [&](std::size_t k) {
      if (tok.size() != k)
        throw ParseError(line_no, "'" + std::string(tok[0]) + "' expects " + std::to_string(k - 1) + " fields");
      if (tok[0] != "map" && !have_header) throw ParseError(line_no, "directive before 'map' header");
    };
    using detail::parse_index;
    if (tok[0] == "map") {
      need(3);
      if (have_header) throw ParseError(line_no, "duplicate 'map' header");
      m.ground_id = std::string(tok[1]);
      m.abstract_id = std::string(tok[2]);
      have_header = true;
    } else if (tok[0] == "f") {
      need(3);
      const StateId s = parse_index(tok[1], line_no);
      if (!m.f.emplace(s, parse_index(tok[2], line_no)).second) throw ParseError(line_no, "f assigned twice");
    } else if (tok[0] == "g") {
      need(4);
      const StateAction sa{parse_index(tok[1], line_no), parse_index(tok[2], line_no)};
      if (!m.g.emplace(sa, parse_index(tok[3], line_no)).second) throw ParseError(line_no, "g assigned twice");
    } else if (tok[0] == "scope") {
      need(3);
      if (!m.scope.emplace(parse_index(tok[1], line_no), parse_index(tok[2], line_no)).second)
        throw ParseError(line_no, "duplicate scope pair");
    } else {
      throw ParseError(line_no, "unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_header) throw ParseError(line_no, "missing 'map' header");
  for (const auto& [sa, b] : m.g)
    if (!m.f.count(sa.first)) throw ParseError(line_no, "g defined at state " + std::to_string(sa.first) + " without f");
  for (const auto& sa : m.scope)
    if (!m.g.count(sa)) throw ParseError(line_no, "scope pair (" + std::to_string(sa.first) + "," + std::to_string(sa.second) + ") without g");
  return m;
}

std::string write_map(const HomomorphismMap& m) {
  std::ostringstream os;
  os << "map " << m.ground_id << ' ' << m.abstract_id << '\n';
  for (const auto& [s, x] : m.f) os << "f " << s << ' ' << x << '\n';
  for (const auto& [sa, b] : m.g) os << "g " << sa.first << ' ' << sa.second << ' ' << b << '\n';
  for (const auto& sa : m.scope) os << "scope " << sa.first << ' ' << sa.second << '\n';
  return os.str();
}

HomomorphismMap read_map_file(const std::filesystem::path& path) { return parse_map(detail::slurp(path)); }

void write_map_file(const std::filesystem::path& path, const HomomorphismMap& map) {
  detail::spit(path, write_map(map));
}

}  // namespace construal
