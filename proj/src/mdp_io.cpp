#include "construal/mdp_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace construal {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view rest_after(std::string_view line, std::size_t tokens) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < tokens; ++k) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
  }
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.substr(i);
}

std::size_t parse_index(std::string_view tok, std::size_t line) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(line, "expected a non-negative integer, got '" + std::string(tok) + "'");
  return v;
}

double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError(line, "expected a finite real number, got '" + std::string(tok) + "'");
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out << text;
}

void for_each_directive(std::string_view text,
                        const std::function<void(std::size_t, const std::vector<std::string_view>&, std::string_view)>& fn) {
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = strip_comment(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (!tok.empty()) fn(line_no, tok, line);
  }
}

}  // namespace detail

using detail::parse_index;
using detail::parse_real;

GroundMdp parse_mdp(std::string_view text) {
  GroundMdp mdp;
  bool have_header = false;
  bool have_name = false;
  struct PairLines {
    std::size_t first_line = 0;
    bool has_reward = false;
    bool has_transition = false;
    double reward = 0.0;
    std::vector<Outcome> outcomes;
  };
  std::map<StateAction, PairLines> pairs;
  std::vector<std::size_t> terminal_line;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view line = detail::strip_comment(raw);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto need = [&](std::size_t k) {
      if (tok.size() != k)
        throw ParseError(line_no, "'" + std::string(tok[0]) + "' expects " + std::to_string(k - 1) + " fields");
    };
    auto state = [&](std::string_view t) {
      const std::size_t s = parse_index(t, line_no);
      if (!have_header) throw ParseError(line_no, "directive before 'mdp' header");
      if (s >= mdp.state_count()) throw ParseError(line_no, "state " + std::to_string(s) + " out of range");
      return s;
    };

    const std::string_view kw = tok[0];
    if (kw == "mdp") {
      need(3);
      if (have_header) throw ParseError(line_no, "duplicate 'mdp' header");
      const std::size_t n = parse_index(tok[1], line_no);
      if (n == 0) throw ParseError(line_no, "state count must be positive");
      const double g = parse_real(tok[2], line_no);
      if (!(g >= 0.0 && g < 1.0)) throw ParseError(line_no, "discount must lie in [0, 1)");
      mdp.states.resize(n);
      mdp.discount = g;
      terminal_line.assign(n, 0);
      have_header = true;
    } else if (kw == "name") {
      need(2);
      if (have_name) throw ParseError(line_no, "duplicate 'name'");
      mdp.name = std::string(tok[1]);
      have_name = true;
    } else if (kw == "label") {
      if (tok.size() < 3) throw ParseError(line_no, "'label' expects a state and text");
      mdp.states[state(tok[1])].label = std::string(detail::rest_after(line, 2));
    } else if (kw == "tag") {
      if (tok.size() < 3) throw ParseError(line_no, "'tag' expects a state and text");
      mdp.add_tag(state(tok[1]), std::string(detail::rest_after(line, 2)));
    } else if (kw == "aname") {
      if (tok.size() < 3) throw ParseError(line_no, "'aname' expects an action id and text");
      mdp.action_names[parse_index(tok[1], line_no)] = std::string(detail::rest_after(line, 2));
    } else if (kw == "start") {
      need(3);
      const StateId s = state(tok[1]);
      const double w = parse_real(tok[2], line_no);
      if (!(w > 0.0)) throw ParseError(line_no, "start weight must be positive");
      mdp.starts.emplace_back(s, w);
    } else if (kw == "r") {
      need(4);
      const StateId s = state(tok[1]);
      const ActionId a = parse_index(tok[2], line_no);
      auto& p = pairs[{s, a}];
      if (p.has_reward) throw ParseError(line_no, "duplicate reward for pair");
      if (p.first_line == 0) p.first_line = line_no;
      p.has_reward = true;
      p.reward = parse_real(tok[3], line_no);
    } else if (kw == "t") {
      need(5);
      const StateId s = state(tok[1]);
      const ActionId a = parse_index(tok[2], line_no);
      const StateId next = state(tok[3]);
      const double prob = parse_real(tok[4], line_no);
      if (prob < 0.0) throw ParseError(line_no, "negative probability");
      auto& p = pairs[{s, a}];
      if (p.first_line == 0) p.first_line = line_no;
      for (const auto& o : p.outcomes)
        if (o.next == next) throw ParseError(line_no, "duplicate transition");
      p.has_transition = true;
      p.outcomes.push_back({next, prob});
    } else if (kw == "terminal") {
      need(2);
      const StateId s = state(tok[1]);
      mdp.states[s].terminal = true;
      terminal_line[s] = line_no;
    } else {
      throw ParseError(line_no, "unknown directive '" + std::string(kw) + "'");
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError(line_no, "missing 'mdp' header");

  for (auto& [sa, p] : pairs) {
    const auto [s, a] = sa;
    if (!p.has_reward) throw ParseError(p.first_line, "pair (" + std::to_string(s) + "," + std::to_string(a) + ") has no 'r' line");
    if (!p.has_transition)
      throw ParseError(p.first_line, "pair (" + std::to_string(s) + "," + std::to_string(a) + ") has no 't' lines");
    double sum = 0.0;
    for (const auto& o : p.outcomes) sum += o.prob;
    if (std::abs(sum - 1.0) > kDistributionTolerance)
      throw ParseError(p.first_line, "distribution of pair (" + std::to_string(s) + "," + std::to_string(a) +
                                         ") sums to " + format_double(sum));
    if (mdp.states[s].terminal)
      throw ParseError(terminal_line[s], "terminal state " + std::to_string(s) + " has actions");
    mdp.set_action(s, ActionSpec{a, p.reward, std::move(p.outcomes)});
  }
  for (StateId s = 0; s < mdp.state_count(); ++s)
    if (!mdp.states[s].terminal && mdp.states[s].actions.empty())
      throw ParseError(line_no, "state " + std::to_string(s) + " has no actions and is not terminal");
  mdp.validate();
  return mdp;
}

std::string write_mdp(const GroundMdp& mdp) {
  std::ostringstream os;
  os << "mdp " << mdp.state_count() << ' ' << format_double(mdp.discount) << '\n';
  os << "name " << mdp.name << '\n';
  for (StateId s = 0; s < mdp.state_count(); ++s)
    if (!mdp.states[s].label.empty()) os << "label " << s << ' ' << mdp.states[s].label << '\n';
  for (StateId s = 0; s < mdp.state_count(); ++s)
    for (const auto& t : mdp.states[s].tags) os << "tag " << s << ' ' << t << '\n';
  for (const auto& [a, text] : mdp.action_names) os << "aname " << a << ' ' << text << '\n';
  for (const auto& [s, w] : mdp.starts) os << "start " << s << ' ' << format_double(w) << '\n';
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    for (const auto& a : mdp.actions(s)) {
      os << "r " << s << ' ' << a.id << ' ' << format_double(a.reward) << '\n';
      for (const auto& o : a.outcomes) os << "t " << s << ' ' << a.id << ' ' << o.next << ' ' << format_double(o.prob) << '\n';
    }
  }
  for (StateId s = 0; s < mdp.state_count(); ++s)
    if (mdp.states[s].terminal) os << "terminal " << s << '\n';
  return os.str();
}

Policy parse_policy(std::string_view text) {
  Policy policy;
  bool header = false;
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view) {
    if (tok[0] == "policy") {
      if (header || tok.size() != 3) throw ParseError(ln, "malformed 'policy' header");
      header = true;
      if (tok[2] != "deterministic" && tok[2] != "stochastic") throw ParseError(ln, "unknown policy kind");
      policy = Policy(parse_index(tok[1], ln), tok[2] == "stochastic" ? PolicyKind::stochastic : PolicyKind::deterministic);
    } else if (tok[0] == "p") {
      if (!header) throw ParseError(ln, "directive before 'policy' header");
      if (tok.size() != 4) throw ParseError(ln, "'p' expects 3 fields");
      const std::size_t s = parse_index(tok[1], ln);
      if (s >= policy.state_count()) throw ParseError(ln, "state out of range");
      const double prob = parse_real(tok[3], ln);
      if (prob < 0.0 || prob > 1.0) throw ParseError(ln, "probability outside [0, 1]");
      policy.choice[s].push_back({parse_index(tok[2], ln), prob});
    } else {
      throw ParseError(ln, "unknown directive '" + std::string(tok[0]) + "'");
    }
  });
  if (!header) throw ParseError(1, "missing 'policy' header");
  return policy;
}

std::string write_policy(const Policy& policy) {
  std::ostringstream os;
  os << "policy " << policy.state_count() << ' '
     << (policy.kind == PolicyKind::stochastic ? "stochastic" : "deterministic") << '\n';
  for (StateId s = 0; s < policy.state_count(); ++s)
    for (const auto& [a, p] : policy.choice[s]) os << "p " << s << ' ' << a << ' ' << format_double(p) << '\n';
  return os.str();
}

ValueFunction parse_values(std::string_view text) {
  ValueFunction v;
  bool header = false;
  std::vector<bool> seen;
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view line) {
    if (tok[0] == "values") {
      if (header || tok.size() < 2) throw ParseError(ln, "malformed 'values' header");
      header = true;
      v.values.assign(parse_index(tok[1], ln), 0.0);
      seen.assign(v.values.size(), false);
      v.mdp_name = std::string(detail::rest_after(line, 2));
    } else if (tok[0] == "v") {
      if (!header) throw ParseError(ln, "directive before 'values' header");
      if (tok.size() != 3) throw ParseError(ln, "'v' expects 2 fields");
      const std::size_t s = parse_index(tok[1], ln);
      if (s >= v.values.size()) throw ParseError(ln, "state out of range");
      if (seen[s]) throw ParseError(ln, "duplicate value for state " + std::to_string(s));
      seen[s] = true;
      v.values[s] = parse_real(tok[2], ln);
    } else {
      throw ParseError(ln, "unknown directive '" + std::string(tok[0]) + "'");
    }
  });
  if (!header) throw ParseError(1, "missing 'values' header");
  return v;
}

std::string write_values(const ValueFunction& values) {
  std::ostringstream os;
  os << "values " << values.values.size() << ' ' << values.mdp_name << '\n';
  for (StateId s = 0; s < values.values.size(); ++s) os << "v " << s << ' ' << format_double(values.values[s]) << '\n';
  return os.str();
}

GroundMdp read_mdp_file(const std::filesystem::path& path) { return parse_mdp(detail::slurp(path)); }

void write_mdp_file(const std::filesystem::path& path, const GroundMdp& mdp) { detail::spit(path, write_mdp(mdp)); }

}  // namespace construal
