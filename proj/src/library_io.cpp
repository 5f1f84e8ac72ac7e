#include <sstream>

#include "construal/library.hpp"
#include "construal/mdp_io.hpp"

namespace construal {

std::string write_module_stats(const Module& m) {
  std::ostringstream os;
  os << "module " << m.id << '\n';
  for (StateId s : m.interface.entries) os << "entry " << s << '\n';
  for (StateId s : m.interface.exits) os << "exit " << s << '\n';
  for (const auto& l : m.lineage) os << "lineage " << l << '\n';
  for (const auto& [e, n] : m.use_count) os << "use " << e << ' ' << n << '\n';
  for (const auto& [e, n] : m.discard_count) os << "discard " << e << ' ' << n << '\n';
  if (m.policy) {
    os << "solution " << m.policy->state_count() << ' '
       << (m.policy->kind == PolicyKind::stochastic ? "stochastic" : "deterministic") << '\n';
    for (StateId s = 0; s < m.policy->state_count(); ++s)
      for (const auto& [a, p] : m.policy->choice[s]) os << "p " << s << ' ' << a << ' ' << format_double(p) << '\n';
  }
  if (m.values) {
    os << "values " << m.values->values.size() << ' ' << m.values->mdp_name << '\n';
    for (StateId s = 0; s < m.values->values.size(); ++s) os << "v " << s << ' ' << format_double(m.values->values[s]) << '\n';
  }
  return os.str();
}

void parse_module_stats(std::string_view text, Module& m) {
  using detail::parse_index;
  using detail::parse_real;
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view line) {
    auto need = [&](std::size_t k) {
      if (tok.size() != k) throw ParseError(ln, "'" + std::string(tok[0]) + "' expects " + std::to_string(k - 1) + " fields");
    };
    const std::string_view d = tok[0];
    if (d == "module") {
      need(2);
      if (tok[1] != m.id) throw ParseError(ln, "stats belong to module '" + std::string(tok[1]) + "'");
    } else if (d == "entry") {
      need(2);
      m.interface.entries.push_back(parse_index(tok[1], ln));
    } else if (d == "exit") {
      need(2);
      m.interface.exits.push_back(parse_index(tok[1], ln));
    } else if (d == "lineage") {
      need(2);
      m.lineage.emplace_back(tok[1]);
    } else if (d == "use" || d == "discard") {
      need(3);
      auto& counts = d == "use" ? m.use_count : m.discard_count;
      if (!counts.emplace(std::string(tok[1]), parse_index(tok[2], ln)).second)
        throw ParseError(ln, "duplicate count for " + std::string(tok[1]));
    } else if (d == "solution") {
      need(3);
      if (tok[2] != "deterministic" && tok[2] != "stochastic") throw ParseError(ln, "unknown policy kind");
      m.policy = Policy(parse_index(tok[1], ln), tok[2] == "stochastic" ? PolicyKind::stochastic : PolicyKind::deterministic);
    } else if (d == "p") {
      need(4);
      if (!m.policy) throw ParseError(ln, "'p' before 'solution'");
      const std::size_t s = parse_index(tok[1], ln);
      if (s >= m.policy->state_count()) throw ParseError(ln, "state out of range");
      m.policy->choice[s].push_back({parse_index(tok[2], ln), parse_real(tok[3], ln)});
    } else if (d == "values") {
      if (tok.size() < 2) throw ParseError(ln, "malformed 'values' line");
      m.values = ValueFunction{std::string(detail::rest_after(line, 2)), std::vector<double>(parse_index(tok[1], ln), 0.0)};
    } else if (d == "v") {
      need(3);
      if (!m.values) throw ParseError(ln, "'v' before 'values'");
      const std::size_t s = parse_index(tok[1], ln);
      if (s >= m.values->values.size()) throw ParseError(ln, "state out of range");
      m.values->values[s] = parse_real(tok[2], ln);
    } else {
      throw ParseError(ln, "unknown directive '" + std::string(d) + "'");
    }
  });
}

void save_library(const Library& library, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create '" + dir.string() + "'");
  std::ostringstream index;
  index << "library " << library.next_serial << '\n';
  for (const auto& [id, m] : library.modules) {
    index << "module " << id << '\n';
    write_mdp_file(dir / (id + ".mdp"), m.fragment);
    detail::spit(dir / (id + ".stats"), write_module_stats(m));
  }
  for (const auto& e : library.seen_episodes) index << "seen " << e << '\n';
  detail::spit(dir / "index", index.str());
}

Library load_library(const std::filesystem::path& dir) {
  Library lib;
  std::vector<std::string> ids;
  bool header = false;
  detail::for_each_directive(detail::slurp(dir / "index"),
                             [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view) {
                               if (tok.size() != 2) throw ParseError(ln, "index lines have two fields");
                               if (tok[0] == "library") {
                                 header = true;
                                 lib.next_serial = detail::parse_index(tok[1], ln);
                               } else if (tok[0] == "module") {
                                 ids.emplace_back(tok[1]);
                               } else if (tok[0] == "seen") {
                                 lib.seen_episodes.emplace(tok[1]);
                               } else {
                                 throw ParseError(ln, "unknown directive '" + std::string(tok[0]) + "'");
                               }
                             });
  if (!header) throw ParseError(1, "missing 'library' header");
  for (const auto& id : ids) {
    Module m;
    m.id = id;
    m.fragment = read_mdp_file(dir / (id + ".mdp"));
    parse_module_stats(detail::slurp(dir / (id + ".stats")), m);
    lib.add(std::move(m));
  }
  return lib;
}

}  // namespace construal
