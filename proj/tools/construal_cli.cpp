// construal: command-line front end for the toolkit.
//
// Exit codes: 0 success, 1 finished without a result, 2 usage, 3 malformed
// input, 4 budget exceeded (results still written), 5 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "construal/csv.hpp"
#include "construal/domains.hpp"
#include "construal/lifecycle.hpp"
#include "construal/mdp_io.hpp"

using namespace construal;

namespace {

enum Exit { kOk = 0, kNoResult = 1, kUsage = 2, kParse = 3, kBudget = 4, kInternal = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t env_budget(std::uint64_t fallback) {
  const char* v = std::getenv("CONSTRUAL_BUDGET");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const unsigned long long b = std::strtoull(v, &end, 10);
  if (*end != '\0' || b == 0 || v[0] == '-') throw UsageError("CONSTRUAL_BUDGET must be a positive integer");
  return b;
}

// Adds the file name to errors raised while reading it.
template <class F>
auto from_file(const std::string& path, F&& read) {
  try {
    return read(path);
  } catch (const ParseError& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.states());
  }
}

GroundMdp load_mdp(const std::string& path) { return from_file(path, [](const std::string& p) { return read_mdp_file(p); }); }
HomomorphismMap load_map(const std::string& path) {
  return from_file(path, [](const std::string& p) { return read_map_file(p); });
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    detail::spit(path, text);
  }
}

Cell parse_cell(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("cells are written x,y");
  try {
    return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("cells are written x,y");
  }
}

HintSet parse_hints(std::string_view text) {
  HintSet h;
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view) {
    using detail::parse_index;
    if (tok[0] == "state" && tok.size() == 3) {
      h.states.push_back({parse_index(tok[1], ln), parse_index(tok[2], ln)});
    } else if (tok[0] == "action" && tok.size() == 4) {
      h.actions.push_back({{parse_index(tok[1], ln), parse_index(tok[2], ln)}, parse_index(tok[3], ln)});
    } else {
      throw ParseError(ln, "expected 'state <s> <x>' or 'action <s> <a> <b>'");
    }
  });
  return h;
}

struct ComposeSpec {
  std::vector<ModuleInstance> instances;
  std::vector<Gluing> gluings;
  std::vector<HomomorphismMap> bindings;
  ComposeOptions options;
};

ComposeSpec parse_compose_spec(const std::string& path) {
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string_view p) { return (base / std::filesystem::path(std::string(p))).string(); };
  ComposeSpec spec;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::pair<bool, bool>> declared;  // entries, exits given
  auto instance = [&](std::string_view id, std::size_t ln) -> ModuleInstance& {
    const auto it = index.find(std::string(id));
    if (it == index.end()) throw ParseError(ln, "unknown instance '" + std::string(id) + "'");
    return spec.instances[it->second];
  };
  const std::string text = detail::slurp(path);
  detail::for_each_directive(text, [&](std::size_t ln, const std::vector<std::string_view>& tok, std::string_view) {
    using detail::parse_index;
    const std::string_view d = tok[0];
    if (d == "instance" && (tok.size() == 3 || tok.size() == 4)) {
      ModuleInstance inst;
      inst.instance_id = std::string(tok[1]);
      inst.fragment = load_mdp(resolve(tok[2]));
      inst.module_id = tok.size() == 4 ? std::string(tok[3]) : inst.fragment.name;
      if (!index.emplace(inst.instance_id, spec.instances.size()).second) throw ParseError(ln, "duplicate instance");
      spec.instances.push_back(std::move(inst));
    } else if ((d == "entry" || d == "exit") && tok.size() == 3) {
      auto& inst = instance(tok[1], ln);
      (d == "entry" ? inst.interface.entries : inst.interface.exits).push_back(parse_index(tok[2], ln));
      (d == "entry" ? declared[inst.instance_id].first : declared[inst.instance_id].second) = true;
    } else if (d == "glue" && tok.size() == 5) {
      spec.gluings.push_back({std::string(tok[1]), parse_index(tok[2], ln), std::string(tok[3]), parse_index(tok[4], ln)});
    } else if (d == "binding" && tok.size() == 2) {
      spec.bindings.push_back(load_map(resolve(tok[1])));
    } else if (d == "precedence" && tok.size() >= 2) {
      for (std::size_t i = 1; i < tok.size(); ++i) spec.options.precedence.emplace_back(tok[i]);
    } else if (d == "name" && tok.size() == 2) {
      spec.options.name = std::string(tok[1]);
    } else {
      throw ParseError(ln, "unknown or malformed directive '" + std::string(d) + "'");
    }
  });
  for (auto& inst : spec.instances) {
    const auto flags = declared[inst.instance_id];
    for (StateId s = 0; s < inst.fragment.state_count(); ++s) {
      if (!flags.first) inst.interface.entries.push_back(s);
      if (!flags.second && inst.fragment.is_terminal(s)) inst.interface.exits.push_back(s);
    }
  }
  return spec;
}

std::string certificate_report(const HomCertificate& cert, const GroundMdp& ground, bool pairs) {
  std::ostringstream os;
  os << "strict " << (cert.strict ? "true" : "false") << '\n';
  os << "coverage " << format_double(cert.coverage_fraction) << '\n';
  os << "max_reward_deviation " << format_double(cert.max_reward_deviation) << '\n';
  os << "max_transition_deviation " << format_double(cert.max_transition_deviation) << '\n';
  os << "loss_bound " << format_double(loss_bound(cert, ground.discount, ground.reward_range())) << '\n';
  if (pairs)
    for (const auto& [sa, d] : cert.deviations)
      os << "pair " << sa.first << ' ' << sa.second << ' ' << format_double(d.reward) << ' '
         << format_double(d.transition) << '\n';
  return os.str();
}

LifecycleOptions lifecycle_from_json(const std::string& path, LifecycleOptions o) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::parse, path + ": configuration must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "episodes") o.episodes = v.get<std::size_t>();
      else if (key == "seed") o.seed = v.get<std::uint64_t>();
      else if (key == "library_updates") o.library_updates = v.get<bool>();
      else if (key == "extraction_threshold") o.extraction_threshold = v.get<std::size_t>();
      else if (key == "discard_ratio") o.discard_ratio = v.get<double>();
      else if (key == "budget") o.cost_budget = v.get<std::uint64_t>();
      else if (key == "search_expansions") o.search_expansions = v.get<std::uint64_t>();
      else if (key == "partial_penalty") o.partial_penalty = v.get<double>();
      else if (key == "max_modules") o.max_modules = v.get<std::size_t>();
      else if (key == "top_k") o.top_k = v.get<std::size_t>();
      else if (key == "tolerance") o.tolerance = v.get<double>();
      else if (key == "max_passes") o.max_passes = v.get<std::size_t>();
      else throw UsageError("unknown configuration key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw UsageError("configuration key '" + key + "' has the wrong type");
    }
  }
  return o;
}

void check_lifecycle(const LifecycleOptions& o) {
  if (o.cost_budget == 0) throw UsageError("budget must be positive");
  if (o.search_expansions == 0) throw UsageError("search expansions must be positive");
  if (o.episodes == 0) throw UsageError("need at least one episode");
}

int run(int argc, char** argv) {
  CLI::App app{"Analogy as partial MDP homomorphism: verify, search, lift, compose and amortize."};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 no result, 2 usage, 3 malformed input, 4 budget exceeded, 5 internal.\n"
             "CONSTRUAL_BUDGET sets the default budget (search expansions, or C_max for lifecycle runs).");
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a domain MDP in the textual format");
  std::string kind, out, map_out, abstract_out, key = "0,0", door = "1,0", start;
  int width = 0, height = 0, door_row = 0, recall = 1;
  double slip = 0.0, discount = 0.9, sparsity = 0.5, noise = 0.0, exit_reward = 0.0;
  std::size_t n_states = 5, n_actions = 2, branching = 2, blowup = 2;
  gen->add_option("kind", kind, "door-key | email | two-room | random | planted | door-module | room")->required();
  gen->add_option("-o,--out", out, "Output MDP file (stdout when absent)");
  gen->add_option("--map-out", map_out, "Write the known map (door module or planted abstract)");
  gen->add_option("--abstract-out", abstract_out, "Write the planted abstract MDP");
  gen->add_option("--width", width, "Grid or room width");
  gen->add_option("--height", height, "Grid or room height");
  gen->add_option("--key", key, "Key cell x,y or 'none'")->capture_default_str();
  gen->add_option("--door", door, "Door cell x,y")->capture_default_str();
  gen->add_option("--start", start, "Start cell x,y (seeded when absent)");
  gen->add_option("--door-row", door_row, "Row of the room doorway")->capture_default_str();
  gen->add_option("--exit-reward", exit_reward, "Reward for leaving a room module")->capture_default_str();
  gen->add_option("--recall-steps", recall, "Email recall steps")->capture_default_str();
  gen->add_option("--slip", slip, "Probability that a move fails")->capture_default_str();
  gen->add_option("--discount", discount, "Discount factor")->capture_default_str();
  gen->add_option("--states", n_states, "Random MDP states")->capture_default_str();
  gen->add_option("--actions", n_actions, "Random MDP actions per state")->capture_default_str();
  gen->add_option("--branching", branching, "Random MDP successors per pair")->capture_default_str();
  gen->add_option("--sparsity", sparsity, "Fraction of zero-reward pairs")->capture_default_str();
  gen->add_option("--blowup", blowup, "Planted ground states per abstract state")->capture_default_str();
  gen->add_option("--noise", noise, "Planted transition noise in [0, 0.2]")->capture_default_str();
  add_seed(gen);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Value iteration; prints state,value,action CSV");
  std::string mdp_path, values_out, policy_out;
  double tol = kDefaultTolerance;
  solve_cmd->add_option("mdp", mdp_path, "MDP file")->required();
  solve_cmd->add_option("--tol", tol, "Sup-norm tolerance")->capture_default_str();
  solve_cmd->add_option("--values-out", values_out, "Write the value function");
  solve_cmd->add_option("--policy-out", policy_out, "Write the greedy policy");
  add_seed(solve_cmd);

  // check-hom
  auto* check = app.add_subcommand("check-hom", "Certificate report for a map between two MDPs");
  std::string ground_path, abstract_path, map_path;
  bool list_pairs = false;
  double strict_tol = kStrictnessTolerance;
  check->add_option("ground", ground_path, "Ground MDP file")->required();
  check->add_option("abstract", abstract_path, "Abstract MDP file")->required();
  check->add_option("map", map_path, "Map file")->required();
  check->add_option("--tol", strict_tol, "Strictness tolerance")->capture_default_str();
  check->add_flag("--pairs", list_pairs, "List per-pair deviations");
  add_seed(check);

  // transfer
  auto* transfer = app.add_subcommand("transfer", "Lift the abstract optimum through a map and report the ground gap");
  bool strict_transfer = false;
  transfer->add_option("ground", ground_path, "Ground MDP file")->required();
  transfer->add_option("abstract", abstract_path, "Abstract MDP file")->required();
  transfer->add_option("map", map_path, "Map file")->required();
  transfer->add_option("--tol", tol, "Solver tolerance")->capture_default_str();
  transfer->add_flag("--strict", strict_transfer, "Fail on reachable lifting gaps");
  add_seed(transfer);

  // find-analogy
  auto* find = app.add_subcommand("find-analogy", "Search a map from a target MDP into a source MDP");
  std::string target_path, source_path, hints_path, mode = "strict", csv_out, instance_id;
  std::uint64_t expansions = 0;
  double penalty = 1.0;
  find->add_option("target", target_path, "Target (ground) MDP file")->required();
  find->add_option("source", source_path, "Source (abstract) MDP file")->required();
  find->add_option("--hints", hints_path, "Hint file ('state s x' / 'action s a b' lines)");
  find->add_option("--mode", mode, "strict | partial")->capture_default_str();
  find->add_option("--budget", expansions, "Node expansion budget (default: CONSTRUAL_BUDGET or 100000)");
  find->add_option("--penalty", penalty, "Partial-mode deviation penalty")->capture_default_str();
  find->add_option("--map-out", map_out, "Write the map here instead of stdout");
  find->add_option("--csv-out", csv_out, "Write the CSV row here instead of stdout");
  find->add_option("--id", instance_id, "Instance id for the CSV row (default: target name)");
  add_seed(find);

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "Glue module instances into a construal");
  std::string spec_path, prefix;
  compose_cmd->add_option("spec", spec_path, "Composition spec file")->required();
  compose_cmd->add_option("--out", prefix, "Output prefix for .mdp/.map/.provenance.csv/.glue")->required();
  add_seed(compose_cmd);

  // construe
  auto* construe_cmd = app.add_subcommand("construe", "Build a construal of a task from a library directory");
  std::string library_dir;
  std::size_t max_modules = 3;
  construe_cmd->add_option("task", mdp_path, "Task MDP file")->required();
  construe_cmd->add_option("--library", library_dir, "Library directory (empty library when absent)");
  construe_cmd->add_option("--out", prefix, "Output prefix for the construal files")->required();
  construe_cmd->add_option("--max-modules", max_modules, "Greedy cover rounds")->capture_default_str();
  construe_cmd->add_option("--budget", expansions, "Expansions per search (default: CONSTRUAL_BUDGET or 100000)");
  add_seed(construe_cmd);

  // lifecycle
  auto* life = app.add_subcommand("lifecycle", "Run the door-family curriculum; per-episode CSV");
  std::string config_path, snapshot_dir;
  LifecycleOptions lo;
  bool no_updates = false;
  std::uint64_t cost_budget = 0;
  life->add_option("--config", config_path, "JSON configuration (keys match the flags)");
  life->add_option("--episodes", lo.episodes, "Episodes")->capture_default_str();
  life->add_flag("--no-updates", no_updates, "Disable library updates");
  life->add_option("--budget", cost_budget, "C_max per episode (default: CONSTRUAL_BUDGET or 1000000)");
  life->add_option("--csv-out", csv_out, "Write the CSV here instead of stdout");
  life->add_option("--snapshot-dir", snapshot_dir, "Save the library after every episode under this directory");
  add_seed(life);

  // bench-amortization
  auto* bench = app.add_subcommand("bench-amortization", "Lifecycle with and without library updates");
  std::vector<std::uint64_t> seeds;
  std::string long_out;
  bench->add_option("--episodes", lo.episodes, "Episodes per arm")->capture_default_str();
  bench->add_option("--seeds", seeds, "Several seeds (overrides --seed)");
  bench->add_option("--budget", cost_budget, "C_max per episode (default: CONSTRUAL_BUDGET or 1000000)");
  bench->add_option("--csv-out", csv_out, "Write the comparison CSV here instead of stdout");
  bench->add_option("--long-out", long_out, "Write the long-format table");
  add_seed(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*gen) {
    DomainSpec spec;
    spec.seed = seed;
    if (kind == "door-module") {
      emit(out, write_mdp(door_module(discount)));
      return kOk;
    }
    if (kind == "room") {
      RoomParams rp{width ? width : 3, height ? height : 2, door_row, exit_reward, slip, discount};
      emit(out, write_mdp(room_module(rp, "room")));
      return kOk;
    }
    const auto k = parse_domain_kind(kind);
    if (!k) throw UsageError("unknown domain kind '" + kind + "'");
    spec.kind = *k;
    spec.door_key.width = width ? width : 2;
    spec.door_key.height = height ? height : 1;
    spec.door_key.key = key == "none" ? std::nullopt : std::optional<Cell>(parse_cell(key));
    spec.door_key.door = parse_cell(door);
    if (!start.empty()) spec.door_key.start = parse_cell(start);
    spec.door_key.slip = slip;
    spec.door_key.discount = discount;
    spec.recall_steps = recall;
    spec.discount = discount;
    spec.room = {width ? width : 3, height ? height : 2, door_row, 0.0, slip, discount};
    spec.random = {n_states, n_actions, branching, sparsity, discount, seed};
    spec.blowup = blowup;
    spec.noise = noise;
    const Generated g = generate(spec);
    emit(out, write_mdp(g.mdp));
    if (!map_out.empty()) {
      if (!g.map) throw UsageError("this domain has no known map");
      write_map_file(map_out, *g.map);
    }
    if (!abstract_out.empty()) {
      if (!g.abstract) throw UsageError("only planted instances have an abstract MDP");
      write_mdp_file(abstract_out, *g.abstract);
    }
    return kOk;
  }

  if (*solve_cmd) {
    const GroundMdp mdp = load_mdp(mdp_path);
    const auto vi = value_iteration(mdp, {tol, kDefaultMaxSweeps});
    const Policy pi = greedy_policy(mdp, vi.values);
    std::string csv = csv_row({"state", "label", "value", "action", "action_name"});
    for (StateId s = 0; s < mdp.state_count(); ++s) {
      const auto a = pi.action(s);
      std::string name;
      if (a) {
        const auto it = mdp.action_names.find(*a);
        name = it == mdp.action_names.end() ? "" : it->second;
      }
      csv += csv_row({std::to_string(s), mdp.states[s].label, format_double(vi.values[s]), a ? std::to_string(*a) : "",
                      name});
    }
    std::cout << csv;
    if (!values_out.empty()) detail::spit(values_out, write_values(vi.values));
    if (!policy_out.empty()) detail::spit(policy_out, write_policy(pi));
    std::cerr << "sweeps " << vi.sweeps << " backups " << vi.backups << '\n';
    return vi.converged ? kOk : kBudget;
  }

  if (*check) {
    const GroundMdp ground = load_mdp(ground_path);
    const GroundMdp abstract = load_mdp(abstract_path);
    const HomomorphismMap map = load_map(map_path);
    std::cout << certificate_report(check_homomorphism(ground, abstract, map, strict_tol), ground, list_pairs);
    return kOk;
  }

  if (*transfer) {
    const GroundMdp ground = load_mdp(ground_path);
    const GroundMdp abstract = load_mdp(abstract_path);
    const HomomorphismMap map = load_map(map_path);
    map.validate(ground, abstract);
    const auto vi = value_iteration(abstract, {tol, kDefaultMaxSweeps});
    const LiftedPolicy lifted = lift_policy(greedy_policy(abstract, vi.values), map, ground);
    const TransferReport r = transfer_report(ground, lifted, tol, strict_transfer);
    std::cout << "optimality_gap " << format_double(r.optimality_gap) << '\n';
    std::cout << "covered_states " << lifted.coverage.size() << '\n';
    std::cout << "gaps " << lifted.gaps.size() << '\n';
    std::cout << "excluded " << r.excluded.size() << '\n';
    std::cout << "warning " << (r.warning ? "true" : "false") << '\n';
    return kOk;
  }

  if (*find) {
    const GroundMdp target = load_mdp(target_path);
    const GroundMdp source = load_mdp(source_path);
    HintSet hints;
    if (!hints_path.empty())
      hints = from_file(hints_path, [](const std::string& p) { return parse_hints(detail::slurp(p)); });
    if (mode != "strict" && mode != "partial") throw UsageError("--mode is strict or partial");
    SearchBudget budget;
    budget.max_node_expansions = expansions ? expansions : env_budget(100000);
    budget.mode = mode == "strict" ? SearchMode::strict : SearchMode::partial;
    budget.partial_penalty = penalty;
    if (find->count("--budget") && expansions == 0) throw UsageError("--budget must be positive");
    const SearchResult r = find_homomorphism(target, source, hints, budget);
    if (r.found) emit(map_out, write_map(r.best_map));
    emit(csv_out, csv_row({"instance", "mode", "expansions", "score", "strict", "found", "exhausted"}) +
                      csv_row({instance_id.empty() ? target.name : instance_id, mode, std::to_string(r.expansions_used),
                               format_double(r.score), r.found && r.certificate.strict ? "true" : "false",
                               r.found ? "true" : "false", r.exhausted ? "true" : "false"}));
    if (!r.exhausted) return kBudget;
    return r.found ? kOk : kNoResult;
  }

  if (*compose_cmd) {
    const ComposeSpec spec = from_file(spec_path, [](const std::string& p) { return parse_compose_spec(p); });
    const Construal c = compose(spec.instances, spec.gluings, spec.bindings, spec.options);
    write_construal(prefix, c);
    return kOk;
  }

  if (*construe_cmd) {
    const GroundMdp task = load_mdp(mdp_path);
    const Library lib = library_dir.empty() ? Library{} : load_library(library_dir);
    if (construe_cmd->count("--budget") && expansions == 0) throw UsageError("--budget must be positive");
    const SearchBudget budget{expansions ? expansions : env_budget(100000), SearchMode::partial, 1.0};
    const ConstrueResult r = construe(lib, task, budget, max_modules);
    write_construal(prefix, r.construal);
    std::cout << csv_row({"task", "modules_used", "coverage", "imported_pairs", "construal_cost", "no_analogy"})
              << csv_row({task.name, std::to_string(r.uses.size()), format_double(r.coverage),
                          std::to_string(r.imported_pairs), std::to_string(r.ledger.construal_cost),
                          r.no_analogy ? "true" : "false"});
    return kOk;
  }

  if (*life || *bench) {
    if (*life && !config_path.empty()) {
      const std::size_t flag_episodes = lo.episodes;
      lo = lifecycle_from_json(config_path, lo);
      if (life->count("--episodes")) lo.episodes = flag_episodes;
    }
    if (cost_budget) lo.cost_budget = cost_budget;
    else if ((*life ? life : bench)->count("--budget")) throw UsageError("--budget must be positive");
    else if (!(*life && !config_path.empty() && lo.cost_budget != kDefaultCostBudget)) lo.cost_budget = env_budget(kDefaultCostBudget);
    if (*life && (life->count("--seed") || config_path.empty())) lo.seed = seed;
    check_lifecycle(lo);
    bool over = false;
    if (*life) {
      if (no_updates) lo.library_updates = false;
      const LifecycleResult r = run_lifecycle(lo, {}, [&](std::size_t e, const Library& lib) {
        if (!snapshot_dir.empty())
          save_library(lib, std::filesystem::path(snapshot_dir) / ("episode-" + std::to_string(e)));
      });
      emit(csv_out, lifecycle_csv_header() + lifecycle_csv_rows(r, lo.library_updates ? "library" : "no-library", lo.seed));
      for (const auto& e : r.episodes) over = over || !e.ledger.within_budget();
    } else {
      if (seeds.empty()) seeds.push_back(seed);
      const auto runs = bench_amortization(lo, seeds);
      emit(csv_out, amortization_csv(runs));
      if (!long_out.empty()) detail::spit(long_out, amortization_long_csv(runs));
      for (const auto& r : runs)
        for (const auto* arm : {&r.with_updates, &r.without_updates})
          for (const auto& e : arm->episodes) over = over || !e.ledger.within_budget();
    }
    return over ? kBudget : kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    switch (e.code()) {
      case Errc::invalid_parameter:
      case Errc::invalid_budget:
      case Errc::io:
        return kUsage;
      case Errc::numeric_failure:
        return kInternal;
      default:
        return kParse;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
