#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "construal/composition.hpp"
#include "construal/search.hpp"

namespace construal {

/// Reusable abstract fragment. Exit placeholders are terminal states.
struct Module {
  std::string id;
  GroundMdp fragment;
  Interface interface;
  std::optional<Policy> policy;
  std::optional<ValueFunction> values;
  // Keyed by state_element / action_element.
  std::map<std::string, std::uint64_t> use_count;
  std::map<std::string, std::uint64_t> discard_count;
  std::vector<std::string> lineage;

  /// Throws Error when the fragment, interface or statistics are malformed.
  void validate() const;
  bool operator==(const Module&) const = default;
};

struct Library {
  std::map<std::string, Module> modules;
  // Sorted horizon-1 signature digests per module.
  std::map<std::string, std::vector<std::uint64_t>> signature_index;
  // Episodes whose usage has been folded into the statistics.
  std::set<std::string> seen_episodes;
  std::uint64_t next_serial = 1;

  void add(Module module);
  void erase(const std::string& id);
  void rebuild_index();
  std::string fresh_id();
  const Module* find(const std::string& id) const;
  std::size_t size() const { return modules.size(); }
  bool operator==(const Library&) const = default;
};

/// A module serving as analogy source in one episode; `map` sends task
/// states into the module fragment (abstract_id = module id).
struct ModuleUse {
  std::string module_id;
  std::string instance_id;
  HomomorphismMap map;
};

struct EpisodeRecord {
  std::string task_id;
  GroundMdp task;
  Construal construal;
  Policy policy;         // over the construal
  ValueFunction values;  // over the construal
  std::vector<ModuleUse> uses;
  CostLedger ledger;
};

struct Retrieval {
  std::vector<std::string> ids;  // best first
  std::uint64_t comparisons = 0;
};

/// Ranks modules by Jaccard similarity of the distinct horizon-1 signature
/// sets (ties by id) and returns the top k.
Retrieval retrieve_candidates(const Library& library, const GroundMdp& target, std::size_t k,
                              const std::set<std::string>& excluded = {});

struct ConstrueOptions {
  std::size_t top_k = 3;
  double min_gain = 0.05;
  std::uint64_t cost_budget = 1000000;  // C_max recorded in the ledger
  std::set<std::string> excluded;       // modules not to retrieve
  SearchOptions search;
};

struct ConstrueResult {
  Construal construal;
  CostLedger ledger;
  std::vector<ModuleUse> uses;
  double coverage = 0.0;  // task pairs covered by modules
  std::size_t imported_pairs = 0;
  bool no_analogy = true;
};

/// Greedy cover: each round maps the not yet owned task states into the best
/// of the top-k retrieved modules (partial search) and commits the map on the
/// states it covers completely. Stops when a round adds under min_gain of the
/// task pairs or after max_modules rounds. The remainder is imported verbatim
/// and glued to the module states it leads into.
///
/// C_c = search expansions + retrieval comparisons + imported pairs.
ConstrueResult construe(const Library& library, const GroundMdp& task, const SearchBudget& budget,
                        std::size_t max_modules, const ConstrueOptions& options = {});

struct SolveResult {
  Policy policy;
  ValueFunction values;
  CostLedger ledger;
  std::size_t sweeps = 0;
};

/// Value iteration on the construal, initialised from the stored values of
/// the contributing modules. C_s = backups.
SolveResult solve(const Construal& construal, const Library& library, double tolerance = kDefaultTolerance);

struct UpdateOptions {
  std::uint64_t min_uses = 3;
  std::size_t fragment_cap = 12;
  std::uint64_t search_budget = 100000;
};

/// Folds new usage statistics in, extracts fragments recurring in at least
/// `extraction_threshold` episodes, prunes frequently discarded elements into
/// refined modules (originals kept) and merges isomorphic modules.
Library update_library(const Library& library, const std::vector<EpisodeRecord>& history,
                       std::size_t extraction_threshold = 2, double discard_ratio = 0.5,
                       const UpdateOptions& options = {});

/// Candidate fragments of an MDP: closures of every non-terminal state under
/// all actions, capped at `cap` states, transitions leaving the set
/// redirected to exit terminals; only maximal sets are kept.
struct Fragment {
  GroundMdp mdp;
  Interface interface;
  std::vector<StateId> states;  // source state of each non-exit fragment state
};
std::vector<Fragment> candidate_fragments(const GroundMdp& mdp, std::size_t cap = 12);

/// True when strict full-scope homomorphisms exist in both directions.
bool strictly_bihomomorphic(const GroundMdp& a, const GroundMdp& b, std::uint64_t budget = 100000);

struct Affordance {
  std::string module_id;
  StateId abstract_state = 0;
  std::vector<ActionId> actions;
  std::vector<std::string> names;
};

/// Abstract actions available at the bound image of `state`, one entry per
/// covering binding in module-id order.
std::vector<Affordance> afford(const GroundMdp& task, StateId state, const Library& library,
                               const std::vector<HomomorphismMap>& bindings);

// Directory layout: `index` (module, seen and next lines), `<id>.mdp` and
// `<id>.stats` per module.
void save_library(const Library& library, const std::filesystem::path& dir);
Library load_library(const std::filesystem::path& dir);
std::string write_module_stats(const Module& module);
void parse_module_stats(std::string_view text, Module& module);

}  // namespace construal
