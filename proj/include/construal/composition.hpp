#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "construal/homomorphism.hpp"
#include "construal/lifting.hpp"

namespace construal {

inline constexpr const char* kVerbatim = "verbatim";

struct Interface {
  std::vector<StateId> entries;
  std::vector<StateId> exits;  // terminal states of the fragment
  bool operator==(const Interface&) const = default;
};

/// One use of a module fragment inside a construal.
struct ModuleInstance {
  std::string instance_id;
  std::string module_id;  // kVerbatim for imported task fragments
  GroundMdp fragment;
  Interface interface;
};

/// Identifies exit state `exit_state` of one instance with entry state
/// `entry_state` of another (or the same) instance.
struct Gluing {
  std::string exit_instance;
  StateId exit_state = 0;
  std::string entry_instance;
  StateId entry_state = 0;
  bool operator==(const Gluing&) const = default;
};

struct ProvenanceEntry {
  std::string module_id;
  std::string instance_id;
  std::string source_element;  // "s<x>" or "a<x>:<b>" in the fragment
  bool operator==(const ProvenanceEntry&) const = default;
};

/// Element names used for provenance and usage statistics.
std::string state_element(StateId s);
std::string action_element(StateId s, ActionId a);

struct Construal {
  GroundMdp abstract_mdp;
  HomomorphismMap binding;  // ground task -> abstract_mdp
  std::map<std::string, ProvenanceEntry> provenance;
  std::vector<Gluing> glue;

  /// Construal state of (instance, fragment state), if it survived gluing.
  std::optional<StateId> locate(const std::string& instance_id, StateId fragment_state) const;
  bool operator==(const Construal&) const = default;
};

struct CostLedger {
  std::uint64_t solve_cost = 0;      // C_s, solver backups
  std::uint64_t construal_cost = 0;  // C_c, expansions + comparisons + imports
  std::uint64_t budget = 0;          // C_max
  std::uint64_t total() const { return solve_cost + construal_cost; }
  bool within_budget() const { return total() <= budget; }
  CostLedger& operator+=(const CostLedger& other);
  bool operator==(const CostLedger&) const = default;
};

struct ComposeOptions {
  // Instance ids in precedence order. When two glued states both carry
  // dynamics, the one whose instance is listed first keeps them; without an
  // order this is an Error(composition_conflict).
  std::vector<std::string> precedence;
  std::string name = "construal";
};

/// Disjoint union of the instance fragments. Each glued exit is deleted and
/// transitions into it are redirected to its entry. Bindings (abstract_id =
/// instance id) are re-indexed into the union and merged; their scopes must
/// be pairwise disjoint.
Construal compose(const std::vector<ModuleInstance>& instances, const std::vector<Gluing>& gluings,
                  const std::vector<HomomorphismMap>& bindings, const ComposeOptions& options = {});

struct ObjectiveReport {
  double ground_expected_return = 0.0;
  bool within_budget = true;
  double optimality_gap = 0.0;
  // Reachable ground states where the lifted policy had no action; filled
  // with the ground-optimal action in non-strict mode.
  std::vector<StateId> gaps;
  ValueFunction ground_values;  // of the evaluated policy on the start closure
  Policy ground_policy;
};

/// Lifts `policy` through the construal binding and evaluates it in `task`
/// from the task's start distribution. The gap is the largest V* - V^pi over
/// start states. Strict mode raises Error(coverage_gap) on reachable gaps.
ObjectiveReport evaluate_objective(const GroundMdp& task, const Construal& construal, const Policy& policy,
                                   const CostLedger& ledger, double tolerance = kDefaultTolerance,
                                   bool strict = false);

/// Files: <prefix>.mdp, <prefix>.map, <prefix>.provenance.csv, <prefix>.glue.
void write_construal(const std::filesystem::path& prefix, const Construal& construal);
Construal read_construal(const std::filesystem::path& prefix);
std::string write_provenance_csv(const Construal& construal);
std::string write_glue(const std::vector<Gluing>& glue);
std::vector<Gluing> parse_glue(std::string_view text);

}  // namespace construal
