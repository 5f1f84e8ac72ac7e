#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "construal/error.hpp"

namespace construal {

using StateId = std::size_t;
using ActionId = std::size_t;
using StateAction = std::pair<StateId, ActionId>;

inline constexpr double kDistributionTolerance = 1e-9;

struct Outcome {
  StateId next = 0;
  double prob = 0.0;

  bool operator==(const Outcome&) const = default;
};

/// One available (state, action) pair. Outcomes are kept sorted by successor
/// with no duplicates.
struct ActionSpec {
  ActionId id = 0;
  double reward = 0.0;
  std::vector<Outcome> outcomes;

  bool operator==(const ActionSpec&) const = default;
};

struct StateInfo {
  std::string label;
  std::vector<std::string> tags;  // sorted, unique
  bool terminal = false;
  std::vector<ActionSpec> actions;  // sorted by id

  bool operator==(const StateInfo&) const = default;
};

/// Finite tabular MDP with rewards on (state, action) pairs. Terminal states
/// carry no actions and have value 0.
struct GroundMdp {
  std::string name = "mdp";
  double discount = 0.9;
  std::vector<StateInfo> states;
  std::map<ActionId, std::string> action_names;
  // Optional start distribution; empty means uniform over all states.
  std::vector<std::pair<StateId, double>> starts;

  GroundMdp() = default;
  GroundMdp(std::string name, std::size_t state_count, double discount);

  std::size_t state_count() const { return states.size(); }
  bool is_terminal(StateId s) const { return states.at(s).terminal; }
  const std::vector<ActionSpec>& actions(StateId s) const { return states.at(s).actions; }
  const ActionSpec* find_action(StateId s, ActionId a) const;
  std::size_t pair_count() const;
  std::vector<StateAction> pairs() const;

  /// Insert or replace an action; outcomes are sorted and merged.
  void set_action(StateId s, ActionSpec spec);
  void add_tag(StateId s, const std::string& tag);
  void mark_terminal(StateId s);

  /// max |R(s,a)| over available pairs (0 for an action-free MDP).
  double reward_range() const;
  /// Normalised start weights, uniform when no starts are declared.
  std::vector<double> start_weights() const;

  /// Throws Error(invalid_mdp) when any invariant fails.
  void validate() const;

  bool operator==(const GroundMdp&) const = default;
};

enum class PolicyKind { deterministic, stochastic };

/// Per-state action choice. An empty choice list means the state is not
/// covered; lifted policies are often partial.
struct Policy {
  PolicyKind kind = PolicyKind::deterministic;
  std::vector<std::vector<std::pair<ActionId, double>>> choice;

  Policy() = default;
  explicit Policy(std::size_t state_count, PolicyKind kind = PolicyKind::deterministic)
      : kind(kind), choice(state_count) {}

  std::size_t state_count() const { return choice.size(); }
  bool covers(StateId s) const { return s < choice.size() && !choice[s].empty(); }
  void set(StateId s, ActionId a) { choice.at(s) = {{a, 1.0}}; }
  /// The action with the largest probability, smallest id on ties.
  std::optional<ActionId> action(StateId s) const;
  std::vector<StateId> coverage() const;

  /// Throws Error(invalid_mdp) if a chosen action is unavailable or a
  /// stochastic row does not sum to 1.
  void validate(const GroundMdp& mdp) const;

  bool operator==(const Policy&) const = default;
};

struct ValueFunction {
  std::string mdp_name;
  std::vector<double> values;

  double operator[](StateId s) const { return values[s]; }
  bool paired_with(const GroundMdp& mdp) const {
    return mdp_name == mdp.name && values.size() == mdp.state_count();
  }

  bool operator==(const ValueFunction&) const = default;
};

/// Total variation distance between two sparse distributions sorted by
/// successor id.
double total_variation(const std::vector<Outcome>& p, const std::vector<Outcome>& q);

}  // namespace construal
