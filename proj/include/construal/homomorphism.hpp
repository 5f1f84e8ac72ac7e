#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "construal/mdp.hpp"

namespace construal {

inline constexpr double kStrictnessTolerance = 1e-9;

/// Partial MDP homomorphism from a ground MDP onto an abstract one: a state
/// map f, a per-state action map g and the scope of (state, action) pairs on
/// which the reward and commuting-dynamics conditions are asserted.
struct HomomorphismMap {
  std::string ground_id;
  std::string abstract_id;
  std::map<StateId, StateId> f;
  std::map<StateAction, ActionId> g;
  std::set<StateAction> scope;

  std::optional<StateId> image(StateId s) const;
  std::optional<ActionId> action_image(StateId s, ActionId a) const;

  /// Structural checks against the two MDPs: endpoints, ranges, action
  /// availability, g => f, scope within g. Throws Error.
  void validate(const GroundMdp& ground, const GroundMdp& abstract) const;

  bool operator==(const HomomorphismMap&) const = default;
};

/// Identity map of an MDP onto itself with full scope.
HomomorphismMap identity_map(const GroundMdp& mdp);

struct PairDeviation {
  double reward = 0.0;
  double transition = 0.0;  // total variation, unmapped mass included

  bool operator==(const PairDeviation&) const = default;
};

struct HomCertificate {
  std::map<StateAction, PairDeviation> deviations;
  double max_reward_deviation = 0.0;
  double max_transition_deviation = 0.0;
  bool strict = false;
  double coverage_fraction = 0.0;

  bool operator==(const HomCertificate&) const = default;
};

/// Pushes a ground distribution through f. Throws Error(unmapped_mass) when
/// positive mass falls outside f's domain.
std::vector<Outcome> pushforward(const std::vector<Outcome>& dist, const std::map<StateId, StateId>& f);

/// Per-pair deviation for one ground pair under an abstract action; mass on
/// successors outside f's domain counts as an extra unmatched outcome.
PairDeviation pair_deviation(const GroundMdp& abstract, const std::map<StateId, StateId>& f,
                             const ActionSpec& ground_action, StateId x, ActionId abstract_action);

HomCertificate check_homomorphism(const GroundMdp& ground, const GroundMdp& abstract, const HomomorphismMap& map,
                                  double strictness_tol = kStrictnessTolerance);

struct QuotientResult {
  GroundMdp abstract;
  HomomorphismMap map;
  HomCertificate certificate;
};

/// Builds the quotient MDP of `ground` under a state partition
/// (block index per state) and a per-pair action relabelling (identity when
/// a pair is absent). Abstract dynamics and rewards are uniform averages over
/// block members.
QuotientResult quotient(const GroundMdp& ground, const std::vector<std::size_t>& block_of,
                        const std::map<StateAction, ActionId>& action_map = {},
                        double strictness_tol = kStrictnessTolerance);

/// 2 (eps_R + discount * eps_T * reward_range / (1 - discount)) / (1 - discount)
double loss_bound(const HomCertificate& cert, double discount, double reward_range);

// Text format: `map <ground_id> <abstract_id>`, then `f <s> <x>`,
// `g <s> <a> <b>` and `scope <s> <a>` lines.
HomomorphismMap parse_map(std::string_view text);
std::string write_map(const HomomorphismMap& map);
HomomorphismMap read_map_file(const std::filesystem::path& path);
void write_map_file(const std::filesystem::path& path, const HomomorphismMap& map);

}  // namespace construal
