#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "construal/homomorphism.hpp"
#include "construal/signature.hpp"

namespace construal {

/// Pre-committed pieces of a map (e.g. supplied by a teacher). Hints are
/// never backtracked.
struct HintSet {
  std::vector<std::pair<StateId, StateId>> states;
  std::vector<std::pair<StateAction, ActionId>> actions;

  bool empty() const { return states.empty() && actions.empty(); }
};

enum class SearchMode { strict, partial };

struct SearchBudget {
  std::uint64_t max_node_expansions = 100000;
  SearchMode mode = SearchMode::strict;
  // Weight of deviations against coverage in partial mode.
  double partial_penalty = 1.0;
};

struct SearchOptions {
  double strictness_tol = kStrictnessTolerance;
  std::size_t signature_horizon = kDefaultSignatureHorizon;
  // Partial mode: a state may map to x only if one of its actions matches an
  // action at x with reward + excess-mass deviation below this.
  double max_pair_deviation = 0.25;
  // Partial mode: ground states that may be mapped; empty means all.
  std::vector<bool> allowed;
  // Weight covered pairs by the source optimal policy's occupancy of their
  // image. Off by default.
  bool occupancy_weighting = false;
};

struct SearchResult {
  bool found = false;
  HomomorphismMap best_map;
  HomCertificate certificate;
  double score = 0.0;
  std::uint64_t expansions_used = 0;
  // True when the search finished without hitting the expansion budget.
  bool exhausted = false;
};

/// Searches for a homomorphism from `target` into `source`.
///
/// Backtracking over ground-state -> abstract-state assignments: the most
/// constrained unassigned state is expanded first (fewest consistent
/// candidates, then most assigned neighbours, then smallest id) and its
/// candidates are tried in order of signature similarity. Forward checking
/// re-tests every assigned neighbour. Each assignment tried counts as one
/// node expansion.
///
/// Strict mode returns the first full-scope map whose certificate is strict.
/// Partial mode is anytime: every state may also be left unmapped, and the
/// best map by score = coverage - penalty * (max eps_R + max eps_T) is kept.
///
/// Throws Error(hint_conflict) for inconsistent hints and
/// Error(invalid_budget) for a zero budget.
SearchResult find_homomorphism(const GroundMdp& target, const GroundMdp& source, const HintSet& hints,
                               const SearchBudget& budget, const SearchOptions& options = {});

}  // namespace construal
