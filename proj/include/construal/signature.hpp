#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "construal/mdp.hpp"

namespace construal {

inline constexpr std::size_t kDefaultSignatureHorizon = 1;

/// Structural fingerprint of a state, refined level by level.
///
/// Level 0 hashes the terminal flag, the sorted multiset of available-action
/// rewards and the sorted feature tags. Level h hashes level 0 together with,
/// for every action, its reward and the out-degree profile of its successors
/// aggregated by their level h-1 class. Aggregating by class (rather than by
/// successor id) makes the fingerprint invariant under homomorphisms whose
/// per-state action map is a bijection, so equal digests are necessary for
/// such a strict match. Probabilities and rewards are quantised to 1e-6.
struct StateSignature {
  std::vector<std::uint64_t> levels;
  std::vector<double> rewards;
  std::vector<std::string> tags;
  bool terminal = false;

  std::uint64_t digest() const { return levels.back(); }
  bool operator==(const StateSignature&) const = default;
};

std::vector<StateSignature> state_signatures(const GroundMdp& mdp, std::size_t horizon = kDefaultSignatureHorizon);
StateSignature state_signature(const GroundMdp& mdp, StateId state, std::size_t horizon = kDefaultSignatureHorizon);

/// Ordering score for candidate matches; higher is more alike. Deepest
/// matching level dominates, reward-multiset overlap breaks ties.
double signature_similarity(const StateSignature& a, const StateSignature& b);

/// Sorted horizon-1 digests of every state (the retrieval index entry).
std::vector<std::uint64_t> signature_multiset(const GroundMdp& mdp);

/// Multiset Jaccard overlap of two sorted digest lists.
double multiset_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

}  // namespace construal
