#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "construal/domains.hpp"
#include "construal/library.hpp"

namespace construal {

inline constexpr std::uint64_t kDefaultCostBudget = 1000000;

/// Layout of the built-in door-family curriculum: a seeded 3x1, 4x1 or 2x2
/// door-key grid with slippery moves.
DoorKeyParams door_family_layout(std::uint64_t seed);

struct LifecycleOptions {
  std::size_t episodes = 10;
  std::uint64_t seed = 1;
  bool library_updates = true;
  std::size_t extraction_threshold = 2;
  double discard_ratio = 0.5;
  std::uint64_t cost_budget = kDefaultCostBudget;  // C_max per episode
  std::uint64_t search_expansions = 100000;
  double partial_penalty = 1.0;
  std::size_t max_modules = 3;
  std::size_t top_k = 3;
  double tolerance = kDefaultTolerance;
  // Construe passes per episode; later passes exclude the modules of a pass
  // whose lifted policy missed the optimum by more than failure_gap.
  std::size_t max_passes = 2;
  double failure_gap = 1e-6;
};

struct EpisodeResult {
  std::size_t episode = 0;
  std::string task_id;
  CostLedger ledger;
  double coverage = 0.0;
  double gap = 0.0;
  double ground_return = 0.0;
  bool no_analogy = true;
  std::size_t passes = 0;
  std::size_t modules_used = 0;
  std::size_t library_size = 0;  // after the episode's update
};

struct LifecycleResult {
  std::vector<EpisodeResult> episodes;
  Library library;
};

/// Per episode: construe -> solve -> evaluate, then update_library when
/// enabled. Budget overruns are flagged in the ledger, never hidden.
/// `on_episode` (optional) sees the library after each episode.
LifecycleResult run_lifecycle(const LifecycleOptions& options, Library initial = {},
                              const std::function<void(std::size_t, const Library&)>& on_episode = {});

/// Sum of C_s + C_c over episodes numbered >= first_episode.
std::uint64_t cumulative_cost(const LifecycleResult& result, std::size_t first_episode = 2);

std::string lifecycle_csv_header();
std::string lifecycle_csv_rows(const LifecycleResult& result, const std::string& arm, std::uint64_t seed);

struct AmortizationRun {
  std::uint64_t seed = 0;
  LifecycleResult with_updates;
  LifecycleResult without_updates;
};

/// Runs the lifecycle with and without library updates for every seed.
std::vector<AmortizationRun> bench_amortization(const LifecycleOptions& base, const std::vector<std::uint64_t>& seeds);
std::string amortization_csv(const std::vector<AmortizationRun>& runs);
/// Long format: arm,seed,episode,metric,value.
std::string amortization_long_csv(const std::vector<AmortizationRun>& runs);

}  // namespace construal
