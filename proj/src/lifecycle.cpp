#include "construal/lifecycle.hpp"

#include "construal/csv.hpp"
#include "construal/mdp_io.hpp"

namespace construal {

DoorKeyParams door_family_layout(std::uint64_t seed) {
  Rng rng(seed);
  DoorKeyParams p;
  const std::size_t kind = rng.below(3);
  if (kind < 2) {
    p.width = 3 + static_cast<int>(kind);
    p.height = 1;
    p.door = {p.width - 1, 0};
    p.key = Cell{static_cast<int>(rng.below(static_cast<std::size_t>(p.width - 1))), 0};
  } else {
    p.width = p.height = 2;
    const Cell cells[] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const std::size_t d = rng.below(4);
    p.door = cells[d];
    std::size_t k = rng.below(3);
    if (k >= d) ++k;
    p.key = cells[k];
  }
  p.slip = 0.1;
  p.seed = seed;
  return p;
}

LifecycleResult run_lifecycle(const LifecycleOptions& options, Library initial,
                              const std::function<void(std::size_t, const Library&)>& on_episode) {
  if (options.max_passes < 1) throw Error(Errc::invalid_parameter, "need at least one construe pass");
  LifecycleResult out;
  out.library = std::move(initial);
  std::vector<EpisodeRecord> history;
  const GroundMdp task = door_key_grid(door_family_layout(options.seed));
  const SearchBudget search{options.search_expansions, SearchMode::partial, options.partial_penalty};

  for (std::size_t e = 1; e <= options.episodes; ++e) {
    EpisodeResult ep;
    ep.episode = e;
    ep.task_id = "e" + std::to_string(e);
    ep.ledger.budget = options.cost_budget;

    ConstrueOptions co;
    co.top_k = options.top_k;
    co.cost_budget = options.cost_budget;
    std::optional<ConstrueResult> best_c;
    std::optional<SolveResult> best_s;
    std::optional<ObjectiveReport> best_r;
    for (std::size_t pass = 0; pass < options.max_passes; ++pass) {
      ConstrueResult cr = construe(out.library, task, search, options.max_modules, co);
      SolveResult sr = solve(cr.construal, out.library, options.tolerance);
      ep.ledger += cr.ledger;
      ep.ledger += sr.ledger;
      const LiftedPolicy lifted = lift_policy(sr.policy, cr.construal.binding, task);
      ObjectiveReport report = evaluate_objective(task, cr.construal, sr.policy, ep.ledger, options.tolerance);
      if (!report.gaps.empty()) {
        // Planning the missing actions is part of solving.
        const GapFill fill = fill_gaps(task, lifted, lift_values(sr.values, cr.construal.binding, task),
                                       {options.tolerance, kDefaultMaxSweeps});
        ep.ledger.solve_cost += fill.solve.backups;
      }
      ++ep.passes;
      const bool better = !best_r || report.optimality_gap < best_r->optimality_gap;
      const bool failed = report.optimality_gap > options.failure_gap;
      std::set<std::string> used;
      for (const auto& u : cr.uses) used.insert(u.module_id);
      if (better) {
        best_c = std::move(cr);
        best_s = std::move(sr);
        best_r = std::move(report);
      }
      if (!failed || used.empty()) break;
      co.excluded.insert(used.begin(), used.end());
    }

    ep.coverage = best_c->coverage;
    ep.no_analogy = best_c->no_analogy;
    ep.modules_used = best_c->uses.size();
    ep.gap = best_r->optimality_gap;
    ep.ground_return = best_r->ground_expected_return;
    history.push_back({ep.task_id, task, best_c->construal, best_s->policy, best_s->values, best_c->uses, ep.ledger});
    if (options.library_updates)
      out.library = update_library(out.library, history, options.extraction_threshold, options.discard_ratio);
    ep.library_size = out.library.size();
    out.episodes.push_back(ep);
    if (on_episode) on_episode(e, out.library);
  }
  return out;
}

std::uint64_t cumulative_cost(const LifecycleResult& result, std::size_t first_episode) {
  std::uint64_t total = 0;
  for (const auto& e : result.episodes)
    if (e.episode >= first_episode) total += e.ledger.total();
  return total;
}

std::string lifecycle_csv_header() {
  return csv_row({"arm", "seed", "episode", "task", "solve_cost", "construal_cost", "total_cost", "budget",
                  "within_budget", "coverage", "gap", "ground_return", "passes", "modules_used", "library_size"});
}

std::string lifecycle_csv_rows(const LifecycleResult& result, const std::string& arm, std::uint64_t seed) {
  std::string out;
  for (const auto& e : result.episodes)
    out += csv_row({arm, std::to_string(seed), std::to_string(e.episode), e.task_id, std::to_string(e.ledger.solve_cost),
                    std::to_string(e.ledger.construal_cost), std::to_string(e.ledger.total()),
                    std::to_string(e.ledger.budget), e.ledger.within_budget() ? "true" : "false",
                    format_double(e.coverage), format_double(e.gap), format_double(e.ground_return),
                    std::to_string(e.passes), std::to_string(e.modules_used), std::to_string(e.library_size)});
  return out;
}

std::vector<AmortizationRun> bench_amortization(const LifecycleOptions& base, const std::vector<std::uint64_t>& seeds) {
  std::vector<AmortizationRun> runs;
  for (auto seed : seeds) {
    LifecycleOptions o = base;
    o.seed = seed;
    AmortizationRun r;
    r.seed = seed;
    o.library_updates = true;
    r.with_updates = run_lifecycle(o);
    o.library_updates = false;
    r.without_updates = run_lifecycle(o);
    runs.push_back(std::move(r));
  }
  return runs;
}

std::string amortization_csv(const std::vector<AmortizationRun>& runs) {
  std::string out = lifecycle_csv_header();
  for (const auto& r : runs) {
    out += lifecycle_csv_rows(r.with_updates, "library", r.seed);
    out += lifecycle_csv_rows(r.without_updates, "no-library", r.seed);
  }
  return out;
}

std::string amortization_long_csv(const std::vector<AmortizationRun>& runs) {
  std::string out = csv_row({"arm", "seed", "episode", "metric", "value"});
  for (const auto& r : runs) {
    for (const auto* arm : {&r.with_updates, &r.without_updates}) {
      const std::string name = arm == &r.with_updates ? "library" : "no-library";
      std::uint64_t running = 0;
      for (const auto& e : arm->episodes) {
        running += e.ledger.total();
        auto row = [&](const char* metric, const std::string& value) {
          out += csv_row({name, std::to_string(r.seed), std::to_string(e.episode), metric, value});
        };
        row("solve_cost", std::to_string(e.ledger.solve_cost));
        row("construal_cost", std::to_string(e.ledger.construal_cost));
        row("total_cost", std::to_string(e.ledger.total()));
        row("cumulative_cost", std::to_string(running));
        row("gap", format_double(e.gap));
      }
    }
  }
  return out;
}

}  // namespace construal
