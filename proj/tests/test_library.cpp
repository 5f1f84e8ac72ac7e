#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "builders.hpp"
#include "construal/domains.hpp"
#include "construal/library.hpp"
#include "construal/mdp_io.hpp"
#include "oracles.hpp"

using namespace construal;

namespace {

Module module_from(const std::string& id, GroundMdp fragment, bool solved = false) {
  Module m;
  m.id = id;
  fragment.name = id;
  m.fragment = std::move(fragment);
  for (StateId s = 0; s < m.fragment.state_count(); ++s) {
    m.interface.entries.push_back(s);
    if (m.fragment.is_terminal(s)) m.interface.exits.push_back(s);
  }
  if (solved) {
    const auto vi = value_iteration(m.fragment);
    m.values = vi.values;
    m.policy = greedy_policy(m.fragment, vi.values);
  }
  return m;
}

const SearchBudget kPartial{100000, SearchMode::partial, 1.0};

EpisodeRecord episode(const std::string& id, const GroundMdp& task, const Library& lib) {
  const auto cr = construe(lib, task, kPartial, 3);
  const auto sr = solve(cr.construal, lib);
  return {id, task, cr.construal, sr.policy, sr.values, cr.uses, cr.ledger};
}

}  // namespace

TEST_CASE("construe with an empty library imports the task verbatim") {
  const auto task = door_key_grid({});
  const auto r = construe(Library{}, task, kPartial, 3);
  CHECK(r.no_analogy);
  CHECK(r.coverage == 0.0);
  CHECK(r.uses.empty());
  CHECK(r.imported_pairs == task.pair_count());
  CHECK(r.ledger.construal_cost == r.imported_pairs);
  CHECK(strictly_bihomomorphic(r.construal.abstract_mdp, task));
  CHECK(check_homomorphism(task, r.construal.abstract_mdp, r.construal.binding).strict);
  for (const auto& [el, p] : r.construal.provenance) CHECK(p.module_id == kVerbatim);
  CHECK_THROWS_AS(construe(Library{}, task, kPartial, 0), Error);
}

TEST_CASE("construe with the exact quotient module") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomMdpParams p;
    p.n_states = 5;
    p.seed = seed;
    const auto abs = random_mdp(p);
    const auto pq = planted_quotient(abs, 3, 0.0, seed);
    Library lib;
    lib.add(module_from("quot", abs, true));
    const auto r = construe(lib, pq.ground, kPartial, 3);
    CHECK_FALSE(r.no_analogy);
    CHECK(r.coverage == doctest::Approx(1.0));
    CHECK(r.imported_pairs == 0);
    REQUIRE(r.uses.size() == 1);
    CHECK(r.uses[0].module_id == "quot");
    CHECK(strictly_bihomomorphic(r.construal.abstract_mdp, abs));
    CHECK(check_homomorphism(pq.ground, r.construal.abstract_mdp, r.construal.binding).strict);

    // Stored optimum makes solving almost free; lifting is optimal.
    const auto sr = solve(r.construal, lib);
    CHECK(sr.sweeps <= 2);
    const auto report = evaluate_objective(pq.ground, r.construal, sr.policy, sr.ledger);
    CHECK(report.optimality_gap <= 2e-8);
  }
}

TEST_CASE("construe reuses the door module for the email task") {
  Library lib;
  lib.add(module_from("door", door_module(), true));
  const auto email = email_password(1);
  const auto r = construe(lib, email, kPartial, 3);
  CHECK_FALSE(r.no_analogy);
  CHECK(r.coverage > 0.0);
  REQUIRE_FALSE(r.uses.empty());
  CHECK(r.uses[0].module_id == "door");
  CHECK(r.construal.binding.ground_id == email.name);
}

TEST_CASE("solve without stored solutions equals a cold start") {
  const auto task = build::symmetric_grid();
  const auto r = construe(Library{}, task, kPartial, 1);
  const auto sr = solve(r.construal, Library{});
  const auto cold = value_iteration(r.construal.abstract_mdp);
  CHECK(sr.values == cold.values);
  CHECK(sr.sweeps == cold.sweeps);
  CHECK(sr.ledger.solve_cost == cold.backups);
}

TEST_CASE("two-room construal from room modules") {
  RoomParams p{2, 1, 0, 0.0, 0.0, 0.9};
  const auto task = two_room(p);
  Library lib;
  lib.add(module_from("room", room_module(p, "room"), true));
  RoomParams goal = p;
  goal.exit_reward = 1.0;
  lib.add(module_from("room-goal", room_module(goal, "room-goal"), true));
  const auto r = construe(lib, task, kPartial, 3);
  const auto sr = solve(r.construal, lib);
  const auto report = evaluate_objective(task, r.construal, sr.policy, sr.ledger);
  CHECK(report.optimality_gap <= 2e-8);
  const auto exact = oracle::optimal_values(task);
  CHECK(oracle::max_abs_diff(value_iteration(task).values.values, exact) <= 1e-8);
}

TEST_CASE("extraction of a recurring fragment") {
  const auto task = door_key_grid({});
  Library lib;
  const std::vector<EpisodeRecord> history{episode("e1", task, lib), episode("e2", task, lib)};
  const Library once = update_library(lib, {history[0]}, 2, 0.5);
  CHECK(once.size() == 0);
  const Library updated = update_library(lib, history, 2, 0.5);
  REQUIRE(updated.size() >= 1);
  bool present = false;
  for (const auto& [id, m] : updated.modules) {
    CHECK_NOTHROW(m.validate());
    const auto r = find_homomorphism(task, m.fragment, {}, SearchBudget{100000, SearchMode::strict, 1.0});
    present = present || (r.found && r.certificate.strict);
    CHECK(std::find(m.lineage.begin(), m.lineage.end(), "e1") != m.lineage.end());
    CHECK(m.policy.has_value());
  }
  CHECK(present);
  CHECK(updated.seen_episodes == std::set<std::string>{"e1", "e2"});
  // A second identical update changes nothing.
  CHECK(update_library(updated, history, 2, 0.5) == updated);
}

TEST_CASE("refinement prunes a frequently discarded action") {
  // Door module plus a 'turn' action on has-key that analogies never use.
  GroundMdp key = door_module();
  build::act(key, door_state::has_key, 4, 0.0, {{door_state::has_key, 1.0}});
  key.action_names[4] = "turn";
  Library lib;
  lib.add(module_from("key", key));
  const auto email = email_password(1);
  auto map = email_door_map(email);
  map.abstract_id = "key";
  std::vector<EpisodeRecord> history;
  for (int e = 1; e <= 3; ++e) {
    EpisodeRecord rec;
    rec.task_id = "t" + std::to_string(e);
    rec.task = email;
    rec.construal.abstract_mdp = build::self_loop(0.1 * e, 0.9);  // nothing recurs
    rec.uses = {{"key", "i1", map}};
    history.push_back(rec);
  }
  const Library two = update_library(lib, {history[0], history[1]}, 2, 0.5);
  CHECK(two.size() == 1);  // only two uses so far
  const Library out = update_library(lib, history, 2, 0.5);
  const Module& original = out.modules.at("key");
  CHECK(original.use_count.at(action_element(1, 4)) == 3);
  CHECK(original.discard_count.at(action_element(1, 4)) == 3);
  const Module* refined = nullptr;
  for (const auto& [id, m] : out.modules)
    if (m.lineage == std::vector<std::string>{"key"}) refined = &m;
  REQUIRE(refined != nullptr);
  CHECK(refined->fragment.find_action(door_state::has_key, 4) == nullptr);
  CHECK(refined->fragment.state_count() <= key.state_count());
  CHECK(refined->fragment.pair_count() < key.pair_count());
}

TEST_CASE("isomorphic modules are merged") {
  Library lib;
  lib.add(module_from("a", door_module()));
  lib.add(module_from("b", door_module()));
  lib.modules.at("b").use_count["s0"] = 4;
  lib.rebuild_index();
  const Library out = update_library(lib, {}, 2, 0.5);
  CHECK(out.size() == 1);
  CHECK(out.modules.at("a").use_count.at("s0") == 4);
  CHECK(out.modules.at("a").lineage == std::vector<std::string>{"b"});
}

TEST_CASE("empty history leaves a library unchanged") {
  Library lib;
  lib.add(module_from("door", door_module(), true));
  lib.add(module_from("room", room_module({}, "room")));
  CHECK(update_library(lib, {}, 2, 0.5) == lib);
  CHECK_THROWS_AS(update_library(lib, {}, 1, 0.5), Error);
  CHECK_THROWS_AS(update_library(lib, {}, 2, 0.0), Error);
}

TEST_CASE("candidate fragments are closed and capped") {
  const auto task = door_key_grid({});
  for (const auto& f : candidate_fragments(task, 12)) {
    CHECK(f.mdp.state_count() <= 12 + f.interface.exits.size());
    CHECK_NOTHROW(f.mdp.validate());
    for (StateId x : f.interface.exits) CHECK(f.mdp.is_terminal(x));
  }
  const auto tiny = candidate_fragments(build::symmetric_grid(), 2);
  for (const auto& f : tiny) CHECK(f.states.size() <= 2);
}

TEST_CASE("affordances") {
  Library lib;
  lib.add(module_from("door", door_module()));
  lib.add(module_from("alt", door_module()));
  const auto email = email_password(1);
  auto map = email_door_map(email);
  map.abstract_id = "door";
  const auto a = afford(email, 0, lib, {map});
  REQUIRE(a.size() == 1);
  CHECK(a[0].abstract_state == door_state::locked);
  CHECK(a[0].names == std::vector<std::string>{"get-key", "unlock", "bang-on"});
  HomomorphismMap none{email.name, "door", {}, {}, {}};
  CHECK(afford(email, 0, lib, {none}).empty());
  auto alt = map;
  alt.abstract_id = "alt";
  const auto two = afford(email, 0, lib, {map, alt});
  REQUIRE(two.size() == 2);
  CHECK(two[0].module_id == "alt");
  CHECK(two[1].module_id == "door");
}

TEST_CASE("library directory round-trips") {
  const auto task = door_key_grid({});
  Library lib;
  lib = update_library(lib, {episode("e1", task, lib), episode("e2", task, lib)}, 2, 0.5);
  lib.modules.begin()->second.use_count["s0"] = 3;
  lib.modules.begin()->second.discard_count["s0"] = 1;
  const auto dir = std::filesystem::temp_directory_path() / "construal_library_rt";
  std::filesystem::remove_all(dir);
  save_library(lib, dir);
  const Library back = load_library(dir);
  CHECK(back == lib);
  const auto again = std::filesystem::temp_directory_path() / "construal_library_rt2";
  std::filesystem::remove_all(again);
  save_library(back, again);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    CHECK(detail::slurp(entry.path()) == detail::slurp(again / entry.path().filename()));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(again);
  Module bad;
  bad.id = "x";
  CHECK_THROWS_AS(parse_module_stats("module y\n", bad), ParseError);
}
