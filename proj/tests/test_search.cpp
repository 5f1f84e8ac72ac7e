#include <doctest.h>

#include <algorithm>

#include "builders.hpp"
#include "construal/domains.hpp"
#include "construal/library.hpp"
#include "construal/search.hpp"
#include "construal/signature.hpp"
#include "oracles.hpp"

using namespace construal;

namespace {

GroundMdp abstract_instance(std::uint64_t seed, std::size_t n = 6) {
  RandomMdpParams p;
  p.n_states = n;
  p.n_actions = 2;
  p.branching = 2;
  p.seed = seed;
  return random_mdp(p);
}

HintSet half_hints(const PlantedQuotient& pq, std::uint64_t seed) {
  std::vector<StateId> ids(pq.ground.state_count());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  HintSet h;
  for (std::size_t i = 0; i < ids.size() / 2; ++i) h.states.push_back({ids[i], pq.map.f.at(ids[i])});
  return h;
}

}  // namespace

TEST_CASE("signatures") {
  SUBCASE("mirror-symmetric states agree at every horizon") {
    const auto m = build::symmetric_grid();
    for (std::size_t h = 1; h <= 4; ++h) {
      const auto sig = state_signatures(m, h);
      for (int y = 0; y < 3; ++y) CHECK(sig[build::cell(0, y)] == sig[build::cell(2, y)]);
      CHECK(sig[build::cell(1, 0)].digest() != sig[build::cell(1, 1)].digest());
    }
  }
  SUBCASE("different reward multisets differ at horizon 1") {
    const auto m = build::two_armed();
    GroundMdp other("o", 2, 0.9);
    build::act(other, 0, 0, 0.0, {{1, 1.0}});
    build::act(other, 0, 1, 0.5, {{1, 1.0}});
    other.mark_terminal(1);
    CHECK(state_signature(m, 0).digest() != state_signature(other, 0).digest());
  }
  SUBCASE("planted blocks share horizon-1 signatures") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto pq = planted_quotient(abstract_instance(seed), 4, 0.0, seed);
      const auto sig = state_signatures(pq.ground, 1);
      for (const auto& [s, x] : pq.map.f)
        for (const auto& [t, y] : pq.map.f)
          if (x == y) CHECK(sig[s].digest() == sig[t].digest());
    }
  }
  SUBCASE("similarity prefers equal signatures") {
    const auto m = build::symmetric_grid();
    const auto sig = state_signatures(m, 2);
    CHECK(signature_similarity(sig[0], sig[2]) > signature_similarity(sig[0], sig[4]));
  }
}

TEST_CASE("multiset Jaccard") {
  CHECK(multiset_jaccard({1, 1, 2}, {1, 2, 2}) == doctest::Approx(2.0 / 4.0));
  CHECK(multiset_jaccard({}, {}) == 0.0);
  CHECK(multiset_jaccard({3}, {3}) == 1.0);
}

TEST_CASE("search finds the identity on a copy") {
  const auto m = build::symmetric_grid();
  const auto r = find_homomorphism(m, m, {}, {});
  REQUIRE(r.found);
  CHECK(r.certificate.strict);
  CHECK(r.certificate.coverage_fraction == 1.0);
  CHECK(r.best_map.f.size() == m.state_count());
}

TEST_CASE("planted quotient recovery and hints") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto abs = abstract_instance(seed);
    const auto pq = planted_quotient(abs, 5, 0.0, seed);
    REQUIRE(pq.ground.state_count() == 30);
    SearchBudget budget;
    budget.max_node_expansions = 100000;
    const auto r = find_homomorphism(pq.ground, abs, {}, budget);
    REQUIRE(r.found);
    CHECK(r.expansions_used <= budget.max_node_expansions);
    // Soundness via the independent commutation oracle.
    for (const auto& sa : r.best_map.scope)
      CHECK(oracle::pushforward_tv(pq.ground, abs, r.best_map.f, sa.first, sa.second, r.best_map.g.at(sa)) <= 1e-9);
    CHECK(check_homomorphism(pq.ground, abs, r.best_map).strict);
    const auto hinted = find_homomorphism(pq.ground, abs, half_hints(pq, seed), budget);
    REQUIRE(hinted.found);
    CHECK(hinted.expansions_used < r.expansions_used);
    // Same inputs, same result.
    const auto again = find_homomorphism(pq.ground, abs, {}, budget);
    CHECK(again.expansions_used == r.expansions_used);
    CHECK(again.best_map == r.best_map);
  }
}

TEST_CASE("strict search fails cleanly when no map exists") {
  const auto a = build::two_armed();
  const auto b = build::chain2();
  const auto r = find_homomorphism(a, b, {}, {});
  CHECK_FALSE(r.found);
  CHECK(r.exhausted);
}

TEST_CASE("search budget is respected") {
  const auto abs = abstract_instance(3);
  const auto pq = planted_quotient(abs, 5, 0.0, 3);
  SearchBudget tiny;
  tiny.max_node_expansions = 3;
  const auto r = find_homomorphism(pq.ground, abs, {}, tiny);
  CHECK(r.expansions_used <= 3);
  CHECK_FALSE(r.exhausted);
  try {
    find_homomorphism(pq.ground, abs, {}, SearchBudget{0, SearchMode::strict, 1.0});
    FAIL("expected invalid budget");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_budget);
  }
}

TEST_CASE("inconsistent hints") {
  const auto m = build::chain2();
  HintSet h;
  h.states = {{0, 0}, {0, 1}};
  try {
    find_homomorphism(m, m, h, {});
    FAIL("expected hint conflict");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::hint_conflict);
  }
  HintSet bad_action;
  bad_action.states = {{0, 0}};
  bad_action.actions = {{{0, 0}, 5}};
  CHECK_THROWS_AS(find_homomorphism(m, m, bad_action, {}), Error);
}

TEST_CASE("partial search is anytime") {
  const auto abs = abstract_instance(11, 5);
  const auto pq = planted_quotient(abs, 3, 0.1, 11);
  double last = -1e9;
  for (std::uint64_t b : {1, 2, 5, 10, 50, 200, 1000}) {
    const auto r = find_homomorphism(pq.ground, abs, {}, SearchBudget{b, SearchMode::partial, 1.0});
    CHECK(r.score >= last - 1e-12);
    CHECK(r.expansions_used <= b);
    last = r.score;
  }
  CHECK(last > 0.0);
}

TEST_CASE("partial search covers the compatible part of a target") {
  // Door-key grid into the door module: everything maps.
  DoorKeyParams p;
  const auto grid = door_key_grid(p);
  const auto r = find_homomorphism(grid, door_module(), {}, SearchBudget{100000, SearchMode::partial, 1.0});
  CHECK(r.certificate.coverage_fraction == doctest::Approx(1.0));
  CHECK(r.score == doctest::Approx(1.0));
}

TEST_CASE("retrieval ranks the exact quotient first") {
  const auto abs = abstract_instance(5);
  const auto pq = planted_quotient(abs, 3, 0.0, 5);
  Library lib;
  for (std::uint64_t seed : {21, 22, 23}) {
    Module m;
    m.id = "r" + std::to_string(seed);
    m.fragment = abstract_instance(seed);
    lib.add(m);
  }
  Module exact;
  exact.id = "z-exact";
  exact.fragment = abs;
  lib.add(exact);
  const auto r = retrieve_candidates(lib, pq.ground, 2);
  REQUIRE(r.ids.size() == 2);
  CHECK(r.ids.front() == "z-exact");
  CHECK(r.comparisons == 4);
  CHECK(retrieve_candidates(lib, pq.ground, 10).ids.size() == 4);
  CHECK(retrieve_candidates(Library{}, pq.ground, 3).ids.empty());
  CHECK(retrieve_candidates(lib, pq.ground, 4, {"z-exact"}).ids.size() == 3);
}
