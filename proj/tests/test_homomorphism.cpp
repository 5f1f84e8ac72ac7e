#include <doctest.h>

#include "builders.hpp"
#include "construal/domains.hpp"
#include "construal/homomorphism.hpp"
#include "oracles.hpp"

using namespace construal;

TEST_CASE("pushforward") {
  const std::vector<Outcome> d{{0, 0.3}, {1, 0.7}};
  CHECK(pushforward(d, {{0, 0}, {1, 1}}) == d);
  CHECK(pushforward(d, {{0, 4}, {1, 4}}) == std::vector<Outcome>{{4, 1.0}});
  try {
    pushforward(d, {{0, 0}});
    FAIL("expected unmapped mass");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unmapped_mass);
  }
}

TEST_CASE("identity map is strict") {
  const auto m = build::symmetric_grid();
  const auto cert = check_homomorphism(m, m, identity_map(m));
  CHECK(cert.strict);
  CHECK(cert.coverage_fraction == 1.0);
  CHECK(cert.max_reward_deviation == 0.0);
  CHECK(cert.max_transition_deviation == 0.0);
}

TEST_CASE("mirror quotient of the symmetric grid") {
  const auto ground = build::symmetric_grid();
  const auto abstract = build::grid_quotient_by_hand();
  const auto map = build::grid_mirror_map(ground);
  const auto cert = check_homomorphism(ground, abstract, map);
  CHECK(cert.strict);
  // Exhaustive commutation check against the dense oracle.
  for (const auto& sa : map.scope)
    CHECK(oracle::pushforward_tv(ground, abstract, map.f, sa.first, sa.second, map.g.at(sa)) <= 1e-12);

  SUBCASE("quotient builds the same abstract MDP") {
    const auto q = quotient(ground, build::grid_mirror_blocks(), build::grid_mirror_actions());
    CHECK(q.certificate.strict);
    REQUIRE(q.abstract.state_count() == abstract.state_count());
    for (StateId x = 0; x < abstract.state_count(); ++x) {
      CHECK(q.abstract.is_terminal(x) == abstract.is_terminal(x));
      CHECK(q.abstract.actions(x) == abstract.actions(x));
    }
    // Checking the quotient's own outputs reproduces its certificate.
    const auto again = check_homomorphism(ground, q.abstract, q.map);
    CHECK(again.max_reward_deviation == doctest::Approx(q.certificate.max_reward_deviation).epsilon(1e-12));
    CHECK(again.max_transition_deviation == doctest::Approx(q.certificate.max_transition_deviation).epsilon(1e-12));
    CHECK(again.strict == q.certificate.strict);
  }

  SUBCASE("perturbing one ground transition by 0.1") {
    GroundMdp noisy = ground;
    build::act(noisy, build::cell(0, 0), 3, 0.0, {{build::cell(1, 0), 0.9}, {build::cell(0, 0), 0.1}});
    const auto c = check_homomorphism(noisy, abstract, map);
    CHECK_FALSE(c.strict);
    CHECK(c.max_transition_deviation == doctest::Approx(0.1));
    for (const auto& [sa, d] : c.deviations)
      CHECK(d.transition == doctest::Approx(sa == StateAction{build::cell(0, 0), 3} ? 0.1 : 0.0));
  }
}

TEST_CASE("quotient merging rewards 0 and 1") {
  GroundMdp m("pair", 3, 0.9);
  build::act(m, 0, 0, 0.0, {{2, 1.0}});
  build::act(m, 1, 0, 1.0, {{2, 1.0}});
  m.mark_terminal(2);
  const auto q = quotient(m, {0, 0, 1});
  CHECK(q.abstract.find_action(0, 0)->reward == doctest::Approx(0.5));
  CHECK(q.certificate.max_reward_deviation == doctest::Approx(0.5));
  CHECK_FALSE(q.certificate.strict);
}

TEST_CASE("singleton partition is an isomorphism") {
  const auto m = build::symmetric_grid();
  std::vector<std::size_t> blocks(m.state_count());
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] = i;
  const auto q = quotient(m, blocks);
  CHECK(q.certificate.strict);
  for (StateId s = 0; s < m.state_count(); ++s) CHECK(q.abstract.actions(s) == m.actions(s));
}

TEST_CASE("quotient rejects inconsistent action sets") {
  GroundMdp m("x", 3, 0.9);
  build::act(m, 0, 0, 0.0, {{2, 1.0}});
  build::act(m, 1, 0, 0.0, {{2, 1.0}});
  build::act(m, 1, 1, 0.0, {{2, 1.0}});
  m.mark_terminal(2);
  try {
    quotient(m, {0, 0, 1});
    FAIL("expected inconsistent interface");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::inconsistent_interface);
  }
}

TEST_CASE("unmapped successor mass counts against transitions") {
  const auto m = build::chain2();
  HomomorphismMap h{m.name, m.name, {{0, 0}}, {{{0, 0}, 0}}, {{0, 0}}};
  const auto c = check_homomorphism(m, m, h);
  CHECK(c.max_transition_deviation == doctest::Approx(1.0));
  CHECK(c.coverage_fraction == 1.0);
}

TEST_CASE("shrinking scope never increases deviations") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomMdpParams p;
    p.n_states = 4;
    p.seed = seed;
    const auto abs = random_mdp(p);
    auto [ground, map] = planted_quotient(abs, 3, 0.15, seed);
    const auto full = check_homomorphism(ground, abs, map);
    auto smaller = map;
    std::size_t k = 0;
    for (auto it = smaller.scope.begin(); it != smaller.scope.end();)
      it = (k++ % 2) ? smaller.scope.erase(it) : std::next(it);
    const auto part = check_homomorphism(ground, abs, smaller);
    CHECK(part.max_reward_deviation <= full.max_reward_deviation);
    CHECK(part.max_transition_deviation <= full.max_transition_deviation);
    CHECK(part.coverage_fraction < full.coverage_fraction);
  }
}

TEST_CASE("check_homomorphism preconditions") {
  const auto m = build::chain2();
  HomomorphismMap h = identity_map(m);
  h.ground_id = "someone-else";
  CHECK_THROWS_AS(check_homomorphism(m, m, h), Error);
  try {
    HomomorphismMap empty{m.name, m.name, {}, {}, {}};
    check_homomorphism(m, m, empty);
    FAIL("expected empty scope");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_scope);
  }
  HomomorphismMap bad = identity_map(m);
  bad.g[{0, 0}] = 9;
  CHECK_THROWS_AS(bad.validate(m, m), Error);
}

TEST_CASE("loss bound formula") {
  HomCertificate c;
  c.max_reward_deviation = 0.5;
  CHECK(loss_bound(c, 0.5, 1.0) == doctest::Approx(2.0));
  c.max_reward_deviation = 0.0;
  c.max_transition_deviation = 0.1;
  CHECK(loss_bound(c, 0.5, 1.0) == doctest::Approx(0.4));
  HomCertificate strict;
  strict.strict = true;
  CHECK(loss_bound(strict, 0.9, 1.0) <= 2e-9 / 0.1);
}

TEST_CASE("map text round-trips") {
  const auto m = build::symmetric_grid();
  const auto h = build::grid_mirror_map(m);
  const std::string text = write_map(h);
  CHECK(parse_map(text) == h);
  CHECK(write_map(parse_map(text)) == text);
  CHECK_THROWS_AS(parse_map("map a b\nf 0\n"), ParseError);
  CHECK_THROWS_AS(parse_map("f 0 0\n"), ParseError);
}
