#include <doctest.h>

#include "builders.hpp"
#include "construal/domains.hpp"
#include "construal/lifting.hpp"
#include "oracles.hpp"

using namespace construal;

TEST_CASE("identity lift copies the policy") {
  const auto m = build::symmetric_grid();
  const auto pi = greedy_policy(m, value_iteration(m).values);
  const auto lifted = lift_policy(pi, identity_map(m), m);
  CHECK(lifted.base == pi);
  CHECK(lifted.gaps.empty());
  CHECK(lifted.coverage == pi.coverage());
}

TEST_CASE("door policy lifted into the email task") {
  const auto door = door_module();
  const auto email = email_password(1);
  Policy pi(4);
  pi.set(door_state::locked, door_action::get_key);
  pi.set(door_state::has_key, door_action::unlock);
  pi.set(door_state::open, door_action::go_through);
  const auto lifted = lift_policy(pi, email_door_map(email), email);
  CHECK(lifted.base.action(0) == email_action::recall_password);
  CHECK(lifted.base.action(1) == email_action::type_password);
  CHECK(lifted.base.action(2) == email_action::click_login);
  CHECK(lifted.gaps.empty());
}

TEST_CASE("lift picks the smallest matching ground action") {
  GroundMdp ground("g", 2, 0.9);
  build::act(ground, 0, 2, 1.0, {{1, 1.0}});
  build::act(ground, 0, 5, 1.0, {{1, 1.0}});
  ground.mark_terminal(1);
  const auto abstract = build::chain2();
  HomomorphismMap h{"g", "chain", {{0, 0}, {1, 1}}, {{{0, 2}, 0}, {{0, 5}, 0}}, {{0, 2}, {0, 5}}};
  Policy pi(2);
  pi.set(0, 0);
  CHECK(lift_policy(pi, h, ground).base.action(0) == 2);
}

TEST_CASE("gaps and missing choices") {
  const auto abstract = build::two_armed();
  GroundMdp ground("g", 2, 0.9);
  build::act(ground, 0, 0, 0.0, {{1, 1.0}});
  ground.mark_terminal(1);
  HomomorphismMap h{"g", "arms", {{0, 0}, {1, 1}}, {{{0, 0}, 0}}, {{0, 0}}};
  Policy pi(2);
  pi.set(0, 1);
  const auto lifted = lift_policy(pi, h, ground);
  CHECK(lifted.gaps == std::vector<StateId>{0});
  CHECK(lifted.coverage.empty());
  try {
    lift_policy(Policy(2), h, ground);
    FAIL("expected missing abstract choice");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_abstract_choice);
  }
  const auto report = transfer_report(ground, lifted);
  CHECK(report.warning);
  CHECK_FALSE(report.ground_return[0].has_value());
}

TEST_CASE("gap count does not grow with scope") {
  const auto abstract = build::two_armed();
  GroundMdp ground("g", 2, 0.9);
  build::act(ground, 0, 0, 0.0, {{1, 1.0}});
  build::act(ground, 0, 1, 1.0, {{1, 1.0}});
  ground.mark_terminal(1);
  HomomorphismMap narrow{"g", "arms", {{0, 0}, {1, 1}}, {{{0, 0}, 0}, {{0, 1}, 1}}, {{0, 0}}};
  HomomorphismMap wide = narrow;
  wide.scope.insert({0, 1});
  Policy pi(2);
  pi.set(0, 1);
  CHECK(lift_policy(pi, wide, ground).gaps.size() <= lift_policy(pi, narrow, ground).gaps.size());
  CHECK(lift_policy(pi, wide, ground).gaps.empty());
}

TEST_CASE("lift_values") {
  const auto m = build::chain2();
  const auto v = value_iteration(m).values;
  CHECK(lift_values(v, identity_map(m), m).values == v.values);
  const ValueFunction zero{m.name, {0.0, 0.0}};
  const auto lifted = lift_values(zero, identity_map(m), m);
  CHECK(lifted.values == std::vector<double>{0.0, 0.0});
  CHECK(value_iteration(m, {}, &lifted).sweeps == value_iteration(m).sweeps);
}

TEST_CASE("strict quotient warm start converges within two sweeps") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomMdpParams p;
    p.n_states = 5;
    p.seed = seed;
    const auto abs = random_mdp(p);
    const auto [ground, map] = planted_quotient(abs, 3, 0.0, seed);
    const auto va = value_iteration(abs);
    const auto warm = lift_values(va.values, map, ground);
    CHECK(value_iteration(ground, {}, &warm).sweeps <= 2);
  }
}

TEST_CASE("transfer report on planted quotients") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomMdpParams p;
    p.n_states = 5;
    p.seed = seed;
    const auto abs = random_mdp(p);
    const auto va = value_iteration(abs);
    const auto pi = greedy_policy(abs, va.values);
    {
      const auto [ground, map] = planted_quotient(abs, 3, 0.0, seed);
      const auto r = transfer_report(ground, lift_policy(pi, map, ground));
      CHECK(r.optimality_gap <= 2e-8);
      CHECK_FALSE(r.warning);
      // Lifted values agree with the abstract ones state by state.
      for (const auto& [s, x] : map.f) CHECK(std::abs(*r.ground_return[s] - va.values[x]) <= 2e-8);
    }
    {
      const auto [ground, map] = planted_quotient(abs, 3, 0.1, seed);
      const auto r = transfer_report(ground, lift_policy(pi, map, ground));
      const auto cert = check_homomorphism(ground, abs, map);
      CHECK(r.optimality_gap >= 0.0);
      CHECK(r.optimality_gap <= loss_bound(cert, ground.discount, ground.reward_range()));
    }
  }
}

TEST_CASE("arbitrary abstract policy never beats the optimum") {
  RandomMdpParams p;
  p.n_states = 6;
  p.n_actions = 3;
  p.seed = 42;
  const auto abs = random_mdp(p);
  const auto [ground, map] = planted_quotient(abs, 2, 0.0, 42);
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Policy pi(abs.state_count());
    for (StateId x = 0; x < abs.state_count(); ++x)
      if (!abs.is_terminal(x)) pi.set(x, abs.actions(x)[rng.below(abs.actions(x).size())].id);
    CHECK(transfer_report(ground, lift_policy(pi, map, ground)).optimality_gap >= 0.0);
  }
}

TEST_CASE("fill_gaps completes a partial policy") {
  const auto abstract = build::two_armed();
  GroundMdp ground("g", 3, 0.9);
  build::act(ground, 0, 0, 0.0, {{1, 1.0}});
  build::act(ground, 1, 0, 1.0, {{2, 1.0}});
  ground.mark_terminal(2);
  HomomorphismMap h{"g", "arms", {{0, 0}, {2, 1}}, {{{0, 0}, 0}}, {{0, 0}}};
  Policy pi(2);
  pi.set(0, 0);
  const auto lifted = lift_policy(pi, h, ground);
  const auto fill = fill_gaps(ground, lifted, ValueFunction{"g", {0.0, 0.0, 0.0}});
  CHECK(fill.policy.covers(0));
  CHECK(fill.policy.covers(1));
  CHECK(fill.policy.action(1) == 0);
  CHECK(fill.solve.backups > 0);
  try {
    transfer_report(ground, lifted, kDefaultTolerance, true);
    FAIL("expected coverage gap");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::coverage_gap);
    CHECK(e.states() == std::vector<std::size_t>{1});
  }
  const auto loose = transfer_report(ground, lifted);
  CHECK(loose.warning);
  CHECK(loose.excluded == std::vector<StateId>{0});
}
