#include <doctest.h>

#include <cmath>

#include "construal/domains.hpp"
#include "construal/mdp_io.hpp"
#include "construal/solver.hpp"
#include "oracles.hpp"

using namespace construal;

namespace {

double start_value(const GroundMdp& m) {
  const auto v = oracle::optimal_values(m);
  double x = 0.0;
  for (const auto& [s, w] : m.starts) x += w * v[s];
  return x;
}

}  // namespace

TEST_CASE("2x1 door-key grid") {
  DoorKeyParams p;
  const auto m = door_key_grid(p);
  CHECK_NOTHROW(m.validate());
  // Reachable: (0,0) without key, with key, with open door; plus the goal.
  CHECK(m.state_count() == 4);
  CHECK(m.state_count() <= 2 * 2 * 2);
  REQUIRE(m.starts.size() == 1);
  CHECK(start_value(m) == doctest::Approx(0.9 * 0.9));
  CHECK(value_iteration(m).values[m.starts[0].first] == doctest::Approx(0.81));
  const auto map = door_key_map(p);
  CHECK(check_homomorphism(m, door_module(), map).strict);

  SUBCASE("without a key the plan is one step shorter") {
    DoorKeyParams nk = p;
    nk.key.reset();
    CHECK(start_value(door_key_grid(nk)) == doctest::Approx(0.9));
  }
}

TEST_CASE("door-key parameters are checked") {
  DoorKeyParams p;
  p.width = 1;
  p.height = 1;
  p.door = {0, 0};
  CHECK_THROWS_AS(door_key_grid(p), Error);
  DoorKeyParams big;
  big.width = 11;
  CHECK_THROWS_AS(door_key_grid(big), Error);
  DoorKeyParams same;
  same.key = Cell{1, 0};
  CHECK_THROWS_AS(door_key_grid(same), Error);
  DoorKeyParams out;
  out.door = {5, 0};
  CHECK_THROWS_AS(door_key_grid(out), Error);
}

TEST_CASE("larger door-key grids map onto the door module") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    DoorKeyParams p;
    p.width = 3;
    p.height = 3;
    p.key = Cell{0, 2};
    p.door = {2, 0};
    p.slip = 0.1 * static_cast<double>(seed % 3);
    p.seed = seed;
    const auto m = door_key_grid(p);
    CHECK_NOTHROW(m.validate());
    CHECK(check_homomorphism(m, door_module(), door_key_map(p)).strict);
    for (StateId s = 0; s < m.state_count(); ++s)
      for (const auto& a : m.actions(s)) CHECK((a.reward == 0.0 || a.reward == 1.0));
  }
}

TEST_CASE("email password task") {
  const auto e = email_password(1);
  CHECK(e.state_count() == 4);
  CHECK(check_homomorphism(e, door_module(), email_door_map(e)).strict);
  const auto* click = e.find_action(0, email_action::click_login);
  REQUIRE(click != nullptr);
  CHECK(click->reward == 0.0);
  CHECK(click->outcomes == std::vector<Outcome>{{0, 1.0}});
  CHECK(e.find_action(0, email_action::type_password) == nullptr);
  CHECK(email_password(3).state_count() == 6);
  CHECK_THROWS_AS(email_password(0), Error);
  CHECK_THROWS_AS(email_door_map(email_password(2)), Error);
}

TEST_CASE("rooms") {
  RoomParams p;
  const auto r = room_module(p, "room");
  CHECK(r.state_count() == 7);
  CHECK(r.is_terminal(room_exit(p)));
  CHECK(r.find_action(room_cell(p, 2, 0), grid_action::east)->outcomes.front().next == room_exit(p));
  const auto chain = room_chain(p, 3, "three");
  CHECK(chain.state_count() == 3 * 6 + 1);
  CHECK_NOTHROW(chain.validate());
  // Shortest path: 3 rooms of width 3 need 9 east moves.
  CHECK(start_value(chain) == doctest::Approx(std::pow(0.9, 8)));
}

TEST_CASE("random MDPs") {
  RandomMdpParams p;
  p.n_states = 6;
  p.branching = 6;
  p.seed = 9;
  const auto m = random_mdp(p);
  CHECK_NOTHROW(m.validate());
  for (StateId s = 0; s < m.state_count(); ++s)
    for (const auto& a : m.actions(s)) {
      CHECK(a.outcomes.size() == 6);
      double sum = 0.0;
      for (const auto& o : a.outcomes) sum += o.prob;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  CHECK(write_mdp(random_mdp(p)) == write_mdp(m));
  p.seed = 10;
  CHECK(write_mdp(random_mdp(p)) != write_mdp(m));
  RandomMdpParams bad;
  bad.branching = 9;
  CHECK_THROWS_AS(random_mdp(bad), Error);
}

TEST_CASE("planted quotients") {
  RandomMdpParams p;
  p.n_states = 5;
  p.seed = 4;
  const auto abs = random_mdp(p);
  SUBCASE("noise-free is strict") {
    const auto pq = planted_quotient(abs, 4, 0.0, 1);
    CHECK(pq.ground.state_count() == 20);
    CHECK(check_homomorphism(pq.ground, abs, pq.map).strict);
  }
  SUBCASE("noise bounds the transition deviation") {
    for (double noise : {0.05, 0.1, 0.2}) {
      const auto pq = planted_quotient(abs, 3, noise, 2);
      const auto c = check_homomorphism(pq.ground, abs, pq.map);
      CHECK(c.max_transition_deviation <= noise + 1e-12);
      CHECK(c.max_reward_deviation == 0.0);
    }
  }
  SUBCASE("blowup one is an isomorphism") {
    const auto pq = planted_quotient(abs, 1, 0.0, 3);
    CHECK(pq.ground.state_count() == abs.state_count());
    const auto c = check_homomorphism(pq.ground, abs, pq.map);
    CHECK(c.strict);
    CHECK(c.coverage_fraction == 1.0);
  }
  CHECK_THROWS_AS(planted_quotient(abs, 0, 0.0, 1), Error);
  CHECK_THROWS_AS(planted_quotient(abs, 2, 0.3, 1), Error);
}

TEST_CASE("generate dispatches on the kind") {
  for (auto kind : {DomainKind::door_key_grid, DomainKind::email_password, DomainKind::two_room, DomainKind::random,
                    DomainKind::planted_quotient}) {
    DomainSpec spec;
    spec.kind = kind;
    spec.seed = 5;
    const auto g = generate(spec);
    CHECK_NOTHROW(g.mdp.validate());
    CHECK(parse_domain_kind(domain_name(kind)) == kind);
    CHECK(write_mdp(generate(spec).mdp) == write_mdp(g.mdp));
    if (kind == DomainKind::planted_quotient) {
      REQUIRE(g.abstract.has_value());
      CHECK(check_homomorphism(g.mdp, *g.abstract, *g.map).strict);
    }
  }
  CHECK_FALSE(parse_domain_kind("nope").has_value());
}

TEST_CASE("rng is reproducible") {
  Rng a(1), b(1);
  for (int i = 0; i < 5; ++i) CHECK(a.next() == b.next());
  Rng c(2);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(c.below(7) < 7);
  }
}
