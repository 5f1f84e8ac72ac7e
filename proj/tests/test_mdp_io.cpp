#include <doctest.h>

#include "builders.hpp"
#include "construal/csv.hpp"
#include "construal/domains.hpp"
#include "construal/mdp_io.hpp"

using namespace construal;

namespace {

std::size_t parse_error_line(std::string_view text) {
  try {
    parse_mdp(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("MDP text round-trips") {
  GroundMdp m = build::symmetric_grid();
  m.states[0].label = "top left";
  m.add_tag(0, "corner");
  m.action_names = {{0, "north"}, {1, "south"}};
  m.starts = {{0, 0.25}, {4, 0.75}};
  const std::string text = write_mdp(m);
  const GroundMdp back = parse_mdp(text);
  CHECK(back == m);
  CHECK(write_mdp(back) == text);
}

TEST_CASE("generated domains round-trip") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomMdpParams p;
    p.seed = seed;
    p.n_states = 7;
    const auto m = random_mdp(p);
    CHECK(parse_mdp(write_mdp(m)) == m);
  }
  const auto email = email_password(2);
  CHECK(parse_mdp(write_mdp(email)) == email);
}

TEST_CASE("MDP parser accepts comments and blank lines") {
  const auto m = parse_mdp("# chain\nmdp 2 0.9\n\nr 0 0 1   # reward\nt 0 0 1 1\nterminal 1\n");
  CHECK(m.state_count() == 2);
  CHECK(m.find_action(0, 0)->reward == 1.0);
}

TEST_CASE("MDP parse errors name the line") {
  CHECK(parse_error_line("mdp 2 0.9\nt 0 0 1 0.9\nr 0 0 1\nterminal 1\n") == 2);
  CHECK(parse_error_line("mdp 2 0.9\nbogus 1\n") == 2);
  CHECK(parse_error_line("t 0 0 1 1\n") == 1);
  CHECK(parse_error_line("mdp 2 0.9\nt 0 0 5 1\n") == 2);
  CHECK(parse_error_line("mdp 2 0.9\nt 0 0 1 1\n") == 2);  // missing reward
  CHECK(parse_error_line("mdp 2 0.9\nr 0 0 x\n") == 2);
  CHECK(parse_error_line("mdp 2 0.9\nmdp 2 0.9\n") == 2);
}

TEST_CASE("policy and value files round-trip") {
  Policy pi(3, PolicyKind::stochastic);
  pi.choice[0] = {{0, 0.25}, {2, 0.75}};
  pi.choice[1] = {{1, 1.0}};
  CHECK(parse_policy(write_policy(pi)) == pi);
  const ValueFunction v{"my mdp", {0.1, -2.5, 1e-12}};
  CHECK(parse_values(write_values(v)) == v);
  const ValueFunction unnamed{"", {1.0}};
  CHECK(parse_values(write_values(unnamed)) == unnamed);
  CHECK_THROWS_AS(parse_policy("policy 2 deterministic\np 5 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_values("values 1 x\nv 0 nan-ish\n"), ParseError);
}

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.7290000000000001)) == 0.7290000000000001);
}

TEST_CASE("CSV quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_row({"x", "y,z"}) == "x,\"y,z\"\n");
  const auto rows = parse_csv("a,\"b,c\"\r\n\"multi\nline\",\"q\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c"});
  CHECK(rows[1] == std::vector<std::string>{"multi\nline", "q\""});
  CHECK_THROWS_AS(parse_csv("\"open"), Error);
  const std::vector<std::string> fields{"", "a\"", "\r\n", "plain"};
  CHECK(parse_csv(csv_row(fields)).front() == fields);
}
