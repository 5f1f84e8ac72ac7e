#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "construal/homomorphism.hpp"

namespace construal {

/// splitmix64 stream; identical output on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

// Door-key grid action ids.
namespace grid_action {
inline constexpr ActionId north = 0, south = 1, west = 2, east = 3, pick_up = 4, unlock = 5, go_through = 6;
}
// Door module action ids (shared by the email analogy).
namespace door_action {
inline constexpr ActionId get_key = 0, unlock = 1, bang_on = 2, go_through = 3;
}
// Door module states.
namespace door_state {
inline constexpr StateId locked = 0, has_key = 1, open = 2, through = 3;
}
namespace email_action {
inline constexpr ActionId recall_password = 0, type_password = 1, click_login = 2, share = 3;
}

/// Grid with a locked door in one cell. The agent stands on the other cells,
/// picks up the key on the key cell, unlocks the door from an adjacent cell
/// and goes through it into the goal (reward 1). State = (cell, has-key,
/// door-open) plus the goal terminal. Without a key the door unlocks freely.
struct DoorKeyParams {
  int width = 2;
  int height = 1;
  std::optional<Cell> key = Cell{0, 0};
  Cell door{1, 0};
  // Start cell; chosen from the seed among free cells when absent.
  std::optional<Cell> start;
  double slip = 0.0;  // probability that a move leaves the agent in place
  double discount = 0.9;
  std::uint64_t seed = 0;
};

GroundMdp door_key_grid(const DoorKeyParams& params);
/// Strict full-scope map from door_key_grid(params) onto door_module().
HomomorphismMap door_key_map(const DoorKeyParams& params);

/// Four-state abstract door: locked, has-key, open, through (terminal).
GroundMdp door_module(double discount = 0.9);

/// Email login: logged-out without/with password (recall takes
/// `recall_steps` steps), password typed, logged-in (terminal). Clicking
/// login without a typed password is a self-loop with reward 0.
GroundMdp email_password(int recall_steps = 1, double discount = 0.9);
/// Strict map from email_password(1) onto door_module().
HomomorphismMap email_door_map(const GroundMdp& email);

/// Room of width x height cells plus an exit terminal reached by moving east
/// from cell (width-1, door_row). Entry is (0, door_row).
struct RoomParams {
  int width = 3;
  int height = 2;
  int door_row = 0;
  double exit_reward = 0.0;
  double slip = 0.0;
  double discount = 0.9;
};
GroundMdp room_module(const RoomParams& params, const std::string& name);
StateId room_cell(const RoomParams& params, int x, int y);
StateId room_exit(const RoomParams& params);

/// `rooms` rooms in a row joined at door_row; leaving the last room east
/// yields reward 1 and ends the episode.
GroundMdp room_chain(const RoomParams& params, int rooms, const std::string& name);
inline GroundMdp two_room(const RoomParams& params) { return room_chain(params, 2, "two-room"); }

struct RandomMdpParams {
  std::size_t n_states = 5;
  std::size_t n_actions = 2;
  std::size_t branching = 2;
  double reward_sparsity = 0.5;  // fraction of pairs with reward 0
  double discount = 0.9;
  std::uint64_t seed = 0;
};
GroundMdp random_mdp(const RandomMdpParams& params);

struct PlantedQuotient {
  GroundMdp ground;
  HomomorphismMap map;
};

/// Expands every abstract state into `blowup` ground states (ids shuffled)
/// whose dynamics push forward exactly onto the abstract ones; each ground
/// distribution is then mixed with weight `noise` into a random distribution
/// (total variation at most `noise`).
PlantedQuotient planted_quotient(const GroundMdp& abstract, std::size_t blowup, double noise, std::uint64_t seed);

enum class DomainKind { door_key_grid, email_password, two_room, random, planted_quotient };

/// Name used on the command line ("door-key", "email", "two-room", "random",
/// "planted").
const char* domain_name(DomainKind kind);
std::optional<DomainKind> parse_domain_kind(std::string_view name);

/// One generator request. `seed` overrides the seeds inside the parameter
/// structs; planted instances expand random_mdp(random) by blowup.
struct DomainSpec {
  DomainKind kind = DomainKind::door_key_grid;
  DoorKeyParams door_key;
  int recall_steps = 1;
  double discount = 0.9;  // email-password
  RoomParams room;
  RandomMdpParams random;
  std::size_t blowup = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

struct Generated {
  GroundMdp mdp;
  std::optional<HomomorphismMap> map;  // onto the door module or the planted abstract MDP
  std::optional<GroundMdp> abstract;   // planted instances only
};
Generated generate(const DomainSpec& spec);

}  // namespace construal
