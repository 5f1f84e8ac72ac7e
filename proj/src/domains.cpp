#include "construal/domains.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>

namespace construal {

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(Errc::invalid_parameter, msg);
}

std::string cell_label(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

struct GridLayout {
  DoorKeyParams p;
  bool has_key_item = true;
  Cell start;
  std::vector<Cell> free_cells;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < p.width && c.y < p.height; }
  bool standable(Cell c) const { return in_bounds(c) && !(c == p.door); }
  bool adjacent_to_door(Cell c) const { return std::abs(c.x - p.door.x) + std::abs(c.y - p.door.y) == 1; }
};

GridLayout make_layout(const DoorKeyParams& p) {
  require(p.width >= 1 && p.height >= 1 && p.width <= 10 && p.height <= 10 && p.width * p.height >= 2,
          "door-key grid needs 1 <= width,height <= 10 and at least two cells");
  GridLayout g{p, p.key.has_value(), {}, {}};
  require(g.in_bounds(p.door), "door position out of bounds");
  if (p.key) {
    require(g.in_bounds(*p.key), "key position out of bounds");
    require(!(*p.key == p.door), "key and door must differ");
  }
  require(p.slip >= 0.0 && p.slip < 1.0, "slip must lie in [0, 1)");
  require(p.discount >= 0.0 && p.discount < 1.0, "discount must lie in [0, 1)");
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      if (g.standable({x, y})) g.free_cells.push_back({x, y});
  if (p.start) {
    require(g.standable(*p.start), "start must be a free cell");
    g.start = *p.start;
  } else {
    Rng rng(p.seed);
    g.start = g.free_cells[rng.below(g.free_cells.size())];
  }
  return g;
}

// (x, y, has_key, open)
using GridState = std::tuple<int, int, int, int>;

struct GridBuild {
  GroundMdp mdp;
  std::map<GridState, StateId> index;
  StateId goal = 0;
};

GridBuild build_grid(const DoorKeyParams& params) {
  const GridLayout L = make_layout(params);
  const int key_start = L.has_key_item ? 0 : 1;

  struct Move {
    ActionId id;
    int dx, dy;
  };
  const Move moves[] = {{grid_action::north, 0, -1},
                        {grid_action::south, 0, 1},
                        {grid_action::west, -1, 0},
                        {grid_action::east, 1, 0}};

  // Breadth-first enumeration from every free cell at the initial layer.
  std::map<GridState, StateId> index;
  std::vector<GridState> order;
  std::deque<GridState> queue;
  auto visit = [&](GridState st) {
    if (index.emplace(st, order.size()).second) {
      order.push_back(st);
      queue.push_back(st);
    }
  };
  for (Cell c : L.free_cells) visit({c.x, c.y, key_start, 0});
  struct Edge {
    ActionId id;
    double reward;
    std::vector<std::pair<GridState, double>> to;  // empty target = goal
    bool to_goal = false;
  };
  std::map<GridState, std::vector<Edge>> edges;
  while (!queue.empty()) {
    const GridState st = queue.front();
    queue.pop_front();
    const auto [x, y, k, o] = st;
    const Cell c{x, y};
    auto& out = edges[st];
    for (const Move& m : moves) {
      const Cell n{x + m.dx, y + m.dy};
      if (!L.standable(n)) continue;
      Edge e{m.id, 0.0, {{GridState{n.x, n.y, k, o}, 1.0 - params.slip}}, false};
      if (params.slip > 0.0) e.to.push_back({st, params.slip});
      out.push_back(e);
    }
    if (L.has_key_item && k == 0 && c == *params.key) out.push_back({grid_action::pick_up, 0.0, {{GridState{x, y, 1, o}, 1.0}}, false});
    if (L.adjacent_to_door(c) && k == 1 && o == 0)
      out.push_back({grid_action::unlock, 0.0, {{GridState{x, y, k, 1}, 1.0}}, false});
    if (L.adjacent_to_door(c) && o == 1) out.push_back({grid_action::go_through, 1.0, {}, true});
    for (const auto& e : out)
      for (const auto& [t, p] : e.to) visit(t);
  }

  GridBuild b;
  b.index = index;
  b.goal = order.size();
  b.mdp = GroundMdp("door-key", order.size() + 1, params.discount);
  b.mdp.action_names = {{grid_action::north, "north"},     {grid_action::south, "south"},
                        {grid_action::west, "west"},       {grid_action::east, "east"},
                        {grid_action::pick_up, "pick-up"}, {grid_action::unlock, "unlock"},
                        {grid_action::go_through, "go-through"}};
  for (StateId s = 0; s < order.size(); ++s) {
    const auto [x, y, k, o] = order[s];
    const Cell c{x, y};
    b.mdp.states[s].label = cell_label(c) + (k ? " key" : " no-key") + (o ? " open" : " closed");
    if (L.has_key_item && c == *params.key) b.mdp.add_tag(s, "key-cell");
    if (L.adjacent_to_door(c)) b.mdp.add_tag(s, "door");
    for (const auto& e : edges[order[s]]) {
      ActionSpec spec{e.id, e.reward, {}};
      if (e.to_goal) spec.outcomes.push_back({b.goal, 1.0});
      for (const auto& [t, p] : e.to) spec.outcomes.push_back({index.at(t), p});
      b.mdp.set_action(s, std::move(spec));
    }
  }
  b.mdp.states[b.goal].label = "goal";
  b.mdp.add_tag(b.goal, "goal");
  b.mdp.mark_terminal(b.goal);
  b.mdp.starts.push_back({index.at({L.start.x, L.start.y, key_start, 0}), 1.0});
  b.mdp.validate();
  return b;
}

}  // namespace

GroundMdp door_key_grid(const DoorKeyParams& params) { return build_grid(params).mdp; }

HomomorphismMap door_key_map(const DoorKeyParams& params) {
  const GridBuild b = build_grid(params);
  const GroundMdp door = door_module(params.discount);
  HomomorphismMap m;
  m.ground_id = b.mdp.name;
  m.abstract_id = door.name;
  for (const auto& [st, s] : b.index) {
    const auto [x, y, k, o] = st;
    const StateId abs = o ? door_state::open : (k ? door_state::has_key : door_state::locked);
    m.f[s] = abs;
    for (const auto& a : b.mdp.actions(s)) {
      ActionId target = door_action::bang_on;
      if (a.id == grid_action::pick_up) target = door_action::get_key;
      if (a.id == grid_action::unlock) target = door_action::unlock;
      if (a.id == grid_action::go_through) target = door_action::go_through;
      m.g[{s, a.id}] = target;
      m.scope.insert({s, a.id});
    }
  }
  m.f[b.goal] = door_state::through;
  return m;
}

GroundMdp door_module(double discount) {
  GroundMdp d("door", 4, discount);
  d.action_names = {{door_action::get_key, "get-key"},
                    {door_action::unlock, "unlock"},
                    {door_action::bang_on, "bang-on"},
                    {door_action::go_through, "go-through"}};
  d.states[door_state::locked].label = "locked";
  d.states[door_state::has_key].label = "has-key";
  d.states[door_state::open].label = "open";
  d.states[door_state::through].label = "through";
  using namespace door_state;
  d.set_action(locked, {door_action::get_key, 0.0, {{has_key, 1.0}}});
  d.set_action(locked, {door_action::unlock, 0.0, {{locked, 1.0}}});
  d.set_action(locked, {door_action::bang_on, 0.0, {{locked, 1.0}}});
  d.set_action(has_key, {door_action::unlock, 0.0, {{open, 1.0}}});
  d.set_action(has_key, {door_action::bang_on, 0.0, {{has_key, 1.0}}});
  d.set_action(open, {door_action::go_through, 1.0, {{through, 1.0}}});
  d.set_action(open, {door_action::bang_on, 0.0, {{open, 1.0}}});
  d.mark_terminal(through);
  d.starts.push_back({locked, 1.0});
  d.validate();
  return d;
}

GroundMdp email_password(int recall_steps, double discount) {
  require(recall_steps >= 1, "recall_steps must be at least 1");
  require(discount >= 0.0 && discount < 1.0, "discount must lie in [0, 1)");
  // 0: logged-out no-pwd, 1..k-1: recalling, k: has-pwd, k+1: pwd-typed, k+2: logged-in
  const auto k = static_cast<StateId>(recall_steps);
  GroundMdp e("email", k + 3, discount);
  e.action_names = {{email_action::recall_password, "recall-password"},
                    {email_action::type_password, "type-password"},
                    {email_action::click_login, "click-login"},
                    {email_action::share, "share"}};
  const StateId has_pwd = k, typed = k + 1, logged_in = k + 2;
  e.states[0].label = "logged-out,no-pwd";
  for (StateId i = 1; i < k; ++i) e.states[i].label = "recalling-" + std::to_string(i);
  e.states[has_pwd].label = "logged-out,has-pwd";
  e.states[typed].label = "logged-out,pwd-typed";
  e.states[logged_in].label = "logged-in";
  for (StateId i = 0; i < k; ++i) {
    e.set_action(i, {email_action::recall_password, 0.0, {{i + 1, 1.0}}});
    e.set_action(i, {email_action::click_login, 0.0, {{i, 1.0}}});
  }
  e.set_action(has_pwd, {email_action::type_password, 0.0, {{typed, 1.0}}});
  e.set_action(has_pwd, {email_action::click_login, 0.0, {{has_pwd, 1.0}}});
  e.set_action(has_pwd, {email_action::share, 0.0, {{has_pwd, 1.0}}});
  e.set_action(typed, {email_action::click_login, 1.0, {{logged_in, 1.0}}});
  e.mark_terminal(logged_in);
  e.starts.push_back({0, 1.0});
  e.validate();
  return e;
}

HomomorphismMap email_door_map(const GroundMdp& email) {
  require(email.state_count() == 4, "the email-door map is defined for recall_steps = 1");
  HomomorphismMap m;
  m.ground_id = email.name;
  m.abstract_id = "door";
  m.f = {{0, door_state::locked}, {1, door_state::has_key}, {2, door_state::open}, {3, door_state::through}};
  m.g = {{{0, email_action::recall_password}, door_action::get_key},
         {{0, email_action::click_login}, door_action::unlock},
         {{1, email_action::type_password}, door_action::unlock},
         {{1, email_action::click_login}, door_action::bang_on},
         {{1, email_action::share}, door_action::bang_on},
         {{2, email_action::click_login}, door_action::go_through}};
  for (const auto& [sa, b] : m.g) m.scope.insert(sa);
  return m;
}

StateId room_cell(const RoomParams& p, int x, int y) { return static_cast<StateId>(y * p.width + x); }
StateId room_exit(const RoomParams& p) { return static_cast<StateId>(p.width * p.height); }

namespace {

void check_room(const RoomParams& p) {
  require(p.width >= 1 && p.height >= 1 && p.width <= 10 && p.height <= 10, "room size must lie in [1, 10]");
  require(p.door_row >= 0 && p.door_row < p.height, "door row out of range");
  require(p.slip >= 0.0 && p.slip < 1.0, "slip must lie in [0, 1)");
  require(p.discount >= 0.0 && p.discount < 1.0, "discount must lie in [0, 1)");
}

// Adds the moves of one room whose cells start at `base`; `exit_to` is the
// successor of the east move out of the door cell.
void add_room(GroundMdp& mdp, const RoomParams& p, StateId base, StateId exit_to, double exit_reward) {
  struct Move {
    ActionId id;
    int dx, dy;
  };
  const Move moves[] = {{grid_action::north, 0, -1}, {grid_action::south, 0, 1}, {grid_action::west, -1, 0},
                        {grid_action::east, 1, 0}};
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const StateId s = base + room_cell(p, x, y);
      mdp.states[s].label = "(" + std::to_string(x) + "," + std::to_string(y) + ")";
      for (const Move& m : moves) {
        const int nx = x + m.dx, ny = y + m.dy;
        StateId to;
        double reward = 0.0;
        if (nx >= 0 && ny >= 0 && nx < p.width && ny < p.height) {
          to = base + room_cell(p, nx, ny);
        } else if (m.id == grid_action::east && x == p.width - 1 && y == p.door_row) {
          to = exit_to;
          reward = exit_reward;
        } else {
          continue;
        }
        ActionSpec spec{m.id, reward, {{to, 1.0 - p.slip}}};
        if (p.slip > 0.0) spec.outcomes.push_back({s, p.slip});
        mdp.set_action(s, std::move(spec));
      }
    }
  }
}

}  // namespace

GroundMdp room_module(const RoomParams& p, const std::string& name) {
  check_room(p);
  const StateId cells = room_exit(p);
  GroundMdp mdp(name, cells + 1, p.discount);
  mdp.action_names = {{grid_action::north, "north"}, {grid_action::south, "south"}, {grid_action::west, "west"},
                      {grid_action::east, "east"}};
  add_room(mdp, p, 0, cells, p.exit_reward);
  mdp.states[cells].label = "exit";
  mdp.mark_terminal(cells);
  mdp.validate();
  return mdp;
}

GroundMdp room_chain(const RoomParams& p, int rooms, const std::string& name) {
  check_room(p);
  require(rooms >= 1, "need at least one room");
  const StateId cells = room_exit(p);
  const StateId goal = cells * static_cast<StateId>(rooms);
  GroundMdp mdp(name, goal + 1, p.discount);
  mdp.action_names = {{grid_action::north, "north"}, {grid_action::south, "south"}, {grid_action::west, "west"},
                      {grid_action::east, "east"}};
  for (int r = 0; r < rooms; ++r) {
    const StateId base = cells * static_cast<StateId>(r);
    const bool last = r + 1 == rooms;
    const StateId exit_to = last ? goal : base + cells + room_cell(p, 0, p.door_row);
    add_room(mdp, p, base, exit_to, last ? 1.0 : 0.0);
    for (StateId c = 0; c < cells; ++c)
      mdp.states[base + c].label = "room" + std::to_string(r) + " " + mdp.states[base + c].label;
  }
  mdp.states[goal].label = "goal";
  mdp.mark_terminal(goal);
  mdp.starts.push_back({room_cell(p, 0, p.door_row), 1.0});
  mdp.validate();
  return mdp;
}

GroundMdp random_mdp(const RandomMdpParams& p) {
  require(p.n_states >= 1 && p.n_actions >= 1, "random mdp needs at least one state and one action");
  require(p.branching >= 1 && p.branching <= p.n_states, "branching must lie in [1, n_states]");
  require(p.reward_sparsity >= 0.0 && p.reward_sparsity <= 1.0, "reward sparsity must lie in [0, 1]");
  require(p.discount >= 0.0 && p.discount < 1.0, "discount must lie in [0, 1)");
  Rng rng(p.seed);
  GroundMdp mdp("random", p.n_states, p.discount);
  std::vector<StateId> ids(p.n_states);
  for (StateId s = 0; s < p.n_states; ++s) {
    for (ActionId a = 0; a < p.n_actions; ++a) {
      for (StateId i = 0; i < p.n_states; ++i) ids[i] = i;
      // partial Fisher-Yates for the support
      for (std::size_t i = 0; i < p.branching; ++i) std::swap(ids[i], ids[i + rng.below(p.n_states - i)]);
      std::vector<double> w(p.branching);
      double total = 0.0;
      for (auto& x : w) total += (x = 0.05 + rng.uniform());
      ActionSpec spec{a, 0.0, {}};
      double acc = 0.0;
      for (std::size_t i = 0; i < p.branching; ++i) {
        const double prob = i + 1 == p.branching ? 1.0 - acc : w[i] / total;
        acc += prob;
        spec.outcomes.push_back({ids[i], prob});
      }
      if (rng.uniform() >= p.reward_sparsity) spec.reward = std::round(rng.uniform() * 1000.0 + 1.0) / 1000.0;
      mdp.set_action(s, std::move(spec));
    }
  }
  mdp.validate();
  return mdp;
}

PlantedQuotient planted_quotient(const GroundMdp& abstract, std::size_t blowup, double noise, std::uint64_t seed) {
  require(blowup >= 1, "blowup must be at least 1");
  require(noise >= 0.0 && noise <= 0.2, "noise must lie in [0, 0.2]");
  abstract.validate();
  Rng rng(seed);
  const std::size_t m = abstract.state_count();
  const std::size_t n = m * blowup;
  std::vector<StateId> perm(n);
  for (StateId i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  auto member = [&](StateId x, std::size_t i) { return perm[x * blowup + i]; };

  PlantedQuotient out;
  out.ground = GroundMdp(abstract.name + "/planted", n, abstract.discount);
  out.ground.action_names = abstract.action_names;
  out.map.ground_id = out.ground.name;
  out.map.abstract_id = abstract.name;
  for (StateId x = 0; x < m; ++x) {
    for (std::size_t i = 0; i < blowup; ++i) {
      const StateId s = member(x, i);
      out.map.f[s] = x;
      auto& st = out.ground.states[s];
      st.label = abstract.states[x].label.empty() ? "x" + std::to_string(x) + "." + std::to_string(i)
                                                  : abstract.states[x].label + "." + std::to_string(i);
      st.tags = abstract.states[x].tags;
      if (abstract.is_terminal(x)) {
        st.terminal = true;
        continue;
      }
      for (const auto& b : abstract.actions(x)) {
        ActionSpec spec{b.id, b.reward, {}};
        for (const auto& o : b.outcomes) {
          // split the abstract mass among a random non-empty subset of the
          // successor block
          std::vector<std::size_t> idx(blowup);
          for (std::size_t j = 0; j < blowup; ++j) idx[j] = j;
          const std::size_t k = 1 + rng.below(blowup);
          for (std::size_t j = 0; j < k; ++j) std::swap(idx[j], idx[j + rng.below(blowup - j)]);
          std::vector<double> w(k);
          double total = 0.0;
          for (auto& v : w) total += (v = 0.1 + rng.uniform());
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j) {
            const double part = j + 1 == k ? o.prob - acc : o.prob * w[j] / total;
            acc += part;
            spec.outcomes.push_back({member(o.next, idx[j]), part});
          }
        }
        if (noise > 0.0) {
          const std::size_t support = 1 + rng.below(3);
          std::vector<Outcome> mixed;
          for (const auto& o : spec.outcomes) mixed.push_back({o.next, (1.0 - noise) * o.prob});
          std::vector<double> w(support);
          double total = 0.0;
          for (auto& v : w) total += (v = 0.1 + rng.uniform());
          for (std::size_t j = 0; j < support; ++j) mixed.push_back({rng.below(n), noise * w[j] / total});
          spec.outcomes = std::move(mixed);
        }
        out.map.g[{s, b.id}] = b.id;
        out.map.scope.insert({s, b.id});
        out.ground.set_action(s, std::move(spec));
      }
    }
  }
  out.ground.validate();
  return out;
}

const char* domain_name(DomainKind kind) {
  switch (kind) {
    case DomainKind::door_key_grid: return "door-key";
    case DomainKind::email_password: return "email";
    case DomainKind::two_room: return "two-room";
    case DomainKind::random: return "random";
    case DomainKind::planted_quotient: return "planted";
  }
  return "?";
}

std::optional<DomainKind> parse_domain_kind(std::string_view name) {
  for (auto k : {DomainKind::door_key_grid, DomainKind::email_password, DomainKind::two_room, DomainKind::random,
                 DomainKind::planted_quotient})
    if (name == domain_name(k)) return k;
  return std::nullopt;
}

Generated generate(const DomainSpec& spec) {
  Generated out;
  switch (spec.kind) {
    case DomainKind::door_key_grid: {
      DoorKeyParams p = spec.door_key;
      p.seed = spec.seed;
      out.mdp = door_key_grid(p);
      out.map = door_key_map(p);
      break;
    }
    case DomainKind::email_password:
      out.mdp = email_password(spec.recall_steps, spec.discount);
      if (spec.recall_steps == 1) out.map = email_door_map(out.mdp);
      break;
    case DomainKind::two_room:
      out.mdp = two_room(spec.room);
      break;
    case DomainKind::random: {
      RandomMdpParams p = spec.random;
      p.seed = spec.seed;
      out.mdp = random_mdp(p);
      break;
    }
    case DomainKind::planted_quotient: {
      RandomMdpParams p = spec.random;
      p.seed = spec.seed;
      GroundMdp abstract = random_mdp(p);
      abstract.name = "abstract";
      PlantedQuotient pq = planted_quotient(abstract, spec.blowup, spec.noise, spec.seed ^ 0x5bd1e995ULL);
      out.mdp = std::move(pq.ground);
      out.map = std::move(pq.map);
      out.abstract = std::move(abstract);
      break;
    }
  }
  return out;
}

}  // namespace construal
