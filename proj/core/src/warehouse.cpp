#include "uesr/warehouse.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace uesr {

namespace {

constexpr int kDefaultWidth = 10;
constexpr int kDefaultHeight = 11;

std::vector<Tile> shelf_blocks(std::initializer_list<int> left_columns) {
  std::vector<Tile> tiles;
  for (int x0 : left_columns) {
    for (int y0 : {2, 6}) {
      for (int y = y0; y < y0 + 3; ++y) {
        for (int x = x0; x < x0 + 2; ++x) tiles.push_back({x, y});
      }
    }
  }
  std::sort(tiles.begin(), tiles.end());
  return tiles;
}

// Picks `count` distinct elements of `pool` uniformly (partial Fisher-Yates).
std::vector<Tile> sample_tiles(std::vector<Tile> pool, std::size_t count,
                               Rng& rng) {
  if (pool.size() < count) {
    throw std::logic_error("not enough free tiles to place entities");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

bool agent_on(const WarehouseState& s, Tile t) {
  return std::any_of(s.agents.begin(), s.agents.end(),
                     [t](const AgentState& a) { return a.position == t; });
}

void place_agents(WarehouseState& s) {
  std::vector<Tile> pool;
  for (int y = 0; y < s.layout.height; ++y) {
    for (int x = 0; x < s.layout.width; ++x) {
      const Tile t{x, y};
      if (s.layout.is_highway(t) && !s.is_obstacle(t)) pool.push_back(t);
    }
  }
  const auto tiles =
      sample_tiles(std::move(pool), static_cast<std::size_t>(s.config.n_agents),
                   s.rng);
  s.agents.resize(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    s.agents[i].position = tiles[i];
    s.agents[i].facing = static_cast<Direction>(s.rng.uniform_index(4));
  }
}

void place_obstacles(WarehouseState& s) {
  std::vector<Tile> pool;
  for (int y = 0; y < s.layout.height; ++y) {
    for (int x = 0; x < s.layout.width; ++x) {
      const Tile t{x, y};
      if (s.layout.is_highway(t) && !s.layout.is_goal(t) && !agent_on(s, t) &&
          !s.shelf_at(t)) {
        pool.push_back(t);
      }
    }
  }
  s.obstacles = sample_tiles(std::move(pool),
                             static_cast<std::size_t>(s.config.n_obstacles),
                             s.rng);
  std::sort(s.obstacles.begin(), s.obstacles.end());
}

// Tops requests up to n_requests from shelves neither requested nor awaiting
// return, one uniform draw per new request.
void refill_requests(WarehouseState& s) {
  auto requested = std::count_if(s.shelves.begin(), s.shelves.end(),
                                 [](const ShelfState& sh) { return sh.requested; });
  while (requested < s.config.n_requests) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < s.shelves.size(); ++i) {
      if (!s.shelves[i].requested && !s.shelves[i].pending_return) {
        eligible.push_back(i);
      }
    }
    if (eligible.empty()) return;
    s.shelves[eligible[s.rng.uniform_index(eligible.size())]].requested = true;
    ++requested;
  }
}

}  // namespace

std::string_view variant_name(LayoutVariant variant) {
  switch (variant) {
    case LayoutVariant::Training:
      return "training";
    case LayoutVariant::GoalShift:
      return "goal_shift";
    case LayoutVariant::ShelfShift:
      return "shelf_shift";
  }
  return "unknown";
}

LayoutVariant parse_variant(std::string_view name) {
  if (name == "training") return LayoutVariant::Training;
  if (name == "goal_shift") return LayoutVariant::GoalShift;
  if (name == "shelf_shift") return LayoutVariant::ShelfShift;
  throw std::invalid_argument("unknown layout variant: " + std::string(name));
}

GridLayout GridLayout::make(LayoutVariant variant) {
  std::vector<Tile> goals{{4, 10}, {5, 10}};
  std::vector<Tile> shelves;
  switch (variant) {
    case LayoutVariant::Training:
      shelves = shelf_blocks({2, 6});
      break;
    case LayoutVariant::GoalShift:
      shelves = shelf_blocks({2, 6});
      goals.insert(goals.begin(), {{4, 0}, {5, 0}});
      break;
    case LayoutVariant::ShelfShift:
      shelves = shelf_blocks({0, 8});
      break;
  }
  return custom(kDefaultWidth, kDefaultHeight, std::move(shelves),
                std::move(goals), variant);
}

GridLayout GridLayout::custom(int width, int height,
                              std::vector<Tile> shelf_homes,
                              std::vector<Tile> goals, LayoutVariant tag) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("layout dimensions must be positive");
  }
  GridLayout layout;
  layout.width = width;
  layout.height = height;
  layout.variant = tag;
  layout.highway_mask.assign(static_cast<std::size_t>(width * height), true);
  for (Tile t : shelf_homes) {
    if (!layout.in_bounds(t)) throw std::invalid_argument("shelf tile out of bounds");
    if (!layout.highway_mask[layout.index(t)]) {
      throw std::invalid_argument("duplicate shelf tile");
    }
    layout.highway_mask[layout.index(t)] = false;
  }
  for (Tile t : goals) {
    if (!layout.in_bounds(t)) throw std::invalid_argument("goal tile out of bounds");
    if (!layout.highway_mask[layout.index(t)]) {
      throw std::invalid_argument("goal tile overlaps a shelf tile");
    }
  }
  layout.shelf_home_tiles = std::move(shelf_homes);
  layout.goal_tiles = std::move(goals);
  return layout;
}

bool GridLayout::is_goal(Tile t) const {
  return std::find(goal_tiles.begin(), goal_tiles.end(), t) != goal_tiles.end();
}

bool WarehouseState::is_obstacle(Tile t) const {
  return std::binary_search(obstacles.begin(), obstacles.end(), t);
}

std::optional<std::size_t> WarehouseState::shelf_at(Tile t) const {
  for (std::size_t i = 0; i < shelves.size(); ++i) {
    if (shelves[i].current_tile == t) return i;
  }
  return std::nullopt;
}

Tile neighbour(Tile t, Direction d) {
  switch (d) {
    case Direction::Up:
      return {t.x, t.y - 1};
    case Direction::Down:
      return {t.x, t.y + 1};
    case Direction::Left:
      return {t.x - 1, t.y};
    case Direction::Right:
      return {t.x + 1, t.y};
  }
  return t;
}

Direction rotate_left(Direction d) {
  switch (d) {
    case Direction::Up:
      return Direction::Left;
    case Direction::Left:
      return Direction::Down;
    case Direction::Down:
      return Direction::Right;
    case Direction::Right:
      return Direction::Up;
  }
  return d;
}

Direction rotate_right(Direction d) {
  switch (d) {
    case Direction::Up:
      return Direction::Right;
    case Direction::Right:
      return Direction::Down;
    case Direction::Down:
      return Direction::Left;
    case Direction::Left:
      return Direction::Up;
  }
  return d;
}

WarehouseState create_env(LayoutVariant variant, std::uint64_t seed,
                          const WarehouseConfig& config) {
  return create_env(GridLayout::make(variant), seed, config);
}

WarehouseState create_env(GridLayout layout, std::uint64_t seed,
                          const WarehouseConfig& config) {
  if (config.n_agents <= 0 || config.episode_length <= 0 ||
      config.obstacle_period <= 0 || config.n_obstacles < 0 ||
      config.n_requests < 0) {
    throw std::invalid_argument("invalid warehouse config");
  }
  WarehouseState s;
  s.layout = std::move(layout);
  s.config = config;
  s.rng = Rng(seed);
  s.shelves.reserve(s.layout.shelf_home_tiles.size());
  for (std::size_t i = 0; i < s.layout.shelf_home_tiles.size(); ++i) {
    const Tile home = s.layout.shelf_home_tiles[i];
    s.shelves.push_back({static_cast<int>(i), home, home, false, false});
  }
  place_agents(s);
  refill_requests(s);
  place_obstacles(s);
  return s;
}

std::vector<ObservationVector> reset_episode(WarehouseState& state) {
  state.episode_step = 0;
  state.delivered_count = 0;
  place_agents(state);
  std::vector<ObservationVector> obs;
  obs.reserve(state.agents.size());
  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    obs.push_back(observe(state, i));
  }
  return obs;
}

StepOutcome step(WarehouseState& state, std::span<const Action> actions) {
  if (state.episode_done()) {
    throw std::logic_error("step called on a finished episode");
  }
  const std::size_t n = state.agents.size();
  if (actions.size() != n) {
    throw std::invalid_argument("one action per agent required");
  }
  StepOutcome out;
  out.rewards.assign(n, 0.0);

  // Intents from the pre-step state.
  std::vector<Tile> target(n);
  std::vector<bool> moving(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = state.agents[i];
    target[i] = a.position;
    switch (actions[i]) {
      case Action::RotateLeft:
        a.facing = rotate_left(a.facing);
        break;
      case Action::RotateRight:
        a.facing = rotate_right(a.facing);
        break;
      case Action::MoveForward: {
        const Tile t = neighbour(a.position, a.facing);
        if (!state.layout.in_bounds(t) || state.is_obstacle(t)) break;
        if (a.carrying && state.shelf_at(t)) break;
        target[i] = t;
        moving[i] = true;
        break;
      }
      default:
        break;
    }
  }

  // Several movers into one tile: a uniformly drawn winner moves.
  for (std::size_t i = 0; i < n; ++i) {
    if (!moving[i]) continue;
    std::vector<std::size_t> contenders{i};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (moving[j] && target[j] == target[i]) contenders.push_back(j);
    }
    if (contenders.size() < 2) continue;
    const std::size_t winner = contenders[state.rng.uniform_index(contenders.size())];
    for (std::size_t c : contenders) {
      if (c != winner) moving[c] = false;
    }
  }
  // Swaps are blocked.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (moving[i] && moving[j] && target[i] == state.agents[j].position &&
          target[j] == state.agents[i].position) {
        moving[i] = moving[j] = false;
      }
    }
  }
  // A mover is blocked by any agent that stays on its target tile.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!moving[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && !moving[j] && state.agents[j].position == target[i]) {
          moving[i] = false;
          changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (moving[i]) state.agents[i].position = target[i];
  }

  auto credit = [&](std::size_t carrier) {
    for (std::size_t k = 0; k < n; ++k) {
      out.rewards[k] += k == carrier ? state.config.carrier_reward
                                     : state.config.other_reward;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (actions[i] != Action::PickupPutdown) continue;
    AgentState& a = state.agents[i];
    if (!a.carrying) {
      if (auto s = state.shelf_at(a.position)) {
        state.shelves[*s].current_tile.reset();
        a.carrying = state.shelves[*s].shelf_id;
      }
    } else if (!state.layout.is_highway(a.position) &&
               !state.shelf_at(a.position)) {
      ShelfState& shelf = state.shelves[static_cast<std::size_t>(*a.carrying)];
      shelf.current_tile = a.position;
      a.carrying.reset();
      if (shelf.pending_return && shelf.home_tile == a.position) {
        shelf.pending_return = false;
        ++out.returns_this_step;
        credit(i);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const AgentState& a = state.agents[i];
    if (!a.carrying || !state.layout.is_goal(a.position)) continue;
    ShelfState& shelf = state.shelves[static_cast<std::size_t>(*a.carrying)];
    if (!shelf.requested) continue;
    shelf.requested = false;
    shelf.pending_return = true;
    ++out.deliveries_this_step;
    ++state.delivered_count;
    credit(i);
    refill_requests(state);
  }
  if (out.returns_this_step > 0) refill_requests(state);

  ++state.global_step;
  ++state.episode_step;
  if (state.global_step % state.config.obstacle_period == 0) {
    place_obstacles(state);
  }
  out.episode_done = state.episode_done();
  return out;
}

ObservationVector observe(const WarehouseState& state, std::size_t agent) {
  if (agent >= state.agents.size()) {
    throw std::out_of_range("agent index out of range");
  }
  ObservationVector obs{};
  const AgentState& self = state.agents[agent];
  const GridLayout& layout = state.layout;

  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const Tile t{self.position.x + dx, self.position.y + dy};
      double* f = obs.data() + ((dy + 1) * 3 + (dx + 1)) * kTileFeatures;
      if (!layout.in_bounds(t)) {
        f[7] = 1.0;
        continue;
      }
      for (const AgentState& other : state.agents) {
        if (other.position != t) continue;
        f[0] = 1.0;
        f[1 + static_cast<int>(other.facing)] = 1.0;
        // A carried shelf is seen on its carrier's tile.
        if (other.carrying) {
          f[5] = 1.0;
          f[6] = state.shelves[static_cast<std::size_t>(*other.carrying)].requested
                     ? 1.0
                     : 0.0;
        }
      }
      if (auto s = state.shelf_at(t)) {
        f[5] = 1.0;
        f[6] = state.shelves[*s].requested ? 1.0 : 0.0;
      }
      if (state.is_obstacle(t)) f[7] = 1.0;
    }
  }
  double* self_f = obs.data() + 9 * kTileFeatures;
  self_f[0] = static_cast<double>(self.position.x) / layout.width;
  self_f[1] = static_cast<double>(self.position.y) / layout.height;
  self_f[2 + static_cast<int>(self.facing)] = 1.0;
  self_f[6] = self.carrying ? 1.0 : 0.0;
  self_f[7] = layout.is_highway(self.position) ? 1.0 : 0.0;
  return obs;
}

std::string render_ascii(const WarehouseState& state) {
  static constexpr char kFree[] = {'^', 'v', '<', '>'};
  static constexpr char kLoaded[] = {'A', 'V', '{', '}'};
  std::ostringstream os;
  for (int y = 0; y < state.layout.height; ++y) {
    for (int x = 0; x < state.layout.width; ++x) {
      const Tile t{x, y};
      char c = state.layout.is_highway(t) ? '.' : ':';
      if (state.layout.is_goal(t)) c = 'G';
      if (auto s = state.shelf_at(t)) {
        const ShelfState& shelf = state.shelves[*s];
        c = shelf.requested ? 'R' : (shelf.pending_return ? 'P' : 'S');
      }
      if (state.is_obstacle(t)) c = '#';
      for (const AgentState& a : state.agents) {
        if (a.position == t) {
          c = (a.carrying ? kLoaded : kFree)[static_cast<int>(a.facing)];
        }
      }
      os << c;
    }
    os << '\n';
  }
  os << "legend: ^v<> agent (facing)  AV{} agent carrying  S shelf  R requested"
        "  P awaiting return  G goal  # obstacle  : shelf home  . highway\n";
  os << "step " << state.episode_step << '/' << state.config.episode_length
     << "  global " << state.global_step << "  delivered "
     << state.delivered_count << '\n';
  return os.str();
}

}  // namespace uesr
