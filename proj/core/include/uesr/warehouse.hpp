#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uesr/rng.hpp"

namespace uesr {

// Grid coordinate; y = 0 is the top row.
struct Tile {
  int x = 0;
  int y = 0;
  auto operator<=>(const Tile&) const = default;
};

enum class LayoutVariant { Training, GoalShift, ShelfShift };

std::string_view variant_name(LayoutVariant variant);
// Accepts "training", "goal_shift" or "shelf_shift"; throws std::invalid_argument.
LayoutVariant parse_variant(std::string_view name);

enum class Direction : std::uint8_t { Up, Down, Left, Right };

enum class Action : std::uint8_t {
  MoveForward,
  RotateLeft,
  RotateRight,
  PickupPutdown,
  NoOp
};
inline constexpr int kNumActions = 5;

struct GridLayout {
  int width = 0;
  int height = 0;
  std::vector<Tile> shelf_home_tiles;
  std::vector<Tile> goal_tiles;
  // Row-major; true where a shelf may NOT be put down.
  std::vector<bool> highway_mask;
  LayoutVariant variant = LayoutVariant::Training;

  // Built-in 10x11 warehouse maps.
  static GridLayout make(LayoutVariant variant);
  // Arbitrary map; highway_mask is derived from the shelf homes. Throws
  // std::invalid_argument when shelves and goals overlap or leave the grid.
  static GridLayout custom(int width, int height, std::vector<Tile> shelf_homes,
                           std::vector<Tile> goals,
                           LayoutVariant tag = LayoutVariant::Training);

  bool in_bounds(Tile t) const {
    return t.x >= 0 && t.y >= 0 && t.x < width && t.y < height;
  }
  std::size_t index(Tile t) const {
    return static_cast<std::size_t>(t.y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(t.x);
  }
  bool is_highway(Tile t) const { return highway_mask[index(t)]; }
  bool is_goal(Tile t) const;

  bool operator==(const GridLayout&) const = default;
};

struct AgentState {
  Tile position;
  Direction facing = Direction::Up;
  std::optional<int> carrying;  // shelf id

  bool operator==(const AgentState&) const = default;
};

struct ShelfState {
  int shelf_id = 0;
  Tile home_tile;
  std::optional<Tile> current_tile;  // empty while carried
  bool requested = false;
  bool pending_return = false;

  bool operator==(const ShelfState&) const = default;
};

struct WarehouseConfig {
  int n_agents = 2;
  int n_requests = 4;
  int n_obstacles = 3;
  int episode_length = 50;
  std::int64_t obstacle_period = 1000;
  double carrier_reward = 0.5;
  double other_reward = 0.125;

  bool operator==(const WarehouseConfig&) const = default;
};

struct WarehouseState {
  GridLayout layout;
  WarehouseConfig config;
  std::vector<AgentState> agents;
  std::vector<ShelfState> shelves;
  std::vector<Tile> obstacles;  // kept sorted
  std::int64_t global_step = 0;
  int episode_step = 0;
  Rng rng;
  int delivered_count = 0;  // deliveries in the current episode

  bool episode_done() const { return episode_step >= config.episode_length; }
  bool is_obstacle(Tile t) const;
  // Index into `shelves` of the shelf resting on `t`, if any.
  std::optional<std::size_t> shelf_at(Tile t) const;

  bool operator==(const WarehouseState&) const = default;
};

struct StepOutcome {
  std::vector<double> rewards;
  bool episode_done = false;
  int deliveries_this_step = 0;
  int returns_this_step = 0;
};

// Per-agent observation: 9 neighbourhood tiles x 8 features + 8 self features.
inline constexpr int kTileFeatures = 8;
inline constexpr int kSelfFeatures = 8;
inline constexpr int kObservationSize = 9 * kTileFeatures + kSelfFeatures;
using ObservationVector = std::array<double, kObservationSize>;

WarehouseState create_env(LayoutVariant variant, std::uint64_t seed,
                          const WarehouseConfig& config = {});
WarehouseState create_env(GridLayout layout, std::uint64_t seed,
                          const WarehouseConfig& config = {});

std::vector<ObservationVector> reset_episode(WarehouseState& state);

// Throws std::logic_error when the episode is already done, and
// std::invalid_argument when the action count differs from the agent count.
StepOutcome step(WarehouseState& state, std::span<const Action> actions);

ObservationVector observe(const WarehouseState& state, std::size_t agent);

std::string render_ascii(const WarehouseState& state);

Tile neighbour(Tile t, Direction d);
Direction rotate_left(Direction d);
Direction rotate_right(Direction d);

}  // namespace uesr
