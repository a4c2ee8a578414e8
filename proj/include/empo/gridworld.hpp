#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "empo/empowerment.hpp"

namespace empo {

struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class GridAction : int { North = 0, East = 1, South = 2, West = 3, Stay = 4 };
inline constexpr int kGridActionCount = 5;

Cell action_offset(GridAction action);
const char* to_string(GridAction action);

struct GridState {
  Cell agent;
  std::optional<Cell> box;
  friend bool operator==(const GridState&, const GridState&) = default;
};

/// 2-D grid scenario: optional bounds, blocking walls, optional box that can
/// be pushable and/or perceivable, optional action-slip noise.
struct GridWorld {
  bool bounded = true;
  int width = 0;
  int height = 0;
  std::vector<Cell> walls;  // kept sorted and unique
  std::optional<Cell> box;
  bool box_pushable = false;
  bool box_perceivable = false;
  double epsilon_noise = 0.0;  // chosen action slips to each other action with eps/4

  bool inside(Cell c) const {
    return !bounded || (c.x >= 0 && c.x < width && c.y >= 0 && c.y < height);
  }
  bool wall_at(Cell c) const;
  bool blocked(Cell c) const { return !inside(c) || wall_at(c); }

  void add_wall(Cell c);
  void validate() const;
  GridState initial_state(Cell agent) const;

  static GridWorld parse_json(std::string_view text);
  static GridWorld load_json(const std::filesystem::path& file);
  std::string to_json_string(int indent = 2) const;
  void save_json(const std::filesystem::path& file) const;
};

// Deterministic dynamics: blocked moves keep the agent in place; walking into
// a pushable box shoves it one cell onward when that cell is free, otherwise
// nobody moves.
GridState grid_step(const GridWorld& world, const GridState& state, GridAction action);

struct GridModel {
  TransitionModel model;
  std::vector<GridState> states;  // model state id -> configuration
  int start_index = 0;
};

// Finite transition model of the world. Bounded worlds enumerate every valid
// (agent, box) configuration; unbounded worlds need window_n and restrict
// movement to Chebyshev radius window_n + 2 around the start, which contains
// everything reachable within window_n steps.
GridModel grid_transition_model(const GridWorld& world, const GridState& start,
                                std::optional<int> window_n = std::nullopt);

// log2 of the distinct sensor readings reachable in exactly n steps, computed
// by breadth-first expansion directly on grid states. Noise-free worlds only.
double grid_reachable_empowerment(const GridWorld& world, const GridState& start, int n);

struct Rect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  bool contains(Cell c) const {
    return c.x >= x0 && c.x < x0 + width && c.y >= y0 && c.y < y0 + height;
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
};

struct GridMapParams {
  int horizon = 5;
  EmpowermentMethod method = EmpowermentMethod::deterministic;
  SolverOptions solver;
  ImpoverishedParams impoverished;
  int workers = 0;
  std::optional<Rect> extent;  // required for unbounded worlds
  bool marginalize_box = false;
};

/// Per-agent-cell empowerment; cells that cannot host the agent hold NaN.
struct GridEmpowermentMap {
  Rect extent;
  std::vector<double> values;  // row-major, index = (y - y0) * width + (x - x0)
  int horizon = 0;
  EmpowermentMethod method = EmpowermentMethod::deterministic;

  double at(Cell c) const { return values[index(c)]; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y - extent.y0) * extent.width + (c.x - extent.x0);
  }
};

GridEmpowermentMap grid_empowerment_map(const GridWorld& world, const GridMapParams& params);
GridEmpowermentMap grid_empowerment_map_serial(const GridWorld& world,
                                               const GridMapParams& params);

// Mean over all states of the minimum number of actions needed to reach them,
// per start state (directed breadth-first search on the transition support
// graph). NaN marks states that cannot reach every other state.
std::vector<double> state_mean_distance(const TransitionModel& model);

/// Same quantity arranged per agent cell; box-free bounded worlds only.
struct GridDistanceMap {
  Rect extent;
  std::vector<double> values;
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y - extent.y0) * extent.width + (c.x - extent.x0);
  }
};

GridDistanceMap average_distance_map(const GridWorld& world);

struct CorrelationReport {
  bool defined = false;          // false when either map has zero variance
  double pearson_r = 0.0;
  GridEmpowermentMap empowerment;
  GridDistanceMap distance;
};

CorrelationReport correlation_report(const GridWorld& world, int n,
                                     const SolverOptions& solver = {}, int workers = 0);

// Seeded depth-first maze carving: rooms on the even lattice, corridors carved
// between them, everything else walls. The free region is always connected.
GridWorld generate_maze(int width, int height, std::uint64_t seed);

}  // namespace empo
