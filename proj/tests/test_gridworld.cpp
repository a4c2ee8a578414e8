#include <cmath>
#include <set>

#include "doctest.h"
#include "empo/gridworld.hpp"

using namespace empo;

namespace {

GridWorld empty_bounded(int width, int height) {
  GridWorld w;
  w.bounded = true;
  w.width = width;
  w.height = height;
  return w;
}

GridWorld open_world() {
  GridWorld w;
  w.bounded = false;
  return w;
}

GridWorld box_world(bool pushable, bool perceivable) {
  GridWorld w = open_world();
  w.box = Cell{0, 0};
  w.box_pushable = pushable;
  w.box_perceivable = perceivable;
  return w;
}

int count_valid(const std::vector<double>& values) {
  int n = 0;
  for (double v : values) {
    if (!std::isnan(v)) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("stepping against walls and bounds keeps the agent in place") {
  GridWorld w = empty_bounded(5, 5);
  w.add_wall({2, 3});
  GridState s = w.initial_state({2, 2});
  CHECK(grid_step(w, s, GridAction::North).agent == Cell{2, 2});  // wall above
  CHECK(grid_step(w, s, GridAction::East).agent == Cell{3, 2});
  CHECK(grid_step(w, w.initial_state({0, 0}), GridAction::West).agent == Cell{0, 0});
  CHECK(grid_step(w, s, GridAction::Stay) == s);
}

TEST_CASE("pushing moves the box one cell when the next cell is free") {
  GridWorld w = empty_bounded(6, 6);
  w.box = Cell{2, 1};
  w.box_pushable = true;
  GridState s = w.initial_state({1, 1});
  GridState pushed = grid_step(w, s, GridAction::East);
  CHECK(pushed.agent == Cell{2, 1});
  CHECK(*pushed.box == Cell{3, 1});

  // Push blocked by a wall behind the box: nobody moves.
  w.add_wall({3, 1});
  GridState blocked = grid_step(w, w.initial_state({1, 1}), GridAction::East);
  CHECK(blocked.agent == Cell{1, 1});
  CHECK(*blocked.box == Cell{2, 1});

  // A stationary box blocks like a wall.
  w.box_pushable = false;
  GridState bumped = grid_step(w, w.initial_state({1, 1}), GridAction::East);
  CHECK(bumped.agent == Cell{1, 1});
}

TEST_CASE("bounded empty grid enumerates one state per cell with one-hot rows") {
  GridWorld w = empty_bounded(10, 10);
  GridModel gm = grid_transition_model(w, w.initial_state({0, 0}));
  CHECK(gm.model.n_states == 100);
  CHECK(gm.model.n_actions == 5);
  CHECK(gm.model.is_deterministic());
}

TEST_CASE("box worlds enumerate every valid agent-box pair") {
  GridWorld w = empty_bounded(4, 4);
  w.box = Cell{1, 1};
  w.box_pushable = true;
  w.box_perceivable = true;
  GridModel gm = grid_transition_model(w, w.initial_state({0, 0}));
  CHECK(gm.model.n_states == 16 * 15);
  CHECK(gm.model.n_sensors == 16 * 15);
}

TEST_CASE("action slip spreads mass over the other actions' outcomes") {
  GridWorld w = empty_bounded(5, 5);
  w.epsilon_noise = 0.1;
  GridModel gm = grid_transition_model(w, w.initial_state({2, 2}));
  // Interior cell: all five outcomes distinct.
  const int center = gm.start_index;
  auto row = gm.model.row(center, static_cast<int>(GridAction::North));
  std::multiset<double> mass;
  for (double p : row) {
    if (p > 0.0) mass.insert(p);
  }
  CHECK(mass.size() == 5);
  CHECK(*mass.rbegin() == doctest::Approx(0.9));
  CHECK(*mass.begin() == doctest::Approx(0.025));

  // Corner cell, moving into the corner: blocked outcomes merge onto the cell.
  GridModel gm2 = grid_transition_model(w, w.initial_state({0, 0}));
  auto corner_row = gm2.model.row(gm2.start_index, static_cast<int>(GridAction::South));
  double self_mass = 0.0;
  for (int t = 0; t < gm2.model.n_states; ++t) {
    if (gm2.states[t].agent == Cell{0, 0}) self_mass = corner_row[t];
  }
  // South, West and Stay all keep the agent at the corner: 0.9 + 2 * 0.025.
  CHECK(self_mass == doctest::Approx(0.95));
}

TEST_CASE("unbounded worlds require a window") {
  GridWorld w = open_world();
  CHECK_THROWS_AS(grid_transition_model(w, GridState{{0, 0}, std::nullopt}, std::nullopt),
                  std::invalid_argument);
  GridModel gm = grid_transition_model(w, GridState{{0, 0}, std::nullopt}, 2);
  // Chebyshev radius 4 window: 9x9 cells.
  CHECK(gm.model.n_states == 81);
}

TEST_CASE("open grid reachability empowerment") {
  GridWorld w = open_world();
  const GridState start{{0, 0}, std::nullopt};
  CHECK(grid_reachable_empowerment(w, start, 1) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
  CHECK(grid_reachable_empowerment(w, start, 5) ==
        doctest::Approx(std::log2(61.0)).epsilon(1e-12));
}

TEST_CASE("corner of a bounded grid reaches three cells in one step") {
  GridWorld w = empty_bounded(10, 10);
  CHECK(grid_reachable_empowerment(w, w.initial_state({0, 0}), 1) ==
        doctest::Approx(std::log2(3.0)));
}

TEST_CASE("breadth-first path agrees with the transition-model path") {
  GridWorld maze = generate_maze(8, 8, 3);
  GridModel gm = grid_transition_model(maze, maze.initial_state({0, 0}));
  for (int idx = 0; idx < gm.model.n_states; idx += 7) {
    const double fast = grid_reachable_empowerment(maze, gm.states[idx], 3);
    const double slow = deterministic_empowerment(gm.model, idx, 3);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("deterministic map method requires a noise-free world") {
  GridWorld w = empty_bounded(4, 4);
  w.epsilon_noise = 0.2;
  GridMapParams params;
  params.method = EmpowermentMethod::deterministic;
  params.horizon = 1;
  CHECK_THROWS_AS(grid_empowerment_map(w, params), std::invalid_argument);
  params.method = EmpowermentMethod::ba;
  CHECK_NOTHROW(grid_empowerment_map(w, params));
}

TEST_CASE("box scenario maps: visibility of a stationary box changes nothing") {
  GridMapParams params;
  params.horizon = 3;
  params.extent = Rect{-4, -4, 9, 9};

  GridWorld hidden = box_world(false, false);
  GridWorld seen = box_world(false, true);
  GridEmpowermentMap map_hidden = grid_empowerment_map(hidden, params);
  GridEmpowermentMap map_seen = grid_empowerment_map(seen, params);
  for (std::size_t i = 0; i < map_hidden.values.size(); ++i) {
    if (std::isnan(map_hidden.values[i])) {
      CHECK(std::isnan(map_seen.values[i]));
    } else {
      CHECK(map_hidden.values[i] == map_seen.values[i]);  // bit-identical
    }
  }

  // The stationary box lowers empowerment next to it.
  const double far_field = std::log2(25.0);  // horizon 3: 25 reachable cells
  CHECK(map_hidden.at({4, 4}) == doctest::Approx(far_field));
  CHECK(map_hidden.at({1, 0}) < far_field);
}

TEST_CASE("box scenario maps: pushable box rewards perception near the box") {
  GridMapParams params;
  params.horizon = 3;
  params.extent = Rect{-4, -4, 9, 9};

  GridWorld blind = box_world(true, false);
  GridWorld aware = box_world(true, true);
  GridEmpowermentMap map_blind = grid_empowerment_map(blind, params);
  GridEmpowermentMap map_aware = grid_empowerment_map(aware, params);

  bool strictly_better_somewhere = false;
  for (std::size_t i = 0; i < map_blind.values.size(); ++i) {
    if (std::isnan(map_blind.values[i])) continue;
    CHECK(map_aware.values[i] >= map_blind.values[i] - 1e-12);
    // A pushable invisible box never blocks: the map stays flat.
    CHECK(map_blind.values[i] == doctest::Approx(std::log2(25.0)));
  }
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      if (std::abs(dx) + std::abs(dy) != 1) continue;
      if (map_aware.at({dx, dy}) > map_blind.at({dx, dy}) + 1e-9) {
        strictly_better_somewhere = true;
      }
    }
  }
  CHECK(strictly_better_somewhere);
}

TEST_CASE("grid maps are reflection-equivariant") {
  GridWorld maze = generate_maze(7, 7, 11);
  GridWorld mirrored = empty_bounded(7, 7);
  mirrored.walls.clear();
  for (Cell w : maze.walls) mirrored.add_wall({6 - w.x, w.y});

  GridMapParams params;
  params.horizon = 3;
  GridEmpowermentMap map = grid_empowerment_map(maze, params);
  GridEmpowermentMap map_mirrored = grid_empowerment_map(mirrored, params);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) {
      const double a = map.at({x, y});
      const double b = map_mirrored.at({6 - x, y});
      if (std::isnan(a)) {
        CHECK(std::isnan(b));
      } else {
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("parallel grid map equals the serial reference") {
  GridWorld maze = generate_maze(8, 8, 5);
  GridMapParams params;
  params.horizon = 4;
  GridEmpowermentMap parallel = grid_empowerment_map(maze, params);
  GridEmpowermentMap serial = grid_empowerment_map_serial(maze, params);
  REQUIRE(parallel.values.size() == serial.values.size());
  for (std::size_t i = 0; i < serial.values.size(); ++i) {
    if (std::isnan(serial.values[i])) {
      CHECK(std::isnan(parallel.values[i]));
    } else {
      CHECK(parallel.values[i] == serial.values[i]);
    }
  }
}

TEST_CASE("mean action distance on small grids") {
  GridDistanceMap center_map = average_distance_map(empty_bounded(3, 3));
  CHECK(center_map.values[center_map.index({1, 1})] == doctest::Approx(12.0 / 9.0));

  GridDistanceMap tiny = average_distance_map(empty_bounded(1, 1));
  CHECK(tiny.values[0] == doctest::Approx(0.0));

  // A cell behind a corridor sits farther from everything than an open cell.
  GridWorld w = empty_bounded(7, 3);
  // Corridor along y=0 at the right: wall off x>=4 except the corridor row.
  for (int x = 4; x < 7; ++x) {
    w.add_wall({x, 1});
    w.add_wall({x, 2});
  }
  GridDistanceMap map = average_distance_map(w);
  CHECK(map.values[map.index({6, 0})] > map.values[map.index({1, 1})]);
}

TEST_CASE("correlation is undefined on a flat map") {
  GridWorld w = empty_bounded(3, 3);
  CorrelationReport report = correlation_report(w, 10);
  CHECK_FALSE(report.defined);
}

TEST_CASE("mirroring the maze leaves the correlation unchanged") {
  GridWorld maze = generate_maze(8, 8, 2);
  GridWorld mirrored = empty_bounded(8, 8);
  mirrored.walls.clear();
  for (Cell w : maze.walls) mirrored.add_wall({7 - w.x, w.y});
  CorrelationReport a = correlation_report(maze, 4);
  CorrelationReport b = correlation_report(mirrored, 4);
  REQUIRE(a.defined);
  REQUIRE(b.defined);
  CHECK(a.pearson_r == doctest::Approx(b.pearson_r).epsilon(1e-12));
}

TEST_CASE("maze generation is seeded and connected") {
  GridWorld a = generate_maze(10, 10, 4);
  GridWorld b = generate_maze(10, 10, 4);
  CHECK(a.walls == b.walls);
  GridWorld c = generate_maze(10, 10, 5);
  CHECK(a.walls != c.walls);

  // Connectivity: the distance map is defined everywhere.
  GridDistanceMap map = average_distance_map(a);
  int free_cells = 0;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!a.wall_at({x, y})) {
        ++free_cells;
        CHECK_FALSE(std::isnan(map.values[map.index({x, y})]));
      }
    }
  }
  CHECK(free_cells >= 25);
}

TEST_CASE("world json round trip rejects unknown keys") {
  GridWorld w = empty_bounded(4, 4);
  w.add_wall({1, 2});
  w.box = Cell{2, 2};
  w.box_pushable = true;
  w.epsilon_noise = 0.05;
  GridWorld back = GridWorld::parse_json(w.to_json_string());
  CHECK(back.width == 4);
  CHECK(back.walls == w.walls);
  CHECK(back.box == w.box);
  CHECK(back.box_pushable);
  CHECK(back.epsilon_noise == doctest::Approx(0.05));

  CHECK_THROWS_AS(GridWorld::parse_json(R"({"bounded": true, "width": 3, "height": 3,
      "mystery": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(GridWorld::parse_json(R"({"bounded": true, "width": 3, "height": 3,
      "epsilon_noise": 1.5})"),
                  std::invalid_argument);
}

TEST_CASE("marginalizing over box positions averages per-position maps") {
  GridWorld w = empty_bounded(3, 3);
  w.box = Cell{1, 1};
  w.box_pushable = false;
  GridMapParams params;
  params.horizon = 1;
  params.marginalize_box = true;
  GridEmpowermentMap map = grid_empowerment_map(w, params);
  // With marginalization the agent cell no longer collides with a fixed box.
  CHECK(count_valid(map.values) == 9);
}
