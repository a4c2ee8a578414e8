#include "empo/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "empo/rng.hpp"
#include "json.hpp"

namespace empo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t cell_key(Cell c) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
         static_cast<std::uint32_t>(c.y);
}

struct GridStateHash {
  std::size_t operator()(const GridState& s) const {
    std::uint64_t h = cell_key(s.agent);
    if (s.box) h = splitmix64(h ^ cell_key(*s.box));
    return static_cast<std::size_t>(splitmix64(h));
  }
};

// Optional clamp used when building windowed models of unbounded worlds.
struct Window {
  bool active = false;
  Rect rect;
  bool blocks(Cell c) const { return active && !rect.contains(c); }
};

bool blocked_in(const GridWorld& world, const Window& window, Cell c) {
  return world.blocked(c) || window.blocks(c);
}

GridState step_impl(const GridWorld& world, const Window& window, const GridState& state,
                    GridAction action) {
  if (action == GridAction::Stay) return state;
  const Cell d = action_offset(action);
  const Cell target{state.agent.x + d.x, state.agent.y + d.y};
  if (blocked_in(world, window, target)) return state;
  if (state.box && target == *state.box) {
    if (!world.box_pushable) return state;
    const Cell beyond{target.x + d.x, target.y + d.y};
    if (blocked_in(world, window, beyond)) return state;
    return {target, beyond};
  }
  return {target, state.box};
}

// Sensor key: agent cell, extended by the box cell when it is perceivable.
std::uint64_t sensor_key(const GridWorld& world, const GridState& state) {
  std::uint64_t key = cell_key(state.agent);
  if (world.box_perceivable && state.box) key = splitmix64(key ^ cell_key(*state.box));
  return key;
}

struct Outcome {
  GridState state;
  double probability;
};

// Action outcomes with slip noise folded in and collisions merged.
std::vector<Outcome> action_outcomes(const GridWorld& world, const Window& window,
                                     const GridState& state, int action) {
  std::vector<Outcome> outcomes;
  const double eps = world.epsilon_noise;
  for (int a = 0; a < kGridActionCount; ++a) {
    const double p = (a == action) ? 1.0 - eps : eps / (kGridActionCount - 1);
    if (p == 0.0) continue;
    GridState next = step_impl(world, window, state, static_cast<GridAction>(a));
    bool merged = false;
    for (Outcome& o : outcomes) {
      if (o.state == next) {
        o.probability += p;
        merged = true;
        break;
      }
    }
    if (!merged) outcomes.push_back({next, p});
  }
  return outcomes;
}

// Hard cap on dense transition tables; larger worlds must use the
// breadth-first deterministic path or a windowed model.
constexpr std::size_t kMaxModelEntries = 1u << 24;

GridModel build_model(const GridWorld& world, const Window& window,
                      const std::vector<GridState>& states, int start_index) {
  const std::size_t n = states.size();
  const std::size_t entries = n * n * kGridActionCount;
  if (n == 0 || entries > kMaxModelEntries) {
    throw std::runtime_error("grid model too large: " + std::to_string(n) +
                             " states; use the deterministic or windowed path");
  }

  std::unordered_map<GridState, int, GridStateHash> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) index.emplace(states[i], static_cast<int>(i));

  std::unordered_map<std::uint64_t, int> sensor_ids;
  GridModel out;
  out.model = TransitionModel::make(static_cast<int>(n), kGridActionCount, 1);
  out.model.id = "grid";
  out.states = states;
  out.start_index = start_index;

  std::vector<int> sensors(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t key = sensor_key(world, states[i]);
    auto [it, inserted] = sensor_ids.emplace(key, static_cast<int>(sensor_ids.size()));
    sensors[i] = it->second;
  }
  out.model.n_sensors = static_cast<int>(sensor_ids.size());
  out.model.sensor_map = std::move(sensors);

  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < kGridActionCount; ++a) {
      auto row = out.model.row(static_cast<int>(i), a);
      for (const Outcome& o : action_outcomes(world, window, states[i], a)) {
        auto it = index.find(o.state);
        if (it == index.end()) {
          throw std::logic_error("grid model: successor outside the state set");
        }
        row[it->second] += o.probability;
      }
    }
  }
  out.model.validate();
  return out;
}

std::vector<GridState> closure_from(const GridWorld& world, const Window& window,
                                    const GridState& start) {
  std::vector<GridState> states;
  std::unordered_set<GridState, GridStateHash> seen;
  std::deque<GridState> queue;
  seen.insert(start);
  queue.push_back(start);
  while (!queue.empty()) {
    GridState s = queue.front();
    queue.pop_front();
    states.push_back(s);
    for (int a = 0; a < kGridActionCount; ++a) {
      GridState next = step_impl(world, window, s, static_cast<GridAction>(a));
      if (seen.insert(next).second) queue.push_back(next);
    }
  }
  return states;
}

}  // namespace

Cell action_offset(GridAction action) {
  switch (action) {
    case GridAction::North: return {0, 1};
    case GridAction::East: return {1, 0};
    case GridAction::South: return {0, -1};
    case GridAction::West: return {-1, 0};
    case GridAction::Stay: return {0, 0};
  }
  std::abort();
}

const char* to_string(GridAction action) {
  switch (action) {
    case GridAction::North: return "north";
    case GridAction::East: return "east";
    case GridAction::South: return "south";
    case GridAction::West: return "west";
    case GridAction::Stay: return "stay";
  }
  std::abort();
}

bool GridWorld::wall_at(Cell c) const {
  return std::binary_search(walls.begin(), walls.end(), c);
}

void GridWorld::add_wall(Cell c) {
  auto it = std::lower_bound(walls.begin(), walls.end(), c);
  if (it == walls.end() || *it != c) walls.insert(it, c);
}

void GridWorld::validate() const {
  if (bounded && (width < 1 || height < 1)) {
    throw std::invalid_argument("GridWorld: bounded world needs positive dimensions");
  }
  if (!(epsilon_noise >= 0.0 && epsilon_noise < 1.0)) {
    throw std::invalid_argument("GridWorld: epsilon_noise must lie in [0, 1)");
  }
  for (Cell w : walls) {
    if (!inside(w)) throw std::invalid_argument("GridWorld: wall outside bounds");
  }
  if (box) {
    if (!inside(*box)) throw std::invalid_argument("GridWorld: box outside bounds");
    if (wall_at(*box)) throw std::invalid_argument("GridWorld: box placed on a wall");
  }
}

GridState GridWorld::initial_state(Cell agent) const {
  if (blocked(agent)) throw std::invalid_argument("GridWorld: agent start is blocked");
  if (box && *box == agent) throw std::invalid_argument("GridWorld: agent start is on the box");
  return {agent, box};
}

GridState grid_step(const GridWorld& world, const GridState& state, GridAction action) {
  return step_impl(world, Window{}, state, action);
}

GridModel grid_transition_model(const GridWorld& world, const GridState& start,
                                std::optional<int> window_n) {
  world.validate();

  if (!world.bounded) {
    if (!window_n) {
      throw std::invalid_argument(
          "grid_transition_model: unbounded world needs a horizon window");
    }
    const int radius = *window_n + 2;
    Window window;
    window.active = true;
    window.rect = {start.agent.x - radius, start.agent.y - radius, 2 * radius + 1,
                   2 * radius + 1};
    std::vector<GridState> states = closure_from(world, window, start);
    return build_model(world, window, states, 0);
  }

  // Bounded: every valid configuration, agent cells in row-major order and,
  // per agent cell, every admissible box cell in row-major order.
  std::vector<GridState> states;
  int start_index = -1;
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      const Cell agent{x, y};
      if (world.blocked(agent)) continue;
      if (!world.box) {
        if (GridState{agent, std::nullopt} == start) start_index = static_cast<int>(states.size());
        states.push_back({agent, std::nullopt});
        continue;
      }
      for (int by = 0; by < world.height; ++by) {
        for (int bx = 0; bx < world.width; ++bx) {
          const Cell box{bx, by};
          if (world.blocked(box) || box == agent) continue;
          if (GridState{agent, box} == start) start_index = static_cast<int>(states.size());
          states.push_back({agent, box});
        }
      }
    }
  }
  if (start_index < 0) {
    throw std::invalid_argument("grid_transition_model: start configuration is not valid");
  }
  return build_model(world, Window{}, states, start_index);
}

double grid_reachable_empowerment(const GridWorld& world, const GridState& start, int n) {
  world.validate();
  if (n < 1) throw std::invalid_argument("grid_reachable_empowerment: horizon must be >= 1");
  if (world.epsilon_noise != 0.0) {
    throw std::invalid_argument(
        "grid_reachable_empowerment: world is stochastic, use the capacity solver path");
  }

  std::unordered_set<GridState, GridStateHash> current{start};
  for (int step = 0; step < n; ++step) {
    std::unordered_set<GridState, GridStateHash> next;
    next.reserve(current.size() * 2);
    for (const GridState& s : current) {
      for (int a = 0; a < kGridActionCount; ++a) {
        next.insert(step_impl(world, Window{}, s, static_cast<GridAction>(a)));
      }
    }
    current.swap(next);
  }

  std::unordered_set<std::uint64_t> sensors;
  for (const GridState& s : current) sensors.insert(sensor_key(world, s));
  return std::log2(static_cast<double>(sensors.size()));
}

namespace {

double cell_empowerment(const GridWorld& world, Cell agent, const GridMapParams& params,
                        std::optional<Cell> box_override) {
  GridWorld w = world;
  if (box_override) w.box = box_override;
  const GridState start = w.initial_state(agent);

  if (params.method == EmpowermentMethod::deterministic) {
    return grid_reachable_empowerment(w, start, params.horizon);
  }

  std::optional<int> window_n;
  if (!w.bounded) {
    window_n = params.method == EmpowermentMethod::impoverished
                   ? params.impoverished.segment_n * params.impoverished.segments
                   : params.horizon;
  }
  GridModel gm = grid_transition_model(w, start, window_n);
  if (params.method == EmpowermentMethod::ba) {
    return state_empowerment(gm.model, gm.start_index, params.horizon, params.solver);
  }
  return impoverished_empowerment(gm.model, gm.start_index, params.impoverished, params.solver)
      .capacity_bits;
}

double map_cell_value(const GridWorld& world, Cell agent, const GridMapParams& params) {
  if (world.blocked(agent)) return kNaN;
  if (!params.marginalize_box) {
    if (world.box && *world.box == agent) return kNaN;
    return cell_empowerment(world, agent, params, std::nullopt);
  }
  if (!world.box) return cell_empowerment(world, agent, params, std::nullopt);
  if (!world.bounded) {
    throw std::invalid_argument("grid map: cannot marginalize the box on an unbounded world");
  }
  double sum = 0.0;
  int count = 0;
  for (int by = 0; by < world.height; ++by) {
    for (int bx = 0; bx < world.width; ++bx) {
      const Cell box{bx, by};
      if (world.blocked(box) || box == agent) continue;
      sum += cell_empowerment(world, agent, params, box);
      ++count;
    }
  }
  if (count == 0) return kNaN;
  return sum / count;
}

Rect resolve_extent(const GridWorld& world, const GridMapParams& params) {
  if (params.extent) return *params.extent;
  if (!world.bounded) {
    throw std::invalid_argument("grid map: unbounded world needs an explicit extent");
  }
  return {0, 0, world.width, world.height};
}

template <typename Body>
GridEmpowermentMap run_map(const GridWorld& world, const GridMapParams& params, Body&& body) {
  world.validate();
  GridEmpowermentMap map;
  map.extent = resolve_extent(world, params);
  map.horizon = params.method == EmpowermentMethod::impoverished
                    ? params.impoverished.segment_n * params.impoverished.segments
                    : params.horizon;
  map.method = params.method;
  map.values.assign(map.extent.size(), kNaN);
  body(map);
  return map;
}

}  // namespace

GridEmpowermentMap grid_empowerment_map(const GridWorld& world, const GridMapParams& params) {
  return run_map(world, params, [&](GridEmpowermentMap& map) {
    const int total = static_cast<int>(map.extent.size());
#ifdef _OPENMP
    const int threads = params.workers > 0 ? params.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int i = 0; i < total; ++i) {
      const Cell c{map.extent.x0 + i % map.extent.width, map.extent.y0 + i / map.extent.width};
      map.values[i] = map_cell_value(world, c, params);
    }
  });
}

GridEmpowermentMap grid_empowerment_map_serial(const GridWorld& world,
                                               const GridMapParams& params) {
  return run_map(world, params, [&](GridEmpowermentMap& map) {
    const int total = static_cast<int>(map.extent.size());
    for (int i = 0; i < total; ++i) {
      const Cell c{map.extent.x0 + i % map.extent.width, map.extent.y0 + i / map.extent.width};
      map.values[i] = map_cell_value(world, c, params);
    }
  });
}

std::vector<double> state_mean_distance(const TransitionModel& model) {
  model.validate();
  const int n = model.n_states;

  // Support-graph adjacency.
  std::vector<std::vector<int>> successors(n);
  for (int s = 0; s < n; ++s) {
    std::vector<char> seen(n, 0);
    for (int a = 0; a < model.n_actions; ++a) {
      auto row = model.row(s, a);
      for (int t = 0; t < n; ++t) {
        if (row[t] > 0.0 && !seen[t]) {
          seen[t] = 1;
          successors[s].push_back(t);
        }
      }
    }
  }

  std::vector<double> means(n, kNaN);
  std::vector<int> dist(n);
  std::vector<int> queue(n);
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    int head = 0, tail = 0;
    dist[s] = 0;
    queue[tail++] = s;
    long long total = 0;
    int visited = 0;
    while (head < tail) {
      const int u = queue[head++];
      total += dist[u];
      ++visited;
      for (int v : successors[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue[tail++] = v;
        }
      }
    }
    if (visited == n) means[s] = static_cast<double>(total) / n;
  }
  return means;
}

GridDistanceMap average_distance_map(const GridWorld& world) {
  world.validate();
  if (!world.bounded) {
    throw std::invalid_argument("average_distance_map: world must be bounded");
  }
  if (world.box) {
    throw std::invalid_argument("average_distance_map: per-cell map needs a box-free world");
  }

  // Any free cell can be the start; the model covers all of them.
  Cell any_free{-1, -1};
  for (int y = 0; y < world.height && any_free.x < 0; ++y) {
    for (int x = 0; x < world.width; ++x) {
      if (!world.blocked({x, y})) {
        any_free = {x, y};
        break;
      }
    }
  }
  if (any_free.x < 0) throw std::invalid_argument("average_distance_map: no free cell");

  GridModel gm = grid_transition_model(world, world.initial_state(any_free));
  std::vector<double> means = state_mean_distance(gm.model);

  GridDistanceMap map;
  map.extent = {0, 0, world.width, world.height};
  map.values.assign(map.extent.size(), kNaN);
  for (std::size_t i = 0; i < gm.states.size(); ++i) {
    map.values[map.index(gm.states[i].agent)] = means[i];
  }
  return map;
}

CorrelationReport correlation_report(const GridWorld& world, int n,
                                     const SolverOptions& solver, int workers) {
  world.validate();
  if (!world.bounded) {
    throw std::invalid_argument("correlation_report: world must be bounded");
  }

  CorrelationReport report;
  GridMapParams params;
  params.horizon = n;
  params.method =
      world.epsilon_noise == 0.0 ? EmpowermentMethod::deterministic : EmpowermentMethod::ba;
  params.solver = solver;
  params.workers = workers;
  report.empowerment = grid_empowerment_map(world, params);
  report.distance = average_distance_map(world);

  double sum_e = 0.0, sum_d = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < report.empowerment.values.size(); ++i) {
    const double e = report.empowerment.values[i];
    const double d = report.distance.values[i];
    if (std::isnan(e) || std::isnan(d)) continue;
    sum_e += e;
    sum_d += d;
    ++count;
  }
  if (count < 2) return report;
  const double mean_e = sum_e / count;
  const double mean_d = sum_d / count;
  double var_e = 0.0, var_d = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < report.empowerment.values.size(); ++i) {
    const double e = report.empowerment.values[i];
    const double d = report.distance.values[i];
    if (std::isnan(e) || std::isnan(d)) continue;
    var_e += (e - mean_e) * (e - mean_e);
    var_d += (d - mean_d) * (d - mean_d);
    cov += (e - mean_e) * (d - mean_d);
  }
  if (var_e < 1e-15 || var_d < 1e-15) return report;  // degenerate, r undefined
  report.defined = true;
  report.pearson_r = cov / std::sqrt(var_e * var_d);
  return report;
}

GridWorld generate_maze(int width, int height, std::uint64_t seed) {
  if (width < 3 || height < 3) {
    throw std::invalid_argument("generate_maze: need at least a 3x3 grid");
  }

  GridWorld world;
  world.bounded = true;
  world.width = width;
  world.height = height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) world.add_wall({x, y});
  }

  const auto remove_wall = [&](Cell c) {
    auto it = std::lower_bound(world.walls.begin(), world.walls.end(), c);
    if (it != world.walls.end() && *it == c) world.walls.erase(it);
  };

  // Rooms live on the even lattice; carving opens the cell between two rooms.
  const int rooms_x = (width + 1) / 2;
  const int rooms_y = (height + 1) / 2;
  std::vector<char> visited(static_cast<std::size_t>(rooms_x) * rooms_y, 0);
  const auto room_index = [&](int rx, int ry) {
    return static_cast<std::size_t>(ry) * rooms_x + rx;
  };

  std::mt19937_64 rng(seed);
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(0, 0);
  visited[room_index(0, 0)] = 1;
  remove_wall({0, 0});

  constexpr int dx[4] = {0, 1, 0, -1};
  constexpr int dy[4] = {1, 0, -1, 0};
  while (!stack.empty()) {
    auto [rx, ry] = stack.back();
    int order[4] = {0, 1, 2, 3};
    std::shuffle(std::begin(order), std::end(order), rng);
    bool advanced = false;
    for (int k = 0; k < 4 && !advanced; ++k) {
      const int nx = rx + dx[order[k]];
      const int ny = ry + dy[order[k]];
      if (nx < 0 || nx >= rooms_x || ny < 0 || ny >= rooms_y) continue;
      if (visited[room_index(nx, ny)]) continue;
      visited[room_index(nx, ny)] = 1;
      remove_wall({2 * nx, 2 * ny});
      remove_wall({rx + nx, ry + ny});  // the cell between the two rooms
      stack.emplace_back(nx, ny);
      advanced = true;
    }
    if (!advanced) stack.pop_back();
  }

  world.validate();
  return world;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw std::invalid_argument(context + ": unknown key '" + it.key() + "'");
  }
}

Cell cell_from_json(const json& v, const std::string& context) {
  if (!v.is_array() || v.size() != 2) {
    throw std::invalid_argument(context + ": expected [x, y]");
  }
  return {v.at(0).get<int>(), v.at(1).get<int>()};
}

}  // namespace

GridWorld GridWorld::parse_json(std::string_view text) {
  json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("world: expected a JSON object");
  reject_unknown_keys(doc,
                      {"bounded", "width", "height", "walls", "box", "box_pushable",
                       "box_perceivable", "epsilon_noise"},
                      "world");
  GridWorld w;
  w.bounded = doc.value("bounded", true);
  if (w.bounded) {
    if (!doc.contains("width") || !doc.contains("height")) {
      throw std::invalid_argument("world: bounded world needs 'width' and 'height'");
    }
    w.width = doc.at("width").get<int>();
    w.height = doc.at("height").get<int>();
  }
  if (doc.contains("walls")) {
    for (const json& v : doc.at("walls")) w.add_wall(cell_from_json(v, "world walls"));
  }
  if (doc.contains("box") && !doc.at("box").is_null()) {
    w.box = cell_from_json(doc.at("box"), "world box");
  }
  w.box_pushable = doc.value("box_pushable", false);
  w.box_perceivable = doc.value("box_perceivable", false);
  w.epsilon_noise = doc.value("epsilon_noise", 0.0);
  w.validate();
  return w;
}

GridWorld GridWorld::load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open world file: " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text);
}

std::string GridWorld::to_json_string(int indent) const {
  nlohmann::ordered_json doc;
  doc["bounded"] = bounded;
  if (bounded) {
    doc["width"] = width;
    doc["height"] = height;
  }
  nlohmann::ordered_json wall_list = nlohmann::ordered_json::array();
  for (Cell w : walls) wall_list.push_back({w.x, w.y});
  doc["walls"] = std::move(wall_list);
  if (box) doc["box"] = {box->x, box->y};
  doc["box_pushable"] = box_pushable;
  doc["box_perceivable"] = box_perceivable;
  doc["epsilon_noise"] = epsilon_noise;
  return doc.dump(indent);
}

void GridWorld::save_json(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write world file: " + file.string());
  out << to_json_string() << '\n';
}

}  // namespace empo
