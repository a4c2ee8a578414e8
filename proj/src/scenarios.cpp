#include "empo/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "empo/continuous.hpp"
#include "empo/gridworld.hpp"
#include "empo/io_util.hpp"
#include "empo/pendulum.hpp"
#include "json.hpp"

namespace empo::cli {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T field(const ordered_json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required_field(const ordered_json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) throw ConfigError(context + ": missing required field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(context + ": field '" + key + "' has the wrong type");
  }
}

// Everything the scenarios need, resolved once from envelope + overrides.
struct ResolvedConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  int workers = 0;
  fs::path out_dir;
  ordered_json params;     // raw scenario block
  ordered_json resolved;   // full echo with defaults, for verify and the manifest
};

SolverOptions solver_from(const ordered_json& params, ordered_json& echo) {
  SolverOptions solver;
  solver.ba.epsilon_bits = field<double>(params, "epsilon_bits", 1e-8);
  solver.ba.max_iter = field<int>(params, "max_iter", 500);
  solver.enumeration_budget =
      field<std::uint64_t>(params, "enumeration_budget", 1'000'000);
  echo["epsilon_bits"] = solver.ba.epsilon_bits;
  echo["max_iter"] = solver.ba.max_iter;
  echo["enumeration_budget"] = solver.enumeration_budget;
  if (!(solver.ba.epsilon_bits > 0.0)) throw ConfigError("epsilon_bits must be > 0");
  if (solver.ba.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  return solver;
}

ImpoverishedParams impoverished_from(const ordered_json& params, ordered_json& echo) {
  ImpoverishedParams imp;
  if (params.contains("impoverished")) {
    const ordered_json& block = params.at("impoverished");
    check_keys(block, {"segment_n", "budget", "segments"}, "impoverished");
    imp.segment_n = field<int>(block, "segment_n", 1);
    imp.budget = field<int>(block, "budget", 2);
    imp.segments = field<int>(block, "segments", 1);
  }
  echo["impoverished"] = {
      {"segment_n", imp.segment_n}, {"budget", imp.budget}, {"segments", imp.segments}};
  return imp;
}

PendulumParams pendulum_from(const ordered_json& params, ordered_json& echo) {
  PendulumParams p;
  if (params.contains("pendulum")) {
    const ordered_json& block = params.at("pendulum");
    check_keys(block,
               {"gravity", "length", "delta_t", "horizon", "power", "noise_std", "a_grid",
                "substep"},
               "pendulum");
    p.gravity = field<double>(block, "gravity", p.gravity);
    p.length = field<double>(block, "length", p.length);
    p.delta_t = field<double>(block, "delta_t", p.delta_t);
    p.horizon = field<int>(block, "horizon", p.horizon);
    p.power = field<double>(block, "power", p.power);
    p.noise_std = field<double>(block, "noise_std", p.noise_std);
    p.a_grid = field<int>(block, "a_grid", p.a_grid);
    p.substep = field<double>(block, "substep", p.substep);
  }
  p.validate();
  echo["pendulum"] = {{"gravity", p.gravity},     {"length", p.length},
                      {"delta_t", p.delta_t},     {"horizon", p.horizon},
                      {"power", p.power},         {"noise_std", p.noise_std},
                      {"a_grid", p.a_grid},       {"substep", p.resolved_substep()}};
  return p;
}

PendulumGrid pendulum_grid_from(const ordered_json& params, ordered_json& echo) {
  PendulumGrid grid;
  grid.phi_cells = field<int>(params, "phi_cells", 64);
  grid.phidot_cells = field<int>(params, "phidot_cells", 64);
  grid.phidot_range = field<double>(params, "phidot_range", 8.0);
  if (grid.phi_cells < 1 || grid.phidot_cells < 1 || !(grid.phidot_range > 0.0)) {
    throw ConfigError("pendulum grid parameters must be positive");
  }
  echo["phi_cells"] = grid.phi_cells;
  echo["phidot_cells"] = grid.phidot_cells;
  echo["phidot_range"] = grid.phidot_range;
  return grid;
}

// Grid scenarios share the world selection: an explicit world file or a
// seeded generated maze.
struct WorldSpec {
  GridWorld world;
  std::string source;
};

WorldSpec world_from(const ordered_json& params, std::uint64_t run_seed, ordered_json& echo) {
  WorldSpec spec;
  if (params.contains("world")) {
    const fs::path file = params.at("world").get<std::string>();
    if (!fs::exists(file)) throw ConfigError("world file does not exist: " + file.string());
    spec.world = GridWorld::load_json(file);
    spec.source = file.string();
    echo["world"] = file.string();
  } else {
    const int width = field<int>(params, "width", 10);
    const int height = field<int>(params, "height", 10);
    const std::uint64_t maze_seed = field<std::uint64_t>(params, "maze_seed", run_seed);
    spec.world = generate_maze(width, height, maze_seed);
    spec.source = "maze";
    echo["width"] = width;
    echo["height"] = height;
    echo["maze_seed"] = maze_seed;
  }
  if (params.contains("epsilon_noise")) {
    spec.world.epsilon_noise = params.at("epsilon_noise").get<double>();
  }
  echo["epsilon_noise"] = spec.world.epsilon_noise;
  spec.world.validate();
  return spec;
}

struct ArtifactList {
  fs::path dir;
  std::vector<fs::path> files;

  fs::path file(const std::string& name) {
    files.push_back(dir / name);
    return files.back();
  }
};

ordered_json grid_map_to_json(const GridEmpowermentMap& map) {
  ordered_json doc;
  doc["type"] = "grid_empowerment_map";
  doc["method"] = to_string(map.method);
  doc["horizon"] = map.horizon;
  doc["extent"] = {{"x0", map.extent.x0},
                   {"y0", map.extent.y0},
                   {"width", map.extent.width},
                   {"height", map.extent.height}};
  ordered_json values = ordered_json::array();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  for (double v : map.values) {
    if (std::isnan(v)) {
      values.push_back(nullptr);
    } else {
      values.push_back(v);
      if (std::isnan(lo) || v < lo) lo = v;
      if (std::isnan(hi) || v > hi) hi = v;
    }
  }
  doc["min_bits"] = std::isnan(lo) ? ordered_json(nullptr) : ordered_json(lo);
  doc["max_bits"] = std::isnan(hi) ? ordered_json(nullptr) : ordered_json(hi);
  doc["values"] = std::move(values);
  return doc;
}

void write_grid_map_artifacts(ArtifactList& artifacts, const std::string& stem,
                              const GridEmpowermentMap& map) {
  std::vector<std::vector<double>> rows;
  rows.reserve(map.values.size());
  for (int y = 0; y < map.extent.height; ++y) {
    for (int x = 0; x < map.extent.width; ++x) {
      const Cell c{map.extent.x0 + x, map.extent.y0 + y};
      rows.push_back({static_cast<double>(c.x), static_cast<double>(c.y), map.at(c)});
    }
  }
  write_csv(artifacts.file(stem + ".csv"), "x,y,empowerment_bits", rows);
  write_pgm(artifacts.file(stem + ".pgm"), map.extent.width, map.extent.height, map.values);
  write_text_file(artifacts.file(stem + ".json"), grid_map_to_json(map).dump(2) + "\n");
}

void write_pendulum_map_artifacts(ArtifactList& artifacts, const std::string& stem,
                                  const PendulumMap& map) {
  std::vector<std::vector<double>> rows;
  rows.reserve(map.values.size());
  for (int j = 0; j < map.grid.phidot_cells; ++j) {
    for (int i = 0; i < map.grid.phi_cells; ++i) {
      rows.push_back({map.phi_center(i), map.phidot_center(j), map.at(i, j)});
    }
  }
  write_csv(artifacts.file(stem + ".csv"), "phi,phi_dot,empowerment_bits", rows);
  write_pgm(artifacts.file(stem + ".pgm"), map.grid.phi_cells, map.grid.phidot_cells,
            map.values);
  ordered_json doc;
  doc["type"] = "pendulum_empowerment_map";
  doc["delta_t"] = map.params.delta_t;
  doc["power"] = map.params.power;
  doc["horizon"] = map.params.horizon;
  doc["noise_std"] = map.params.noise_std;
  doc["phi_cells"] = map.grid.phi_cells;
  doc["phidot_cells"] = map.grid.phidot_cells;
  doc["phidot_range"] = map.grid.phidot_range;
  doc["min_bits"] = *std::min_element(map.values.begin(), map.values.end());
  doc["max_bits"] = *std::max_element(map.values.begin(), map.values.end());
  doc["values"] = map.values;
  write_text_file(artifacts.file(stem + ".json"), doc.dump(2) + "\n");
}

GridMapParams grid_params_from(const ordered_json& params, const ResolvedConfig& config,
                               ordered_json& echo) {
  GridMapParams map_params;
  map_params.horizon = field<int>(params, "n", 5);
  map_params.method =
      empowerment_method_from_string(field<std::string>(params, "method", "deterministic"));
  map_params.solver = solver_from(params, echo);
  map_params.impoverished = impoverished_from(params, echo);
  map_params.workers = config.workers;
  echo["n"] = map_params.horizon;
  echo["method"] = to_string(map_params.method);
  if (map_params.horizon < 1) throw ConfigError("n must be >= 1");
  return map_params;
}

// ---------------------------------------------------------------------------
// Scenario implementations. resolve_* fills the echo and validates; the
// returned callable performs the computation and writes artifacts.

using Runner = std::function<void(ArtifactList&, std::ostream&)>;

Runner resolve_channel(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params, {"csv", "epsilon_bits", "max_iter"}, "channel params");
  const std::string csv = required_field<std::string>(config.params, "csv", "channel params");
  if (!fs::exists(csv)) throw ConfigError("channel csv does not exist: " + csv);
  echo["csv"] = csv;
  BaParams ba;
  ba.epsilon_bits = field<double>(config.params, "epsilon_bits", 1e-8);
  ba.max_iter = field<int>(config.params, "max_iter", 500);
  echo["epsilon_bits"] = ba.epsilon_bits;
  echo["max_iter"] = ba.max_iter;

  return [csv, ba](ArtifactList& artifacts, std::ostream&) {
    DiscreteChannel channel = DiscreteChannel::load_csv(csv);
    CapacityResult result = blahut_arimoto(channel, ba);
    ordered_json doc;
    doc["type"] = "channel_capacity";
    doc["n_inputs"] = channel.n_inputs();
    doc["n_outputs"] = channel.n_outputs();
    doc["capacity_bits"] = result.capacity_bits;
    doc["optimal_input"] = result.optimal_input;
    doc["iterations"] = result.iterations;
    doc["converged"] = result.converged;
    write_text_file(artifacts.file("channel_capacity.json"), doc.dump(2) + "\n");
  };
}

Runner resolve_mimo(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params, {"channel", "gaussian_model", "n_mc", "epsilon_bits", "max_iter"},
             "mimo params");
  const bool has_channel = config.params.contains("channel");
  const bool has_model = config.params.contains("gaussian_model");
  if (has_channel == has_model) {
    throw ConfigError("mimo params: give exactly one of 'channel' or 'gaussian_model'");
  }

  if (has_channel) {
    std::string text;
    if (config.params.at("channel").is_string()) {
      const fs::path file = config.params.at("channel").get<std::string>();
      if (!fs::exists(file)) throw ConfigError("channel file does not exist: " + file.string());
      echo["channel"] = file.string();
      text = read_text_file(file);
    } else {
      echo["channel"] = config.params.at("channel");
      text = config.params.at("channel").dump();
    }
    LinearGaussianChannel channel = LinearGaussianChannel::parse_json(text);
    return [channel](ArtifactList& artifacts, std::ostream&) {
      QlgResult result = qlg_empowerment(channel);
      ordered_json doc;
      doc["type"] = "qlg_capacity";
      doc["capacity_bits"] = result.capacity_bits;
      doc["singular_values"] = result.singular_values;
      doc["allocations"] = result.water.allocations;
      doc["water_level"] = result.water.water_level;
      doc["degenerate"] = result.water.degenerate;
      write_text_file(artifacts.file("mimo.json"), doc.dump(2) + "\n");
    };
  }

  std::string text;
  if (config.params.at("gaussian_model").is_string()) {
    const fs::path file = config.params.at("gaussian_model").get<std::string>();
    if (!fs::exists(file)) {
      throw ConfigError("gaussian model file does not exist: " + file.string());
    }
    echo["gaussian_model"] = file.string();
    text = read_text_file(file);
  } else {
    echo["gaussian_model"] = config.params.at("gaussian_model");
    text = config.params.at("gaussian_model").dump();
  }
  GaussianActionModel model = GaussianActionModel::parse_json(text);
  McParams mc;
  mc.n_mc = field<int>(config.params, "n_mc", 1000);
  mc.epsilon_bits = field<double>(config.params, "epsilon_bits", 1e-8);
  mc.max_iter = field<int>(config.params, "max_iter", 500);
  mc.seed = config.seed;
  echo["n_mc"] = mc.n_mc;
  echo["epsilon_bits"] = mc.epsilon_bits;
  echo["max_iter"] = mc.max_iter;
  if (mc.n_mc < 1) throw ConfigError("n_mc must be >= 1");

  return [model, mc](ArtifactList& artifacts, std::ostream&) {
    McResult result = mc_empowerment(model, mc);
    ordered_json doc;
    doc["type"] = "mc_capacity";
    doc["capacity_bits"] = result.capacity_bits;
    doc["optimal_input"] = result.optimal_input;
    doc["iterations"] = result.iterations;
    doc["converged"] = result.converged;
    write_text_file(artifacts.file("mimo.json"), doc.dump(2) + "\n");
  };
}

void advise_on_budget(const GridMapParams& params, std::ostream& out) {
  if (params.method == EmpowermentMethod::ba) {
    double sequences = std::pow(5.0, params.horizon);
    if (sequences > static_cast<double>(params.solver.enumeration_budget)) {
      out << "advisory: 5^" << params.horizon << " = " << sequences
          << " action sequences exceed the enumeration budget "
          << params.solver.enumeration_budget
          << "; consider method \"impoverished\" for this horizon\n";
    }
  }
}

Runner resolve_maze(const ResolvedConfig& config, ordered_json& echo, std::ostream& out) {
  check_keys(config.params,
             {"world", "width", "height", "maze_seed", "epsilon_noise", "n", "method",
              "epsilon_bits", "max_iter", "enumeration_budget", "impoverished",
              "marginalize_box"},
             "maze params");
  WorldSpec spec = world_from(config.params, config.seed, echo);
  GridMapParams params = grid_params_from(config.params, config, echo);
  params.marginalize_box = field<bool>(config.params, "marginalize_box", false);
  echo["marginalize_box"] = params.marginalize_box;
  advise_on_budget(params, out);

  return [world = spec.world, params](ArtifactList& artifacts, std::ostream&) {
    write_text_file(artifacts.file("world.json"), world.to_json_string() + "\n");
    GridEmpowermentMap map = grid_empowerment_map(world, params);
    write_grid_map_artifacts(artifacts, "map", map);
  };
}

Runner resolve_box(const ResolvedConfig& config, ordered_json& echo, std::ostream& out) {
  check_keys(config.params,
             {"extent", "n", "pushable", "perceivable", "method", "epsilon_bits", "max_iter",
              "enumeration_budget", "impoverished"},
             "box params");
  const int extent = field<int>(config.params, "extent", 15);
  if (extent < 3 || extent % 2 == 0) throw ConfigError("extent must be odd and >= 3");
  echo["extent"] = extent;

  GridWorld world;
  world.bounded = false;
  world.box = Cell{0, 0};
  world.box_pushable = field<bool>(config.params, "pushable", true);
  world.box_perceivable = field<bool>(config.params, "perceivable", false);
  echo["pushable"] = world.box_pushable;
  echo["perceivable"] = world.box_perceivable;

  GridMapParams params = grid_params_from(config.params, config, echo);
  const int half = extent / 2;
  params.extent = Rect{-half, -half, extent, extent};
  advise_on_budget(params, out);

  return [world, params](ArtifactList& artifacts, std::ostream&) {
    write_text_file(artifacts.file("world.json"), world.to_json_string() + "\n");
    GridEmpowermentMap map = grid_empowerment_map(world, params);
    write_grid_map_artifacts(artifacts, "map", map);
  };
}

Runner resolve_horizon_sweep(const ResolvedConfig& config, ordered_json& echo,
                             std::ostream& out) {
  check_keys(config.params,
             {"world", "width", "height", "maze_seed", "epsilon_noise", "n_list", "method",
              "epsilon_bits", "max_iter", "enumeration_budget", "impoverished"},
             "horizon-sweep params");
  WorldSpec spec = world_from(config.params, config.seed, echo);
  std::vector<int> n_list = field<std::vector<int>>(config.params, "n_list", {1, 2, 5, 10});
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  echo["n_list"] = n_list;

  GridMapParams base;
  base.method =
      empowerment_method_from_string(field<std::string>(config.params, "method", "deterministic"));
  base.solver = solver_from(config.params, echo);
  base.impoverished = impoverished_from(config.params, echo);
  base.workers = config.workers;
  echo["method"] = to_string(base.method);
  for (int n : n_list) {
    if (n < 1) throw ConfigError("n_list entries must be >= 1");
    GridMapParams probe = base;
    probe.horizon = n;
    advise_on_budget(probe, out);
  }

  return [world = spec.world, base, n_list](ArtifactList& artifacts, std::ostream&) {
    write_text_file(artifacts.file("world.json"), world.to_json_string() + "\n");
    ordered_json index;
    index["type"] = "horizon_sweep";
    index["maps"] = ordered_json::array();
    for (int n : n_list) {
      GridMapParams params = base;
      params.horizon = n;
      GridEmpowermentMap map = grid_empowerment_map(world, params);
      const std::string stem = "map_n" + std::to_string(n);
      write_grid_map_artifacts(artifacts, stem, map);
      index["maps"].push_back({{"n", n}, {"file", stem + ".json"}});
    }
    write_text_file(artifacts.file("index.json"), index.dump(2) + "\n");
  };
}

Runner resolve_context(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params,
             {"model", "n", "prior", "partition", "search", "tol_bits", "epsilon_bits",
              "max_iter", "enumeration_budget"},
             "context params");
  const std::string model_file =
      required_field<std::string>(config.params, "model", "context params");
  if (!fs::exists(model_file)) throw ConfigError("model file does not exist: " + model_file);
  echo["model"] = model_file;
  const int n = field<int>(config.params, "n", 1);
  if (n < 1) throw ConfigError("n must be >= 1");
  echo["n"] = n;
  ordered_json solver_echo;
  SolverOptions solver = solver_from(config.params, echo);
  std::optional<std::vector<double>> prior;
  if (config.params.contains("prior")) {
    prior = config.params.at("prior").get<std::vector<double>>();
    echo["prior"] = *prior;
  } else {
    echo["prior"] = "uniform";
  }
  std::optional<std::vector<int>> partition;
  if (config.params.contains("partition")) {
    partition = config.params.at("partition").get<std::vector<int>>();
    echo["partition"] = *partition;
  }
  const bool search = field<bool>(config.params, "search", false);
  const double tol_bits = field<double>(config.params, "tol_bits", 1e-9);
  echo["search"] = search;
  echo["tol_bits"] = tol_bits;

  return [model_file, n, solver, prior, partition, search,
          tol_bits](ArtifactList& artifacts, std::ostream&) {
    TransitionModel model = TransitionModel::load_json(model_file);
    std::vector<double> p =
        prior ? *prior : std::vector<double>(model.n_states, 1.0 / model.n_states);

    ordered_json doc;
    doc["type"] = "context_report";
    ordered_json per_state = ordered_json::array();
    for (int s = 0; s < model.n_states; ++s) {
      per_state.push_back(state_empowerment(model, s, n, solver));
    }
    doc["state_empowerment_bits"] = per_state;
    doc["average_bits"] = average_state_empowerment(model, p, n, solver);
    doc["context_free_bits"] = context_free_empowerment(model, p, n, solver);
    if (partition) {
      ContextPartition part;
      part.assignment = *partition;
      doc["partition_bits"] = contextual_empowerment(model, part, p, n, solver);
    }
    if (search) {
      ContextPartition best = optimal_context_search(model, p, n, solver, tol_bits);
      ordered_json found;
      found["assignment"] = best.assignment;
      found["entropy_bits"] = entropy(context_prior(best, p));
      found["value_bits"] = contextual_empowerment(model, best, p, n, solver);
      doc["optimal_context"] = std::move(found);
    }
    write_text_file(artifacts.file("context.json"), doc.dump(2) + "\n");
  };
}

Runner resolve_impoverished(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params,
             {"model", "state", "segment_n", "budget", "segments", "epsilon_bits", "max_iter",
              "enumeration_budget"},
             "impoverished params");
  const std::string model_file =
      required_field<std::string>(config.params, "model", "impoverished params");
  if (!fs::exists(model_file)) throw ConfigError("model file does not exist: " + model_file);
  echo["model"] = model_file;
  const int state = field<int>(config.params, "state", 0);
  ImpoverishedParams imp;
  imp.segment_n = field<int>(config.params, "segment_n", 1);
  imp.budget = field<int>(config.params, "budget", 2);
  imp.segments = field<int>(config.params, "segments", 1);
  if (imp.segment_n < 1) throw ConfigError("segment_n must be >= 1");
  if (imp.budget < 2) throw ConfigError("budget must be >= 2");
  if (imp.segments < 1) throw ConfigError("segments must be >= 1");
  echo["state"] = state;
  echo["segment_n"] = imp.segment_n;
  echo["budget"] = imp.budget;
  echo["segments"] = imp.segments;
  SolverOptions solver = solver_from(config.params, echo);

  return [model_file, state, imp, solver](ArtifactList& artifacts, std::ostream&) {
    TransitionModel model = TransitionModel::load_json(model_file);
    ImpoverishedResult result = impoverished_empowerment(model, state, imp, solver);
    ordered_json doc;
    doc["type"] = "impoverished_report";
    doc["capacity_bits"] = result.capacity_bits;
    doc["skeleton"] = result.skeleton;
    doc["endpoints"] = result.endpoints;
    doc["budget_clamped"] = result.budget_clamped;
    write_text_file(artifacts.file("impoverished.json"), doc.dump(2) + "\n");
  };
}

Runner resolve_pendulum_map(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params, {"pendulum", "phi_cells", "phidot_cells", "phidot_range"},
             "pendulum-map params");
  PendulumParams params = pendulum_from(config.params, echo);
  PendulumGrid grid = pendulum_grid_from(config.params, echo);
  const int workers = config.workers;

  return [params, grid, workers](ArtifactList& artifacts, std::ostream&) {
    PendulumMap map = pendulum_empowerment_map(params, grid, workers);
    write_pendulum_map_artifacts(artifacts, "landscape", map);
  };
}

Runner resolve_pendulum_control(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params, {"pendulum", "start", "steps", "mc_rollouts"},
             "pendulum-control params");
  PendulumParams params = pendulum_from(config.params, echo);
  PendulumState start;
  if (config.params.contains("start")) {
    const ordered_json& block = config.params.at("start");
    check_keys(block, {"phi", "phi_dot"}, "start");
    start.phi = field<double>(block, "phi", 0.0);
    start.phi_dot = field<double>(block, "phi_dot", 0.0);
  }
  echo["start"] = {{"phi", start.phi}, {"phi_dot", start.phi_dot}};
  const int steps = field<int>(config.params, "steps", 300);
  const int mc_rollouts = field<int>(config.params, "mc_rollouts", 8);
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (mc_rollouts < 1) throw ConfigError("mc_rollouts must be >= 1");
  echo["steps"] = steps;
  echo["mc_rollouts"] = mc_rollouts;
  const std::uint64_t seed = config.seed;

  return [params, start, steps, mc_rollouts, seed](ArtifactList& artifacts, std::ostream&) {
    std::vector<ControlStep> trajectory =
        pendulum_greedy_control(params, start, steps, mc_rollouts, seed);
    std::vector<std::vector<double>> rows;
    rows.reserve(trajectory.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      const ControlStep& step = trajectory[i];
      rows.push_back({static_cast<double>(i), step.state.phi, step.state.phi_dot,
                      step.action ? *step.action : nan, step.empowerment});
    }
    write_csv(artifacts.file("trajectory.csv"), "step,phi,phi_dot,action,empowerment_bits",
              rows);

    ordered_json doc;
    doc["type"] = "control_report";
    doc["steps"] = static_cast<int>(trajectory.size()) - 1;
    double best_upright = std::numbers::pi;
    for (const ControlStep& step : trajectory) {
      best_upright = std::min(best_upright, std::abs(std::abs(step.state.phi) - std::numbers::pi));
    }
    doc["closest_upright_gap_rad"] = best_upright;
    doc["final_phi"] = trajectory.back().state.phi;
    doc["final_phi_dot"] = trajectory.back().state.phi_dot;
    write_text_file(artifacts.file("control.json"), doc.dump(2) + "\n");
  };
}

Runner resolve_pendulum_scan(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params,
             {"pendulum", "delta_t_list", "power_list", "phi_cells", "phidot_cells",
              "phidot_range"},
             "pendulum-scan params");
  PendulumParams params = pendulum_from(config.params, echo);
  PendulumGrid grid = pendulum_grid_from(config.params, echo);
  std::vector<double> delta_t_list = field<std::vector<double>>(
      config.params, "delta_t_list", {0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5});
  std::vector<double> power_list =
      field<std::vector<double>>(config.params, "power_list", {0.1, 0.5, 1.0, 5.0});
  for (double dt : delta_t_list) {
    if (!(dt > 0.0)) throw ConfigError("delta_t_list entries must be > 0");
  }
  for (double p : power_list) {
    if (!(p > 0.0)) throw ConfigError("power_list entries must be > 0");
  }
  echo["delta_t_list"] = delta_t_list;
  echo["power_list"] = power_list;
  const int workers = config.workers;

  return [params, grid, delta_t_list, power_list, workers](ArtifactList& artifacts,
                                                           std::ostream&) {
    PendulumScan scan =
        pendulum_parameter_scan(params, grid, delta_t_list, power_list, workers);
    ordered_json index;
    index["type"] = "pendulum_scan";
    index["maps"] = ordered_json::array();
    for (std::size_t d = 0; d < scan.delta_t_values.size(); ++d) {
      for (std::size_t p = 0; p < scan.power_values.size(); ++p) {
        const PendulumMap& map = scan.map_at(static_cast<int>(d), static_cast<int>(p));
        std::ostringstream stem;
        stem << "map_dt" << format_double(scan.delta_t_values[d]) << "_P"
             << format_double(scan.power_values[p]);
        write_pendulum_map_artifacts(artifacts, stem.str(), map);
        index["maps"].push_back({{"delta_t", scan.delta_t_values[d]},
                                 {"power", scan.power_values[p]},
                                 {"file", stem.str() + ".json"}});
      }
    }
    index["inversion_pairs_found"] = scan.inversion_count;
    if (scan.inversion) {
      index["inversion"] = {{"low_state", {scan.inversion->low_state.phi,
                                           scan.inversion->low_state.phi_dot}},
                            {"swing_state", {scan.inversion->swing_state.phi,
                                             scan.inversion->swing_state.phi_dot}},
                            {"power_low", scan.inversion->power_low},
                            {"power_high", scan.inversion->power_high}};
    } else {
      index["inversion"] = nullptr;
    }
    write_text_file(artifacts.file("scan.json"), index.dump(2) + "\n");
  };
}

Runner resolve_correlation(const ResolvedConfig& config, ordered_json& echo) {
  check_keys(config.params,
             {"width", "height", "maze_seeds", "n", "epsilon_bits", "max_iter",
              "enumeration_budget"},
             "correlation params");
  const int width = field<int>(config.params, "width", 10);
  const int height = field<int>(config.params, "height", 10);
  std::vector<std::uint64_t> seeds = field<std::vector<std::uint64_t>>(
      config.params, "maze_seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  if (seeds.empty()) throw ConfigError("maze_seeds must not be empty");
  const int n = field<int>(config.params, "n", 5);
  if (n < 1) throw ConfigError("n must be >= 1");
  echo["width"] = width;
  echo["height"] = height;
  echo["maze_seeds"] = seeds;
  echo["n"] = n;
  SolverOptions solver = solver_from(config.params, echo);
  const int workers = config.workers;

  return [width, height, seeds, n, solver, workers](ArtifactList& artifacts, std::ostream&) {
    ordered_json doc;
    doc["type"] = "correlation_report";
    doc["runs"] = ordered_json::array();
    for (std::uint64_t seed : seeds) {
      GridWorld maze = generate_maze(width, height, seed);
      CorrelationReport report = correlation_report(maze, n, solver, workers);
      const std::string stem = "seed" + std::to_string(seed);
      write_grid_map_artifacts(artifacts, stem + "_empowerment", report.empowerment);
      std::vector<std::vector<double>> rows;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          rows.push_back({static_cast<double>(x), static_cast<double>(y),
                          report.distance.values[report.distance.index({x, y})]});
        }
      }
      write_csv(artifacts.file(stem + "_distance.csv"), "x,y,mean_action_distance", rows);
      ordered_json entry;
      entry["maze_seed"] = seed;
      entry["defined"] = report.defined;
      if (report.defined) {
        entry["pearson_r"] = report.pearson_r;
      } else {
        entry["pearson_r"] = nullptr;
      }
      doc["runs"].push_back(std::move(entry));
    }
    write_text_file(artifacts.file("correlation.json"), doc.dump(2) + "\n");
  };
}

ResolvedConfig resolve_envelope(const fs::path& config_file, const Overrides& overrides) {
  if (!fs::exists(config_file)) {
    throw ConfigError("config file does not exist: " + config_file.string());
  }
  ordered_json doc;
  try {
    std::ifstream in(config_file);
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  check_keys(doc, {"scenario", "seed", "workers", "out_dir", "params"}, "config");

  ResolvedConfig config;
  config.scenario = required_field<std::string>(doc, "scenario", "config");
  config.seed = field<std::uint64_t>(doc, "seed", 0);
  config.workers = field<int>(doc, "workers", 0);
  config.out_dir = field<std::string>(doc, "out_dir", "out");
  config.params = doc.contains("params") ? doc.at("params") : ordered_json::object();
  if (!config.params.is_object()) throw ConfigError("config: 'params' must be an object");
  if (config.workers < 0) throw ConfigError("config: workers must be >= 0");

  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.workers) config.workers = *overrides.workers;
  if (overrides.seed) config.seed = *overrides.seed;
  return config;
}

Runner resolve_scenario(ResolvedConfig& config, std::ostream& out) {
  ordered_json echo;
  echo["scenario"] = config.scenario;
  echo["seed"] = config.seed;
  echo["workers"] = config.workers;
  echo["out_dir"] = config.out_dir.string();
  ordered_json params_echo = ordered_json::object();

  Runner runner;
  if (config.scenario == "channel") {
    runner = resolve_channel(config, params_echo);
  } else if (config.scenario == "mimo") {
    runner = resolve_mimo(config, params_echo);
  } else if (config.scenario == "maze") {
    runner = resolve_maze(config, params_echo, out);
  } else if (config.scenario == "box") {
    runner = resolve_box(config, params_echo, out);
  } else if (config.scenario == "horizon-sweep") {
    runner = resolve_horizon_sweep(config, params_echo, out);
  } else if (config.scenario == "context") {
    runner = resolve_context(config, params_echo);
  } else if (config.scenario == "impoverished") {
    runner = resolve_impoverished(config, params_echo);
  } else if (config.scenario == "pendulum-map") {
    runner = resolve_pendulum_map(config, params_echo);
  } else if (config.scenario == "pendulum-control") {
    runner = resolve_pendulum_control(config, params_echo);
  } else if (config.scenario == "pendulum-scan") {
    runner = resolve_pendulum_scan(config, params_echo);
  } else if (config.scenario == "correlation") {
    runner = resolve_correlation(config, params_echo);
  } else {
    throw ConfigError("unknown scenario '" + config.scenario + "'");
  }
  echo["params"] = std::move(params_echo);
  config.resolved = std::move(echo);
  return runner;
}

}  // namespace

int run(const fs::path& config_file, const Overrides& overrides, std::ostream& out,
        std::ostream& err) {
  ResolvedConfig config;
  Runner runner;
  try {
    config = resolve_envelope(config_file, overrides);
    runner = resolve_scenario(config, out);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();

    fs::create_directories(config.out_dir);
    ArtifactList artifacts{config.out_dir, {}};
    runner(artifacts, out);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ordered_json manifest;
    manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    manifest["config"] = config.resolved;
    manifest["timing"] = {
        {"wall_clock_seconds", wall},
        {"started_unix_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(started.time_since_epoch())
             .count()}};
    manifest["artifacts"] = ordered_json::array();
    for (const fs::path& file : artifacts.files) {
      manifest["artifacts"].push_back({{"file", file.filename().string()},
                                       {"fnv1a64", file_checksum(file)}});
    }
    write_text_file(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "wrote " << artifacts.files.size() << " artifacts to " << config.out_dir.string()
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int verify(const fs::path& config_file, const Overrides& overrides, std::ostream& out,
           std::ostream& err) {
  try {
    ResolvedConfig config = resolve_envelope(config_file, overrides);
    (void)resolve_scenario(config, out);
    out << config.resolved.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace empo::cli
