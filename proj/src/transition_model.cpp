#include "empo/transition_model.hpp"

#include <fstream>
#include <stdexcept>

#include "empo/infotheory.hpp"
#include "json.hpp"

namespace empo {

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

// "states": either a count or an array of names.
int read_dimension(const json& obj, const char* key, std::vector<std::string>& names,
                   const std::string& context) {
  if (!obj.contains(key)) throw std::invalid_argument(context + ": missing '" + key + "'");
  const json& v = obj.at(key);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_array()) {
    names = v.get<std::vector<std::string>>();
    return static_cast<int>(names.size());
  }
  throw std::invalid_argument(context + ": '" + std::string(key) +
                              "' must be a count or an array of names");
}

}  // namespace

TransitionModel TransitionModel::make(int n_states, int n_actions, int n_sensors) {
  if (n_states < 1 || n_actions < 1 || n_sensors < 1) {
    throw std::invalid_argument("TransitionModel: all dimensions must be >= 1");
  }
  TransitionModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.n_sensors = n_sensors;
  m.transitions.assign(
      static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.sensor_map.assign(n_states, 0);
  return m;
}

bool TransitionModel::is_deterministic() const {
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      for (double p : row(s, a)) {
        if (p != 0.0 && p != 1.0) return false;
      }
    }
  }
  return true;
}

void TransitionModel::validate() const {
  if (n_states < 1 || n_actions < 1 || n_sensors < 1) {
    throw std::invalid_argument("TransitionModel: all dimensions must be >= 1");
  }
  if (transitions.size() !=
      static_cast<std::size_t>(n_states) * n_actions * n_states) {
    throw std::invalid_argument("TransitionModel: transition table size mismatch");
  }
  if (static_cast<int>(sensor_map.size()) != n_states) {
    throw std::invalid_argument("TransitionModel: sensor_map must cover every state");
  }
  for (int s = 0; s < n_states; ++s) {
    if (sensor_map[s] < 0 || sensor_map[s] >= n_sensors) {
      throw std::invalid_argument("TransitionModel: sensor id out of range for state " +
                                  std::to_string(s));
    }
    for (int a = 0; a < n_actions; ++a) {
      validate_probability_vector(
          row(s, a),
          ("transition row (state " + std::to_string(s) + ", action " +
           std::to_string(a) + ")")
              .c_str());
    }
  }
}

TransitionModel TransitionModel::parse_json(std::string_view text) {
  json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("model: expected a JSON object");
  reject_unknown_keys(doc, {"id", "states", "actions", "sensors", "sensor_map", "transitions"},
                      "model");

  TransitionModel m;
  int n_states = read_dimension(doc, "states", m.state_names, "model");
  int n_actions = read_dimension(doc, "actions", m.action_names, "model");
  int n_sensors = read_dimension(doc, "sensors", m.sensor_names, "model");
  TransitionModel base = make(n_states, n_actions, n_sensors);
  m.n_states = base.n_states;
  m.n_actions = base.n_actions;
  m.n_sensors = base.n_sensors;
  m.transitions = std::move(base.transitions);
  m.sensor_map = doc.at("sensor_map").get<std::vector<int>>();
  if (doc.contains("id")) m.id = doc.at("id").get<std::string>();

  const json& t = doc.at("transitions");
  if (!t.is_array() || static_cast<int>(t.size()) != n_states) {
    throw std::invalid_argument("model: 'transitions' must have one entry per state");
  }
  for (int s = 0; s < n_states; ++s) {
    const json& per_action = t.at(s);
    if (!per_action.is_array() || static_cast<int>(per_action.size()) != n_actions) {
      throw std::invalid_argument("model: state " + std::to_string(s) +
                                  " needs one row per action");
    }
    for (int a = 0; a < n_actions; ++a) {
      auto row_values = per_action.at(a).get<std::vector<double>>();
      if (static_cast<int>(row_values.size()) != n_states) {
        throw std::invalid_argument("model: row (state " + std::to_string(s) + ", action " +
                                    std::to_string(a) + ") has wrong length");
      }
      std::copy(row_values.begin(), row_values.end(), m.row(s, a).begin());
    }
  }
  m.validate();
  return m;
}

TransitionModel TransitionModel::load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open model file: " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text);
}

std::string TransitionModel::to_json_string(int indent) const {
  nlohmann::ordered_json doc;
  if (!id.empty()) doc["id"] = id;
  if (!state_names.empty()) {
    doc["states"] = state_names;
  } else {
    doc["states"] = n_states;
  }
  if (!action_names.empty()) {
    doc["actions"] = action_names;
  } else {
    doc["actions"] = n_actions;
  }
  if (!sensor_names.empty()) {
    doc["sensors"] = sensor_names;
  } else {
    doc["sensors"] = n_sensors;
  }
  doc["sensor_map"] = sensor_map;
  nlohmann::ordered_json t = nlohmann::ordered_json::array();
  for (int s = 0; s < n_states; ++s) {
    nlohmann::ordered_json per_action = nlohmann::ordered_json::array();
    for (int a = 0; a < n_actions; ++a) {
      auto r = row(s, a);
      per_action.push_back(std::vector<double>(r.begin(), r.end()));
    }
    t.push_back(std::move(per_action));
  }
  doc["transitions"] = std::move(t);
  return doc.dump(indent);
}

void TransitionModel::save_json(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write model file: " + file.string());
  out << to_json_string() << '\n';
}

}  // namespace empo
