#include "diffsim/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace diffsim::harness {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
}

long long to_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + text + "' is not an integer");
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
  const long long v = to_int(key, text);
  if (v < 0) throw ConfigError("config key '" + key + "': seeds must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::SingleRoad, Variant::GridStatic, Variant::GridNn, Variant::Sir}) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown model '" + name + "' (single_road, grid_static, grid_nn, sir)");
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "scenario", "model", "mode", "seeds", "params.file", "params.init_seed", "trajectory",
      "smooth.k", "smooth.eps",
      "idm.max_accel", "idm.max_decel", "idm.desired_velocity_kmh", "idm.min_gap", "idm.headway", "idm.delta",
      "lane_change.interval", "lane_change.min_gain", "lane_change.tau", "lane_change.right_bias",
      "single_road.length", "single_road.light_position", "single_road.signal_period", "single_road.lanes",
      "single_road.vehicles", "single_road.spawn_spacing", "single_road.duration", "single_road.free_gap",
      "grid.width", "grid.height", "grid.lanes", "grid.road_length", "grid.turn_left", "grid.turn_right",
      "grid.turn_straight", "grid.signal_period", "grid.duration", "grid.vehicles", "grid.min_spawn_spacing",
      "grid.placement_seed", "grid.randomize_placement", "grid.decision_interval", "grid.objective",
      "grid.hidden",
      "sir.agents", "sir.steps", "sir.nodes", "sir.average_degree", "sir.graph_seed", "sir.graph_file",
      "sir.initial_prob", "sir.recovery_rate", "sir.coefficient", "sir.objective", "sir.target_seed", "sir.threshold",
      "optimizer.name", "optimizer.step_size", "optimizer.step_sizes", "optimizer.budget_batches",
      "optimizer.budget_seconds", "optimizer.seed", "optimizer.clip",
      "fidelity.samples", "fidelity.runs", "fidelity.input_seed", "fidelity.bins",
      "bench.vehicle_counts", "bench.repeats", "bench.width", "bench.height", "bench.duration",
  };
  return keys;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::SingleRoad: return "single_road";
    case Variant::GridStatic: return "grid_static";
    case Variant::GridNn: return "grid_nn";
    case Variant::Sir: return "sir";
  }
  return "?";
}

Config Config::parse(std::istream& in, const std::string& origin) {
  Config cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    if (cfg.has(key)) throw ConfigError(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Config cfg = parse(in, path.string());
  if (cfg.has("scenario")) {
    std::filesystem::path included = cfg.entries_.at("scenario");
    if (included.is_relative()) included = path.parent_path() / included;
    Config base = load(included);
    for (const auto& [k, v] : cfg.entries_) {
      if (k != "scenario") base.entries_[k] = v;
    }
    return base;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : to_double(key, it->second);
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : to_int(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(it->second)) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::uint64_t> Config::get_seeds(const std::string& key,
                                             const std::vector<std::uint64_t>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(it->second)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_seed(key, item));
      continue;
    }
    const std::uint64_t lo = to_seed(key, trim(item.substr(0, dots)));
    const std::uint64_t hi = to_seed(key, trim(item.substr(dots + 2)));
    if (hi < lo) throw ConfigError("config key '" + key + "': empty seed range");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty seed list");
  return out;
}

void Config::reject_unknown() const {
  const auto& keys = known_keys();
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : entries_) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [k, v] : entries_) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

ExperimentConfig build_experiment(const Config& c, const std::filesystem::path& base_dir) {
  c.reject_unknown();
  ExperimentConfig e;
  e.base_dir = base_dir;
  e.hash = c.hash();
  e.variant = parse_variant(c.get_string("model", "single_road"));
  const std::string mode = c.get_string("mode", "diff");
  if (mode != "diff" && mode != "reference") throw ConfigError("mode must be 'diff' or 'reference'");
  e.reference = mode == "reference";
  e.seeds = c.get_seeds("seeds", {1});
  e.params_file = c.get_string("params.file", "");
  e.init_seed = static_cast<std::uint64_t>(c.get_int("params.init_seed", 1));
  e.trajectory = c.get_bool("trajectory", false);

  smooth::SmoothConfig sm;
  sm.k = c.get_double("smooth.k", sm.k);
  sm.eps = c.get_double("smooth.eps", sm.eps);

  traffic::LaneChangeParams lc;
  lc.decision_interval = c.get_double("lane_change.interval", lc.decision_interval);
  lc.min_clearance_gain = c.get_double("lane_change.min_gain", lc.min_clearance_gain);
  lc.tau = c.get_double("lane_change.tau", lc.tau);
  lc.right_bias = c.get_double("lane_change.right_bias", lc.right_bias);

  auto idm_from = [&](traffic::IdmParams p) {
    p.max_accel = c.get_double("idm.max_accel", p.max_accel);
    p.max_decel = c.get_double("idm.max_decel", p.max_decel);
    p.desired_velocity = traffic::kmh_to_ms(c.get_double("idm.desired_velocity_kmh", p.desired_velocity * 3.6));
    p.min_gap = c.get_double("idm.min_gap", p.min_gap);
    p.headway = c.get_double("idm.headway", p.headway);
    p.delta = c.get_double("idm.delta", p.delta);
    return p;
  };

  auto& sr = e.single_road;
  sr.road_length = c.get_double("single_road.length", sr.road_length);
  sr.light_position = c.get_double("single_road.light_position", sr.light_position);
  sr.signal_period = c.get_double("single_road.signal_period", sr.signal_period);
  sr.lanes = static_cast<int>(c.get_int("single_road.lanes", sr.lanes));
  sr.vehicles = static_cast<int>(c.get_int("single_road.vehicles", sr.vehicles));
  sr.spawn_spacing = c.get_double("single_road.spawn_spacing", sr.spawn_spacing);
  sr.duration = c.get_double("single_road.duration", sr.duration);
  sr.free_gap = c.get_double("single_road.free_gap", sr.free_gap);
  sr.idm = idm_from(sr.idm);
  sr.lane_change = lc;
  sr.smooth = sm;

  auto& g = e.grid;
  g.width = static_cast<int>(c.get_int("grid.width", g.width));
  g.height = static_cast<int>(c.get_int("grid.height", g.height));
  g.lanes = static_cast<int>(c.get_int("grid.lanes", g.lanes));
  g.road_length = c.get_double("grid.road_length", g.road_length);
  g.turn_probabilities = {c.get_double("grid.turn_left", g.turn_probabilities[0]),
                          c.get_double("grid.turn_right", g.turn_probabilities[1]),
                          c.get_double("grid.turn_straight", g.turn_probabilities[2])};
  g.signal_period = c.get_double("grid.signal_period", g.signal_period);
  g.duration = c.get_double("grid.duration", g.duration);
  g.vehicles = static_cast<int>(c.get_int("grid.vehicles", g.vehicles));
  g.min_spawn_spacing = c.get_double("grid.min_spawn_spacing", g.min_spawn_spacing);
  g.placement_seed = static_cast<std::uint64_t>(c.get_int("grid.placement_seed", 1));
  g.randomize_placement = c.get_bool("grid.randomize_placement", g.randomize_placement);
  g.decision_interval = c.get_double("grid.decision_interval", g.decision_interval);
  const std::string objective = c.get_string("grid.objective", "sum");
  if (objective != "sum" && objective != "min") throw ConfigError("grid.objective must be 'sum' or 'min'");
  g.objective = objective == "sum" ? traffic::ProgressObjective::Sum : traffic::ProgressObjective::Min;
  g.idm = idm_from(g.idm);
  g.lane_change = lc;
  g.smooth = sm;
  const long long hidden = c.get_int("grid.hidden", 2);
  if (hidden < 1) throw ConfigError("grid.hidden must be at least 1");
  e.hidden = static_cast<std::size_t>(hidden);

  auto& s = e.sir;
  s.model.agents = static_cast<int>(c.get_int("sir.agents", s.model.agents));
  s.model.steps = static_cast<int>(c.get_int("sir.steps", s.model.steps));
  s.model.smooth = sm;
  const long long nodes = c.get_int("sir.nodes", static_cast<long long>(s.nodes));
  if (nodes < 2) throw ConfigError("sir.nodes must be at least 2");
  s.nodes = static_cast<std::size_t>(nodes);
  s.average_degree = c.get_double("sir.average_degree", s.average_degree);
  s.graph_seed = static_cast<std::uint64_t>(c.get_int("sir.graph_seed", 1));
  s.graph_file = c.get_string("sir.graph_file", "");
  s.initial_prob = c.get_double("sir.initial_prob", s.initial_prob);
  s.recovery_rate = c.get_double("sir.recovery_rate", s.recovery_rate);
  s.coefficient = c.get_double("sir.coefficient", s.coefficient);
  s.objective = c.get_string("sir.objective", s.objective);
  if (s.objective != "attack" && s.objective != "calibration") {
    throw ConfigError("sir.objective must be 'attack' or 'calibration'");
  }
  s.target_seed = static_cast<std::uint64_t>(c.get_int("sir.target_seed", 1000));
  const std::string threshold = c.get_string("sir.threshold", "log");
  if (threshold == "log") {
    s.model.threshold = epidemics::ThresholdScale::Log;
  } else if (threshold == "linear") {
    s.model.threshold = epidemics::ThresholdScale::Linear;
  } else {
    throw ConfigError("sir.threshold must be 'log' or 'linear'");
  }

  auto& o = e.optimizer;
  try {
    o.algorithm = optim::parse_algorithm(c.get_string("optimizer.name", "adam"));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  o.step_size = c.get_double("optimizer.step_size", o.step_size);
  e.step_sizes = c.get_doubles("optimizer.step_sizes", {});
  o.budget_batches = static_cast<int>(c.get_int("optimizer.budget_batches", o.budget_batches));
  o.budget_seconds = c.get_double("optimizer.budget_seconds", o.budget_seconds);
  o.seed = static_cast<std::uint64_t>(c.get_int("optimizer.seed", 1));
  o.clip_bound = c.get_double("optimizer.clip", o.clip_bound);
  if (o.budget_batches < 0) throw ConfigError("optimizer.budget_batches must be nonnegative");
  if (!(o.clip_bound > 0.0)) throw ConfigError("optimizer.clip must be positive");

  auto& f = e.fidelity;
  f.samples = static_cast<int>(c.get_int("fidelity.samples", f.samples));
  f.runs = static_cast<int>(c.get_int("fidelity.runs", f.runs));
  f.input_seed = static_cast<std::uint64_t>(c.get_int("fidelity.input_seed", 1));
  f.bins = static_cast<int>(c.get_int("fidelity.bins", f.bins));
  if (f.samples < 1 || f.runs < 1 || f.bins < 1) throw ConfigError("fidelity counts must be positive");

  auto& b = e.bench;
  b.vehicle_counts.clear();
  for (double v : c.get_doubles("bench.vehicle_counts", {64, 256, 1024})) b.vehicle_counts.push_back(static_cast<int>(v));
  b.repeats = static_cast<int>(c.get_int("bench.repeats", b.repeats));
  b.width = static_cast<int>(c.get_int("bench.width", b.width));
  b.height = static_cast<int>(c.get_int("bench.height", b.height));
  b.duration = c.get_double("bench.duration", b.duration);
  if (b.repeats < 1) throw ConfigError("bench.repeats must be positive");

  try {
    sm.validate();
    switch (e.variant) {
      case Variant::SingleRoad: sr.validate(); break;
      case Variant::GridStatic:
      case Variant::GridNn: g.validate(); break;
      case Variant::Sir: s.model.validate(); break;
    }
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return e;
}

}  // namespace diffsim::harness
