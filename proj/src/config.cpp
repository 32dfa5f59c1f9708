#include "semsat/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "semsat/errors.hpp"

namespace semsat {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) {
    throw BadConfig("empty value for " + key);
  }
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw BadConfig("bad number for " + key + ": '" + v + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& raw) {
  const double v = parse_double(key, raw);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw BadConfig("expected integer for " + key + ": '" + trim(raw) + "'");
  }
  return i;
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) {
    throw BadConfig("empty value for " + key);
  }
  char* end = nullptr;
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    throw BadConfig("bad unsigned integer for " + key + ": '" + v + "'");
  }
  return static_cast<std::uint64_t>(out);
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw BadConfig("expected true/false for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  const std::string v = trim(raw);
  if (v.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = v.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(trim(v.substr(pos)));
      break;
    }
    out.push_back(trim(v.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& item : split_list(raw)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& raw) {
  std::vector<int> out;
  for (const auto& item : split_list(raw)) {
    out.push_back(parse_int(key, item));
  }
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

// One config-file key. get renders the canonical value; set parses one.
struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define FIELD_D(sec, key, expr)                                                       \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return format_double(c.expr); },               \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_double(k, v);                                                \
        }                                                                             \
  }

#define FIELD_I(sec, key, expr)                                                       \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return std::to_string(c.expr); },              \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_int(k, v);                                                   \
        }                                                                             \
  }

#define FIELD_U64(sec, key, expr)                                                     \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return std::to_string(c.expr); },              \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_u64(k, v);                                                   \
        }                                                                             \
  }

#define FIELD_B(sec, key, expr)                                                       \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return c.expr ? "true" : "false"; },           \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_bool(k, v);                                                  \
        }                                                                             \
  }

#define FIELD_DL(sec, key, expr)                                                      \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return format_double_list(c.expr); },          \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_double_list(k, v);                                           \
        }                                                                             \
  }

#define FIELD_IL(sec, key, expr)                                                      \
  Field {                                                                             \
    sec, key, [](const RunConfig& c) { return format_int_list(c.expr); },             \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_int_list(k, v);                                              \
        }                                                                             \
  }

#define FIELD_A3(sec, key, expr)                                                      \
  Field {                                                                             \
    sec, key,                                                                         \
        [](const RunConfig& c) {                                                      \
          return format_double_list({c.expr[0], c.expr[1], c.expr[2]});               \
        },                                                                            \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          const auto items = parse_double_list(k, v);                                 \
          if (items.size() != 3) {                                                    \
            throw BadConfig(k + " needs exactly 3 values");                           \
          }                                                                           \
          c.expr[0] = items[0];                                                       \
          c.expr[1] = items[1];                                                       \
          c.expr[2] = items[2];                                                       \
        }                                                                             \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      FIELD_I("scenario", "num_leos", scenario.num_leos),
      FIELD_I("scenario", "num_uavs", scenario.num_uavs),
      FIELD_I("scenario", "num_users", scenario.num_users),
      FIELD_I("scenario", "num_tasks", scenario.num_tasks),
      FIELD_I("scenario", "horizon_slots", scenario.horizon_slots),
      FIELD_D("scenario", "service_disc_radius_m", scenario.service_disc_radius_m),
      FIELD_D("scenario", "leo_spacing_min_m", scenario.leo_spacing_min_m),
      FIELD_D("scenario", "leo_spacing_max_m", scenario.leo_spacing_max_m),
      FIELD_I("scenario", "min_relay_users", scenario.min_relay_users),
      FIELD_I("scenario", "max_relay_users", scenario.max_relay_users),
      FIELD_D("scenario", "arrival_rate_hz", scenario.arrival_rate_hz),
      FIELD_D("scenario", "data_bits", scenario.data_bits),
      FIELD_D("scenario", "d_max_min_s", scenario.d_max_min_s),
      FIELD_D("scenario", "d_max_max_s", scenario.d_max_max_s),
      FIELD_D("scenario", "theta_min_low_db", scenario.theta_min_low_db),
      FIELD_D("scenario", "theta_min_high_db", scenario.theta_min_high_db),
      FIELD_D("scenario", "leo_tx_power_w", scenario.leo_tx_power_w),
      FIELD_D("scenario", "uav_tx_power_w", scenario.uav_tx_power_w),
      FIELD_D("scenario", "bandwidth_hz", scenario.bandwidth_hz),
      FIELD_D("scenario", "noise_w", scenario.noise_w),
      FIELD_D("scenario", "antenna_gain", scenario.antenna_gain),
      FIELD_D("scenario", "wavelength_m", scenario.wavelength_m),
      FIELD_D("scenario", "carrier_hz", scenario.carrier_hz),
      FIELD_D("scenario", "tx_throughput_gflops", scenario.tx_throughput_gflops),
      FIELD_D("scenario", "rx_throughput_gflops", scenario.rx_throughput_gflops),
      FIELD_IL("scenario", "step_menu", scenario.step_menu),

      FIELD_D("world", "earth_radius_m", scenario.world.earth_radius_m),
      FIELD_D("world", "leo_altitude_m", scenario.world.leo_altitude_m),
      FIELD_D("world", "uav_altitude_m", scenario.world.uav_altitude_m),
      FIELD_D("world", "leo_speed_mps", scenario.world.leo_speed_mps),
      FIELD_D("world", "uav_max_speed_mps", scenario.world.uav_max_speed_mps),
      FIELD_D("world", "min_elevation_deg", scenario.world.min_elevation_deg),
      FIELD_D("world", "slot_duration_s", scenario.world.slot_duration_s),

      FIELD_D("fading", "rician_kappa", scenario.fading.rician_kappa),
      FIELD_D("fading", "los_exponent", scenario.fading.los_exponent),
      FIELD_D("fading", "nlos_exponent", scenario.fading.nlos_exponent),
      FIELD_D("fading", "los_phase_rad", scenario.fading.los_phase_rad),

      FIELD_D("isl", "boltzmann_jpk", scenario.isl.boltzmann_jpk),
      FIELD_D("isl", "noise_temperature_k", scenario.isl.noise_temperature_k),
      FIELD_D("isl", "bandwidth_hz", scenario.isl.bandwidth_hz),
      FIELD_D("isl", "carrier_hz", scenario.isl.carrier_hz),
      FIELD_D("isl", "peak_gain", scenario.isl.peak_gain),
      FIELD_D("isl", "light_speed_mps", scenario.isl.light_speed_mps),

      FIELD_D("modes", "bit_payload_bits", scenario.modes.bit_payload_bits),
      FIELD_D("modes", "text_payload_bits", scenario.modes.text_payload_bits),
      FIELD_A3("modes", "ti_payload_bits", scenario.modes.ti_payload_bits),
      FIELD_D("modes", "bit_quality_db", scenario.modes.bit_quality_db),
      FIELD_D("modes", "text_floor_db", scenario.modes.text_floor_db),
      FIELD_D("modes", "text_ceiling_db", scenario.modes.text_ceiling_db),
      FIELD_A3("modes", "ti_floor_db", scenario.modes.ti_floor_db),
      FIELD_A3("modes", "ti_ceiling_db", scenario.modes.ti_ceiling_db),
      FIELD_D("modes", "tau_steps", scenario.modes.tau_steps),
      FIELD_D("modes", "semantic_tx_gflop", scenario.modes.semantic_tx_gflop),
      FIELD_D("modes", "denoise_step_gflop", scenario.modes.denoise_step_gflop),
      FIELD_I("modes", "max_steps", scenario.modes.max_steps),

      FIELD_D("weights", "theta_d", scenario.weights.theta_d),
      FIELD_D("weights", "theta_r", scenario.weights.theta_r),
      FIELD_D("weights", "theta_c", scenario.weights.theta_c),

      FIELD_I("train", "updates", train.updates),
      FIELD_I("train", "group_size", train.group_size),
      FIELD_I("train", "epochs", train.epochs),
      FIELD_D("train", "lr", train.lr),
      FIELD_D("train", "clip", train.clip),
      FIELD_D("train", "entropy_coeff", train.entropy_coeff),
      FIELD_B("train", "kl_penalty", train.kl_penalty),
      FIELD_D("train", "kl_coeff", train.kl_coeff),
      FIELD_D("train", "value_coeff", train.value_coeff),
      FIELD_IL("train", "hidden", train.hidden),
      FIELD_U64("train", "seed", train.seed),
      FIELD_D("train", "motion_hover_bias", motion_hover_bias),

      FIELD_DL("experiment", "theta_d_values", experiment.theta_d_values),
      FIELD_DL("experiment", "power_values_w", experiment.power_values_w),
      FIELD_I("experiment", "replications", experiment.replications),
      FIELD_I("experiment", "eval_episodes", experiment.eval_episodes),
      FIELD_D("experiment", "fixed_model_theta_d", experiment.fixed_model_theta_d),
      FIELD_D("experiment", "breakdown_rate_bps", experiment.breakdown_rate_bps),
      FIELD_D("experiment", "breakdown_prop_distance_m", experiment.breakdown_prop_distance_m),
      FIELD_D("experiment", "breakdown_d_max_s", experiment.breakdown_d_max_s),
      FIELD_D("experiment", "breakdown_theta_min_db", experiment.breakdown_theta_min_db),
  };
  return fields;
}

#undef FIELD_D
#undef FIELD_I
#undef FIELD_U64
#undef FIELD_B
#undef FIELD_DL
#undef FIELD_IL
#undef FIELD_A3

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Decibel spellings accepted on load; the canonical form is always linear.
void apply_db_alternate(RunConfig& cfg, const std::string& section, const std::string& key,
                        const std::string& value, bool* handled) {
  *handled = true;
  const std::string full = section + "." + key;
  if (full == "scenario.antenna_gain_db") {
    cfg.scenario.antenna_gain = db_to_linear(parse_double(full, value));
  } else if (full == "scenario.noise_dbm") {
    cfg.scenario.noise_w = db_to_linear(parse_double(full, value) - 30.0);
  } else if (full == "isl.peak_gain_db") {
    cfg.scenario.isl.peak_gain = db_to_linear(parse_double(full, value));
  } else {
    *handled = false;
  }
}

}  // namespace

void validate_experiment(const ExperimentSpec& spec) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw BadConfig(what);
  };
  require(!spec.theta_d_values.empty(), "theta_d_values must not be empty");
  for (double v : spec.theta_d_values) {
    require(v >= 0.0 && v <= 1.0, "theta_d_values entries must lie in [0,1]");
  }
  require(!spec.power_values_w.empty(), "power_values_w must not be empty");
  for (double v : spec.power_values_w) {
    require(v > 0.0, "power_values_w entries must be positive");
  }
  require(spec.replications >= 1, "replications must be >= 1");
  require(spec.eval_episodes >= 1, "eval_episodes must be >= 1");
  require(spec.fixed_model_theta_d >= 0.0 && spec.fixed_model_theta_d <= 1.0,
          "fixed_model_theta_d must lie in [0,1]");
  require(spec.breakdown_rate_bps > 0.0, "breakdown_rate_bps must be positive");
  require(spec.breakdown_prop_distance_m > 0.0, "breakdown_prop_distance_m must be positive");
  require(spec.breakdown_d_max_s > 0.0, "breakdown_d_max_s must be positive");
  require(spec.breakdown_theta_min_db > 0.0, "breakdown_theta_min_db must be positive");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw BadConfig("malformed section header at line " + std::to_string(lineno));
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw BadConfig("expected key = value at line " + std::to_string(lineno));
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = t.substr(eq + 1);
    if (key.empty()) {
      throw BadConfig("empty key at line " + std::to_string(lineno));
    }
    if (section.empty()) {
      throw BadConfig("key '" + key + "' appears before any [section]");
    }
    bool handled = false;
    apply_db_alternate(cfg, section, key, value, &handled);
    if (handled) continue;
    for (const auto& f : schema()) {
      if (section == f.section && key == f.key) {
        f.set(cfg, section + "." + key, value);
        handled = true;
        break;
      }
    }
    if (!handled) {
      throw BadConfig("unknown key '" + section + "." + key + "'");
    }
  }
  validate_scenario(cfg.scenario);
  validate_experiment(cfg.experiment);
  if (cfg.train.updates < 1) throw BadConfig("train.updates must be >= 1");
  if (cfg.train.group_size < 2) throw BadConfig("train.group_size must be >= 2");
  if (cfg.train.epochs < 1) throw BadConfig("train.epochs must be >= 1");
  if (cfg.train.lr <= 0.0) throw BadConfig("train.lr must be positive");
  if (cfg.train.clip <= 0.0) throw BadConfig("train.clip must be positive");
  if (cfg.train.hidden.empty()) throw BadConfig("train.hidden must not be empty");
  for (int h : cfg.train.hidden) {
    if (h < 1) throw BadConfig("train.hidden entries must be >= 1");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoFailure("error reading config file '" + path + "'");
  }
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  const char* current = "";
  for (const auto& f : schema()) {
    if (std::string(current) != f.section) {
      if (!out.empty()) out += "\n";
      out += "[";
      out += f.section;
      out += "]\n";
      current = f.section;
    }
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoFailure("cannot open '" + path + "' for writing");
  }
  out << serialize_config(cfg);
  out.flush();
  if (!out) {
    throw IoFailure("error writing config file '" + path + "'");
  }
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace semsat
