#include "arrayins/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace arrayins {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

ArrayGeometry geometry_from_json(const json& j) {
  if (j.is_string()) return load_geometry(j.get<std::string>());
  if (!j.contains("positions")) throw ConfigError("geometry: missing 'positions'");
  std::vector<Vec3> positions;
  for (const auto& p : j.at("positions")) {
    if (!p.is_array() || p.size() != 3)
      throw ConfigError("geometry: each position must be a triple [x, y, z]");
    positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  const bool centered = j.value("centered", true);
  try {
    return build_geometry(positions, centered);
  } catch (const RankDeficientError& err) {
    throw ConfigError(std::string("geometry: ") + err.what());
  }
}

NoiseConfig noise_from_json(const json& j) {
  NoiseConfig n;
  n.sigma_accel = j.value("sigma_accel", n.sigma_accel);
  if (j.contains("sigma_gyro_deg"))
    n.sigma_gyro = j.at("sigma_gyro_deg").get<double>() * M_PI / 180.0;
  else
    n.sigma_gyro = j.value("sigma_gyro", n.sigma_gyro);
  n.sigma_accel_bias_walk = j.value("accel_bias_walk", 0.0);
  n.sigma_gyro_bias_walk = j.value("gyro_bias_walk", 0.0);
  return n;
}

InitStdConfig init_std_from_json(const json& j, InitStdConfig defaults) {
  defaults.rot = j.value("rot", defaults.rot);
  defaults.pos = j.value("pos", defaults.pos);
  defaults.vel = j.value("vel", defaults.vel);
  defaults.omega = j.value("omega", defaults.omega);
  return defaults;
}

std::vector<ModelVariant> variants_from_json(const json& j) {
  std::vector<ModelVariant> variants;
  for (const auto& name : j) {
    try {
      variants.push_back(parse_variant(name.get<std::string>()));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
  }
  if (variants.empty()) throw ConfigError("variants: empty list");
  return variants;
}

CampaignConfig campaign_from_json(const json& j) {
  CampaignConfig cfg;
  cfg.dynamics = j.value("dynamics", cfg.dynamics);
  if (cfg.dynamics != "low" && cfg.dynamics != "high")
    throw ConfigError("dynamics must be 'low' or 'high'");
  cfg.fs_hz = j.value("fs_hz", cfg.fs_hz);
  cfg.runs = j.value("runs", cfg.runs);
  cfg.aiding_duration_s = j.value("aiding_duration_s", cfg.aiding_duration_s);
  cfg.ins_horizon_s = j.value("ins_horizon_s", cfg.ins_horizon_s);
  cfg.sigma_pos = j.value("sigma_pos_m", cfg.sigma_pos);
  cfg.pos_noise_std = j.value("pos_noise_std_m", cfg.sigma_pos);
  cfg.pos_update_hz = j.value("pos_update_hz", cfg.pos_update_hz);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.fine_step = j.value("fine_step", cfg.fine_step);
  cfg.require_bias_convergence =
      j.value("require_bias_convergence", cfg.require_bias_convergence);
  if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
  if (j.contains("filter_noise")) cfg.filter_noise = noise_from_json(j.at("filter_noise"));
  if (j.contains("init_std")) cfg.init_std = init_std_from_json(j.at("init_std"), cfg.init_std);
  if (j.contains("variants")) cfg.variants = variants_from_json(j.at("variants"));
  cfg.geometry = j.contains("geometry") ? geometry_from_json(j.at("geometry"))
                                        : paper_array32();
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.ins_horizon_s <= 0) throw ConfigError("ins_horizon_s must be > 0");
  if (cfg.fs_hz <= 0) throw ConfigError("fs_hz must be > 0");
  return cfg;
}

json campaign_to_json(const CampaignConfig& cfg) {
  json j;
  j["dynamics"] = cfg.dynamics;
  j["fs_hz"] = cfg.fs_hz;
  j["runs"] = cfg.runs;
  j["aiding_duration_s"] = cfg.aiding_duration_s;
  j["ins_horizon_s"] = cfg.ins_horizon_s;
  j["sigma_pos_m"] = cfg.sigma_pos;
  j["pos_noise_std_m"] = cfg.pos_noise_std;
  j["pos_update_hz"] = cfg.pos_update_hz;
  j["seed"] = cfg.seed;
  j["fine_step"] = cfg.fine_step;
  j["require_bias_convergence"] = cfg.require_bias_convergence;
  j["noise"] = {{"sigma_accel", cfg.noise.sigma_accel},
                {"sigma_gyro", cfg.noise.sigma_gyro},
                {"accel_bias_walk", cfg.noise.sigma_accel_bias_walk},
                {"gyro_bias_walk", cfg.noise.sigma_gyro_bias_walk}};
  if (cfg.filter_noise) {
    j["filter_noise"] = {{"sigma_accel", cfg.filter_noise->sigma_accel},
                         {"sigma_gyro", cfg.filter_noise->sigma_gyro},
                         {"accel_bias_walk", cfg.filter_noise->sigma_accel_bias_walk},
                         {"gyro_bias_walk", cfg.filter_noise->sigma_gyro_bias_walk}};
  }
  j["init_std"] = {{"rot", cfg.init_std.rot},
                   {"pos", cfg.init_std.pos},
                   {"vel", cfg.init_std.vel},
                   {"omega", cfg.init_std.omega}};
  json names = json::array();
  for (ModelVariant v : cfg.variants) names.push_back(variant_name(v));
  j["variants"] = names;
  json positions = json::array();
  for (const auto& r : cfg.geometry.positions) positions.push_back({r.x(), r.y(), r.z()});
  j["geometry"] = {{"positions", positions}, {"centered", cfg.geometry.centered}};
  // threads deliberately excluded: results are thread-count independent.
  return j;
}

json replay_to_json(const ReplayConfig& cfg) {
  json j;
  j["ins_horizon_s"] = cfg.ins_horizon_s;
  j["sigma_pos_m"] = cfg.sigma_pos;
  j["restart_count"] = cfg.restart_count;
  if (cfg.restart_window)
    j["restart_window_s"] = {cfg.restart_window->first, cfg.restart_window->second};
  if (!cfg.restart_times.empty()) j["restart_times"] = cfg.restart_times;
  j["seed"] = cfg.seed;
  j["noise"] = {{"sigma_accel", cfg.noise.sigma_accel}, {"sigma_gyro", cfg.noise.sigma_gyro}};
  json names = json::array();
  for (ModelVariant v : cfg.variants) names.push_back(variant_name(v));
  j["variants"] = names;
  json positions = json::array();
  for (const auto& r : cfg.geometry.positions) positions.push_back({r.x(), r.y(), r.z()});
  j["geometry"] = {{"positions", positions}, {"centered", cfg.geometry.centered}};
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace

ArrayGeometry load_geometry(const std::string& path_or_preset) {
  if (path_or_preset == "paper-32") return paper_array32();
  if (path_or_preset == "square-4") return square_array4(0.1);
  if (std::ifstream probe(path_or_preset); !probe)
    throw ConfigError("geometry '" + path_or_preset +
                      "' is neither a readable file nor a known preset");
  return geometry_from_json(read_json_file(path_or_preset));
}

std::vector<std::string> campaign_preset_names() {
  return {"paper-sim-low-500", "paper-sim-low-100", "paper-sim-high-500",
          "paper-sim-high-100"};
}

CampaignConfig load_campaign_config(const std::string& path_or_preset) {
  for (const auto& name : campaign_preset_names()) {
    if (path_or_preset == name) {
      CampaignConfig cfg;
      cfg.dynamics = name.find("high") != std::string::npos ? "high" : "low";
      cfg.fs_hz = name.find("500") != std::string::npos ? 500.0 : 100.0;
      cfg.geometry = paper_array32();
      return cfg;
    }
  }
  if (std::ifstream probe(path_or_preset); !probe)
    throw ConfigError("config '" + path_or_preset +
                      "' is neither a readable file nor a known preset");
  return campaign_from_json(read_json_file(path_or_preset));
}

ReplayConfig load_replay_config(const std::string& path) {
  const json j = read_json_file(path);
  ReplayConfig cfg;
  cfg.ins_horizon_s = j.value("ins_horizon_s", cfg.ins_horizon_s);
  cfg.sigma_pos = j.value("sigma_pos_m", cfg.sigma_pos);
  cfg.restart_count = j.value("restart_count", cfg.restart_count);
  if (j.contains("restart_window_s")) {
    const auto& w = j.at("restart_window_s");
    if (!w.is_array() || w.size() != 2)
      throw ConfigError("restart_window_s must be [begin, end]");
    cfg.restart_window = {{w[0].get<double>(), w[1].get<double>()}};
  }
  if (j.contains("restart_times"))
    cfg.restart_times = j.at("restart_times").get<std::vector<double>>();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
  if (j.contains("init_std")) cfg.init_std = init_std_from_json(j.at("init_std"), cfg.init_std);
  if (j.contains("variants")) cfg.variants = variants_from_json(j.at("variants"));
  cfg.geometry = j.contains("geometry") ? geometry_from_json(j.at("geometry"))
                                        : paper_array32();
  if (cfg.restart_times.empty() && cfg.restart_count < 1)
    throw ConfigError("empty restart schedule");
  if (cfg.ins_horizon_s <= 0) throw ConfigError("ins_horizon_s must be > 0");
  return cfg;
}

std::string campaign_config_hash(const CampaignConfig& config) {
  return fnv1a_hex(campaign_to_json(config).dump());
}

std::string replay_config_hash(const ReplayConfig& config) {
  return fnv1a_hex(replay_to_json(config).dump());
}

}  // namespace arrayins
