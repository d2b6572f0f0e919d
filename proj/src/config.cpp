#include "vrfusion/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "vrfusion/errors.hpp"
#include "vrfusion/profiles.hpp"
#include "vrfusion/vrgen.hpp"

namespace vrf {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"range", {"x_min", "y_min", "z_min", "x_max", "y_max", "z_max"}},
      {"voxel", {"l", "w", "h", "scales"}},
      {"region", {"delta"}},
      {"channels", {"c_v", "c_i", "c_out"}},
      {"paths", {"velodyne_dir", "calib_dir", "feature_dir", "mask_dir", "weights"}},
  };
  return keys;
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || text.find_first_not_of(" \t", used) != std::string::npos) {
    throw ConfigError(fmt::format("config key {}: \"{}\" is not a number", key, text));
  }
  return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v < 1.0 || v != std::floor(v)) {
    throw ConfigError(fmt::format("config key {}: \"{}\" is not a positive integer", key, text));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

Config default_config() {
  return Config{voxel_rcnn_profile_spec(), kDefaultRegionDelta, ChannelConfig{}, DataPaths{}};
}

Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }

  for (const auto& [section, body] : tree) {
    auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) {
      throw ConfigError(fmt::format("config: unknown section [{}]", section));
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ConfigError(fmt::format("config: unknown key {}.{}", section, key));
      }
    }
  }

  Config cfg = default_config();
  auto get = [&](const std::string& dotted) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(dotted)) return *v;
    return std::nullopt;
  };

  RangeSpec r = cfg.spec.range();
  const std::array<std::pair<const char*, double*>, 6> range_keys{{{"range.x_min", &r.x_min},
                                                                   {"range.y_min", &r.y_min},
                                                                   {"range.z_min", &r.z_min},
                                                                   {"range.x_max", &r.x_max},
                                                                   {"range.y_max", &r.y_max},
                                                                   {"range.z_max", &r.z_max}}};
  for (const auto& [key, slot] : range_keys) {
    if (auto v = get(key)) *slot = to_double(key, *v);
  }

  Vec3 base = cfg.spec.base_size();
  if (auto v = get("voxel.l")) base[0] = to_double("voxel.l", *v);
  if (auto v = get("voxel.w")) base[1] = to_double("voxel.w", *v);
  if (auto v = get("voxel.h")) base[2] = to_double("voxel.h", *v);
  std::vector<int> scales(cfg.spec.scales().begin(), cfg.spec.scales().end());
  if (auto v = get("voxel.scales")) {
    scales.clear();
    std::istringstream tokens(*v);
    std::string token;
    while (tokens >> token) scales.push_back(static_cast<int>(to_count("voxel.scales", token)));
  }
  try {
    cfg.spec = VoxelSpec::create(
        base, std::move(scales),
        RangeSpec::create(r.x_min, r.y_min, r.z_min, r.x_max, r.y_max, r.z_max));
  } catch (const ArgumentError& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }

  if (auto v = get("region.delta")) {
    cfg.delta = to_double("region.delta", *v);
    if (cfg.delta < 0.0) throw ConfigError("config key region.delta must be >= 0");
  }
  if (auto v = get("channels.c_v")) cfg.channels.c_v = to_count("channels.c_v", *v);
  if (auto v = get("channels.c_i")) cfg.channels.c_i = to_count("channels.c_i", *v);
  if (auto v = get("channels.c_out")) cfg.channels.c_out = to_count("channels.c_out", *v);

  auto path_of = [&](const char* key) -> std::filesystem::path {
    auto v = get(key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  cfg.paths.velodyne_dir = path_of("paths.velodyne_dir");
  cfg.paths.calib_dir = path_of("paths.calib_dir");
  cfg.paths.feature_dir = path_of("paths.feature_dir");
  cfg.paths.mask_dir = path_of("paths.mask_dir");
  cfg.paths.weights = path_of("paths.weights");
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace vrf
