#pragma once

#include <filesystem>
#include <string_view>

#include "vrfusion/core.hpp"
#include "vrfusion/fusion.hpp"

namespace vrf {

struct DataPaths {
  std::filesystem::path velodyne_dir;
  std::filesystem::path calib_dir;
  std::filesystem::path feature_dir;
  std::filesystem::path mask_dir;  // empty: no masks
  std::filesystem::path weights;   // empty: seeded weights
};

// Run configuration. On disk it is an INI file with exactly these keys:
//
//   [range]    x_min y_min z_min x_max y_max z_max
//   [voxel]    l w h scales          (scales: space separated, e.g. "1 4 8")
//   [region]   delta
//   [channels] c_v c_i c_out
//   [paths]    velodyne_dir calib_dir feature_dir mask_dir weights
//
// Missing keys keep their defaults (the 0.05 m voxel profile). Relative
// paths resolve against the config file's directory.
struct Config {
  VoxelSpec spec;
  double delta;
  ChannelConfig channels;
  DataPaths paths;
};

Config default_config();

// Throws ConfigError on unknown sections or keys and malformed values.
Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

}  // namespace vrf
