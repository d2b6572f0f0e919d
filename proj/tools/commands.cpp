#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vrfusion/config.hpp"
#include "vrfusion/errors.hpp"
#include "vrfusion/fusion_io.hpp"
#include "vrfusion/kitti_io.hpp"
#include "vrfusion/pipeline.hpp"
#include "vrfusion/projector.hpp"
#include "vrfusion/strategy_bench.hpp"
#include "vrfusion/voxelizer.hpp"

namespace vrf::cli {

namespace fs = std::filesystem;

namespace {

struct Failure {
  ExitCode code;
  std::string message;
};

// Runs `fn`, translating exceptions to exit codes.
template <typename Fn>
std::optional<Failure> guarded(Fn&& fn) {
  try {
    fn();
    return std::nullopt;
  } catch (const ConfigError& e) {
    return Failure{kUsage, e.what()};
  } catch (const ArgumentError& e) {
    return Failure{kUsage, e.what()};
  } catch (const FormatError& e) {
    return Failure{kInputFormat, e.what()};
  } catch (const IoError& e) {
    return Failure{kInputFormat, e.what()};
  } catch (const std::exception& e) {
    return Failure{kInternal, e.what()};
  }
}

void check_frame_id(const std::string& id) {
  static const std::regex six_digits("[0-9]{6}");
  if (!std::regex_match(id, six_digits)) {
    throw ConfigError(fmt::format("frame id \"{}\" is not a 6-digit KITTI id", id));
  }
}

const fs::path& require_dir(const fs::path& dir, const char* key) {
  if (dir.empty()) throw ConfigError(fmt::format("config key paths.{} is not set", key));
  return dir;
}

FrameBundle load_frame(const Config& cfg, const std::string& id) {
  check_frame_id(id);
  const DataPaths& p = cfg.paths;
  FrameBundle frame{
      read_velodyne(require_dir(p.velodyne_dir, "velodyne_dir") / (id + ".bin")),
      read_calib(require_dir(p.calib_dir, "calib_dir") / (id + ".txt")),
      read_feature_map(require_dir(p.feature_dir, "feature_dir") / (id + ".fmap")),
      std::nullopt};
  if (!p.mask_dir.empty()) {
    const fs::path mask = p.mask_dir / (id + ".pgm");
    if (fs::exists(mask)) frame.mask = read_pgm(mask);
  }
  try {
    frame.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(fmt::format("frame {}: {}", id, e.what()));
  }
  return frame;
}

FusionWeights load_weights(const Config& cfg, std::size_t image_channels) {
  const std::size_t scales = cfg.spec.scales().size();
  if (cfg.paths.weights.empty()) {
    return FusionWeights::seeded(0, cfg.channels, scales, image_channels);
  }
  FusionWeights w = read_weights(cfg.paths.weights);
  w.check(cfg.channels, scales, image_channels);
  return w;
}

std::vector<std::string> read_frame_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open frame list {}", path.string()));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void ensure_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory {}", out.string()));
}

void fuse_frame(const Config& cfg, const std::string& id, const fs::path& out) {
  const FrameBundle frame = load_frame(cfg, id);
  const FusionWeights weights = load_weights(cfg, frame.features.channels());
  const PipelineOutput result =
      run_pipeline(frame, cfg.spec, PipelineParams{cfg.delta, cfg.channels}, weights);
  write_fused(result.fused, out / (id + ".vfus"));
  for (const ScaleOutput& s : result.scales) {
    write_regions_csv(s.regions, s.scale, out / fmt::format("{}_regions_s{}.csv", id, s.scale));
  }
}

int cmd_fuse(const std::optional<Config>& cfg, const std::string& frame,
             const std::string& frame_list, const fs::path& out, int jobs) {
  std::vector<std::string> ids;
  if (auto f = guarded([&] {
        if (!cfg) throw ConfigError("fuse requires --config");
        if (frame.empty() == frame_list.empty()) {
          throw ConfigError("give exactly one of --frame or --frames");
        }
        ids = frame.empty() ? read_frame_list(frame_list) : std::vector<std::string>{frame};
        ensure_out_dir(out);
      })) {
    fmt::print(stderr, "error: {}\n", f->message);
    return f->code;
  }

  std::vector<std::optional<Failure>> results(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      results[i] = guarded([&] { fuse_frame(*cfg, ids[i], out); });
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, ids.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!results[i]) continue;
    fmt::print(stderr, "error: frame {}: {}\n", ids[i], results[i]->message);
    code = std::max(code, static_cast<int>(results[i]->code));
  }
  return code;
}

int cmd_compare(const std::optional<Config>& cfg, const std::string& frame,
                std::optional<std::uint64_t> synthetic, std::size_t clusters,
                std::size_t points, const Perturbation& perturbation, const fs::path& out) {
  auto failure = guarded([&] {
    if (frame.empty() == !synthetic.has_value()) {
      throw ConfigError("give exactly one of --frame or --synthetic");
    }
    const Config config = cfg ? *cfg : default_config();
    std::string id;
    std::optional<FrameBundle> bundle;
    if (synthetic) {
      id = fmt::format("synthetic_{}", *synthetic);
      bundle = make_synthetic_frame(*synthetic, clusters, points);
    } else {
      if (!cfg) throw ConfigError("--frame requires --config");
      id = frame;
      bundle = load_frame(config, frame);
    }
    const FusionWeights weights = load_weights(config, bundle->features.channels());
    ensure_out_dir(out);

    const auto reports = compare(*bundle, config.spec, perturbation, weights, config.delta);
    write_report_csv(reports, out / (id + "_report.csv"));

    const BenchContext ctx = BenchContext::from_frame(*bundle, config.spec, weights, config.delta);
    const RgbImage canvas = RgbImage::blank(ctx.image_width, ctx.image_height);
    for (Strategy s : kAllStrategies) {
      const StrategyOutput result = run_strategy(ctx, s, bundle->calib);
      write_overlay_ppm(canvas, footprint_rects(result),
                        out / fmt::format("{}_{}.ppm", id, strategy_name(s)));
    }
    for (const StrategyReport& r : reports) {
      fmt::print("{:<13} coverage={:.6f} overlap={:.4f} background={} misalignment={:.4f}\n",
                 strategy_name(r.strategy), r.coverage, r.overlap_ratio,
                 r.background_fraction ? fmt::format("{:.4f}", *r.background_fraction) : "n/a",
                 r.misalignment_drop);
    }
  });
  if (failure) {
    fmt::print(stderr, "error: {}\n", failure->message);
    return failure->code;
  }
  return kOk;
}

int cmd_project(const std::optional<Config>& cfg, const std::string& id, const fs::path& out) {
  auto failure = guarded([&] {
    if (!cfg) throw ConfigError("project requires --config");
    const FrameBundle frame = load_frame(*cfg, id);
    const ProjectedCloud projected = project(frame.cloud, frame.calib);
    ensure_out_dir(out);
    std::string text = "index,u,v,depth\n";
    for (std::size_t r = 0; r < projected.size(); ++r) {
      text += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", projected.kept_indices[r],
                          projected.pixels[r][0], projected.pixels[r][1], projected.depth[r]);
    }
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_file_bytes(out / (id + "_projected.csv"), bytes);
  });
  if (failure) {
    fmt::print(stderr, "error: frame {}: {}\n", id, failure->message);
    return failure->code;
  }
  return kOk;
}

int cmd_voxelize(const std::optional<Config>& cfg, const std::string& id, const fs::path& out) {
  auto failure = guarded([&] {
    if (!cfg) throw ConfigError("voxelize requires --config");
    const FrameBundle frame = load_frame(*cfg, id);
    // Same input the fusion pipeline voxelizes: points inside the camera view.
    const ProjectedCloud in_view = project(frame.cloud, frame.calib);
    const PointCloud cloud = frame.cloud.select(in_view.kept_indices);
    ensure_out_dir(out);
    std::string text =
        "scale,voxels,in_range_points,out_of_range_points,max_points_per_voxel,"
        "mean_points_per_voxel\n";
    for (int scale : cfg->spec.scales()) {
      const VoxelAssignment a = voxelize(cloud, cfg->spec, scale);
      const std::size_t in_range = a.num_in_range();
      const std::size_t max_count =
          a.count_per_voxel.empty()
              ? 0
              : *std::max_element(a.count_per_voxel.begin(), a.count_per_voxel.end());
      const double mean = a.num_voxels() == 0 ? 0.0 : double(in_range) / double(a.num_voxels());
      text += fmt::format("{},{},{},{},{},{:.6f}\n", scale, a.num_voxels(), in_range,
                          a.num_points() - in_range, max_count, mean);
    }
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_file_bytes(out / (id + "_voxels.csv"), bytes);
  });
  if (failure) {
    fmt::print(stderr, "error: frame {}: {}\n", id, failure->message);
    return failure->code;
  }
  return kOk;
}

int cmd_weights(const std::optional<Config>& cfg, std::size_t image_channels,
                std::uint64_t seed, const fs::path& out) {
  auto failure = guarded([&] {
    const Config config = cfg ? *cfg : default_config();
    const FusionWeights w = FusionWeights::seeded(seed, config.channels,
                                                  config.spec.scales().size(), image_channels);
    if (out.has_parent_path()) ensure_out_dir(out.parent_path());
    write_weights(w, out);
  });
  if (failure) {
    fmt::print(stderr, "error: {}\n", failure->message);
    return failure->code;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Voxel Region fusion front end: voxelize, project, fuse, compare."};
  app.require_subcommand(1);

  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration (INI)")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string frame;
  std::string frame_list;
  std::string out_dir = ".";
  int jobs = 1;
  auto* fuse = app.add_subcommand("fuse", "Write fused voxel/BEV features and region CSVs");
  fuse->add_option("--frame", frame, "6-digit frame id");
  fuse->add_option("--frames", frame_list, "File with one frame id per line")
      ->check(CLI::ExistingFile);
  fuse->add_option("--out", out_dir, "Output directory");
  fuse->add_option("--jobs", jobs, "Frames processed in parallel")->check(CLI::PositiveNumber);

  std::optional<std::uint64_t> synthetic;
  std::size_t clusters = 3;
  std::size_t points = 200;
  Perturbation perturbation;
  auto* cmp = app.add_subcommand("compare", "Compare the four fusion strategies on one frame");
  cmp->add_option("--frame", frame, "6-digit frame id");
  cmp->add_option("--synthetic", synthetic, "Use a synthetic frame with this seed");
  cmp->add_option("--clusters", clusters, "Synthetic clusters")->check(CLI::NonNegativeNumber);
  cmp->add_option("--points", points, "Points per synthetic cluster");
  cmp->add_option("--yaw", perturbation.yaw_deg, "Calibration yaw perturbation (degrees)");
  cmp->add_option("--tx", perturbation.translation[0], "Calibration x offset (m)");
  cmp->add_option("--ty", perturbation.translation[1], "Calibration y offset (m)");
  cmp->add_option("--tz", perturbation.translation[2], "Calibration z offset (m)");
  cmp->add_option("--out", out_dir, "Output directory");

  auto* proj = app.add_subcommand("project", "Dump projected in-view points");
  proj->add_option("--frame", frame, "6-digit frame id")->required();
  proj->add_option("--out", out_dir, "Output directory");

  auto* vox = app.add_subcommand("voxelize", "Dump per-scale voxel statistics");
  vox->add_option("--frame", frame, "6-digit frame id")->required();
  vox->add_option("--out", out_dir, "Output directory");

  std::size_t image_channels = 4;
  std::uint64_t seed = 0;
  std::string weights_out;
  auto* wts = app.add_subcommand("weights", "Write seeded encoder weights (WGTS)");
  wts->add_option("--image-channels", image_channels, "Feature map channels")
      ->check(CLI::PositiveNumber);
  wts->add_option("--seed", seed, "Seed");
  wts->add_option("--out", weights_out, "Output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  std::optional<Config> cfg;
  if (!config_path.empty()) {
    if (auto f = guarded([&] { cfg = load_config(config_path); })) {
      fmt::print(stderr, "error: {}\n", f->message);
      return f->code;
    }
  }

  if (*fuse) return cmd_fuse(cfg, frame, frame_list, out_dir, jobs);
  if (*cmp) return cmd_compare(cfg, frame, synthetic, clusters, points, perturbation, out_dir);
  if (*proj) return cmd_project(cfg, frame, out_dir);
  if (*vox) return cmd_voxelize(cfg, frame, out_dir);
  if (*wts) return cmd_weights(cfg, image_channels, seed, weights_out);
  return kUsage;
}

}  // namespace vrf::cli
