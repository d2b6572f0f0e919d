#include "vrfusion/kitti_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "vrfusion/errors.hpp"

namespace vrf {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kFeatureMapVersion = 1;

// Overlay blend: each covering rect moves a pixel 35% of the way to dark red.
constexpr double kBlendStep = 0.35;
constexpr std::array<double, 3> kOverlayRed{139.0, 0.0, 0.0};

std::vector<double> parse_doubles(std::string_view text, const std::string& where) {
  std::vector<double> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw FormatError(fmt::format("{}: cannot parse number \"{}\"", where, token));
    }
    out.push_back(v);
  }
  return out;
}

Mat44 homogenize(std::span<const double> m, std::size_t rows) {
  // rows == 3 with 3 columns (rotation) or 4 columns (rigid transform)
  Mat44 out = identity44();
  const std::size_t cols = m.size() / rows;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * 4 + c] = m[r * cols + c];
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

// Parses the "P6"/"P5" style header; returns the byte offset of the payload.
struct NetpbmHeader {
  int width = 0;
  int height = 0;
  std::size_t payload_offset = 0;
};

NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes,
                                 std::string_view magic, const fs::path& path) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> std::string {
    skip_space();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(char(bytes[pos++]));
    return t;
  };
  auto number = [&](const char* field) -> int {
    const std::size_t at = pos;
    const std::string t = token();
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
      throw FormatError(fmt::format("{}: bad {} at byte {}", path.string(), field, at));
    }
    return v;
  };
  if (token() != magic) {
    throw FormatError(fmt::format("{}: bad magic at byte 0, expected {}", path.string(), magic));
  }
  NetpbmHeader h;
  h.width = number("width");
  h.height = number("height");
  const int maxval = number("maxval");
  if (h.width <= 0 || h.height <= 0) {
    throw FormatError(fmt::format("{}: non-positive image size", path.string()));
  }
  if (maxval != 255) {
    throw FormatError(fmt::format("{}: maxval must be 255, got {}", path.string(), maxval));
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(fmt::format("{}: missing separator at byte {}", path.string(), pos));
  }
  h.payload_offset = pos + 1;
  return h;
}

std::vector<std::uint8_t> netpbm_payload(std::span<const std::uint8_t> bytes,
                                         const NetpbmHeader& h, int channels,
                                         const fs::path& path) {
  const std::size_t expected = std::size_t(h.width) * h.height * channels;
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have != expected) {
    throw FormatError(fmt::format("{}: payload has {} bytes, expected {}", path.string(),
                                  have, expected));
  }
  return {bytes.begin() + h.payload_offset, bytes.end()};
}

}  // namespace

RgbImage RgbImage::blank(int width, int height) {
  return RgbImage{width, height,
                  std::vector<std::uint8_t>(std::size_t(width) * height * 3, 255)};
}

void FrameBundle::validate() const {
  const double covered_w = features.stride() * double(features.width());
  const double covered_h = features.stride() * double(features.height());
  if (covered_w < calib.image_width() || covered_h < calib.image_height()) {
    throw ArgumentError(fmt::format(
        "feature map {}x{} at stride {} does not cover the {}x{} image",
        features.width(), features.height(), features.stride(), calib.image_width(),
        calib.image_height()));
  }
  if (mask && (mask->width != calib.image_width() || mask->height != calib.image_height())) {
    throw ArgumentError(fmt::format("mask is {}x{} but the image is {}x{}", mask->width,
                                    mask->height, calib.image_width(),
                                    calib.image_height()));
  }
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

PointCloud read_velodyne(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(fmt::format("{}: truncated point record at byte {} (file is {} bytes)",
                                  path.string(), bytes.size() - bytes.size() % 16,
                                  bytes.size()));
  }
  const std::size_t n = bytes.size() / 16;
  std::vector<Point> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<float, 4> rec;
    std::memcpy(rec.data(), bytes.data() + i * 16, 16);
    for (float v : rec) {
      if (!std::isfinite(v)) {
        throw FormatError(fmt::format("{}: point {} has a non-finite value", path.string(), i));
      }
    }
    points[i] = Point{rec[0], rec[1], rec[2], rec[3]};
  }
  return PointCloud::create(std::move(points));
}

void write_velodyne(const PointCloud& cloud, const fs::path& path) {
  detail::ByteWriter w;
  for (const Point& p : cloud.points()) {
    w.f32(p.x);
    w.f32(p.y);
    w.f32(p.z);
    w.f32(p.intensity);
  }
  write_file_bytes(path, w.take());
}

fs::path dims_sidecar_path(const fs::path& calib_path) {
  fs::path p = calib_path;
  p.replace_extension(".dims");
  return p;
}

Calibration read_calib(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError(fmt::format("cannot open {}", path.string()));
  const fs::path sidecar = dims_sidecar_path(path);
  const std::string text = read_text(sidecar);
  const auto dims = parse_doubles(text, sidecar.string());
  if (dims.size() != 2 || dims[0] != std::floor(dims[0]) || dims[1] != std::floor(dims[1])) {
    throw FormatError(fmt::format("{}: expected \"width height\"", sidecar.string()));
  }
  return read_calib(path, static_cast<int>(dims[0]), static_cast<int>(dims[1]));
}

Calibration read_calib(const fs::path& path, int image_width, int image_height) {
  const std::string text = read_text(path);
  std::map<std::string, std::vector<double>> entries;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw FormatError(fmt::format("{}:{}: expected \"KEY: values\"", path.string(), line_no));
    }
    const std::string key = line.substr(0, colon);
    entries[key] = parse_doubles(std::string_view(line).substr(colon + 1),
                                 fmt::format("{}:{}", path.string(), line_no));
  }

  auto get = [&](const std::string& key, std::size_t count) -> const std::vector<double>& {
    auto it = entries.find(key);
    if (it == entries.end()) {
      throw FormatError(fmt::format("{}: missing key {}", path.string(), key));
    }
    if (it->second.size() != count) {
      throw FormatError(fmt::format("{}: key {} has {} values, expected {}", path.string(),
                                    key, it->second.size(), count));
    }
    return it->second;
  };

  const auto& p2 = get("P2", 12);
  const auto& r0 = get("R0_rect", 9);
  const auto& tr = get("Tr_velo_to_cam", 12);

  Mat34 m_intr{};
  std::copy(p2.begin(), p2.end(), m_intr.begin());
  const Mat44 m_tran = compose(homogenize(r0, 3), homogenize(tr, 3));
  try {
    return Calibration::create(m_intr, m_tran, image_width, image_height);
  } catch (const ArgumentError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<std::uint8_t> encode_feature_map(const FeatureTensor& t) {
  detail::ByteWriter w;
  w.magic("FMAP");
  w.u32(kFeatureMapVersion);
  w.u32(static_cast<std::uint32_t>(t.height()));
  w.u32(static_cast<std::uint32_t>(t.width()));
  w.u32(static_cast<std::uint32_t>(t.channels()));
  w.f32(t.stride());
  for (float v : t.data()) w.f32(v);
  return w.take();
}

FeatureTensor decode_feature_map(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "feature map");
  r.expect_magic("FMAP");
  const std::uint32_t version = r.u32("version");
  if (version != kFeatureMapVersion) {
    throw FormatError(fmt::format("feature map: unsupported version {} at byte 4", version));
  }
  const std::size_t h = r.u32("height");
  const std::size_t w = r.u32("width");
  const std::size_t c = r.u32("channels");
  const float stride = r.f32("stride");
  const std::size_t expected = h * w * c * sizeof(float);
  if (r.remaining() != expected) {
    throw FormatError(fmt::format(
        "feature map: payload length mismatch at byte {}: {} bytes present, {} expected",
        r.offset(), r.remaining(), expected));
  }
  std::vector<float> data(h * w * c);
  for (auto& v : data) v = r.f32("payload");
  try {
    return FeatureTensor::create(h, w, c, stride, std::move(data));
  } catch (const ArgumentError& e) {
    throw FormatError(fmt::format("feature map: {}", e.what()));
  }
}

FeatureTensor read_feature_map(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_feature_map(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_feature_map(const FeatureTensor& tensor, const fs::path& path) {
  write_file_bytes(path, encode_feature_map(tensor));
}

void write_regions_csv(std::span<const VoxelRegion> regions, int scale, const fs::path& path) {
  std::string out = "voxel_id,scale,x_min,y_min,x_max,y_max,alpha,n_points\n";
  for (const VoxelRegion& r : regions) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", r.voxel_id, scale,
                       r.rect.x_min, r.rect.y_min, r.rect.x_max, r.rect.y_max, r.alpha,
                       r.n_points);
  }
  write_text(path, out);
}

std::vector<RegionRow> read_regions_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) ||
      line != "voxel_id,scale,x_min,y_min,x_max,y_max,alpha,n_points") {
    throw FormatError(fmt::format("{}:1: unexpected header", path.string()));
  }
  std::vector<RegionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto v = parse_doubles(line, fmt::format("{}:{}", path.string(), line_no));
    if (v.size() != 8) {
      throw FormatError(fmt::format("{}:{}: expected 8 fields, got {}", path.string(),
                                    line_no, v.size()));
    }
    rows.push_back(RegionRow{static_cast<std::size_t>(v[0]), static_cast<int>(v[1]),
                             Rect{v[2], v[3], v[4], v[5]}, v[6],
                             static_cast<std::size_t>(v[7])});
  }
  return rows;
}

PixelSpan touched_pixels(const Rect& rect, int width, int height) {
  PixelSpan s;
  if (rect.x_max < 0.0 || rect.y_max < 0.0 || rect.x_min >= width || rect.y_min >= height) {
    return s;
  }
  s.x0 = std::max(0, static_cast<int>(std::floor(rect.x_min)));
  s.y0 = std::max(0, static_cast<int>(std::floor(rect.y_min)));
  s.x1 = std::min(width - 1, static_cast<int>(std::floor(rect.x_max)));
  s.y1 = std::min(height - 1, static_cast<int>(std::floor(rect.y_max)));
  return s;
}

RgbImage render_overlay(RgbImage canvas, std::span<const Rect> rects) {
  std::vector<int> multiplicity(std::size_t(canvas.width) * canvas.height, 0);
  for (const Rect& r : rects) {
    const PixelSpan s = touched_pixels(r, canvas.width, canvas.height);
    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) ++multiplicity[std::size_t(y) * canvas.width + x];
    }
  }
  for (std::size_t i = 0; i < multiplicity.size(); ++i) {
    for (int step = 0; step < multiplicity[i]; ++step) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        auto& px = canvas.pixels[i * 3 + ch];
        px = static_cast<std::uint8_t>(
            std::lround(px * (1.0 - kBlendStep) + kOverlayRed[ch] * kBlendStep));
      }
    }
  }
  return canvas;
}

void write_overlay_ppm(const RgbImage& canvas, std::span<const VoxelRegion> regions,
                       const fs::path& path) {
  std::vector<Rect> rects;
  rects.reserve(regions.size());
  for (const auto& r : regions) rects.push_back(r.rect);
  write_overlay_ppm(canvas, rects, path);
}

void write_overlay_ppm(const RgbImage& canvas, std::span<const Rect> rects,
                       const fs::path& path) {
  write_ppm(render_overlay(canvas, rects), path);
}

void write_ppm(const RgbImage& image, const fs::path& path) {
  if (image.pixels.size() != std::size_t(image.width) * image.height * 3) {
    throw ArgumentError("RGB image payload does not match its dimensions");
  }
  const std::string header = fmt::format("P6\n{} {}\n255\n", image.width, image.height);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
  write_file_bytes(path, bytes);
}

RgbImage read_ppm(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  const NetpbmHeader h = parse_netpbm_header(bytes, "P6", path);
  return RgbImage{h.width, h.height, netpbm_payload(bytes, h, 3, path)};
}

void write_pgm(const Mask& mask, const fs::path& path) {
  if (mask.pixels.size() != std::size_t(mask.width) * mask.height) {
    throw ArgumentError("mask payload does not match its dimensions");
  }
  const std::string header = fmt::format("P5\n{} {}\n255\n", mask.width, mask.height);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), mask.pixels.begin(), mask.pixels.end());
  write_file_bytes(path, bytes);
}

Mask read_pgm(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  const NetpbmHeader h = parse_netpbm_header(bytes, "P5", path);
  return Mask{h.width, h.height, netpbm_payload(bytes, h, 1, path)};
}

}  // namespace vrf
