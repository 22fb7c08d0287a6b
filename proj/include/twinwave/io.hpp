#pragma once

// On-disk formats: FrameStack (raw float32 LE + JSON sidecar), CSV tables,
// PGM heatmaps with a JSON sidecar, and the SHA-256 run manifest.

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinwave/ensemble.hpp"
#include "twinwave/stats.hpp"

#ifndef TWINWAVE_VERSION
#define TWINWAVE_VERSION "unknown"
#endif

namespace twinwave {

namespace fs = std::filesystem;

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* frames_data_name = "frames.f32";
inline constexpr const char* frames_sidecar_name = "frames.json";

namespace detail {

inline void write_bytes(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw io_error("write failed: " + path.string());
}

inline void write_text(const fs::path& path, const std::string& text) { write_bytes(path, text.data(), text.size()); }

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw io_error("cannot create directory: " + dir.string());
}

inline Axis axis_from_json(const nlohmann::json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>(), j.at("physical_pitch").get<double>(),
          j.at("downsample").get<int>()};
}

}  // namespace detail

/// Shortest decimal that round-trips the double exactly; "nan" for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline DetectorGeometry geometry_from_json(const nlohmann::json& j) {
  DetectorGeometry g;
  g.wavelength = detail::axis_from_json(j.at("wavelength_nm"));
  g.radial = detail::axis_from_json(j.at("radial_mrad"));
  g.degenerate_nm = j.at("degenerate_nm").get<double>();
  g.arc_half_width = j.at("arc_half_width_rad").get<double>();
  g.arc_samples = j.at("arc_samples").get<int>();
  return g;
}

/// Writes <dir>/frames.f32 and <dir>/frames.json.
inline void write_frames(const fs::path& dir, const FrameStack& stack) {
  detail::ensure_dir(dir);
  if (stack.data.size() != stack.shots * stack.shot_size()) throw std::invalid_argument("write_frames: size mismatch");
  if constexpr (std::endian::native == std::endian::little) {
    detail::write_bytes(dir / frames_data_name, stack.data.data(), stack.data.size() * sizeof(float));
  } else {
    std::vector<std::uint32_t> swapped(stack.data.size());
    for (std::size_t i = 0; i < swapped.size(); ++i) {
      std::uint32_t u;
      std::memcpy(&u, &stack.data[i], 4);
      swapped[i] = __builtin_bswap32(u);
    }
    detail::write_bytes(dir / frames_data_name, swapped.data(), swapped.size() * 4);
  }
  nlohmann::json side = {{"format", "twinwave-framestack"},
                         {"format_version", 1},
                         {"dtype", "float32-le"},
                         {"data_file", frames_data_name},
                         {"shots", stack.shots},
                         {"strips", {"signal", "idler"}},
                         {"rows", stack.rows()},
                         {"cols", stack.cols()},
                         {"geometry", to_json(stack.geometry)},
                         {"metadata", stack.metadata}};
  detail::write_text(dir / frames_sidecar_name, side.dump(2) + "\n");
}

inline FrameStack read_frames(const fs::path& dir) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(detail::read_text(dir / frames_sidecar_name));
  } catch (const nlohmann::json::exception& e) {
    throw io_error("malformed frame sidecar " + (dir / frames_sidecar_name).string() + ": " + e.what());
  }
  FrameStack stack;
  try {
    if (side.at("format").get<std::string>() != "twinwave-framestack") throw io_error("not a twinwave frame stack");
    stack.geometry = geometry_from_json(side.at("geometry"));
    stack.metadata = side.at("metadata");
    stack.allocate(side.at("shots").get<std::size_t>());
    if (side.at("rows").get<std::size_t>() != stack.rows() || side.at("cols").get<std::size_t>() != stack.cols())
      throw io_error("frame sidecar dimensions disagree with its geometry");
  } catch (const nlohmann::json::exception& e) {
    throw io_error("frame sidecar is missing fields: " + std::string(e.what()));
  }
  const auto path = dir / side.value("data_file", std::string(frames_data_name));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path.string());
  const std::size_t bytes = stack.data.size() * sizeof(float);
  if (fs::file_size(path) != bytes)
    throw io_error("frame data size " + std::to_string(fs::file_size(path)) + " != expected " + std::to_string(bytes));
  in.read(reinterpret_cast<char*>(stack.data.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw io_error("short read: " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& f : stack.data) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
  return stack;
}

/// Minimal CSV: header row then numeric rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { line(header); }

  void row(std::span<const double> values) {
    if (values.size() != cols_) throw std::invalid_argument("CsvWriter: row width differs from header");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) text_ += ',';
      text_ += format_number(values[i]);
    }
    text_ += '\n';
  }
  void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
  const std::string& str() const { return text_; }
  void save(const fs::path& path) const { detail::write_text(path, text_); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }
  std::size_t cols_;
  std::string text_;
};

inline void write_g2_map_csv(const fs::path& path, const G2Map& map, const DetectorGeometry& geo) {
  CsvWriter csv({"row", "col", "radial_mrad", "wavelength_nm", "g2bar", "stderr", "M_g"});
  auto axis_at = [](const Axis& a, double pixel) {
    return a.midpoint() + (pixel - 0.5 * (static_cast<double>(a.count()) - 1.0)) * a.pitch();
  };
  for (std::size_t r = 0; r < map.cell_rows; ++r)
    for (std::size_t c = 0; c < map.cell_cols; ++c) {
      const std::size_t i = r * map.cell_cols + c;
      csv.row({map.row_center[i], map.col_center[i], axis_at(geo.radial, map.row_center[i]),
               axis_at(geo.wavelength, map.col_center[i]), map.g2[i], map.std_error[i], map.mode_number[i]});
    }
  csv.save(path);
}

inline void write_profile_csv(const fs::path& path, const CorrelationProfile& p) {
  const std::string unit = p.axis == CorrelationAxis::frequency ? "nm" : "mrad";
  CsvWriter csv({std::string("lag_") + to_string(p.axis) + "_" + unit, "value"});
  for (std::size_t i = 0; i < p.lag.size(); ++i) csv.row({p.lag[i], p.value[i]});
  csv.save(path);
}

/// Grey level = round(255 (v - min) / (max - min)) over finite values;
/// non-finite cells are 0; a constant image maps to 0 everywhere.
inline constexpr const char* pgm_mapping = "linear: level = round(255*(v-min)/(max-min)); non-finite -> 0; max==min -> 0";

/// Writes a binary PGM (P5), row-major, and <path>.json with min/max.
inline void emit_heatmap(const fs::path& path, std::span<const double> values, std::size_t width, std::size_t height,
                         const nlohmann::json& extra = {}) {
  if (values.size() != width * height || width == 0 || height == 0)
    throw std::invalid_argument("emit_heatmap: value count does not match width x height");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const bool any = std::isfinite(lo);
  std::string img = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t head = img.size();
  img.resize(head + values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    int level = 0;
    if (std::isfinite(v) && hi > lo) level = static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo)));
    img[head + i] = static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0, 255)));
  }
  detail::write_text(path, img);
  nlohmann::json side = {{"image", path.filename().string()},
                         {"width", width},
                         {"height", height},
                         {"min", any ? nlohmann::json(lo) : nlohmann::json(nullptr)},
                         {"max", any ? nlohmann::json(hi) : nlohmann::json(nullptr)},
                         {"mapping", pgm_mapping}};
  if (!extra.is_null()) side["info"] = extra;
  detail::write_text(fs::path(path.string() + ".json"), side.dump(2) + "\n");
}

inline void emit_heatmap(const fs::path& path, const G2Map& map, const nlohmann::json& extra = {}) {
  emit_heatmap(path, map.g2, map.cell_cols, map.cell_rows, extra);
}

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for hashing: " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw io_error("sha256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline constexpr const char* manifest_name = "manifest.json";

/// Run manifest: config echo, seed, RNG, tool version, timestamps and the
/// checksum of every file in `dir` (recursively) except the manifest itself.
/// Call after all other outputs are closed.
struct RunManifest {
  RunManifest() = default;
  RunManifest(std::string cmd, nlohmann::json cfg, std::uint64_t master_seed)
      : command(std::move(cmd)), config(std::move(cfg)), seed(master_seed) {}

  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string started = utc_timestamp();
  bool complete = true;
  std::string failure;

  void write(const fs::path& dir) const {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != manifest_name) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    nlohmann::json inventory = nlohmann::json::array();
    for (const auto& f : files)
      inventory.push_back({{"path", fs::relative(f, dir).generic_string()},
                           {"bytes", fs::file_size(f)},
                           {"sha256", sha256_file(f)}});
    nlohmann::json m = {{"tool", "twinwave"},
                        {"version", TWINWAVE_VERSION},
                        {"command", command},
                        {"config", config},
                        {"seed", seed},
                        {"rng_algorithm", rng_algorithm},
                        {"started_utc", started},
                        {"finished_utc", utc_timestamp()},
                        {"complete", complete},
                        {"files", inventory}};
    if (!complete) m["failure"] = failure;
    detail::write_text(dir / manifest_name, m.dump(2) + "\n");
  }
};

/// Paths whose checksum no longer matches the manifest (empty: all verify).
inline std::vector<std::string> verify_manifest(const fs::path& dir) {
  const auto m = nlohmann::json::parse(detail::read_text(dir / manifest_name));
  std::vector<std::string> bad;
  for (const auto& f : m.at("files")) {
    const auto p = dir / f.at("path").get<std::string>();
    if (!fs::is_regular_file(p) || sha256_file(p) != f.at("sha256").get<std::string>())
      bad.push_back(f.at("path").get<std::string>());
  }
  return bad;
}

}  // namespace twinwave
