// Copyright 2026 The SHAPr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// On-disk formats.
//
// MatrixFile ("SHPRMAT1"):
//   magic    8 bytes  "SHPRMAT1"
//   dtype    1 byte   0x01 = f32 LE, 0x02 = i32 LE
//   rank     1 byte
//   dims     rank x u64 LE
//   payload  row-major values, product(dims) elements
//
// Model file ("SHPRMDL1"):
//   magic "SHPRMDL1", u64 n_features, u64 n_layers, n_layers x u64 widths,
//   f64 learning_rate, u64 epochs, u64 batch_size, f64 l2_lambda, u64 seed
//   (all LE), then per layer a MatrixFile block of weights (out x in) and one
//   of biases (out).
//
// Dataset directory: features.mat (f32, n x d), labels.mat (i32, n),
// optional subgroup.mat (i32, n) and subgroup_names.txt (one name per code),
// and manifest.json carrying n_classes and the array listing.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/mlp.hpp"

namespace shapr::io {

inline constexpr std::string_view kMatrixMagic = "SHPRMAT1";
inline constexpr std::string_view kModelMagic = "SHPRMDL1";

enum class Dtype : std::uint8_t { kF32 = 0x01, kI32 = 0x02 };

struct MatrixFile {
  Dtype dtype = Dtype::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<float> f32;
  std::vector<std::int32_t> i32;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
  }

  bool operator==(const MatrixFile&) const = default;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), 4);
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    fail(ErrorCode::kTruncated, std::string("unexpected end of data while reading ") + what);
  }
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
  std::array<unsigned char, 8> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const MatrixFile& m) {
  require(m.dims.size() <= 255, ErrorCode::kInvalidArgument, "rank above 255");
  const std::uint64_t n = m.element_count();
  if (m.dtype == Dtype::kF32) {
    require(m.f32.size() == n, ErrorCode::kLengthMismatch, "f32 payload size differs from dims");
    for (float v : m.f32) require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite float payload");
  } else {
    require(m.i32.size() == n, ErrorCode::kLengthMismatch, "i32 payload size differs from dims");
  }
  out.write(kMatrixMagic.data(), 8);
  out.put(static_cast<char>(m.dtype));
  out.put(static_cast<char>(m.dims.size()));
  for (std::uint64_t d : m.dims) detail::put_u64(out, d);
  if (m.dtype == Dtype::kF32) {
    for (float v : m.f32) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (std::int32_t v : m.i32) detail::put_u32(out, static_cast<std::uint32_t>(v));
  }
  require(out.good(), ErrorCode::kIo, "write failed");
}

inline MatrixFile read_matrix(std::istream& in) {
  std::array<char, 8> magic{};
  detail::read_exact(in, magic.data(), 8, "magic");
  if (std::string_view(magic.data(), 8) != kMatrixMagic) {
    fail(ErrorCode::kBadMagic, "expected SHPRMAT1, found '" + std::string(magic.data(), 8) + "'");
  }
  std::array<char, 2> head{};
  detail::read_exact(in, head.data(), 2, "dtype and rank");
  MatrixFile m;
  const auto code = static_cast<std::uint8_t>(head[0]);
  if (code != 0x01 && code != 0x02) {
    fail(ErrorCode::kDtypeMismatch, "unknown dtype code " + std::to_string(code));
  }
  m.dtype = static_cast<Dtype>(code);
  const auto rank = static_cast<std::uint8_t>(head[1]);
  std::uint64_t n = 1;
  for (std::uint8_t r = 0; r < rank; ++r) {
    const std::uint64_t d = detail::get_u64(in, "dims");
    require(d == 0 || n <= std::numeric_limits<std::uint64_t>::max() / 4 / d, ErrorCode::kBadFormat,
            "dims overflow");
    n *= d;
    m.dims.push_back(d);
  }
  // Read in bounded blocks so a corrupt header cannot force a huge allocation.
  constexpr std::uint64_t kBlock = 1 << 16;
  std::vector<unsigned char> buf;
  std::uint64_t done = 0;
  while (done < n) {
    const std::uint64_t count = std::min(kBlock, n - done);
    buf.resize(count * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::uint64_t>(in.gcount()) != buf.size()) {
      fail(ErrorCode::kTruncated, "payload holds fewer than the " + std::to_string(n) +
                                      " values the dims declare");
    }
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * k]) |
                                 (static_cast<std::uint32_t>(buf[4 * k + 1]) << 8) |
                                 (static_cast<std::uint32_t>(buf[4 * k + 2]) << 16) |
                                 (static_cast<std::uint32_t>(buf[4 * k + 3]) << 24);
      if (m.dtype == Dtype::kF32) {
        m.f32.push_back(std::bit_cast<float>(bits));
      } else {
        m.i32.push_back(static_cast<std::int32_t>(bits));
      }
    }
    done += count;
  }
  return m;
}

inline void write_matrix(const std::filesystem::path& path, const MatrixFile& m) {
  std::ofstream out = detail::open_out(path);
  write_matrix(out, m);
}

inline MatrixFile read_matrix(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  MatrixFile m = read_matrix(in);
  require(in.peek() == std::char_traits<char>::eof(), ErrorCode::kBadFormat,
          "trailing bytes after payload in " + path.string());
  return m;
}

// Conversions between in-memory types and MatrixFile. Doubles are narrowed
// to f32.

inline MatrixFile to_matrix_file(const RowMatrix& x) {
  MatrixFile m;
  m.dtype = Dtype::kF32;
  m.dims = {static_cast<std::uint64_t>(x.rows()), static_cast<std::uint64_t>(x.cols())};
  m.f32.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) m.f32.push_back(static_cast<float>(x(r, c)));
  }
  return m;
}

inline MatrixFile to_matrix_file(std::span<const double> values) {
  MatrixFile m;
  m.dtype = Dtype::kF32;
  m.dims = {values.size()};
  for (double v : values) m.f32.push_back(static_cast<float>(v));
  return m;
}

inline MatrixFile to_matrix_file(std::span<const std::int32_t> values) {
  MatrixFile m;
  m.dtype = Dtype::kI32;
  m.dims = {values.size()};
  m.i32.assign(values.begin(), values.end());
  return m;
}

inline MatrixFile to_matrix_file(const std::vector<bool>& flags) {
  std::vector<std::int32_t> v(flags.begin(), flags.end());
  return to_matrix_file(std::span<const std::int32_t>(v));
}

inline void expect_dtype(const MatrixFile& m, Dtype dtype) {
  if (m.dtype != dtype) {
    fail(ErrorCode::kDtypeMismatch, std::string("expected ") + (dtype == Dtype::kF32 ? "f32" : "i32") +
                                        " payload, found " + (m.dtype == Dtype::kF32 ? "f32" : "i32"));
  }
}

inline RowMatrix as_row_matrix(const MatrixFile& m) {
  expect_dtype(m, Dtype::kF32);
  require(m.dims.size() == 2, ErrorCode::kBadFormat, "expected a rank-2 matrix");
  RowMatrix x(static_cast<Eigen::Index>(m.dims[0]), static_cast<Eigen::Index>(m.dims[1]));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = m.f32[static_cast<std::size_t>(r * x.cols() + c)];
    }
  }
  return x;
}

inline std::vector<double> as_doubles(const MatrixFile& m) {
  expect_dtype(m, Dtype::kF32);
  require(m.dims.size() == 1, ErrorCode::kBadFormat, "expected a rank-1 vector");
  return {m.f32.begin(), m.f32.end()};
}

inline std::vector<std::int32_t> as_ints(const MatrixFile& m) {
  expect_dtype(m, Dtype::kI32);
  require(m.dims.size() == 1, ErrorCode::kBadFormat, "expected a rank-1 vector");
  return m.i32;
}

inline std::vector<bool> as_flags(const MatrixFile& m) {
  const std::vector<std::int32_t> v = as_ints(m);
  std::vector<bool> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] != 0;
  return out;
}

// --- models -------------------------------------------------------------

inline void write_model(std::ostream& out, const Model& m) {
  out.write(kModelMagic.data(), 8);
  detail::put_u64(out, m.n_features());
  detail::put_u64(out, m.n_layers());
  for (std::size_t l = 0; l < m.n_layers(); ++l) detail::put_u64(out, m.layer_width(l));
  const MlpConfig& cfg = m.config();
  detail::put_u64(out, std::bit_cast<std::uint64_t>(cfg.learning_rate));
  detail::put_u64(out, cfg.epochs);
  detail::put_u64(out, cfg.batch_size);
  detail::put_u64(out, std::bit_cast<std::uint64_t>(cfg.l2_lambda));
  detail::put_u64(out, cfg.seed);
  for (const Layer& layer : m.layers()) {
    const RowMatrix w = layer.weights;
    write_matrix(out, to_matrix_file(w));
    const std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    write_matrix(out, to_matrix_file(std::span<const double>(b)));
  }
  require(out.good(), ErrorCode::kIo, "write failed");
}

inline Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  detail::read_exact(in, magic.data(), 8, "model magic");
  if (std::string_view(magic.data(), 8) != kModelMagic) {
    fail(ErrorCode::kBadMagic, "expected SHPRMDL1, found '" + std::string(magic.data(), 8) + "'");
  }
  const std::uint64_t n_features = detail::get_u64(in, "n_features");
  const std::uint64_t n_layers = detail::get_u64(in, "n_layers");
  require(n_layers >= 1 && n_layers <= 1024, ErrorCode::kBadFormat, "implausible layer count");
  MlpConfig cfg;
  for (std::uint64_t l = 0; l < n_layers; ++l) cfg.layer_widths.push_back(detail::get_u64(in, "widths"));
  cfg.learning_rate = std::bit_cast<double>(detail::get_u64(in, "learning_rate"));
  cfg.epochs = detail::get_u64(in, "epochs");
  cfg.batch_size = detail::get_u64(in, "batch_size");
  cfg.l2_lambda = std::bit_cast<double>(detail::get_u64(in, "l2_lambda"));
  cfg.seed = detail::get_u64(in, "seed");
  std::vector<Layer> layers;
  for (std::uint64_t l = 0; l < n_layers; ++l) {
    const RowMatrix w = as_row_matrix(read_matrix(in));
    const std::vector<double> b = as_doubles(read_matrix(in));
    require(static_cast<std::uint64_t>(w.rows()) == cfg.layer_widths[l], ErrorCode::kBadFormat,
            "weight block disagrees with declared width");
    Layer layer{w, Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()))};
    layers.push_back(std::move(layer));
  }
  return Model(n_features, std::move(layers), std::move(cfg));
}

inline void write_model(const std::filesystem::path& path, const Model& m) {
  std::ofstream out = detail::open_out(path);
  write_model(out, m);
}

inline Model read_model(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  return read_model(in);
}

// --- datasets -----------------------------------------------------------

inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "features.mat", to_matrix_file(ds.features()));
  write_matrix(dir / "labels.mat", to_matrix_file(std::span<const std::int32_t>(ds.labels())));
  nlohmann::json manifest;
  manifest["format"] = std::string(kMatrixMagic);
  manifest["n_classes"] = ds.n_classes();
  manifest["arrays"] = nlohmann::json::array();
  manifest["arrays"].push_back({{"name", "features"}, {"file", "features.mat"}, {"dtype", "f32"},
                                {"dims", {ds.size(), ds.n_features()}}});
  manifest["arrays"].push_back(
      {{"name", "labels"}, {"file", "labels.mat"}, {"dtype", "i32"}, {"dims", {ds.size()}}});
  if (ds.subgroup()) {
    write_matrix(dir / "subgroup.mat", to_matrix_file(std::span<const std::int32_t>(*ds.subgroup())));
    manifest["arrays"].push_back(
        {{"name", "subgroup"}, {"file", "subgroup.mat"}, {"dtype", "i32"}, {"dims", {ds.size()}}});
    if (!ds.subgroup_names().empty()) {
      std::ofstream names = detail::open_out(dir / "subgroup_names.txt");
      for (const std::string& n : ds.subgroup_names()) names << n << '\n';
    }
  }
  std::ofstream out = detail::open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

// Reads a dataset directory. Array files are located through manifest.json
// when present (name -> file); n_classes falls back to max label + 1.
inline Dataset read_dataset(const std::filesystem::path& dir) {
  std::optional<int> n_classes;
  std::map<std::string, std::string> files = {{"features", "features.mat"}, {"labels", "labels.mat"},
                                              {"subgroup", "subgroup.mat"}};
  if (std::filesystem::exists(dir / "manifest.json")) {
    std::ifstream in = detail::open_in(dir / "manifest.json");
    nlohmann::json manifest;
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kBadFormat, "manifest.json: " + std::string(e.what()));
    }
    if (manifest.contains("n_classes")) n_classes = manifest["n_classes"].get<int>();
    if (manifest.contains("arrays")) {
      for (const auto& entry : manifest["arrays"]) {
        files[entry.at("name").get<std::string>()] = entry.at("file").get<std::string>();
      }
    }
  }
  require(std::filesystem::exists(dir / files["features"]), ErrorCode::kIo,
          "missing " + (dir / files["features"]).string());
  RowMatrix x = as_row_matrix(read_matrix(dir / files["features"]));
  std::vector<std::int32_t> y = as_ints(read_matrix(dir / files["labels"]));
  if (!n_classes) {
    int max_label = 1;
    for (auto v : y) max_label = std::max(max_label, static_cast<int>(v));
    n_classes = max_label + 1;
  }
  std::optional<std::vector<std::int32_t>> g;
  std::vector<std::string> names;
  if (std::filesystem::exists(dir / files["subgroup"])) {
    g = as_ints(read_matrix(dir / files["subgroup"]));
    if (std::filesystem::exists(dir / "subgroup_names.txt")) {
      std::ifstream in = detail::open_in(dir / "subgroup_names.txt");
      for (std::string line; std::getline(in, line);) {
        if (!line.empty()) names.push_back(line);
      }
    }
  }
  return Dataset(std::move(x), std::move(y), *n_classes, std::move(g), std::move(names));
}

// --- scores and attack outcomes ----------------------------------------

inline void write_scores(const std::filesystem::path& path, const ScoreVector& s) {
  write_matrix(path, to_matrix_file(std::span<const double>(s.values)));
  nlohmann::json meta = {{"metric", metric_name(s.metric_id)}, {"threshold", s.threshold}};
  std::ofstream out = detail::open_out(std::filesystem::path(path.string() + ".json"));
  out << meta.dump(2) << '\n';
}

inline MetricId parse_metric(const std::string& name) {
  if (name == "shapr") return MetricId::kShapr;
  if (name == "sprs") return MetricId::kSprs;
  if (name == "loo") return MetricId::kLoo;
  fail(ErrorCode::kInvalidArgument, "unknown metric '" + name + "'");
}

// The sidecar "<path>.json" supplies metric and threshold; without it the
// caller's fallback metric is assumed.
inline ScoreVector read_scores(const std::filesystem::path& path, MetricId fallback = MetricId::kShapr) {
  ScoreVector s = ScoreVector::make(as_doubles(read_matrix(path)), fallback);
  const std::filesystem::path sidecar(path.string() + ".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in = detail::open_in(sidecar);
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kBadFormat, sidecar.string() + ": " + e.what());
    }
    if (meta.contains("metric")) s.metric_id = parse_metric(meta["metric"].get<std::string>());
    s.threshold = meta.contains("threshold") ? meta["threshold"].get<double>() : default_threshold(s.metric_id);
  }
  return s;
}

inline void write_attack(const std::filesystem::path& dir, const AttackOutcome& o,
                         std::optional<double> balanced_accuracy) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "member_predictions.mat", to_matrix_file(o.member_predictions));
  write_matrix(dir / "nonmember_predictions.mat", to_matrix_file(o.nonmember_predictions));
  nlohmann::json meta = {{"attack", attack_name(o.attack_id)}};
  if (balanced_accuracy) meta["balanced_accuracy"] = *balanced_accuracy;
  std::ofstream out = detail::open_out(dir / "attack.json");
  out << meta.dump(2) << '\n';
}

inline AttackOutcome read_attack(const std::filesystem::path& dir) {
  AttackOutcome o;
  o.member_predictions = as_flags(read_matrix(dir / "member_predictions.mat"));
  o.nonmember_predictions = as_flags(read_matrix(dir / "nonmember_predictions.mat"));
  if (std::filesystem::exists(dir / "attack.json")) {
    std::ifstream in = detail::open_in(dir / "attack.json");
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kBadFormat, "attack.json: " + std::string(e.what()));
    }
    if (meta.value("attack", std::string("iment")) == "lira") o.attack_id = AttackId::kIlira;
  }
  return o;
}

// --- CSV ------------------------------------------------------------------

// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  require(ec == std::errc(), ErrorCode::kIo, "number formatting failed");
  return std::string(buf.data(), end);
}

inline std::string format_number(std::optional<double> v) { return v ? format_number(*v) : std::string(); }

struct HistogramRow {
  double bin_center = 0.0;
  std::size_t member_count = 0;
  std::size_t flagged_count = 0;
};

// Equal-width bins over [min, max] of the scores; member_count counts every
// training record in the bin, flagged_count those above the threshold.
inline std::vector<HistogramRow> score_histogram(const ScoreVector& s, std::size_t n_bins = 50) {
  require(n_bins >= 1, ErrorCode::kInvalidArgument, "need at least one bin");
  std::vector<HistogramRow> rows(n_bins);
  if (s.values.empty()) return rows;
  const auto [lo_it, hi_it] = std::minmax_element(s.values.begin(), s.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) rows[b].bin_center = lo + (static_cast<double>(b) + 0.5) * width;
  for (double v : s.values) {
    std::size_t b = 0;
    if (width > 0.0) b = std::min(n_bins - 1, static_cast<std::size_t>((v - lo) / width));
    rows[b].member_count += 1;
    rows[b].flagged_count += v > s.threshold ? 1 : 0;
  }
  return rows;
}

inline void write_histogram_csv(std::ostream& out, const std::vector<HistogramRow>& rows) {
  out << "bin_center,member_count,flagged_count\n";
  for (const auto& r : rows) out << format_number(r.bin_center) << ',' << r.member_count << ',' << r.flagged_count << '\n';
}

inline void write_series_csv(std::ostream& out, const ExperimentSeries& series) {
  out << series.knob_name() << ",mean_score,attack_accuracy,f1,recall,clean_mean_score\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const SeriesPoint& p = series.summaries()[i];
    out << format_number(series.knob_values()[i]) << ',' << format_number(p.mean_score) << ','
        << format_number(p.attack_accuracy) << ',' << format_number(p.f1) << ',' << format_number(p.recall)
        << ',' << format_number(p.secondary_mean_score) << '\n';
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = detail::open_out(path);
  out << text;
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace shapr::io
