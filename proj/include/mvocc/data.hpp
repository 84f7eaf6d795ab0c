// Copyright 2026 The mvocc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 Multi-view datasets: on-disk format, min-max normalization, evaluation
 splits and a synthetic generator.

 Dataset directory layout
 ~~~~~~~~~~~~~~~~~~~~~~~~
   manifest.json   {"name": ..., "views": [{"name", "dim", "file", "format"}],
                    "labels_file": ..., "split_file": ... (optional)}
   <view files>    format "csv": one sample per line, comma separated decimals
                   format "bin": "MVOCC1", u32 rows, u32 dim, little-endian
                                 f32 values, row-major
   labels file     one integer class label per line
   split file      one token per line, "train" or "test"
*/

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvocc/errors.hpp"
#include "mvocc/rng.hpp"
#include "mvocc/tensor.hpp"

namespace mvocc {

enum class SplitTag { Train, Test };

struct MultiViewDataset {
  std::string name;
  std::vector<std::string> view_names;
  std::vector<Tensor> views;  // [N x d_v] each, shared row order
  std::vector<int> labels;    // class per row
  std::optional<std::vector<SplitTag>> split;

  std::size_t num_views() const noexcept { return views.size(); }
  std::size_t num_rows() const noexcept { return views.empty() ? 0 : views.front().rows(); }
  std::vector<std::size_t> view_dims() const {
    std::vector<std::size_t> d;
    for (const Tensor& v : views) d.push_back(v.cols());
    return d;
  }

  void validate() const {
    if (views.size() < 2) {
      throw DataError("dataset '" + name + "' has " + std::to_string(views.size()) +
                      " views; at least 2 are required");
    }
    for (std::size_t v = 0; v < views.size(); ++v) {
      if (views[v].rank() != 2) throw DataError("view " + view_label(v) + " is not a matrix");
      if (views[v].rows() != views.front().rows()) {
        throw DataError("row-count mismatch: view " + view_label(0) + " has " +
                        std::to_string(views.front().rows()) + " rows, view " + view_label(v) +
                        " has " + std::to_string(views[v].rows()));
      }
    }
    if (labels.size() != num_rows()) {
      throw DataError("dataset '" + name + "' has " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(num_rows()) + " rows");
    }
    if (split && split->size() != num_rows()) {
      throw DataError("split file length does not match row count");
    }
  }

  std::string view_label(std::size_t v) const {
    return v < view_names.size() ? "'" + view_names[v] + "'" : std::to_string(v);
  }

  /// Distinct class labels in ascending order.
  std::vector<int> classes() const {
    std::set<int> s(labels.begin(), labels.end());
    return {s.begin(), s.end()};
  }
};

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline constexpr std::array<char, 6> kBinMagic{'M', 'V', 'O', 'C', 'C', '1'};

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                       static_cast<unsigned char>(v >> 16),
                                       static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError("truncated binary file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary = false) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open '" + p.string() + "'");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Tensor read_csv_matrix(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = detail::trim(cell);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) {
        throw DataError("'" + path.string() + "' line " + std::to_string(rows + 1) +
                        ": cannot parse '" + cell + "'");
      }
      data.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw DataError("'" + path.string() + "' line " + std::to_string(rows + 1) + " has " +
                      std::to_string(count) + " values, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0 || cols == 0) throw DataError("'" + path.string() + "' is empty");
  return Tensor({rows, cols}, std::move(data));
}

inline void write_csv_matrix(const std::filesystem::path& path, const Tensor& m) {
  auto out = detail::open_out(path);
  out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
}

inline Tensor read_bin_matrix(const std::filesystem::path& path) {
  auto in = detail::open_in(path, true);
  std::array<char, 6> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != detail::kBinMagic) {
    throw DataError("'" + path.string() + "' is not an MVOCC1 binary matrix");
  }
  const std::uint32_t rows = detail::get_u32(in);
  const std::uint32_t cols = detail::get_u32(in);
  if (rows == 0 || cols == 0) throw DataError("'" + path.string() + "' is empty");
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) {
    const std::uint32_t bits = detail::get_u32(in);
    v = static_cast<double>(std::bit_cast<float>(bits));
  }
  return Tensor({rows, cols}, std::move(data));
}

inline void write_bin_matrix(const std::filesystem::path& path, const Tensor& m) {
  auto out = detail::open_out(path, true);
  out.write(detail::kBinMagic.data(), detail::kBinMagic.size());
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline Tensor read_view(const std::filesystem::path& path, const std::string& format) {
  if (format == "csv") return read_csv_matrix(path);
  if (format == "bin" || format == "binary") return read_bin_matrix(path);
  throw DataError("unknown view file type '" + format + "' for '" + path.string() +
                  "' (expected csv or bin)");
}

inline MultiViewDataset load_dataset(const std::filesystem::path& dir_or_manifest) {
  namespace fs = std::filesystem;
  const fs::path manifest =
      fs::is_directory(dir_or_manifest) ? dir_or_manifest / "manifest.json" : dir_or_manifest;
  const fs::path root = manifest.parent_path();
  nlohmann::json j;
  try {
    auto in = detail::open_in(manifest);
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest '" + manifest.string() + "': " + e.what());
  }
  MultiViewDataset ds;
  try {
    ds.name = j.value("name", manifest.parent_path().filename().string());
    for (const auto& v : j.at("views")) {
      const std::string vname = v.at("name").get<std::string>();
      const std::string file = v.at("file").get<std::string>();
      const std::string format = v.value("format", fs::path(file).extension() == ".csv" ? "csv" : "bin");
      Tensor m = read_view(root / file, format);
      if (v.contains("dim") && v.at("dim").get<std::size_t>() != m.cols()) {
        throw DataError("view '" + vname + "' declares dim " +
                        std::to_string(v.at("dim").get<std::size_t>()) + " but file has " +
                        std::to_string(m.cols()) + " columns");
      }
      ds.view_names.push_back(vname);
      ds.views.push_back(std::move(m));
    }
    auto lin = detail::open_in(root / j.at("labels_file").get<std::string>());
    std::string line;
    while (std::getline(lin, line)) {
      line = detail::trim(line);
      if (line.empty()) continue;
      try {
        std::size_t used = 0;
        ds.labels.push_back(std::stoi(line, &used));
        if (used != line.size()) throw std::invalid_argument(line);
      } catch (const std::exception&) {
        throw DataError("bad label '" + line + "'");
      }
    }
    if (j.contains("split_file") && !j.at("split_file").is_null()) {
      auto sin = detail::open_in(root / j.at("split_file").get<std::string>());
      std::vector<SplitTag> split;
      while (std::getline(sin, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line == "train") split.push_back(SplitTag::Train);
        else if (line == "test") split.push_back(SplitTag::Test);
        else throw DataError("bad split tag '" + line + "' (expected train or test)");
      }
      ds.split = std::move(split);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest '" + manifest.string() + "': " + e.what());
  }
  ds.validate();
  return ds;
}

/// Writes a dataset directory; `format` is "csv" or "bin".
inline void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir,
                         const std::string& format = "csv") {
  namespace fs = std::filesystem;
  ds.validate();
  fs::create_directories(dir);
  nlohmann::json j;
  j["name"] = ds.name;
  j["views"] = nlohmann::json::array();
  for (std::size_t v = 0; v < ds.num_views(); ++v) {
    const std::string vname = v < ds.view_names.size() ? ds.view_names[v] : "view" + std::to_string(v);
    const std::string file = vname + (format == "csv" ? ".csv" : ".bin");
    if (format == "csv") write_csv_matrix(dir / file, ds.views[v]);
    else if (format == "bin") write_bin_matrix(dir / file, ds.views[v]);
    else throw DataError("unknown view file type '" + format + "'");
    j["views"].push_back({{"name", vname}, {"dim", ds.views[v].cols()}, {"file", file}, {"format", format}});
  }
  {
    auto out = detail::open_out(dir / "labels.txt");
    for (int l : ds.labels) out << l << '\n';
  }
  j["labels_file"] = "labels.txt";
  if (ds.split) {
    auto out = detail::open_out(dir / "split.txt");
    for (SplitTag t : *ds.split) out << (t == SplitTag::Train ? "train" : "test") << '\n';
    j["split_file"] = "split.txt";
  }
  auto out = detail::open_out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Normalization

/// Per-view, per-feature training minimum and maximum.
struct NormStats {
  std::vector<Tensor> min;  // [d_v] each
  std::vector<Tensor> max;

  bool empty() const noexcept { return min.empty(); }
};

inline NormStats normalize_fit(std::span<const Tensor> train) {
  NormStats s;
  for (const Tensor& x : train) {
    if (x.rank() != 2 || x.rows() < 1) throw DataError("normalize_fit: empty view");
    Tensor lo({x.cols()}), hi({x.cols()});
    for (std::size_t c = 0; c < x.cols(); ++c) {
      lo[c] = hi[c] = x(0, c);
      for (std::size_t r = 1; r < x.rows(); ++r) {
        lo[c] = std::min(lo[c], x(r, c));
        hi[c] = std::max(hi[c], x(r, c));
      }
    }
    s.min.push_back(std::move(lo));
    s.max.push_back(std::move(hi));
  }
  return s;
}

/// x' = 2(x - min)/(max - min) - 1; constant features map to 0. Values
/// outside the training range are not clipped.
inline std::vector<Tensor> normalize_apply(const NormStats& s, std::span<const Tensor> views) {
  if (views.size() != s.min.size()) {
    throw ShapeError("normalize_apply: " + std::to_string(views.size()) + " views but stats for " +
                     std::to_string(s.min.size()));
  }
  std::vector<Tensor> out;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Tensor& x = views[v];
    if (x.cols() != s.min[v].size()) {
      throw ShapeError("normalize_apply: view " + std::to_string(v) + " has " +
                       std::to_string(x.cols()) + " features, stats have " +
                       std::to_string(s.min[v].size()));
    }
    Tensor y(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double lo = s.min[v][c], hi = s.max[v][c];
        y(r, c) = hi > lo ? 2.0 * (x(r, c) - lo) / (hi - lo) - 1.0 : 0.0;
      }
    out.push_back(std::move(y));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation splits

struct OccSplit {
  std::vector<Tensor> train;      // positive-class rows only
  std::vector<Tensor> test;
  std::vector<int> test_labels;   // +1 positive class, -1 negative class
  std::vector<std::size_t> train_rows;  // dataset row indices
  std::vector<std::size_t> test_rows;
};

/// Minimum number of training rows for a class to qualify in benchmark mode.
inline constexpr std::size_t kMinQualifiedTrainRows = 300;

/// Rows of `positive_class` available for training.
inline std::size_t training_eligible_rows(const MultiViewDataset& ds, int positive_class,
                                          double ratio = 0.7) {
  std::size_t count = 0, predefined = 0;
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    if (ds.labels[r] != positive_class) continue;
    ++count;
    if (ds.split && (*ds.split)[r] == SplitTag::Train) ++predefined;
  }
  if (ds.split) return predefined;
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(count)));
}

/// One-vs-all split. With a predefined split the positive training rows and
/// the whole test partition are used; otherwise `ratio` of the positive rows
/// are sampled without replacement for training.
/// When `train_count` is set it overrides `ratio` as the number of positive
/// training rows.
inline OccSplit one_vs_all_split(const MultiViewDataset& ds, int positive_class, double ratio,
                                 Rng& rng, std::optional<std::size_t> train_count = {}) {
  ds.validate();
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < ds.num_rows(); ++r)
    (ds.labels[r] == positive_class ? pos : neg).push_back(r);
  if (pos.empty()) {
    throw DataError("class " + std::to_string(positive_class) + " is absent from dataset '" +
                    ds.name + "'");
  }
  OccSplit s;
  std::vector<std::size_t> test_pos;
  if (ds.split) {
    for (std::size_t r : pos)
      ((*ds.split)[r] == SplitTag::Train ? s.train_rows : test_pos).push_back(r);
    std::vector<std::size_t> test_neg;
    for (std::size_t r : neg)
      if ((*ds.split)[r] == SplitTag::Test) test_neg.push_back(r);
    neg = std::move(test_neg);
  } else {
    if (pos.size() < 2) {
      throw DataError("class " + std::to_string(positive_class) + " has fewer than 2 rows");
    }
    if (!train_count && !(ratio > 0.0 && ratio < 1.0)) {
      throw ConfigError("split ratio must be in (0, 1)");
    }
    std::size_t n_train =
        train_count ? *train_count
                    : static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, pos.size() - 1);
    rng.shuffle(std::span<std::size_t>(pos));
    s.train_rows.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_pos.assign(pos.begin() + static_cast<std::ptrdiff_t>(n_train), pos.end());
    std::sort(s.train_rows.begin(), s.train_rows.end());
    std::sort(test_pos.begin(), test_pos.end());
  }
  if (s.train_rows.empty()) throw DataError("no training rows for class " + std::to_string(positive_class));
  if (test_pos.empty() && neg.empty()) throw DataError("empty test set");
  s.test_rows = test_pos;
  s.test_rows.insert(s.test_rows.end(), neg.begin(), neg.end());
  s.test_labels.assign(test_pos.size(), +1);
  s.test_labels.insert(s.test_labels.end(), neg.size(), -1);
  for (const Tensor& v : ds.views) {
    s.train.push_back(take_rows(v, s.train_rows));
    s.test.push_back(take_rows(v, s.test_rows));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic data

/*
 Positive rows: latent z ~ N(0, I_k), view v = A_v z + ε with ε ~ N(0, σ²).
 Negative rows: the latent mean is shifted by `shift` along the unit
 diagonal direction (1, ..., 1)/√k. Views listed in `noise_views` carry no
 latent signal: both classes draw them from N(0, 1).
 Label 0 marks the positive class, label 1 the negative class.
*/
struct SynthSpec {
  std::string name = "synthetic";
  std::vector<std::size_t> dims{20, 30};
  std::size_t latent_dim = 4;
  double noise = 0.1;
  double shift = 6.0;
  std::size_t n_positive = 650;
  std::size_t n_negative = 500;
  std::vector<std::size_t> noise_views;
  std::uint64_t seed = 0;

  void validate() const {
    if (dims.size() < 2) throw ConfigError("synthetic data needs at least 2 views");
    for (std::size_t d : dims)
      if (d == 0) throw ConfigError("view dims must be positive");
    if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
    if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
    if (n_positive == 0 || n_negative == 0) throw ConfigError("class counts must be positive");
    for (std::size_t v : noise_views)
      if (v >= dims.size()) throw ConfigError("noise view index out of range");
  }
};

inline MultiViewDataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t k = spec.latent_dim, n = spec.n_positive + spec.n_negative;
  std::vector<Tensor> maps;
  for (std::size_t d : spec.dims) {
    Tensor a({k, d});
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& x : a.data()) x = s * rng.normal();
    maps.push_back(std::move(a));
  }
  const double shift_per_dim = spec.shift / std::sqrt(static_cast<double>(k));
  Tensor z({n, k});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c)
      z(r, c) = rng.normal() + (r >= spec.n_positive ? shift_per_dim : 0.0);

  MultiViewDataset ds;
  ds.name = spec.name;
  for (std::size_t v = 0; v < spec.dims.size(); ++v) {
    const bool pure_noise =
        std::find(spec.noise_views.begin(), spec.noise_views.end(), v) != spec.noise_views.end();
    Tensor x = pure_noise ? Tensor({n, spec.dims[v]}) : matmul(z, maps[v]);
    for (double& e : x.data()) e += (pure_noise ? 1.0 : spec.noise) * rng.normal();
    ds.view_names.push_back("view" + std::to_string(v));
    ds.views.push_back(std::move(x));
  }
  ds.labels.assign(spec.n_positive, 0);
  ds.labels.insert(ds.labels.end(), spec.n_negative, 1);
  return ds;
}

}  // namespace mvocc
