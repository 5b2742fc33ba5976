// Copyright 2026 The pbmvfl Authors
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

// Vertically partitioned datasets: one feature block per party, labels held
// by the server, rows aligned across blocks.

#ifndef PBMVFL_DATA_HPP_
#define PBMVFL_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/random.hpp"
#include "pbmvfl/tensor.hpp"

namespace pbmvfl {

/// Flat table before partitioning: named feature columns plus labels.
struct Table {
  std::vector<std::string> columns;
  Tensor2 features;  // rows x columns.size()
  std::vector<int> labels;
};

struct VerticalDataset {
  std::vector<Tensor2> blocks;                     // one per party, N x D_m
  std::vector<std::vector<std::size_t>> columns;   // source column indices per party
  std::vector<int> labels;                         // server side
  int num_classes = 0;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t parties() const noexcept { return blocks.size(); }

  void validate() const {
    if (blocks.empty()) throw ConfigError("data: no party blocks");
    if (blocks.size() != columns.size()) throw ConfigError("data: column map does not match blocks");
    std::set<std::size_t> seen;
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      if (blocks[m].rows() != labels.size()) throw ConfigError("data: party blocks disagree on row count");
      if (blocks[m].cols() != columns[m].size()) throw ConfigError("data: block width != assigned columns");
      if (blocks[m].cols() == 0) throw ConfigError("data: party holds no features");
      for (std::size_t c : columns[m]) {
        if (!seen.insert(c).second) throw ConfigError("data: feature assigned to two parties");
      }
    }
    for (int y : labels) {
      if (y < 0 || y >= num_classes) throw ConfigError("data: label out of class range");
    }
  }

  VerticalDataset subset(std::span<const std::size_t> rows_to_keep) const {
    VerticalDataset out;
    out.columns = columns;
    out.num_classes = num_classes;
    for (const auto& b : blocks) out.blocks.push_back(gather_rows(b, rows_to_keep));
    for (std::size_t r : rows_to_keep) out.labels.push_back(labels.at(r));
    return out;
  }
};

/// Splits `table` into party blocks following `assignment[m]` (column
/// indices owned by party m). Blocks must be disjoint.
inline VerticalDataset partition(const Table& table, const std::vector<std::vector<std::size_t>>& assignment) {
  VerticalDataset ds;
  ds.labels = table.labels;
  ds.num_classes = table.labels.empty() ? 0 : *std::max_element(table.labels.begin(), table.labels.end()) + 1;
  ds.columns = assignment;
  for (const auto& cols : assignment) {
    Tensor2 block(table.features.rows(), cols.size());
    for (std::size_t r = 0; r < block.rows(); ++r) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= table.features.cols()) throw ConfigError("data: assigned column out of range");
        block(r, j) = table.features(r, cols[j]);
      }
    }
    ds.blocks.push_back(std::move(block));
  }
  return ds;
}

/// Contiguous near-equal blocks: the first (D mod M) parties get one extra
/// column.
inline std::vector<std::vector<std::size_t>> contiguous_assignment(std::size_t features, std::size_t parties) {
  if (parties == 0 || features < parties) throw ConfigError("data: need at least one feature per party");
  std::vector<std::vector<std::size_t>> out(parties);
  std::size_t next = 0;
  for (std::size_t m = 0; m < parties; ++m) {
    const std::size_t width = features / parties + (m < features % parties ? 1 : 0);
    for (std::size_t j = 0; j < width; ++j) out[m].push_back(next++);
  }
  return out;
}

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t features = 10;
  int classes = 2;
  double separation = 3.0;  // distance between class means, in noise std units
  std::uint64_t seed = 1;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Gaussian class clusters with unit-variance isotropic noise. Class means
/// are `separation` apart pairwise (exactly when classes <= features) and
/// spread over all features, so every party holds some signal.
inline Table make_synthetic(const SyntheticSpec& spec) {
  if (spec.features == 0) throw ConfigError("data: synthetic features must be positive");
  if (spec.classes < 2) throw ConfigError("data: synthetic classes must be >= 2");
  if (!(spec.separation >= 0.0)) throw ConfigError("data: separation must be non-negative");
  Rng rng = make_rng(spec.seed, {0xda7aULL});
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto k = static_cast<std::size_t>(spec.classes);
  const std::size_t d = spec.features;

  // Orthonormal directions via Gram-Schmidt; mean_k = sep / sqrt(2) * v_k.
  std::vector<std::vector<double>> means(k, std::vector<double>(d));
  for (std::size_t c = 0; c < k; ++c) {
    auto& v = means[c];
    for (double& x : v) x = gauss(rng);
    if (c < d) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        const double dot = std::inner_product(v.begin(), v.end(), means[prev].begin(), 0.0);
        for (std::size_t j = 0; j < d; ++j) v[j] -= dot * means[prev][j];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= norm;
  }
  if (k == 2) {
    for (std::size_t j = 0; j < d; ++j) means[1][j] = -means[0][j];
    for (auto& v : means) for (double& x : v) x *= spec.separation / 2.0;
  } else {
    for (auto& v : means) for (double& x : v) x *= spec.separation / std::sqrt(2.0);
  }

  Table t;
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back("x" + std::to_string(j));
  t.features = Tensor2(spec.n, d);
  t.labels.resize(spec.n);
  std::uniform_int_distribution<int> pick(0, spec.classes - 1);
  for (std::size_t r = 0; r < spec.n; ++r) {
    const int y = pick(rng);
    t.labels[r] = y;
    for (std::size_t j = 0; j < d; ++j) t.features(r, j) = means[static_cast<std::size_t>(y)][j] + gauss(rng);
  }
  return t;
}

/// Random train/test split. Returns {train_rows, test_rows}.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double test_fraction,
                                                                                std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("data: test fraction must lie in [0, 1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, {0x5b117ULL});
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

// CSV layout: header row of column names, one of which is the label column
// (integer class ids 0..K-1); every other column is a real-valued feature.
// The party sidecar is a CSV with header "column,party" and one row per
// feature column.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline void write_table_csv(std::ostream& os, const Table& t, const std::string& label_column = "label") {
  for (const auto& c : t.columns) os << c << ",";
  os << label_column << "\n";
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < t.features.rows(); ++r) {
    for (double v : t.features.row(r)) os << v << ",";
    os << t.labels[r] << "\n";
  }
  os.precision(old_precision);
}

inline Table read_table_csv(std::istream& is, const std::string& source, const std::string& label_column = "label") {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(source + ": empty CSV file");
  const auto header = detail::split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) throw ConfigError(source + ":1: no label column '" + label_column + "'");
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
  Table t;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != label_idx) t.columns.push_back(header[i]);
  }
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      try {
        if (i == label_idx) {
          const int y = std::stoi(cells[i], &used);
          if (y < 0) throw std::invalid_argument("negative");
          t.labels.push_back(y);
        } else {
          values.push_back(std::stod(cells[i], &used));
        }
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[i].size()) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": bad value '" + cells[i] + "' in column '" +
                          header[i] + "'");
      }
    }
  }
  t.features = Tensor2(t.labels.size(), t.columns.size(), std::move(values));
  return t;
}

inline void write_party_sidecar(std::ostream& os, const std::vector<std::string>& columns,
                                const std::vector<std::vector<std::size_t>>& assignment) {
  os << "column,party\n";
  for (std::size_t m = 0; m < assignment.size(); ++m) {
    for (std::size_t c : assignment[m]) os << columns.at(c) << "," << m << "\n";
  }
}

/// Reads a "column,party" sidecar and resolves it against table columns.
/// Every feature column must be assigned to exactly one party.
inline std::vector<std::vector<std::size_t>> read_party_sidecar(std::istream& is, const std::string& source,
                                                                const std::vector<std::string>& columns) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < columns.size(); ++i) index[columns[i]] = i;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(source + ": empty party sidecar");
  std::vector<std::vector<std::size_t>> out;
  std::set<std::size_t> assigned;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != 2) throw ConfigError(where + ": expected 'column,party'");
    const auto it = index.find(cells[0]);
    if (it == index.end()) throw ConfigError(where + ": unknown column '" + cells[0] + "'");
    std::size_t party = 0;
    try {
      party = static_cast<std::size_t>(std::stoul(cells[1]));
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad party id '" + cells[1] + "'");
    }
    if (!assigned.insert(it->second).second) throw ConfigError(where + ": column '" + cells[0] + "' assigned twice");
    if (party >= out.size()) out.resize(party + 1);
    out[party].push_back(it->second);
  }
  if (assigned.size() != columns.size()) throw ConfigError(source + ": not every feature column is assigned");
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (out[m].empty()) throw ConfigError(source + ": party " + std::to_string(m) + " holds no columns");
  }
  return out;
}

}  // namespace pbmvfl

#endif  // PBMVFL_DATA_HPP_
