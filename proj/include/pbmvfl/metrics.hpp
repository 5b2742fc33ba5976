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

// Exact bit accounting for one training run.
//
// Upstream, every party sends one masked value per (sample, coordinate) at
// the mask width w = ceil(log2((2M - 1) b)) + 1. Downstream, the server sends
// the embedding-sum gradient to every party at F bits per scalar.

#ifndef PBMVFL_METRICS_HPP_
#define PBMVFL_METRICS_HPP_

#include <cstdint>
#include <vector>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/secureagg.hpp"

namespace pbmvfl {

inline constexpr int kDefaultFloatBits = 32;

inline std::uint64_t upstream_bits_per_iter(std::uint64_t batch, std::uint64_t parties,
                                            std::uint64_t p_dim, std::int64_t b) {
  if (batch == 0 || parties == 0 || p_dim == 0) throw ConfigError("metrics: counts must be positive");
  return batch * parties * p_dim * static_cast<std::uint64_t>(mask_bit_width(parties, b));
}

inline std::uint64_t downstream_bits_per_iter(std::uint64_t batch, std::uint64_t parties,
                                              std::uint64_t p_dim, std::uint64_t f_bits) {
  return batch * parties * p_dim * f_bits;
}

/// Full-precision floats in both directions (no quantization, no masking).
inline std::uint64_t npq_bits_per_iter(std::uint64_t batch, std::uint64_t parties,
                                       std::uint64_t p_dim, std::uint64_t f_bits) {
  return 2 * batch * parties * p_dim * f_bits;
}

struct LedgerSnapshot {
  std::uint64_t iteration = 0;
  std::uint64_t up_bits = 0;    // this iteration
  std::uint64_t down_bits = 0;  // this iteration
  std::uint64_t cum_bits = 0;
};

/// Cumulative communication counters with per-iteration snapshots.
/// Single writer: the experiment runner. Channel meters feed it.
class CommLedger {
 public:
  void charge_upstream(std::uint64_t bits) noexcept { iter_up_ += bits; }
  void charge_downstream(std::uint64_t bits) noexcept { iter_down_ += bits; }

  const LedgerSnapshot& close_iteration() {
    up_bits_ += iter_up_;
    down_bits_ += iter_down_;
    snapshots_.push_back({snapshots_.size(), iter_up_, iter_down_, up_bits_ + down_bits_});
    iter_up_ = 0;
    iter_down_ = 0;
    return snapshots_.back();
  }

  std::uint64_t up_bits() const noexcept { return up_bits_; }
  std::uint64_t down_bits() const noexcept { return down_bits_; }
  std::uint64_t total_bits() const noexcept { return up_bits_ + down_bits_; }
  const std::vector<LedgerSnapshot>& snapshots() const noexcept { return snapshots_; }

 private:
  std::uint64_t up_bits_ = 0;
  std::uint64_t down_bits_ = 0;
  std::uint64_t iter_up_ = 0;
  std::uint64_t iter_down_ = 0;
  std::vector<LedgerSnapshot> snapshots_;
};

}  // namespace pbmvfl

#endif  // PBMVFL_METRICS_HPP_
