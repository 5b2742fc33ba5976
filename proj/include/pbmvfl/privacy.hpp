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

// Renyi-DP accounting for feature and sample privacy.
//
// All budgets are reported in units of an unspecified universal constant C0
// (the mechanism's RDP guarantee is only known up to that constant). Logs are
// natural throughout.

#ifndef PBMVFL_PRIVACY_HPP_
#define PBMVFL_PRIVACY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/pbm.hpp"

namespace pbmvfl {

enum class BudgetKind { kFeature, kSample, kPerRoundFeature };

struct RdpBudget {
  double alpha = 2.0;
  double eps = 0.0;
  BudgetKind kind = BudgetKind::kFeature;
  bool c0_units = true;  // eps is a multiple of C0
};

namespace detail {

inline void require_order(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("privacy: Renyi order must be finite and > 1");
}

inline void require_mechanism(double p_dim, std::int64_t b, double beta, double m) {
  if (!(p_dim > 0) || b < 1 || !(m > 0)) throw DomainError("privacy: counts must be positive");
  if (!(beta >= 0.0 && beta <= 0.25)) throw DomainError("privacy: beta must lie in [0, 1/4]");
}

}  // namespace detail

/// Per-round feature budget: P b beta^2 alpha / M.
inline RdpBudget per_round_feature_budget(double alpha, std::int64_t p_dim, std::int64_t b, double beta,
                                          std::int64_t m) {
  detail::require_order(alpha);
  detail::require_mechanism(static_cast<double>(p_dim), b, beta, static_cast<double>(m));
  const double eps = static_cast<double>(p_dim) * static_cast<double>(b) * beta * beta * alpha /
                     static_cast<double>(m);
  return {alpha, eps, BudgetKind::kPerRoundFeature, true};
}

/// Feature budget after t iterations with batch size b_batch over n samples:
/// t B P b beta^2 alpha / (M N). Each sample takes part in t B / N rounds in
/// expectation.
inline RdpBudget feature_budget(double alpha, std::int64_t t, std::int64_t b_batch, std::int64_t p_dim,
                                std::int64_t b, double beta, std::int64_t m, std::int64_t n) {
  detail::require_order(alpha);
  detail::require_mechanism(static_cast<double>(p_dim), b, beta, static_cast<double>(m));
  if (t < 0 || b_batch < 1 || n < 1) throw DomainError("privacy: bad iteration or sample counts");
  const double num = static_cast<double>(t) * static_cast<double>(b_batch) * static_cast<double>(p_dim) *
                     static_cast<double>(b) * beta * beta * alpha;
  return {alpha, num / (static_cast<double>(m) * static_cast<double>(n)), BudgetKind::kFeature, true};
}

/// Group factor S_M(alpha) for revealing a noisy sum of all M embeddings of
/// one sample:
///   (2^{M+1} - 2^{M-1} - 2) alpha - (3 2^{M-1} - 3M) + (2^{M-1} - 1) / (2^{M-2} (alpha - 1)).
inline double sample_group_factor(std::int64_t m, double alpha) {
  detail::require_order(alpha);
  if (m < 2) throw DomainError("privacy: sample group factor needs M >= 2");
  if (m > 60) throw DomainError("privacy: party count too large for the closed form");
  const double p = std::ldexp(1.0, static_cast<int>(m));  // 2^M
  const double md = static_cast<double>(m);
  const double linear = (2.0 * p - p / 2.0 - 2.0) * alpha;
  const double constant = 3.0 * (p / 2.0) - 3.0 * md;
  const double pole = (p / 2.0 - 1.0) / ((p / 4.0) * (alpha - 1.0));
  return linear - constant + pole;
}

/// Per-round sample budget: P b beta^2 S_M(alpha) / M.
inline RdpBudget sample_budget(double alpha, std::int64_t p_dim, std::int64_t b, double beta, std::int64_t m) {
  detail::require_mechanism(static_cast<double>(p_dim), b, beta, static_cast<double>(m));
  const double eps = static_cast<double>(p_dim) * static_cast<double>(b) * beta * beta *
                     sample_group_factor(m, alpha) / static_cast<double>(m);
  return {alpha, eps, BudgetKind::kSample, true};
}

using RdpCurve = std::function<double(double)>;

/// Bounds the divergence between sums that differ in steps + 1 consecutive
/// embeddings by peeling one embedding at a time with the weak triangle
/// inequality
///   D_a(P, Q) <= (a - 1/2)/(a - 1) D_{2a}(P, R) + D_{2a-1}(R, Q),
/// where `single` bounds a difference in one embedding. steps = M - 1 gives
/// the full-sample bound.
inline RdpCurve corollary4_chain(RdpCurve single, std::int64_t steps) {
  if (steps < 0) throw DomainError("privacy: chain length must be >= 0");
  if (steps == 0) return single;
  RdpCurve inner = corollary4_chain(single, steps - 1);
  return [single, inner](double alpha) {
    detail::require_order(alpha);
    return (alpha - 0.5) / (alpha - 1.0) * single(2.0 * alpha) + inner(2.0 * alpha - 1.0);
  };
}

/// Probability mass function on the integers offset .. offset + size - 1.
struct DiscreteDist {
  std::int64_t offset = 0;
  std::vector<double> pmf;

  double at(std::int64_t x) const noexcept {
    const std::int64_t i = x - offset;
    return (i < 0 || i >= static_cast<std::int64_t>(pmf.size())) ? 0.0 : pmf[static_cast<std::size_t>(i)];
  }
  double total() const noexcept { return std::accumulate(pmf.begin(), pmf.end(), 0.0); }
};

inline DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b) {
  if (a.pmf.empty() || b.pmf.empty()) return {a.offset + b.offset, {}};
  DiscreteDist out{a.offset + b.offset, std::vector<double>(a.pmf.size() + b.pmf.size() - 1, 0.0)};
  for (std::size_t i = 0; i < a.pmf.size(); ++i) {
    for (std::size_t j = 0; j < b.pmf.size(); ++j) out.pmf[i + j] += a.pmf[i] * b.pmf[j];
  }
  return out;
}

inline constexpr std::int64_t kMaxExactSupport = 10001;

/// Exact law of sum_m Binomial(b, 1/2 + beta x_m / c), built by convolving
/// one Bernoulli trial at a time. Support {0, ..., b M}.
inline DiscreteDist pbm_sum_distribution(std::span<const double> inputs, const PbmParams& params) {
  params.validate();
  const auto m = static_cast<std::int64_t>(inputs.size());
  if (m < 1) throw DomainError("privacy: need at least one input");
  if (params.b * m + 1 > kMaxExactSupport) throw DomainError("privacy: support too large for exact convolution");
  DiscreteDist dist{0, {1.0}};
  for (double x : inputs) {
    const double p = success_probability(x, params);
    const DiscreteDist trial{0, {1.0 - p, p}};
    for (std::int64_t k = 0; k < params.b; ++k) dist = convolve(dist, trial);
  }
  return dist;
}

/// D_alpha(p || q) = 1/(alpha - 1) ln sum_x q(x) (p(x)/q(x))^alpha.
/// Returns +infinity when p puts mass where q has none.
inline double renyi_divergence(const DiscreteDist& p, const DiscreteDist& q, double alpha) {
  detail::require_order(alpha);
  std::vector<double> log_terms;
  log_terms.reserve(p.pmf.size());
  for (std::size_t i = 0; i < p.pmf.size(); ++i) {
    const double px = p.pmf[i];
    if (px <= 0.0) continue;
    const double qx = q.at(p.offset + static_cast<std::int64_t>(i));
    if (qx <= 0.0) return std::numeric_limits<double>::infinity();
    log_terms.push_back(alpha * std::log(px) - (alpha - 1.0) * std::log(qx));
  }
  if (log_terms.empty()) return 0.0;
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  double acc = 0.0;
  for (double t : log_terms) acc += std::exp(t - top);
  const double d = (top + std::log(acc)) / (alpha - 1.0);
  return std::max(0.0, d);
}

}  // namespace pbmvfl

#endif  // PBMVFL_PRIVACY_HPP_
