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

// Scalar Poisson Binomial Mechanism and the sum estimator built on it.
//
// Each participant maps a bounded real x in [-c, c] to a Binomial(b, p)
// sample with p = 1/2 + (beta / c) x. Summing the M integer samples and
// re-centering gives an unbiased estimate of the real-valued sum with
// variance c^2 M / (4 beta^2 b).

#ifndef PBMVFL_PBM_HPP_
#define PBMVFL_PBM_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/random.hpp"

namespace pbmvfl {

/// Mechanism configuration: trial count b, privacy scale beta and input
/// bound c.
struct PbmParams {
  std::int64_t b = 16;
  double beta = 0.1;
  double c = 1.0;

  void validate() const {
    if (b < 1) throw ConfigError("pbm: b must be >= 1");
    if (!(beta >= 0.0 && beta <= 0.25)) throw ConfigError("pbm: beta must lie in [0, 1/4]");
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("pbm: c must be a positive finite real");
  }

  friend bool operator==(const PbmParams&, const PbmParams&) = default;
};

struct QuantizedValue {
  std::int64_t q = 0;
};

struct SumEstimate {
  double value = 0.0;
  std::int64_t m = 1;
};

inline double success_probability(double x, const PbmParams& params) {
  params.validate();
  if (!(std::fabs(x) <= params.c)) {
    std::ostringstream msg;
    msg << "pbm: input " << x << " outside [-" << params.c << ", " << params.c << "]";
    throw DomainError(msg.str());
  }
  return 0.5 + (params.beta / params.c) * x;
}

/// Draws Binomial(b, p) as b independent Bernoulli trials.
inline QuantizedValue quantize(double x, const PbmParams& params, Rng& rng) {
  const double p = success_probability(x, params);
  std::bernoulli_distribution trial(p);
  std::int64_t q = 0;
  for (std::int64_t i = 0; i < params.b; ++i) q += trial(rng) ? 1 : 0;
  return {q};
}

/// Re-centers an aggregated count q_hat of m quantized values:
/// (c / (beta b)) (q_hat - b m / 2).
inline SumEstimate estimate_sum(std::int64_t q_hat, std::int64_t m, const PbmParams& params) {
  params.validate();
  if (m < 1) throw ConfigError("pbm: summand count must be >= 1");
  if (params.beta == 0.0) throw ConfigError("pbm: sum estimate undefined for beta = 0");
  if (q_hat < 0 || q_hat > params.b * m) {
    std::ostringstream msg;
    msg << "pbm: aggregated count " << q_hat << " outside [0, " << params.b * m << "]";
    throw ProtocolError(msg.str());
  }
  const double b = static_cast<double>(params.b);
  const double centered = static_cast<double>(q_hat) - b * static_cast<double>(m) / 2.0;
  return {params.c / (params.beta * b) * centered, m};
}

inline double theoretical_variance(std::int64_t m, const PbmParams& params) {
  params.validate();
  return params.c * params.c * static_cast<double>(m) /
         (4.0 * params.beta * params.beta * static_cast<double>(params.b));
}

}  // namespace pbmvfl

#endif  // PBMVFL_PBM_HPP_
