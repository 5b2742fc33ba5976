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

// Acceptance checks. Prints one PASS or FAIL line per criterion, with
// indented detail lines, and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pbmvfl/data.hpp"
#include "pbmvfl/metrics.hpp"
#include "pbmvfl/nn.hpp"
#include "pbmvfl/pbm.hpp"
#include "pbmvfl/privacy.hpp"
#include "pbmvfl/secureagg.hpp"
#include "pbmvfl/vfl.hpp"
#include "support/reference_model.hpp"
#include "support/stats.hpp"

namespace pbmvfl {
namespace {

using testing::relative_error;
using testing::RunningStats;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... Args>
void detail(const char* fmt, Args... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

// 1. Estimator mean and variance over 1e5 trials.
void mechanism_statistics() {
  const auto start = Clock::now();
  constexpr int kTrials = 100000;
  bool ok = true;
  Rng input_rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::int64_t m : {1, 4}) {
    std::vector<double> x(static_cast<std::size_t>(m));
    for (double& v : x) v = unit(input_rng);
    double truth = 0.0;
    for (double v : x) truth += v;
    for (std::int64_t b : {4, 16}) {
      for (double beta : {0.1, 0.25}) {
        const PbmParams params{b, beta, 1.0};
        Rng rng = make_rng(7, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(b),
                               static_cast<std::uint64_t>(beta * 1000)});
        RunningStats est;
        for (int t = 0; t < kTrials; ++t) {
          std::int64_t q_hat = 0;
          for (double v : x) q_hat += quantize(v, params, rng).q;
          est.add(estimate_sum(q_hat, m, params).value);
        }
        const double formula = theoretical_variance(m, params);
        double exact = 0.0;
        for (double v : x) {
          const double p = success_probability(v, params);
          exact += p * (1 - p);
        }
        exact /= beta * beta * static_cast<double>(b);
        const double z = std::fabs(est.mean() - truth) / est.std_error();
        const double var_err = std::fabs(est.variance() - formula) / formula;
        const bool good = z <= 3.0 && var_err <= 0.10;
        ok = ok && good;
        detail("M=%lld b=%lld beta=%.2f: |bias|/SE=%.2f var=%.4f formula=%.4f (off %.1f%%) exact=%.4f (off %.1f%%)%s",
               static_cast<long long>(m), static_cast<long long>(b), beta, z, est.variance(), formula, 100 * var_err,
               exact, 100 * std::fabs(est.variance() - exact) / exact, good ? "" : "  <-- out of tolerance");
      }
    }
  }
  const double elapsed = seconds_since(start);
  detail("%s", "formula is the x = 0 value; 'exact' is (C^2/(beta^2 b)) sum p(1-p) for these inputs");
  detail("runtime %.1f s", elapsed);
  verdict(1, ok && elapsed < 30.0, "estimator unbiased (3 SE) with variance within 10% of C^2 M/(4 beta^2 b)");
}

// 2. Masked sums recover the plaintext sum exactly.
void secure_sum_exactness() {
  Rng rng(2);
  int exact = 0;
  constexpr int kConfigs = 1000;
  for (int trial = 0; trial < kConfigs; ++trial) {
    const std::size_t m = 1 + rng() % 8;
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng() % 128);
    const auto book = SeedBook::deal(m, rng());
    std::vector<PartyMasker> maskers;
    for (std::size_t p = 0; p < m; ++p) maskers.emplace_back(static_cast<PartyId>(p), m, book.seeds_for(static_cast<PartyId>(p)), b);
    const auto round = static_cast<std::uint32_t>(rng() % 1000);
    const std::size_t coords = 1 + rng() % 6;
    std::vector<std::vector<std::int64_t>> ys(m, std::vector<std::int64_t>(coords));
    std::vector<std::int64_t> plain(coords, 0);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t k = 0; k < coords; ++k) {
        const auto q = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(b + 1));
        plain[k] += q;
        ys[p][k] = maskers[p].mask({q}, round, {static_cast<std::uint32_t>(trial), static_cast<std::uint16_t>(k)}).y;
      }
    }
    bool all = true;
    for (std::size_t k = 0; k < coords; ++k) {
      std::vector<MaskedShare> shares;
      for (std::size_t p = 0; p < m; ++p) {
        // Through the wire encoding as well.
        const auto wire = unpack_shares(pack_shares(static_cast<PartyId>(p), round, ys[p], m, b), m, b);
        shares.push_back({static_cast<PartyId>(p), wire[k], round, {static_cast<std::uint32_t>(trial), static_cast<std::uint16_t>(k)}});
      }
      std::shuffle(shares.begin(), shares.end(), rng);
      all = all && unmask_sum(shares, m, b) == plain[k];
    }
    exact += all ? 1 : 0;
  }
  detail("%d / %d configurations exact", exact, kConfigs);
  verdict(2, exact == kConfigs, "secure aggregation recovers the plaintext sum exactly");
}

// 3. Exact-sum training equals a monolithic implementation.
void noiseless_equivalence() {
  const auto table = make_synthetic({300, 6, 2, 2.0, 3});
  const auto data = partition(table, contiguous_assignment(6, 2));
  VflConfig cfg;
  cfg.parties = 2;
  cfg.p_dim = 3;
  cfg.hidden = 6;
  cfg.batch = 16;
  cfg.eta = 0.2;
  cfg.mode = Mode::kNpq;
  VflTrainer trainer(cfg, data);
  testing::RefModel ref;
  auto to_matrix = [](const Tensor2& t) {
    testing::Matrix out(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t(r, c);
    return out;
  };
  for (const auto& net : trainer.party_nets()) {
    const auto& l = net.layers();
    ref.parties.push_back({to_matrix(l[0].weight), l[0].bias, to_matrix(l[1].weight), l[1].bias});
  }
  ref.w0 = to_matrix(trainer.server_net().layers()[0].weight);
  ref.b0 = trainer.server_net().layers()[0].bias;

  double worst = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    const auto rows = sample_minibatch(cfg.seeds.minibatch, t, data.rows(), cfg.batch);
    std::vector<testing::Matrix> x(2);
    std::vector<int> y;
    for (std::size_t r : rows) {
      for (std::size_t m = 0; m < 2; ++m) {
        const auto row = data.blocks[m].row(r);
        x[m].emplace_back(row.begin(), row.end());
      }
      y.push_back(data.labels[r]);
    }
    const double expect = ref.train_step(x, y, cfg.eta);
    worst = std::max(worst, relative_error(trainer.step().loss, expect));
  }
  detail("max per-iteration relative loss gap %.3g over 100 iterations", worst);
  verdict(3, worst <= 1e-9, "exact-sum mode matches monolithic SGD of the composed model");
}

// 4. Analytic gradients against central differences.
double fd_error(DenseNet net, const GradSet& g, const std::function<double(const DenseNet&)>& loss) {
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  auto& layers = net.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto check = [&](double& w, double exact) {
      const double saved = w;
      w = saved + kStep;
      const double up = loss(net);
      w = saved - kStep;
      const double down = loss(net);
      w = saved;
      const double numeric = (up - down) / (2 * kStep);
      const double err = std::max(std::fabs(numeric), std::fabs(exact)) < 1e-6 ? std::fabs(numeric - exact)
                                                                               : relative_error(numeric, exact);
      worst = std::max(worst, err);
    };
    for (std::size_t i = 0; i < layers[l].weight.size(); ++i) check(layers[l].weight.data()[i], g.weight[l].data()[i]);
    for (std::size_t j = 0; j < layers[l].bias.size(); ++j) check(layers[l].bias[j], g.bias[l][j]);
  }
  return worst;
}

void gradient_exactness() {
  constexpr int kInstances = 25;
  double worst_server = 0.0, worst_party = 0.0;
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(400 + static_cast<std::uint64_t>(inst));
    const std::size_t parties = 1 + rng() % 3, p = 2 + rng() % 3, k = 2 + rng() % 3, batch = 1 + rng() % 6;
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(k) - 1);
    std::vector<DenseNet> nets;
    std::vector<Tensor2> xs;
    for (std::size_t m = 0; m < parties; ++m) {
      const std::size_t d = 1 + rng() % 4;
      nets.push_back(DenseNet::party_mlp(d, 2 + rng() % 5, p, rng));
      Tensor2 x(batch, d);
      for (double& v : x.data()) v = u(rng);
      xs.push_back(x);
    }
    const auto server = DenseNet::server_linear(p, k, rng);
    std::vector<int> labels(batch);
    for (int& y : labels) y = lab(rng);

    std::vector<PartyForward> fwds;
    Tensor2 sum(batch, p);
    for (std::size_t m = 0; m < parties; ++m) {
      fwds.push_back(forward_party(nets[m], xs[m]));
      add_inplace(sum, fwds.back().embeddings);
    }
    const auto sb = backward_server(server, forward_server(server, sum, labels));
    worst_server = std::max(worst_server, fd_error(server, sb.grad_theta0, [&](const DenseNet& n) {
                              return forward_server(n, sum, labels).loss;
                            }));
    for (std::size_t m = 0; m < parties; ++m) {
      const auto g = backward_party(nets[m], fwds[m].cache, sb.grad_hhat);
      worst_party = std::max(worst_party, fd_error(nets[m], g, [&](const DenseNet& n) {
                               Tensor2 s(batch, p);
                               for (std::size_t j = 0; j < parties; ++j) add_inplace(s, forward(j == m ? n : nets[j], xs[j]));
                               return forward_server(server, s, labels).loss;
                             }));
    }
  }
  detail("%d instances: worst relative error server %.3g, party %.3g", kInstances, worst_server, worst_party);
  verdict(4, worst_server < 1e-4 && worst_party < 1e-4, "server and party gradients match central differences");
}

// 5. Accountant arithmetic.
void accountant_arithmetic() {
  bool ok = true;
  auto expect = [&](const char* what, double got, double want, double tol) {
    const double err = relative_error(got, want);
    if (err > tol) {
      detail("%s: got %.17g want %.17g", what, got, want);
      ok = false;
    }
  };
  expect("feature_budget", feature_budget(2.0, 100, 100, 16, 16, 0.1, 4, 50000).eps, 0.256, 1e-12);
  expect("feature_budget T=0", feature_budget(2.0, 0, 100, 16, 16, 0.1, 4, 50000).eps, 0.0, 1e-12);
  expect("feature_budget 2M", feature_budget(2.0, 100, 100, 16, 16, 0.1, 8, 50000).eps, 0.128, 1e-12);
  expect("per_round", per_round_feature_budget(2.0, 16, 16, 0.1, 4).eps, 1.28, 1e-12);
  expect("per_round beta=0", per_round_feature_budget(2.0, 16, 16, 0.0, 4).eps, 0.0, 1e-12);
  expect("per_round 3 alpha", per_round_feature_budget(6.0, 16, 16, 0.1, 4).eps, 3.84, 1e-12);
  for (double a : {1.5, 2.0, 3.0, 10.0}) expect("S_2", sample_group_factor(2, a), 4 * a + 1 / (a - 1), 1e-12);
  expect("S_2(2)", sample_group_factor(2, 2.0), 9.0, 1e-12);
  expect("S_3(2)", sample_group_factor(3, 2.0), 18.5, 1e-12);
  for (std::int64_t m = 2; m <= 12; ++m)
    for (double a = 1.05; a < 50; a *= 1.5)
      if (!(sample_group_factor(m, a) > static_cast<double>(m) * a)) ok = false;
  double worst_chain = 0.0;
  const double scale = 16.0 * 16.0 * 0.01 / 4.0;
  for (std::int64_t m = 2; m <= 6; ++m) {
    const auto chain = corollary4_chain([&](double a) { return scale * a; }, m - 1);
    for (double a : {1.5, 2.0, 4.0, 8.0}) {
      worst_chain = std::max(worst_chain, relative_error(chain(a), scale * sample_group_factor(m, a)));
    }
  }
  detail("chained bound vs closed form: worst relative gap %.3g", worst_chain);
  verdict(5, ok && worst_chain <= 1e-9, "accountant examples exact to 1e-12, chained bound matches closed form to 1e-9");
}

// 6. Divergence of adjacent PBM sums across the parameter grid.
void divergence_order() {
  const std::vector<std::int64_t> bs{1, 2, 4, 8, 16};
  const std::vector<double> betas{0.05, 0.1, 0.25};
  bool monotone = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::map<std::tuple<std::int64_t, double, std::int64_t, double>, double> d;
  for (std::int64_t m : {1, 2, 4}) {
    std::vector<double> x(static_cast<std::size_t>(m), 0.0), y(static_cast<std::size_t>(m), 0.0);
    x[0] = 1.0;
    y[0] = -1.0;
    for (double alpha : {2.0, 4.0}) {
      for (std::int64_t b : bs) {
        for (double beta : betas) {
          const PbmParams params{b, beta, 1.0};
          const double div = renyi_divergence(pbm_sum_distribution(x, params), pbm_sum_distribution(y, params), alpha);
          d[{b, beta, m, alpha}] = div;
          const double ratio = div / (static_cast<double>(b) * beta * beta * alpha / static_cast<double>(m));
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
        }
      }
      for (std::size_t i = 1; i < bs.size(); ++i)
        for (double beta : betas) monotone = monotone && d[{bs[i], beta, m, alpha}] >= d[{bs[i - 1], beta, m, alpha}];
      for (std::size_t j = 1; j < betas.size(); ++j)
        for (std::int64_t b : bs) monotone = monotone && d[{b, betas[j], m, alpha}] >= d[{b, betas[j - 1], m, alpha}];
    }
  }
  detail("ratio D / (b beta^2 alpha / M) spans [%.3f, %.3f]; fitted constant %.3f (spread x%.2f)", lo, hi, hi, hi / lo);
  detail("monotone in b and beta: %s", monotone ? "yes" : "no");
  // One order of magnitude is the allowance for a single constant factor.
  verdict(6, monotone && lo > 0 && hi / lo <= 10.0, "adjacent-input divergence grows with b and beta, ratio within one constant factor");
}

// Shared runs for criteria 7 and 8.
struct GridPoint {
  Mode mode;
  std::int64_t b;
  double beta;
};

struct RunResult {
  double final_test = 0.0;
  std::vector<double> train_curve;  // every 10 iterations
  std::uint64_t bits_per_iter = 0;
};

constexpr int kSeeds = 8;
constexpr std::size_t kIters = 500;
constexpr std::size_t kEvalEvery = 10;

RunResult train_once(const GridPoint& g, int seed, const VerticalDataset& train, const VerticalDataset& test) {
  VflConfig cfg;
  cfg.parties = 4;
  cfg.p_dim = 4;
  cfg.hidden = 16;
  cfg.batch = 32;
  cfg.iters = kIters;
  cfg.eta = 0.1;
  cfg.mode = g.mode;
  cfg.pbm = {g.b, g.beta, 1.0};
  cfg.seeds = {11, 100 + static_cast<std::uint64_t>(seed), 200 + static_cast<std::uint64_t>(seed),
               300 + static_cast<std::uint64_t>(seed)};
  VflTrainer trainer(cfg, train);
  RunResult out;
  for (std::size_t t = 1; t <= kIters; ++t) {
    const auto rec = trainer.step();
    out.bits_per_iter = rec.up_bits + rec.down_bits;
    if (t % kEvalEvery == 0) out.train_curve.push_back(trainer.accuracy(train));
  }
  out.final_test = trainer.accuracy(test);
  return out;
}

struct GridStats {
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> mean_curve;
  std::uint64_t bits_per_iter = 0;
};

void reproduction_and_ledger() {
  const auto start = Clock::now();
  const auto table = make_synthetic({2000, 10, 2, 3.0, 11});
  const auto full = partition(table, contiguous_assignment(10, 4));
  const auto [train_rows, test_rows] = split_rows(full.rows(), 0.2, 11);
  const auto train = full.subset(train_rows);
  const auto test = full.subset(test_rows);

  std::vector<GridPoint> grid;
  for (Mode mode : {Mode::kPbm, Mode::kLdp}) {
    for (auto [b, beta] : std::vector<std::pair<std::int64_t, double>>{{2, 0.1}, {4, 0.1}, {16, 0.1}, {4, 0.05}, {4, 0.15}, {16, 0.15}}) {
      grid.push_back({mode, b, beta});
    }
  }
  grid.push_back({Mode::kNpq, 4, 0.1});
  std::map<std::tuple<int, std::int64_t, double>, GridStats> stats;
  for (const auto& g : grid) {
    RunningStats acc;
    GridStats s;
    s.mean_curve.assign(kIters / kEvalEvery, 0.0);
    for (int seed = 0; seed < kSeeds; ++seed) {
      const auto r = train_once(g, seed, train, test);
      acc.add(r.final_test);
      for (std::size_t i = 0; i < r.train_curve.size(); ++i) s.mean_curve[i] += r.train_curve[i] / kSeeds;
      s.bits_per_iter = r.bits_per_iter;
    }
    s.mean = acc.mean();
    s.se = acc.std_error();
    stats[{static_cast<int>(g.mode), g.b, g.beta}] = s;
    detail("%s b=%lld beta=%.2f: final test accuracy %.4f +- %.4f (SE, %d seeds)", to_string(g.mode),
           static_cast<long long>(g.b), g.beta, s.mean, s.se, kSeeds);
  }
  auto at = [&](Mode mode, std::int64_t b, double beta) -> const GridStats& {
    return stats.at({static_cast<int>(mode), b, beta});
  };
  // "a >= b up to one standard error" with the standard error of the difference.
  auto not_worse = [](const GridStats& a, const GridStats& b) {
    return a.mean >= b.mean - std::sqrt(a.se * a.se + b.se * b.se);
  };
  const bool trend_b = not_worse(at(Mode::kPbm, 4, 0.1), at(Mode::kPbm, 2, 0.1)) &&
                       not_worse(at(Mode::kPbm, 16, 0.1), at(Mode::kPbm, 4, 0.1));
  const bool trend_beta = not_worse(at(Mode::kPbm, 4, 0.1), at(Mode::kPbm, 4, 0.05)) &&
                          not_worse(at(Mode::kPbm, 4, 0.15), at(Mode::kPbm, 4, 0.1));
  bool pbm_over_ldp = true;
  for (const auto& g : grid) {
    if (g.mode == Mode::kPbm) pbm_over_ldp = pbm_over_ldp && not_worse(at(Mode::kPbm, g.b, g.beta), at(Mode::kLdp, g.b, g.beta));
  }
  const double elapsed = seconds_since(start);
  detail("trend in b: %s; trend in beta: %s; PBM >= LDP everywhere: %s; runtime %.1f s", trend_b ? "yes" : "no",
         trend_beta ? "yes" : "no", pbm_over_ldp ? "yes" : "no", elapsed);
  verdict(7, trend_b && trend_beta && pbm_over_ldp && elapsed < 300.0,
          "accuracy non-decreasing in b and beta, PBM at least LDP, all within one SE");

  // 8a. Ledger closed form on a live run.
  bool ledger_ok = true;
  for (Mode mode : {Mode::kPbm, Mode::kNpq}) {
    VflConfig cfg;
    cfg.parties = 4;
    cfg.p_dim = 4;
    cfg.batch = 32;
    cfg.mode = mode;
    cfg.pbm = {16, 0.1, 1.0};
    VflTrainer trainer(cfg, train);
    constexpr std::uint64_t kT = 25;
    for (std::uint64_t t = 0; t < kT; ++t) trainer.step();
    const std::uint64_t w = mode == Mode::kPbm ? static_cast<std::uint64_t>(mask_bit_width(4, 16)) : 32;
    const std::uint64_t closed = kT * (32 * 4 * 4 * w + 32 * 4 * 4 * 32);
    detail("%s ledger after %llu iterations: %llu bits, closed form %llu", to_string(mode),
           static_cast<unsigned long long>(kT), static_cast<unsigned long long>(trainer.ledger().total_bits()),
           static_cast<unsigned long long>(closed));
    ledger_ok = ledger_ok && trainer.ledger().total_bits() == closed;
  }
  // 8b. PBM upstream below float upstream for every grid used here.
  bool cheaper = true;
  for (std::uint64_t m : {1, 2, 3, 4, 8}) {
    for (std::int64_t b : {1, 2, 4, 8, 16, 64, 128, 512}) {
      if (mask_bit_width(m, b) < 32) cheaper = cheaper && upstream_bits_per_iter(32, m, 4, b) < 32 * m * 4 * 32;
    }
  }
  // 8c. Iterations and bits to reach a fixed mean train accuracy.
  constexpr double kTarget = 0.90;
  struct Reach {
    std::int64_t b;
    double beta;
    long iters;
    double bits;
  };
  std::vector<Reach> reach;
  for (auto [b, beta] : std::vector<std::pair<std::int64_t, double>>{{4, 0.1}, {16, 0.1}, {4, 0.15}, {16, 0.15}}) {
    const auto& s = at(Mode::kPbm, b, beta);
    long iters = -1;
    for (std::size_t i = 0; i < s.mean_curve.size(); ++i) {
      if (s.mean_curve[i] >= kTarget) {
        iters = static_cast<long>((i + 1) * kEvalEvery);
        break;
      }
    }
    const double bits = iters < 0 ? std::numeric_limits<double>::infinity()
                                  : static_cast<double>(iters) * static_cast<double>(s.bits_per_iter);
    reach.push_back({b, beta, iters, bits});
    detail("b=%lld beta=%.2f reaches mean train accuracy %.2f after %ld iterations, %.4g bits", static_cast<long long>(b),
           beta, kTarget, iters, bits);
  }
  bool table_trend = true;
  for (const auto& lo : reach) {
    for (const auto& hi : reach) {
      const bool dominates = hi.b >= lo.b && hi.beta >= lo.beta && (hi.b != lo.b || hi.beta != lo.beta);
      if (!dominates) continue;
      table_trend = table_trend && hi.iters > 0 && (lo.iters < 0 || (hi.iters < lo.iters && hi.bits < lo.bits));
    }
  }
  detail("ledger closed form: %s; PBM upstream below floats: %s; larger (b, beta) cheaper to target: %s",
         ledger_ok ? "yes" : "no", cheaper ? "yes" : "no", table_trend ? "yes" : "no");
  verdict(8, ledger_ok && cheaper && table_trend,
          "ledger matches closed form, PBM upstream below floats, larger (b, beta) reaches target sooner and cheaper");
}

}  // namespace
}  // namespace pbmvfl

int main() {
  pbmvfl::mechanism_statistics();
  pbmvfl::secure_sum_exactness();
  pbmvfl::noiseless_equivalence();
  pbmvfl::gradient_exactness();
  pbmvfl::accountant_arithmetic();
  pbmvfl::divergence_order();
  pbmvfl::reproduction_and_ledger();
  std::printf("%d criteria failed\n", pbmvfl::failures);
  return pbmvfl::failures == 0 ? 0 : 1;
}
