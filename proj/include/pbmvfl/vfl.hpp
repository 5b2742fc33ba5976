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

// Vertical federated training loop.
//
// Each iteration: all actors derive the same minibatch from a shared seed;
// every party embeds its feature block; the embeddings are combined at the
// server (PBM + secure aggregation, plain sums, or locally noised sums
// depending on the mode); the server computes the loss gradient with
// respect to the embedding sum, broadcasts it, and every actor takes an SGD
// step on its own parameters.

#ifndef PBMVFL_VFL_HPP_
#define PBMVFL_VFL_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "pbmvfl/data.hpp"
#include "pbmvfl/errors.hpp"
#include "pbmvfl/metrics.hpp"
#include "pbmvfl/nn.hpp"
#include "pbmvfl/pbm.hpp"
#include "pbmvfl/privacy.hpp"
#include "pbmvfl/random.hpp"
#include "pbmvfl/secureagg.hpp"

namespace pbmvfl {

enum class Mode {
  kPbm,  // quantize with PBM, aggregate with pairwise masks
  kNpq,  // exact real-valued sums, no privacy
  kLdp,  // Gaussian noise on every embedding, plain sums
};

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::kPbm: return "pbm";
    case Mode::kNpq: return "npq";
    case Mode::kLdp: return "ldp";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "pbm") return Mode::kPbm;
  if (s == "npq") return Mode::kNpq;
  if (s == "ldp") return Mode::kLdp;
  throw ConfigError("unknown mode '" + s + "' (expected pbm, npq or ldp)");
}

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t model = 2;
  std::uint64_t mechanism = 3;
  std::uint64_t minibatch = 4;

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

struct VflConfig {
  std::size_t parties = 4;
  std::size_t p_dim = 4;
  std::size_t hidden = 16;
  std::size_t batch = 32;
  std::size_t iters = 100;
  double eta = 0.1;
  PbmParams pbm;
  Mode mode = Mode::kPbm;
  Seeds seeds;
  int f_bits = kDefaultFloatBits;
  std::size_t eval_every = 0;  // 0: evaluate after the last iteration only
  std::optional<double> ldp_sigma;  // overrides the calibrated LDP noise scale
  bool parallel_parties = false;

  /// Gaussian variance per embedding coordinate in LDP mode: 2M / (b beta^2)
  /// unless overridden.
  double ldp_variance() const {
    if (ldp_sigma) return *ldp_sigma * *ldp_sigma;
    return 2.0 * static_cast<double>(parties) / (static_cast<double>(pbm.b) * pbm.beta * pbm.beta);
  }

  void validate() const {
    if (parties < 1 || parties > 0xffff) throw ConfigError("vfl: party count must be in [1, 65535]");
    if (p_dim < 1 || p_dim > 0xffff) throw ConfigError("vfl: embedding dim must be in [1, 65535]");
    if (hidden < 1) throw ConfigError("vfl: hidden width must be positive");
    if (batch < 1) throw ConfigError("vfl: batch must be positive");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("vfl: learning rate must be finite and >= 0");
    if (f_bits < 0) throw ConfigError("vfl: float width must be >= 0");
    if (mode != Mode::kNpq) {
      pbm.validate();
      if (pbm.c != 1.0) throw ConfigError("vfl: party embeddings are tanh-bounded, so c must be 1");
    }
    if (mode == Mode::kPbm && pbm.beta == 0.0) throw ConfigError("vfl: PBM mode needs beta > 0");
    if (mode == Mode::kLdp && !ldp_sigma && pbm.beta == 0.0) throw ConfigError("vfl: LDP calibration needs beta > 0");
    if (ldp_sigma && !(*ldp_sigma >= 0.0)) throw ConfigError("vfl: ldp_sigma must be >= 0");
  }

  friend bool operator==(const VflConfig&, const VflConfig&) = default;
};

/// B distinct row indices drawn without replacement, identical for every
/// actor holding the same (seed, t). Sorted ascending.
inline std::vector<std::size_t> sample_minibatch(std::uint64_t seed, std::uint64_t t, std::size_t n,
                                                 std::size_t batch) {
  if (batch > n) throw ConfigError("vfl: batch larger than dataset");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, {0xba7cULL, t});
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(batch);
  std::sort(perm.begin(), perm.end());
  return perm;
}

struct StepRecord {
  std::uint64_t iter = 0;
  double loss = 0.0;
  std::uint64_t up_bits = 0;
  std::uint64_t down_bits = 0;
  std::uint64_t cum_bits = 0;
};

/// Simulator-side view of one PBM iteration, for checking that masking is
/// lossless. Not something any real actor could observe.
struct StepProbe {
  std::vector<std::size_t> batch_rows;
  std::vector<std::int64_t> plain_q_sum;  // sum of party quantized values, row-major batch x P
  std::vector<std::int64_t> q_hat;        // recovered by unmasking
  Tensor2 h_tilde;                        // server's embedding-sum estimate
  Tensor2 true_sum;                       // exact sum of party embeddings
};

class VflTrainer {
 public:
  VflTrainer(VflConfig config, const VerticalDataset& train) : config_(std::move(config)), train_(train) {
    config_.validate();
    train_.validate();
    if (train_.parties() != config_.parties) throw ConfigError("vfl: dataset party count != config parties");
    if (config_.batch > train_.rows()) throw ConfigError("vfl: batch larger than dataset");
    const std::size_t m = config_.parties;
    for (std::size_t p = 0; p < m; ++p) {
      Rng init = make_rng(config_.seeds.model, {p + 1});
      parties_.push_back(DenseNet::party_mlp(train_.blocks[p].cols(), config_.hidden, config_.p_dim, init));
      mech_rngs_.push_back(make_rng(config_.seeds.mechanism, {0x9a47ULL, p}));
    }
    Rng init = make_rng(config_.seeds.model, {0});
    server_ = DenseNet::server_linear(config_.p_dim, static_cast<std::size_t>(train_.num_classes), init);
    if (config_.mode == Mode::kPbm) {
      seeds_ = SeedBook::deal(m, derive_seed(config_.seeds.mechanism, {0x5eedULL}));
      for (std::size_t p = 0; p < m; ++p) {
        const auto mine = seeds_.seeds_for(static_cast<PartyId>(p));
        maskers_.emplace_back(static_cast<PartyId>(p), m, mine, config_.pbm.b);
      }
    }
    caches_.resize(m);
  }

  const VflConfig& config() const noexcept { return config_; }
  std::uint64_t iteration() const noexcept { return t_; }
  const std::vector<DenseNet>& party_nets() const noexcept { return parties_; }
  const DenseNet& server_net() const noexcept { return server_; }
  const CommLedger& ledger() const noexcept { return ledger_; }

  void set_transcript_sink(std::vector<TranscriptRecord>* sink) noexcept { transcript_ = sink; }
  void set_probe(StepProbe* probe) noexcept { probe_ = probe; }

  /// One full iteration of the protocol.
  StepRecord step() {
    const std::size_t m = config_.parties;
    const std::size_t p_dim = config_.p_dim;
    const auto rows = sample_minibatch(config_.seeds.minibatch, t_, train_.rows(), config_.batch);
    const std::size_t batch = rows.size();
    const auto round = static_cast<std::uint32_t>(t_);

    CommChannel<Upload> up([this](std::size_t bits) { ledger_.charge_upstream(bits); });
    std::vector<std::unique_ptr<CommChannel<Tensor2>>> down;
    for (std::size_t p = 0; p < m; ++p) {
      down.push_back(std::make_unique<CommChannel<Tensor2>>(
          [this](std::size_t bits) { ledger_.charge_downstream(bits); }));
    }
    std::vector<std::vector<std::int64_t>> plain_q(m);

    // Party side: embed, privatize, send.
    run_parties([&](std::size_t p) {
      auto fwd = forward_party(parties_[p], gather_rows(train_.blocks[p], rows));
      Upload msg;
      msg.party = static_cast<PartyId>(p);
      const std::size_t values = batch * p_dim;
      switch (config_.mode) {
        case Mode::kPbm: {
          std::vector<std::int64_t> ys(values);
          plain_q[p].resize(values);
          for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t k = 0; k < p_dim; ++k) {
              const auto q = quantize(fwd.embeddings(i, k), config_.pbm, mech_rngs_[p]);
              const Coord coord{static_cast<std::uint32_t>(rows[i]), static_cast<std::uint16_t>(k)};
              plain_q[p][i * p_dim + k] = q.q;
              ys[i * p_dim + k] = maskers_[p].mask(q, round, coord).y;
            }
          }
          msg.packed = pack_shares(msg.party, round, ys, m, config_.pbm.b);
          const std::size_t bits = msg.packed.bits();
          up.send(std::move(msg), bits);
          break;
        }
        case Mode::kNpq:
        case Mode::kLdp: {
          msg.dense = fwd.embeddings;
          if (config_.mode == Mode::kLdp) {
            std::normal_distribution<double> noise(0.0, std::sqrt(config_.ldp_variance()));
            for (double& v : msg.dense.data()) v += noise(mech_rngs_[p]);
          }
          up.send(std::move(msg), values * static_cast<std::size_t>(config_.f_bits));
          break;
        }
      }
      caches_[p] = std::move(fwd.cache);
    });

    // Server side: barrier on all M uploads, then aggregate per coordinate.
    auto uploads = up.receive_n(m);
    std::sort(uploads.begin(), uploads.end(), [](const Upload& a, const Upload& b) { return a.party < b.party; });
    for (std::size_t p = 0; p < m; ++p) {
      if (uploads[p].party != p) throw ProtocolError("vfl: missing or duplicate party upload");
    }
    Tensor2 h_sum(batch, p_dim);
    if (config_.mode == Mode::kPbm) {
      std::vector<std::vector<std::int64_t>> ys;
      for (const auto& u : uploads) {
        if (u.packed.round != round || u.packed.count != batch * p_dim) {
          throw ProtocolError("vfl: upload does not cover this round's coordinates");
        }
        ys.push_back(unpack_shares(u.packed, m, config_.pbm.b));
      }
      std::vector<std::int64_t> q_hat(batch * p_dim);
      std::vector<MaskedShare> shares(m);
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t k = 0; k < p_dim; ++k) {
          const Coord coord{static_cast<std::uint32_t>(rows[i]), static_cast<std::uint16_t>(k)};
          for (std::size_t p = 0; p < m; ++p) {
            shares[p] = {static_cast<PartyId>(p), ys[p][i * p_dim + k], round, coord};
            if (transcript_) {
              transcript_->push_back({round, static_cast<std::uint16_t>(p), coord.sample, coord.coord, shares[p].y});
            }
          }
          const std::int64_t total = unmask_sum(shares, m, config_.pbm.b);
          q_hat[i * p_dim + k] = total;
          h_sum(i, k) = estimate_sum(total, static_cast<std::int64_t>(m), config_.pbm).value;
        }
      }
      if (probe_) {
        probe_->q_hat = q_hat;
        probe_->plain_q_sum.assign(batch * p_dim, 0);
        for (const auto& pq : plain_q) {
          for (std::size_t j = 0; j < pq.size(); ++j) probe_->plain_q_sum[j] += pq[j];
        }
      }
    } else {
      for (const auto& u : uploads) add_inplace(h_sum, u.dense);
    }
    if (probe_) {
      probe_->batch_rows = rows;
      probe_->h_tilde = h_sum;
      probe_->true_sum = Tensor2(batch, p_dim);
      for (std::size_t p = 0; p < m; ++p) add_inplace(probe_->true_sum, caches_[p].outputs.back());
    }

    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = train_.labels[rows[i]];
    const auto fwd = forward_server(server_, h_sum, labels);
    auto bwd = backward_server(server_, fwd);
    const std::size_t grad_bits = batch * p_dim * static_cast<std::size_t>(config_.f_bits);
    for (std::size_t p = 0; p < m; ++p) down[p]->send(bwd.grad_hhat, grad_bits);
    sgd_step(server_, bwd.grad_theta0, config_.eta);

    // Party side: chain rule through the identity map h_p -> h_sum.
    run_parties([&](std::size_t p) {
      auto grad = down[p]->receive_n(1);
      const GradSet g = backward_party(parties_[p], caches_[p], grad.front());
      sgd_step(parties_[p], g, config_.eta);
    });

    const auto& snap = ledger_.close_iteration();
    return {t_++, fwd.loss, snap.up_bits, snap.down_bits, snap.cum_bits};
  }

  /// Noiseless sum of party embeddings for every row of `ds`.
  Tensor2 embedding_sum(const VerticalDataset& ds) const {
    if (ds.parties() != parties_.size()) throw ConfigError("vfl: dataset party count mismatch");
    Tensor2 sum(ds.rows(), config_.p_dim);
    for (std::size_t p = 0; p < parties_.size(); ++p) add_inplace(sum, forward(parties_[p], ds.blocks[p]));
    return sum;
  }

  /// Accuracy of the composed model with the mechanism bypassed.
  double accuracy(const VerticalDataset& ds) const {
    if (ds.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    const auto pred = argmax_rows(forward(server_, embedding_sum(ds)));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ds.rows());
  }

  /// Mean cross-entropy of the composed model with the mechanism bypassed.
  double loss(const VerticalDataset& ds) const {
    return forward_server(server_, embedding_sum(ds), ds.labels).loss;
  }

 private:
  struct Upload {
    PartyId party = 0;
    PackedShares packed;
    Tensor2 dense;
  };

  template <typename Fn>
  void run_parties(Fn&& fn) {
    if (!config_.parallel_parties || config_.parties == 1) {
      for (std::size_t p = 0; p < config_.parties; ++p) fn(p);
      return;
    }
    std::vector<std::exception_ptr> errors(config_.parties);
    {
      std::vector<std::jthread> workers;
      for (std::size_t p = 0; p < config_.parties; ++p) {
        workers.emplace_back([&, p] {
          try {
            fn(p);
          } catch (...) {
            errors[p] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  VflConfig config_;
  VerticalDataset train_;
  std::vector<DenseNet> parties_;
  DenseNet server_;
  std::vector<Rng> mech_rngs_;
  SeedBook seeds_;
  std::vector<PartyMasker> maskers_;
  std::vector<ForwardCache> caches_;
  CommLedger ledger_;
  std::uint64_t t_ = 0;
  std::vector<TranscriptRecord>* transcript_ = nullptr;
  StepProbe* probe_ = nullptr;
};

struct TraceRecord {
  std::uint64_t iter = 0;
  double epoch = 0.0;
  double loss = 0.0;
  double train_acc = std::numeric_limits<double>::quiet_NaN();
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t up_bits = 0;    // this iteration
  std::uint64_t down_bits = 0;  // this iteration
  std::uint64_t cum_bits = 0;
  double eps_feat_alpha2 = 0.0;
  double eps_sample_alpha2 = 0.0;
  double wall_seconds = 0.0;  // not written to CSV
};

struct TrainTrace {
  std::vector<TraceRecord> rows;
};

/// Accumulated budgets at alpha = 2 after `iters` iterations. Each sample is
/// revealed t B / N times in expectation; the sample column composes the
/// per-reveal group bound the same way. NPQ has no guarantee (infinity). LDP
/// is calibrated to match PBM, so it reports the same values. NaN where the
/// sample bound does not apply (M = 1).
inline std::pair<double, double> trace_budgets(const VflConfig& cfg, std::uint64_t iters, std::size_t n) {
  if (cfg.mode == Mode::kNpq) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  const auto m = static_cast<std::int64_t>(cfg.parties);
  const auto p = static_cast<std::int64_t>(cfg.p_dim);
  const double feat = feature_budget(2.0, static_cast<std::int64_t>(iters), static_cast<std::int64_t>(cfg.batch), p,
                                     cfg.pbm.b, cfg.pbm.beta, m, static_cast<std::int64_t>(n))
                          .eps;
  double sample = std::numeric_limits<double>::quiet_NaN();
  if (m >= 2) {
    const double reveals = static_cast<double>(iters) * static_cast<double>(cfg.batch) / static_cast<double>(n);
    sample = reveals * sample_budget(2.0, p, cfg.pbm.b, cfg.pbm.beta, m).eps;
  }
  return {feat, sample};
}

/// Runs config.iters iterations. Accuracies are measured every eval_every
/// iterations (and after the last one) with noiseless forward passes.
inline TrainTrace run_experiment(VflTrainer& trainer, const VerticalDataset& train, const VerticalDataset* test) {
  const auto& cfg = trainer.config();
  TrainTrace trace;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.iters; ++i) {
    const auto step = trainer.step();
    TraceRecord rec;
    rec.iter = step.iter;
    rec.epoch = static_cast<double>(step.iter + 1) * static_cast<double>(cfg.batch) / static_cast<double>(train.rows());
    rec.loss = step.loss;
    rec.up_bits = step.up_bits;
    rec.down_bits = step.down_bits;
    rec.cum_bits = step.cum_bits;
    const bool last = i + 1 == cfg.iters;
    if (last || (cfg.eval_every > 0 && (i + 1) % cfg.eval_every == 0)) {
      rec.train_acc = trainer.accuracy(train);
      if (test && test->rows() > 0) rec.test_acc = trainer.accuracy(*test);
    }
    std::tie(rec.eps_feat_alpha2, rec.eps_sample_alpha2) = trace_budgets(cfg, step.iter + 1, train.rows());
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.rows.push_back(rec);
  }
  return trace;
}

inline TrainTrace run_experiment(const VflConfig& config, const VerticalDataset& train,
                                 const VerticalDataset* test = nullptr) {
  VflTrainer trainer(config, train);
  return run_experiment(trainer, train, test);
}

inline constexpr const char* kTraceHeader =
    "iter,epoch,loss,train_acc,test_acc,up_bits,down_bits,cum_bits,eps_feat_alpha2,eps_sample_alpha2";

namespace detail {

inline void write_real(std::ostream& os, double v) {
  if (std::isnan(v)) return;
  if (std::isinf(v)) {
    os << (v > 0 ? "inf" : "-inf");
    return;
  }
  os << v;
}

}  // namespace detail

/// Trace CSV, schema v1. Missing measurements are empty cells; budgets
/// without a guarantee are "inf".
inline void write_trace_csv(std::ostream& os, const TrainTrace& trace) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << kTraceHeader << "\n";
  for (const auto& r : trace.rows) {
    os << r.iter << ",";
    detail::write_real(os, r.epoch);
    os << ",";
    detail::write_real(os, r.loss);
    os << ",";
    detail::write_real(os, r.train_acc);
    os << ",";
    detail::write_real(os, r.test_acc);
    os << "," << r.up_bits << "," << r.down_bits << "," << r.cum_bits << ",";
    detail::write_real(os, r.eps_feat_alpha2);
    os << ",";
    detail::write_real(os, r.eps_sample_alpha2);
    os << "\n";
  }
  os.precision(old_precision);
}

}  // namespace pbmvfl

#endif  // PBMVFL_VFL_HPP_
