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

// Experiment specification files and the run / account / gen commands.
//
// Spec files are line-oriented "key = value" text. '#' starts a comment;
// blank lines are ignored; every key may appear at most once. See README.md
// for the full key list.

#ifndef PBMVFL_EXPERIMENT_HPP_
#define PBMVFL_EXPERIMENT_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbmvfl/data.hpp"
#include "pbmvfl/errors.hpp"
#include "pbmvfl/nn.hpp"
#include "pbmvfl/privacy.hpp"
#include "pbmvfl/vfl.hpp"

namespace pbmvfl {

enum class DatasetKind { kSynthetic, kCsv };

struct ExperimentSpec {
  VflConfig config;
  DatasetKind dataset = DatasetKind::kSynthetic;
  SyntheticSpec synthetic;
  std::string csv_path;
  std::string csv_label = "label";
  std::string csv_parties;  // sidecar; empty means contiguous blocks
  std::size_t repeat = 1;
  double test_fraction = 0.2;
  std::string output_dir = "out";
  std::string transcript;  // optional binary transcript of the first repeat (pbm only)
  bool save_models = false;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;

  /// Seeds for repeat r: model, mechanism and minibatch seeds shift by r;
  /// the data seed (and so the dataset and split) stays fixed.
  VflConfig config_for_repeat(std::size_t r) const {
    VflConfig c = config;
    c.seeds.model += r;
    c.seeds.mechanism += r;
    c.seeds.minibatch += r;
    return c;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class SpecLine {
 public:
  SpecLine(std::string where, std::string key, std::string value)
      : where_(std::move(where)), key_(std::move(key)), value_(std::move(value)) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

  const std::string& str() const { return value_; }

  std::uint64_t u64() const {
    if (value_.empty() || value_.find_first_not_of("0123456789") != std::string::npos) {
      fail("'" + key_ + "' expects a non-negative integer, got '" + value_ + "'");
    }
    try {
      return std::stoull(value_);
    } catch (const std::exception&) {
      fail("'" + key_ + "' value out of range");
    }
  }

  double real() const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value_, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value_.size()) fail("'" + key_ + "' expects a real number, got '" + value_ + "'");
    return v;
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "1") return true;
    if (value_ == "false" || value_ == "0") return false;
    fail("'" + key_ + "' expects true or false, got '" + value_ + "'");
  }

 private:
  std::string where_;
  std::string key_;
  std::string value_;
};

}  // namespace detail

inline ExperimentSpec parse_spec(std::istream& is, const std::string& source) {
  using detail::SpecLine;
  ExperimentSpec spec;
  auto& c = spec.config;
  const std::map<std::string, std::function<void(const SpecLine&)>> setters = {
      {"mode", [&](const SpecLine& l) {
         try {
           c.mode = parse_mode(l.str());
         } catch (const ConfigError& e) {
           l.fail(e.what());
         }
       }},
      {"parties", [&](const SpecLine& l) { c.parties = l.u64(); }},
      {"embedding_dim", [&](const SpecLine& l) { c.p_dim = l.u64(); }},
      {"hidden", [&](const SpecLine& l) { c.hidden = l.u64(); }},
      {"batch", [&](const SpecLine& l) { c.batch = l.u64(); }},
      {"iters", [&](const SpecLine& l) { c.iters = l.u64(); }},
      {"eta", [&](const SpecLine& l) { c.eta = l.real(); }},
      {"b", [&](const SpecLine& l) { c.pbm.b = static_cast<std::int64_t>(l.u64()); }},
      {"beta", [&](const SpecLine& l) { c.pbm.beta = l.real(); }},
      {"c", [&](const SpecLine& l) { c.pbm.c = l.real(); }},
      {"f_bits", [&](const SpecLine& l) { c.f_bits = static_cast<int>(l.u64()); }},
      {"ldp_sigma", [&](const SpecLine& l) { c.ldp_sigma = l.real(); }},
      {"parallel_parties", [&](const SpecLine& l) { c.parallel_parties = l.boolean(); }},
      {"eval_every", [&](const SpecLine& l) { c.eval_every = l.u64(); }},
      {"seed.data", [&](const SpecLine& l) { c.seeds.data = l.u64(); }},
      {"seed.model", [&](const SpecLine& l) { c.seeds.model = l.u64(); }},
      {"seed.mechanism", [&](const SpecLine& l) { c.seeds.mechanism = l.u64(); }},
      {"seed.minibatch", [&](const SpecLine& l) { c.seeds.minibatch = l.u64(); }},
      {"repeat", [&](const SpecLine& l) { spec.repeat = l.u64(); }},
      {"test_fraction", [&](const SpecLine& l) { spec.test_fraction = l.real(); }},
      {"output_dir", [&](const SpecLine& l) { spec.output_dir = l.str(); }},
      {"transcript", [&](const SpecLine& l) { spec.transcript = l.str(); }},
      {"save_models", [&](const SpecLine& l) { spec.save_models = l.boolean(); }},
      {"dataset", [&](const SpecLine& l) {
         if (l.str() == "synthetic") spec.dataset = DatasetKind::kSynthetic;
         else if (l.str() == "csv") spec.dataset = DatasetKind::kCsv;
         else l.fail("'dataset' expects synthetic or csv, got '" + l.str() + "'");
       }},
      {"synthetic.n", [&](const SpecLine& l) { spec.synthetic.n = l.u64(); }},
      {"synthetic.features", [&](const SpecLine& l) { spec.synthetic.features = l.u64(); }},
      {"synthetic.classes", [&](const SpecLine& l) { spec.synthetic.classes = static_cast<int>(l.u64()); }},
      {"synthetic.separation", [&](const SpecLine& l) { spec.synthetic.separation = l.real(); }},
      {"csv.path", [&](const SpecLine& l) { spec.csv_path = l.str(); }},
      {"csv.label", [&](const SpecLine& l) { spec.csv_label = l.str(); }},
      {"csv.parties", [&](const SpecLine& l) { spec.csv_parties = l.str(); }},
  };

  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    }
    seen[key] = line_no;
    it->second(detail::SpecLine(where, key, value));
  }

  spec.synthetic.seed = c.seeds.data;
  auto anchor = [&](const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? source : source + ":" + std::to_string(it->second);
  };
  if (spec.repeat < 1) throw ConfigError(anchor("repeat") + ": repeat must be >= 1");
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw ConfigError(anchor("test_fraction") + ": test_fraction must lie in [0, 1)");
  }
  if (spec.dataset == DatasetKind::kCsv && spec.csv_path.empty()) {
    throw ConfigError(anchor("dataset") + ": dataset = csv requires csv.path");
  }
  if (spec.dataset == DatasetKind::kSynthetic && spec.synthetic.features < c.parties) {
    throw ConfigError(anchor("synthetic.features") + ": need at least one feature per party");
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open spec file");
  return parse_spec(in, path);
}

/// Canonical text form; parse_spec(serialize_spec(s)) == s.
inline std::string serialize_spec(const ExperimentSpec& spec) {
  const auto& c = spec.config;
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "mode = " << to_string(c.mode) << "\n"
     << "parties = " << c.parties << "\n"
     << "embedding_dim = " << c.p_dim << "\n"
     << "hidden = " << c.hidden << "\n"
     << "batch = " << c.batch << "\n"
     << "iters = " << c.iters << "\n"
     << "eta = " << c.eta << "\n"
     << "b = " << c.pbm.b << "\n"
     << "beta = " << c.pbm.beta << "\n"
     << "c = " << c.pbm.c << "\n"
     << "f_bits = " << c.f_bits << "\n";
  if (c.ldp_sigma) os << "ldp_sigma = " << *c.ldp_sigma << "\n";
  os << "parallel_parties = " << (c.parallel_parties ? "true" : "false") << "\n"
     << "eval_every = " << c.eval_every << "\n"
     << "seed.data = " << c.seeds.data << "\n"
     << "seed.model = " << c.seeds.model << "\n"
     << "seed.mechanism = " << c.seeds.mechanism << "\n"
     << "seed.minibatch = " << c.seeds.minibatch << "\n"
     << "repeat = " << spec.repeat << "\n"
     << "test_fraction = " << spec.test_fraction << "\n"
     << "output_dir = " << spec.output_dir << "\n";
  os << "transcript = " << spec.transcript << "\n"
     << "save_models = " << (spec.save_models ? "true" : "false") << "\n"
     << "dataset = " << (spec.dataset == DatasetKind::kSynthetic ? "synthetic" : "csv") << "\n"
     << "synthetic.n = " << spec.synthetic.n << "\n"
     << "synthetic.features = " << spec.synthetic.features << "\n"
     << "synthetic.classes = " << spec.synthetic.classes << "\n"
     << "synthetic.separation = " << spec.synthetic.separation << "\n"
     << "csv.path = " << spec.csv_path << "\n"
     << "csv.label = " << spec.csv_label << "\n"
     << "csv.parties = " << spec.csv_parties << "\n";
  return os.str();
}

/// Builds the vertically partitioned dataset a spec describes.
inline VerticalDataset load_dataset(const ExperimentSpec& spec) {
  const std::size_t m = spec.config.parties;
  if (spec.dataset == DatasetKind::kSynthetic) {
    const Table t = make_synthetic(spec.synthetic);
    auto ds = partition(t, contiguous_assignment(t.columns.size(), m));
    ds.num_classes = spec.synthetic.classes;
    return ds;
  }
  std::ifstream in(spec.csv_path);
  if (!in) throw ConfigError("cannot open dataset file '" + spec.csv_path + "'");
  const Table t = read_table_csv(in, spec.csv_path, spec.csv_label);
  std::vector<std::vector<std::size_t>> assignment;
  if (spec.csv_parties.empty()) {
    assignment = contiguous_assignment(t.columns.size(), m);
  } else {
    std::ifstream side(spec.csv_parties);
    if (!side) throw ConfigError("cannot open party sidecar '" + spec.csv_parties + "'");
    assignment = read_party_sidecar(side, spec.csv_parties, t.columns);
    if (assignment.size() != m) {
      throw ConfigError(spec.csv_parties + ": assigns " + std::to_string(assignment.size()) + " parties, spec has " +
                        std::to_string(m));
    }
  }
  auto ds = partition(t, assignment);
  ds.validate();
  return ds;
}

struct SplitDataset {
  VerticalDataset train;
  VerticalDataset test;
};

inline SplitDataset split_dataset(const VerticalDataset& ds, double test_fraction, std::uint64_t seed) {
  const auto [train_rows, test_rows] = split_rows(ds.rows(), test_fraction, seed);
  return {ds.subset(train_rows), ds.subset(test_rows)};
}

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code and reports through the given
// streams.

inline constexpr const char* kSummaryHeader = "metric,mean,std,n";

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline void write_models(const std::filesystem::path& dir, std::size_t r, const VflTrainer& trainer) {
  for (std::size_t p = 0; p < trainer.party_nets().size(); ++p) {
    std::ofstream out(dir / ("model_seed" + std::to_string(r) + "_party" + std::to_string(p) + ".txt"));
    save_checkpoint(out, trainer.party_nets()[p]);
  }
  std::ofstream out(dir / ("model_seed" + std::to_string(r) + "_server.txt"));
  save_checkpoint(out, trainer.server_net());
}

}  // namespace detail

/// Runs every repeat of the experiment: one trace_seed<r>.csv per repeat
/// plus summary.csv (mean and sample std of the final metrics).
inline int cmd_run(const std::string& spec_path, std::ostream& out, std::ostream& err,
                   std::optional<Mode> mode_override = std::nullopt) {
  try {
    ExperimentSpec spec = load_spec(spec_path);
    if (mode_override) {
      spec.config.mode = *mode_override;
      spec.config.validate();
    }
    const auto full = load_dataset(spec);
    const auto data = split_dataset(full, spec.test_fraction, spec.config.seeds.data);
    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);

    std::map<std::string, std::vector<double>> finals;
    for (std::size_t r = 0; r < spec.repeat; ++r) {
      VflTrainer trainer(spec.config_for_repeat(r), data.train);
      std::vector<TranscriptRecord> transcript;
      const bool dump = r == 0 && !spec.transcript.empty() && spec.config.mode == Mode::kPbm;
      if (dump) trainer.set_transcript_sink(&transcript);
      const auto trace = run_experiment(trainer, data.train, &data.test);

      const auto trace_path = dir / ("trace_seed" + std::to_string(r) + ".csv");
      std::ofstream csv(trace_path);
      if (!csv) throw ConfigError("cannot write '" + trace_path.string() + "'");
      write_trace_csv(csv, trace);
      if (dump) {
        std::ofstream bin(spec.transcript, std::ios::binary);
        if (!bin) throw ConfigError("cannot write transcript '" + spec.transcript + "'");
        write_transcript(bin, transcript);
      }
      if (spec.save_models) detail::write_models(dir, r, trainer);

      if (!trace.rows.empty()) {
        const auto& last = trace.rows.back();
        finals["final_loss"].push_back(last.loss);
        finals["final_train_acc"].push_back(last.train_acc);
        if (!std::isnan(last.test_acc)) finals["final_test_acc"].push_back(last.test_acc);
        finals["total_bits"].push_back(static_cast<double>(last.cum_bits));
      }
      out << "repeat " << r << ": wrote " << trace_path.string() << "\n";
    }

    const auto summary_path = dir / "summary.csv";
    std::ofstream summary(summary_path);
    summary.precision(std::numeric_limits<double>::max_digits10);
    summary << kSummaryHeader << "\n";
    for (const char* metric : {"final_loss", "final_train_acc", "final_test_acc", "total_bits"}) {
      const auto [mean, sd] = detail::mean_std(finals[metric]);
      summary << metric << ",";
      detail::write_real(summary, mean);
      summary << ",";
      detail::write_real(summary, sd);
      summary << "," << finals[metric].size() << "\n";
    }
    out << "wrote " << summary_path.string() << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

struct AccountQuery {
  std::int64_t t = 1;
  std::int64_t batch = 1;
  std::int64_t p_dim = 1;
  std::int64_t b = 1;
  double beta = 0.1;
  std::int64_t m = 1;
  std::int64_t n = 1;
  std::vector<double> alphas{2.0};
};

/// Budget table in C0 units: one row per alpha with the per-round feature,
/// final feature and per-round sample budgets.
inline int cmd_account(const AccountQuery& q, std::ostream& out, std::ostream& err) {
  try {
    for (double a : q.alphas) {
      if (!(a > 1.0)) throw DomainError("alpha must be > 1 (got " + std::to_string(a) + ")");
    }
    out << "# RDP budgets in units of C0 (natural log)\n";
    out << "alpha,eps_feat_round,eps_feat_final,eps_sample_round\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (double a : q.alphas) {
      const auto round = per_round_feature_budget(a, q.p_dim, q.b, q.beta, q.m);
      const auto fin = feature_budget(a, q.t, q.batch, q.p_dim, q.b, q.beta, q.m, q.n);
      out << a << "," << round.eps << "," << fin.eps << ",";
      if (q.m >= 2) out << sample_budget(a, q.p_dim, q.b, q.beta, q.m).eps;
      else out << "n/a";
      out << "\n";
    }
    if (q.m < 2) out << "# sample budget needs M >= 2\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

/// Writes the spec's synthetic dataset as <output_dir>/data.csv plus the
/// party sidecar <output_dir>/data.parties.csv.
inline int cmd_gen(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentSpec spec = load_spec(spec_path);
    if (spec.dataset != DatasetKind::kSynthetic) throw ConfigError(spec_path + ": gen needs dataset = synthetic");
    const Table t = make_synthetic(spec.synthetic);
    const auto assignment = contiguous_assignment(t.columns.size(), spec.config.parties);
    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);
    std::ofstream data(dir / "data.csv");
    std::ofstream side(dir / "data.parties.csv");
    if (!data || !side) throw ConfigError("cannot write into '" + dir.string() + "'");
    write_table_csv(data, t);
    write_party_sidecar(side, t.columns, assignment);
    out << "wrote " << (dir / "data.csv").string() << " (" << t.features.rows() << " rows)\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace pbmvfl

#endif  // PBMVFL_EXPERIMENT_HPP_
