// Copyright 2026 The lcwl Authors.
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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "lcwl/classifier.hpp"
#include "lcwl/experiment.hpp"
#include "lcwl/io.hpp"
#include "lcwl/metrics.hpp"
#include "lcwl/pseudolabel.hpp"
#include "lcwl/rng.hpp"
#include "lcwl/seq2seq.hpp"
#include "lcwl/textcore.hpp"
#include "oracle/ngram_oracle.hpp"

using namespace lcwl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

Seq2SeqModel random_generator(std::uint64_t seed) {
  std::vector<Tokens> corpus{{"the", "cat", "sat", "on", "a", "mat"},
                             {"dogs", "run", "home", "fast"},
                             {"birds", "fly", "south"}};
  return init_model(Vocab::build(corpus, 4), 6, seed, 0.4);
}

TrainBatch random_batch(const Seq2SeqModel& m, Rng& rng, bool unit_weights) {
  TrainBatch b;
  b.max_len = 16;
  const auto v = static_cast<std::uint64_t>(m.vocab.size());
  const auto size = 1 + rng.below(5);
  for (std::uint64_t j = 0; j < size; ++j) {
    SequenceExample ex;
    ex.source.push_back(m.vocab.level_id(1 + static_cast<int>(rng.below(4))));
    const auto ns = 1 + rng.below(6), nt = rng.below(6);
    for (std::uint64_t i = 0; i < ns; ++i) ex.source.push_back(static_cast<int>(4 + rng.below(v - 4)));
    for (std::uint64_t i = 0; i < nt; ++i) ex.target.push_back(static_cast<int>(4 + rng.below(v - 4)));
    ex.weight = unit_weights ? 1.0 : rng.uniform();
    b.examples.push_back(std::move(ex));
  }
  return b;
}

// Central differences over every classifier parameter on a random batch.
double classifier_gradient_error(const LossSpec& loss, std::uint64_t seed) {
  Rng rng(seed);
  FeatureSpec spec;
  for (int j = 0; j < 4; ++j) {
    spec.names.push_back("f" + std::to_string(j));
    spec.mean.push_back(0.0);
    spec.stddev.push_back(1.0);
  }
  auto model = make_classifier(5, spec);
  for (auto& w : model.weights) w = rng.uniform(-1.5, 1.5);
  for (auto& b : model.bias) b = rng.uniform(-1, 1);
  FeatureDataset data;
  const auto n = 2 + rng.below(8);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<double> x;
    for (int j = 0; j < 4; ++j) x.push_back(rng.uniform(-2, 2));
    data.rows.push_back(std::move(x));
    data.labels.push_back(static_cast<int>(rng.below(5)));
  }
  std::vector<std::size_t> rows(data.rows.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto grad = batch_gradient(model, data, rows, loss);
  const double eps = 1e-5;
  double worst = 0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + eps;
    const double up = batch_gradient(model, data, rows, loss).loss;
    param = saved - eps;
    const double down = batch_gradient(model, data, rows, loss).loss;
    param = saved;
    const double numeric = (up - down) / (2 * eps);
    const double diff = std::fabs(analytic - numeric);
    if (diff == 0) return;
    worst = std::max(worst, diff / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6}));
  };
  for (std::size_t i = 0; i < model.weights.size(); ++i) probe(model.weights[i], grad.weights[i]);
  for (std::size_t i = 0; i < model.bias.size(); ++i) probe(model.bias[i], grad.bias[i]);
  return worst;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LCWL_CLI) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return files;
}

// summary.tsv: system, quantity, one column per seed, then the mean.
struct Summary {
  std::vector<std::string> seeds;
  std::map<std::pair<std::string, std::string>, std::vector<double>> rows;

  const std::vector<double>& at(const std::string& system, const std::string& quantity) const {
    return rows.at({system, quantity});
  }
  std::vector<double> per_seed(const std::string& system, const std::string& quantity) const {
    const auto& r = at(system, quantity);
    return {r.begin(), r.end() - 1};
  }
  double mean(const std::string& system, const std::string& quantity) const {
    return at(system, quantity).back();
  }
};

Summary parse_summary(const std::string& text) {
  Summary s;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    if (header) {
      s.seeds.assign(cells.begin() + 2, cells.end() - 1);
      header = false;
      continue;
    }
    std::vector<double> values;
    for (std::size_t i = 2; i < cells.size(); ++i) values.push_back(std::stod(cells[i]));
    s.rows[{cells[0], cells[1]}] = std::move(values);
  }
  return s;
}

// The benchmark run shared by the experiment criteria.
struct BenchmarkRun {
  bool ok = false;
  std::string error;
  double seconds = 0;
  ExperimentConfig config;
  Summary summary;
  fs::path dir;
};

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome unit_weight_identity() {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_generator(1000 + static_cast<std::uint64_t>(trial));
    const auto batch = random_batch(model, rng, true);
    const auto lp = forward(model, batch);
    const double weighted = weighted_ce_loss(lp, batch);
    const double plain = mean_sequence_nll(lp, batch);
    if (weighted != plain) {
      return {false, "batch " + std::to_string(trial) + ": " + fmt(weighted, 17) + " vs " + fmt(plain, 17)};
    }
    if (loss_and_gradient(model, batch).loss != plain) {
      return {false, "fused loss differs on batch " + std::to_string(trial)};
    }
  }
  return {true, "100 batches bitwise equal"};
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst_ce = 0, worst_sce = 0, worst_seq = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    worst_ce = std::max(worst_ce, classifier_gradient_error(LossSpec::cross_entropy(), seed));
    worst_sce = std::max(worst_sce, classifier_gradient_error(LossSpec::symmetric(0.1, 1.0, -4.0), seed));
  }
  Rng rng(202);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto model = random_generator(2000 + trial);
    const auto batch = random_batch(model, rng, false);
    GradCheckOptions opt;
    opt.seed = 3000 + trial;
    worst_seq = std::max(worst_seq, grad_check(model, batch, 1e-5, opt));
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_ce < 1e-4 && worst_sce < 1e-4 && worst_seq < 1e-4 && secs < 60;
  return {pass, "20 batches each, max rel err ce " + fmt(worst_ce, 3) + ", sce " + fmt(worst_sce, 3) +
                    ", seq2seq " + fmt(worst_seq, 3) + " in " + fmt(secs, 3) + " s"};
}

Outcome weight_formula() {
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const double p = i / 99.0, s = j / 99.0;
      worst = std::max(worst, std::fabs(confidence_weight(p, s) - std::sqrt(p * s)));
    }
  }
  bool forced = confidence_weight(1.0, 1.0) == 1.0;
  for (int j = 0; j <= 10; ++j) forced = forced && confidence_weight(0.0, j / 10.0) == 0.0;
  return {worst <= 1e-12 && forced,
          "10^4 grid max error " + fmt(worst, 3) + (forced ? ", forced cases exact" : ", forced cases wrong")};
}

Outcome sce_arithmetic() {
  const std::vector<double> uniform{0.5, 0.5};
  const double v = sce_loss(uniform, 0, 0.1, 1.0, -4.0);
  return {std::fabs(v - 2.06931) <= 1e-5, "value " + fmt(v, 10)};
}

Outcome metric_oracles() {
  auto T = [](const char* s) { return tokenize(s).tokens; };
  std::vector<std::string> problems;
  if (bleu(T("the cat sat on the mat ."), {T("the cat sat on the mat .")}) != 1.0) problems.push_back("bleu identity");
  for (const char* s : {"a b c", "the car is red .", "birds fly south in winter ."}) {
    if (std::fabs(sari(T("an unrelated source sentence"), T(s), {T(s)}) - 100.0) > 1e-9) {
      problems.push_back("sari identity");
    }
  }
  const double go = fkgl("Go.");
  if (std::fabs(go - -3.40) > 1e-9) problems.push_back("fkgl(Go.) = " + fmt(go, 12));

  struct BleuCase {
    const char* hyp;
    const char* ref;
    double frozen;
  };
  const std::vector<BleuCase> bleu_cases = {
      {"the cat sat", "the cat sat down", std::exp(-1.0 / 3.0)},
      {"the cat lay on the mat", "the dog sat on the mat", std::pow(1.0 / 30.0, 0.25)},
  };
  struct SariCase {
    const char* src;
    const char* hyp;
    std::vector<const char*> refs;
    double frozen;
  };
  const std::vector<SariCase> sari_cases = {
      {"a b c", "a c", {"a b"}, 66.666666666666657},
      {"the automobile consumed the residence", "the car ate the home",
       {"the car consumed the home"}, 62.123015873016},
      {"a b a b", "a b", {"a b a"}, 75.198412698413},
  };
  std::size_t checked = 0;
  for (const auto& c : bleu_cases) {
    const double lib = bleu(T(c.hyp), {T(c.ref)});
    const double orc = oracle::bleu(T(c.hyp), {T(c.ref)});
    if (std::fabs(lib - orc) > 1e-9 || std::fabs(lib - c.frozen) > 1e-9) {
      problems.push_back(std::string("bleu case '") + c.hyp + "'");
    }
    ++checked;
  }
  for (const auto& c : sari_cases) {
    std::vector<Tokens> refs;
    for (const auto* r : c.refs) refs.push_back(T(r));
    const double lib = sari(T(c.src), T(c.hyp), refs);
    const double orc = oracle::sari(T(c.src), T(c.hyp), refs);
    if (std::fabs(lib - orc) > 1e-9 || std::fabs(lib - c.frozen) > 1e-9) {
      problems.push_back(std::string("sari case '") + c.src + "'");
    }
    ++checked;
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    return {false, msg};
  }
  return {true, "identities hold, FKGL(Go.) = " + fmt(go, 12) + ", " + std::to_string(checked) +
                    " oracle cases within 1e-9"};
}

Outcome filtering_fidelity() {
  const auto cases = fixtures::filter_cases();
  std::vector<ParaphrasePair> pairs;
  std::vector<ParaphrasePair> expected_kept;
  std::array<std::size_t, kNumFilterRules> expected_removed{};
  std::size_t wrong_rule = 0;
  for (const auto& c : cases) {
    pairs.push_back(c.pair);
    if (c.expected) {
      ++expected_removed[static_cast<std::size_t>(*c.expected)];
    } else {
      expected_kept.push_back(c.pair);
    }
    if (rejection_rule(c.pair) != c.expected) ++wrong_rule;
  }
  FilterReport report;
  const auto kept = filter_paraphrases(pairs, &report);
  bool same_kept = kept.size() == expected_kept.size();
  for (std::size_t i = 0; same_kept && i < kept.size(); ++i) {
    same_kept = kept[i].source == expected_kept[i].source && kept[i].target == expected_kept[i].target;
  }
  const bool rules_ok = wrong_rule == 0 && same_kept && report.removed == expected_removed &&
                        report.input == 50 && report.kept == expected_kept.size();

  // Pairwise BLEU: the filter keeps exactly the pairs whose score lies in [0.1, 0.9].
  std::vector<SentencePair> bleu_pairs;
  std::vector<SentencePair> in_range;
  bool flags_ok = true;
  for (const auto& c : fixtures::bleu_filter_cases()) {
    bleu_pairs.push_back(c.pair);
    const double b = oracle::bleu(tokenize(c.pair.first).tokens, {tokenize(c.pair.second).tokens});
    const bool inside = b >= 0.1 && b <= 0.9;
    if (inside) in_range.push_back(c.pair);
    flags_ok = flags_ok && inside == c.kept;
  }
  const bool bleu_ok = pairwise_bleu_filter(bleu_pairs, 0.1, 0.9) == in_range && flags_ok;
  return {rules_ok && bleu_ok,
          "50-pair fixture: " + std::to_string(report.kept) + " kept, " + std::to_string(wrong_rule) +
              " misattributed; bleu filter kept " + std::to_string(in_range.size()) + " of " +
              std::to_string(bleu_pairs.size()) + (bleu_ok ? " as expected" : " INCORRECTLY")};
}

Outcome weight_separation(const BenchmarkRun& run) {
  if (!run.ok) return {false, "experiment failed: " + run.error};
  const auto acc = run.summary.per_seed("classifier_ce", "accuracy");
  const auto good = run.summary.per_seed("classifier_ce", "weight_correct");
  const auto bad = run.summary.per_seed("classifier_ce", "weight_mislabeled");
  std::size_t separated = 0;
  bool accurate = true;
  for (std::size_t i = 0; i < good.size(); ++i) {
    separated += good[i] > bad[i];
    accurate = accurate && acc[i] > 0.6;
  }
  const bool pass = run.config.paraphrase_size >= 2000 && good.size() == 5 && accurate && separated >= 4;
  return {pass, std::to_string(separated) + "/" + std::to_string(good.size()) +
                    " seeds separated; mean weight correct " + fmt(run.summary.mean("classifier_ce", "weight_correct"), 4) +
                    " vs mislabeled " + fmt(run.summary.mean("classifier_ce", "weight_mislabeled"), 4) +
                    "; classifier accuracy " + fmt(*std::min_element(acc.begin(), acc.end()), 3) + ".." +
                    fmt(*std::max_element(acc.begin(), acc.end()), 3)};
}

Outcome noise_mitigation(const BenchmarkRun& run) {
  if (!run.ok) return {false, "experiment failed: " + run.error};
  const auto lcwl = run.summary.per_seed("lcwl", "sari");
  const auto base = run.summary.per_seed("baseline_unweighted", "sari");
  std::size_t positive = 0;
  for (std::size_t i = 0; i < lcwl.size(); ++i) positive += lcwl[i] > base[i];
  const double gap = run.summary.mean("lcwl", "sari") - run.summary.mean("baseline_unweighted", "sari");
  const bool pass = run.config.pseudo_label_noise == 0.4 && lcwl.size() == 5 && gap > 0 &&
                    positive == lcwl.size() && run.seconds < 600;
  return {pass, "mean SARI lcwl " + fmt(run.summary.mean("lcwl", "sari"), 5) + " vs baseline " +
                    fmt(run.summary.mean("baseline_unweighted", "sari"), 5) + " (gap " + fmt(gap, 4) + "), " +
                    std::to_string(positive) + "/" + std::to_string(lcwl.size()) + " seeds positive, " +
                    fmt(run.seconds, 4) + " s"};
}

Outcome fine_tune_direction(const BenchmarkRun& run) {
  if (!run.ok) return {false, "experiment failed: " + run.error};
  const double ft = run.summary.mean("lcwl+ft", "sari");
  const double plain = run.summary.mean("lcwl", "sari");
  return {ft >= plain, "mean SARI lcwl+ft " + fmt(ft, 5) + " vs lcwl " + fmt(plain, 5) + " (gap " +
                           fmt(ft - plain, 4) + ")"};
}

Outcome determinism(const BenchmarkRun& first, const fs::path& config_path) {
  if (!first.ok) return {false, "experiment failed: " + first.error};
  const auto kept = first.dir.string() + ".first";
  fs::remove_all(kept);
  fs::rename(first.dir, kept);
  const int rc = run_cli("--config " + quoted(config_path) + " --out " + quoted(first.dir) +
                         " experiment > /dev/null 2>&1");
  if (rc != 0) return {false, "second run exited with " + std::to_string(rc)};
  const auto a = read_tree(kept), b = read_tree(first.dir);
  std::size_t differing = 0;
  std::string example;
  for (const auto& [path, bytes] : a) {
    const auto it = b.find(path);
    if (it == b.end() || it->second != bytes) {
      ++differing;
      if (example.empty()) example = path;
    }
  }
  if (a.size() != b.size()) differing += a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  std::size_t models = 0;
  for (const auto& [path, bytes] : a) models += path.find("generator.json") != std::string::npos;
  return {differing == 0 && a.count("manifest.json") == 1,
          std::to_string(a.size()) + " files compared (" + std::to_string(models) + " generator models)" +
              (differing ? ", " + std::to_string(differing) + " differ, e.g. " + example : ", all identical")};
}

Outcome rank_report() {
  const SystemScores scores = {
      {"A", {{"sari", 40.0}, {"bleu", 0.30}, {"fkgl", 7.0}, {"delta_fkgl", 2.0}}},
      {"B", {{"sari", 38.0}, {"bleu", 0.30}, {"fkgl", 5.5}, {"delta_fkgl", 3.0}}},
      {"C", {{"sari", 35.0}, {"bleu", 0.25}, {"fkgl", 9.0}, {"delta_fkgl", 1.0}}},
  };
  const MetricDirections dirs = {{"sari", RankDirection::higher_better()},
                                 {"bleu", RankDirection::higher_better()},
                                 {"fkgl", RankDirection::closer_to(6.0)},
                                 {"delta_fkgl", RankDirection::higher_better()}};
  // Worked by hand: bleu ties A and B; fkgl distances are 1.0, 0.5, 3.0.
  const std::map<std::string, std::vector<double>> expected_ranks = {
      {"sari", {1, 2, 3}}, {"bleu", {1.5, 1.5, 3}}, {"fkgl", {2, 1, 3}}, {"delta_fkgl", {2, 1, 3}}};
  const std::map<std::string, double> expected_avg = {{"A", 1.625}, {"B", 1.375}, {"C", 3.0}};
  const auto t = average_rank(scores, dirs);
  const bool pass = t.per_metric_ranks == expected_ranks && t.average_rank == expected_avg &&
                    t.systems == std::vector<std::string>{"A", "B", "C"};
  return {pass, "average ranks A " + fmt(t.average_rank.at("A")) + ", B " + fmt(t.average_rank.at("B")) +
                    ", C " + fmt(t.average_rank.at("C"))};
}

}  // namespace

int main() {
  const auto scratch = fs::temp_directory_path() / ("lcwl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path config_path = fs::path(LCWL_SOURCE_DIR) / "configs" / "default.json";

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "unit-weight identity", unit_weight_identity);
  report(2, "gradient fidelity", gradient_fidelity);
  report(3, "weight formula", weight_formula);
  report(4, "SCE arithmetic", sce_arithmetic);
  report(5, "metric oracles", metric_oracles);
  report(6, "filtering fidelity", filtering_fidelity);

  BenchmarkRun bench;
  bench.dir = scratch / "run";
  try {
    bench.config = load_config(config_path);
    const auto t0 = Clock::now();
    const int rc = run_cli("--config " + quoted(config_path) + " --out " + quoted(bench.dir) +
                           " experiment > " + quoted(scratch / "experiment.log") + " 2>&1");
    bench.seconds = seconds_since(t0);
    if (rc != 0) {
      bench.error = "exit code " + std::to_string(rc) + ": " + read_file(scratch / "experiment.log");
    } else {
      bench.summary = parse_summary(read_file(bench.dir / "summary.tsv"));
      bench.ok = true;
    }
  } catch (const std::exception& e) {
    bench.error = e.what();
  }

  report(7, "weight separation", [&] { return weight_separation(bench); });
  report(8, "noise mitigation", [&] { return noise_mitigation(bench); });
  report(9, "fine-tuning direction", [&] { return fine_tune_direction(bench); });
  report(10, "determinism", [&] { return determinism(bench, config_path); });
  report(11, "rank report", rank_report);

  std::error_code ec;
  fs::remove_all(scratch, ec);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
