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

// Command-line front end for the LCWL pipeline.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error.

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcwl/error.hpp"
#include "lcwl/experiment.hpp"
#include "lcwl/io.hpp"
#include "lcwl/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

lcwl::ExperimentConfig resolve_config(const GlobalOptions& g) {
  lcwl::ExperimentConfig c = g.config.empty() ? lcwl::ExperimentConfig{} : lcwl::load_config(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.seeds.clear();
  }
  if (!g.out.empty()) c.out = g.out;
  lcwl::validate(c);
  return c;
}

std::uint64_t command_seed(const lcwl::ExperimentConfig& c) { return c.effective_seeds().front(); }

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::string text = lcwl::read_file(path);
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

int train_classifier_cmd(const GlobalOptions& g, const std::string& data, const std::string& val,
                         const std::string& freq, const std::string& loss_name) {
  auto c = resolve_config(g);
  if (!loss_name.empty()) c.classifier_loss = loss_name;
  lcwl::validate(c);
  auto train = lcwl::load_labeled_jsonl(data, c.levels);
  std::vector<lcwl::LabeledSentence> held;
  if (!val.empty()) {
    held = lcwl::load_labeled_jsonl(val, c.levels);
  } else {
    // Hold out a fifth of the data for precision estimates.
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    lcwl::Rng rng(lcwl::derive_seed(command_seed(c), "holdout"));
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_val = std::max<std::size_t>(1, train.size() / 5);
    if (train.size() < 2) throw lcwl::DegenerateDataset("need at least two labelled sentences");
    std::vector<lcwl::LabeledSentence> rest;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_val ? held : rest).push_back(train[order[i]]);
    }
    train = std::move(rest);
  }
  lcwl::FrequencyTable table;
  if (!freq.empty()) {
    table = lcwl::FrequencyTable::load(freq);
  } else {
    std::vector<lcwl::Tokens> corpus;
    for (const auto& s : train) corpus.push_back(lcwl::tokenize_lenient(s.text));
    table = lcwl::FrequencyTable::from_corpus(corpus);
  }
  const auto spec = c.classifier_loss == "sce" ? c.sce : lcwl::LossSpec::cross_entropy();
  auto st = lcwl::stage_train_classifier(c, spec, train, held, table, command_seed(c), c.out, "");
  std::cout << lcwl::format_summary_tsv(st.summary);
  return 0;
}

int pseudo_label_cmd(const GlobalOptions& g, const std::string& classifier,
                     const std::string& precision, const std::string& pairs_path,
                     std::optional<double> noise, bool bleu_filter) {
  auto c = resolve_config(g);
  const auto model = lcwl::load_classifier(classifier);
  const auto prec = lcwl::precision_from_json(lcwl::read_file(precision));
  c.levels = model.num_classes - 1;
  if (noise) c.pseudo_label_noise = *noise;
  if (bleu_filter) c.bleu_filter = true;
  lcwl::validate(c);
  const auto pairs = lcwl::load_paraphrase_tsv(pairs_path);
  auto st = lcwl::stage_pseudo_label(c, model, prec, pairs, command_seed(c), c.out, "");
  std::cout << "kept " << st.corpus.examples.size() << " of " << pairs.size() << " pairs\n";
  return 0;
}

int train_generator_cmd(const GlobalOptions& g, const std::string& corpus,
                        const std::string& method) {
  const auto c = resolve_config(g);
  const auto m = lcwl::parse_method(method);
  const auto examples = lcwl::load_pseudo_jsonl(corpus);
  auto result = lcwl::stage_train_generator(c, examples, m.lcwl_weights, command_seed(c), c.out, "");
  std::cout << "trained " << result.steps << " steps, final loss "
            << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back()) << "\n";
  return 0;
}

int fine_tune_cmd(const GlobalOptions& g, const std::string& model_path, const std::string& data) {
  const auto c = resolve_config(g);
  auto model = lcwl::load_seq2seq(model_path);
  const auto gold = lcwl::load_parallel(data, lcwl::format_from_path(data), model.levels);
  auto result = lcwl::stage_fine_tune(c, std::move(model), gold, command_seed(c), c.out, "ft");
  std::cout << "fine-tuned " << result.steps << " steps\n";
  return 0;
}

int generate_cmd(const GlobalOptions& g, const std::string& model_path, int level,
                 const std::string& text, const std::string& input, std::optional<std::size_t> max_len) {
  const auto c = resolve_config(g);
  const auto model = lcwl::load_seq2seq(model_path);
  const std::size_t limit = max_len.value_or(c.generator.max_len);
  std::vector<std::string> sources;
  if (!text.empty()) sources.push_back(text);
  if (!input.empty()) {
    for (auto& line : read_lines(input)) {
      if (!line.empty()) sources.push_back(std::move(line));
    }
  }
  if (sources.empty()) throw lcwl::InvalidArgument("nothing to generate: pass --text or --input");
  for (const auto& s : sources) {
    std::cout << lcwl::join_tokens(lcwl::generate(model, lcwl::tokenize(s).tokens, level, limit))
              << "\n";
  }
  return 0;
}

int evaluate_cmd(const GlobalOptions& g, const std::string& test_path, const std::string& model_path,
                 const std::string& hyp_path, const std::string& system) {
  const auto c = resolve_config(g);
  if (model_path.empty() == hyp_path.empty()) {
    throw lcwl::InvalidArgument("pass exactly one of --model and --hypotheses");
  }
  const int levels = model_path.empty() ? c.levels : lcwl::load_seq2seq(model_path).levels;
  const auto test = lcwl::load_parallel(test_path, lcwl::format_from_path(test_path), levels);
  std::vector<lcwl::Tokens> hyps;
  if (!model_path.empty()) {
    hyps = lcwl::generate_for(lcwl::load_seq2seq(model_path), test, c.generator.max_len);
  } else {
    for (const auto& line : read_lines(hyp_path)) hyps.push_back(lcwl::tokenize_lenient(line));
  }
  const auto report = lcwl::evaluate_hypotheses(test, hyps);
  const auto tsv = lcwl::format_evaluation_tsv(report);
  lcwl::SystemScores scores{{system, lcwl::score_cells(report, c.metrics)}};
  lcwl::write_file(fs::path(c.out) / "eval.tsv", tsv);
  lcwl::write_file(fs::path(c.out) / "scores.jsonl", lcwl::scores_to_jsonl(scores));
  std::cout << tsv;
  return 0;
}

int experiment_cmd(const GlobalOptions& g) {
  const auto c = resolve_config(g);
  const auto result = lcwl::run_experiment(c, &std::cerr);
  std::cout << lcwl::read_file(result.dir / "summary.tsv");
  return 0;
}

int report_cmd(const GlobalOptions& g, const std::vector<std::string>& score_files,
               const std::vector<std::string>& closer) {
  const auto c = resolve_config(g);
  lcwl::SystemScores scores;
  for (const auto& f : score_files) {
    auto part = lcwl::read_scores_jsonl(f);
    scores.insert(scores.end(), part.begin(), part.end());
  }
  if (scores.empty()) throw lcwl::EmptyInput("no scores to rank");
  lcwl::MetricDirections dirs;
  for (const auto& m : c.metrics) dirs.emplace_back(m, lcwl::RankDirection::higher_better());
  for (const auto& spec : closer) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw lcwl::InvalidArgument("--closer expects metric=value");
    const auto metric = spec.substr(0, eq);
    double target = 0;
    try {
      std::size_t used = 0;
      target = std::stod(spec.substr(eq + 1), &used);
      if (used != spec.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw lcwl::InvalidArgument("--closer value is not a number: " + spec);
    }
    auto it = std::find_if(dirs.begin(), dirs.end(), [&](const auto& d) { return d.first == metric; });
    if (it == dirs.end()) throw lcwl::InvalidArgument("--closer names an unranked metric: " + metric);
    it->second = lcwl::RankDirection::closer_to(target);
  }
  const auto table = lcwl::average_rank(scores, dirs);
  const auto tsv = lcwl::format_rank_table(table, scores);
  lcwl::write_file(fs::path(c.out) / "ranks.tsv", tsv);
  std::cout << tsv;
  return 0;
}

int exit_code(const lcwl::Error& e) {
  switch (e.category()) {
    case lcwl::Error::Category::kUsage: return 1;
    case lcwl::Error::Category::kData: return 2;
    case lcwl::Error::Category::kInternal: return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label confidence weighted learning for target-level simplification"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed(s)");
  app.add_option("--out", g.out, "Output directory");

  std::string data, val, freq, loss, classifier, precision, pairs, corpus, method = "lcwl";
  std::string model, text, input, test, hyps, system = "system";
  int level = 1;
  double noise = 0;
  std::size_t max_len = 0;
  bool bleu_filter = false;
  std::vector<std::string> score_files, closer;

  auto* tc = app.add_subcommand("train-classifier", "Train the level classifier");
  tc->add_option("--data", data, "Labelled JSONL (text, level)")->required();
  tc->add_option("--val", val, "Held-out labelled JSONL for precision");
  tc->add_option("--freq", freq, "Ranked word list, most frequent first");
  tc->add_option("--loss", loss, "ce or sce")->check(CLI::IsMember({"ce", "sce"}));

  auto* pl = app.add_subcommand("pseudo-label", "Filter and pseudo-label paraphrase pairs");
  pl->add_option("--classifier", classifier, "Classifier JSON")->required();
  pl->add_option("--precision", precision, "Precision JSON")->required();
  pl->add_option("--pairs", pairs, "Paraphrase TSV (source, target)")->required();
  auto* noise_opt = pl->add_option("--noise", noise, "Target-label corruption rate");
  pl->add_flag("--bleu-filter", bleu_filter, "Keep pairs with pairwise BLEU in range");

  auto* tg = app.add_subcommand("train-generator", "Train the level-conditioned generator");
  tg->add_option("--corpus", corpus, "Pseudo-labelled JSONL")->required();
  tg->add_option("--method", method, "baseline_unweighted, lcwl, sce or lcwl_sce");

  auto* ft = app.add_subcommand("fine-tune", "Fine-tune a generator on gold pairs");
  ft->add_option("--model", model, "Generator JSON")->required();
  ft->add_option("--data", data, "Gold parallel TSV or JSONL")->required();

  auto* gen = app.add_subcommand("generate", "Simplify sentences to a target level");
  gen->add_option("--model", model, "Generator JSON")->required();
  gen->add_option("--level", level, "Target level")->required();
  gen->add_option("--text", text, "Sentence to simplify");
  gen->add_option("--input", input, "File with one sentence per line");
  auto* max_len_opt = gen->add_option("--max-len", max_len, "Output length cap");

  auto* ev = app.add_subcommand("evaluate", "Score a generator or hypotheses on a test set");
  ev->add_option("--test", test, "Gold parallel TSV or JSONL")->required();
  ev->add_option("--model", model, "Generator JSON");
  ev->add_option("--hypotheses", hyps, "One hypothesis per test line");
  ev->add_option("--system", system, "System name in scores.jsonl");

  auto* ex = app.add_subcommand("experiment", "Run the full method matrix");

  auto* rp = app.add_subcommand("report", "Average-rank table over scored systems");
  rp->add_option("--scores", score_files, "scores.jsonl files")->required();
  rp->add_option("--closer", closer, "metric=target for closer-is-better metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*tc) return train_classifier_cmd(g, data, val, freq, loss);
    if (*pl) {
      return pseudo_label_cmd(g, classifier, precision, pairs,
                              *noise_opt ? std::optional<double>(noise) : std::nullopt, bleu_filter);
    }
    if (*tg) return train_generator_cmd(g, corpus, method);
    if (*ft) return fine_tune_cmd(g, model, data);
    if (*gen) {
      return generate_cmd(g, model, level, text, input,
                          *max_len_opt ? std::optional<std::size_t>(max_len) : std::nullopt);
    }
    if (*ev) return evaluate_cmd(g, test, model, hyps, system);
    if (*ex) return experiment_cmd(g);
    if (*rp) return report_cmd(g, score_files, closer);
  } catch (const lcwl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
