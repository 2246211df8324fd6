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

#include "lcwl/experiment.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"
#include "lcwl/rng.hpp"

namespace lcwl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMethodBases[] = {"baseline_unweighted", "lcwl", "sce", "lcwl_sce"};
constexpr const char* kMetricNames[] = {"sari", "bleu", "fkgl", "delta_fkgl"};

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0) {
          throw ConfigError("");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

std::string tagged(const std::string& tag, const std::string& name) {
  return tag.empty() ? name : tag + "_" + name;
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(curve[i]) + "\n";
  }
  return out;
}

std::string level_token_name(LevelToken t) {
  return t == LevelToken::kTarget ? "target" : "source";
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

}  // namespace

std::string MethodSpec::base_name() const {
  return fine_tune ? name.substr(0, name.size() - 3) : name;
}

MethodSpec parse_method(const std::string& name) {
  MethodSpec m;
  m.name = name;
  std::string base = name;
  if (base.size() > 3 && base.ends_with("+ft")) {
    m.fine_tune = true;
    base.resize(base.size() - 3);
  }
  if (base == "baseline_unweighted") {
  } else if (base == "lcwl") {
    m.lcwl_weights = true;
  } else if (base == "sce") {
    m.sce_classifier = true;
  } else if (base == "lcwl_sce") {
    m.lcwl_weights = true;
    m.sce_classifier = true;
  } else {
    std::string known;
    for (const char* b : kMethodBases) known += std::string(known.empty() ? "" : ", ") + b;
    throw ConfigError("unknown method '" + name + "' (known: " + known + ", optional +ft)");
  }
  return m;
}

ExperimentConfig::ExperimentConfig() {
  generator.learning_rate = 0.5;
  generator.epochs = 12;
  generator.batch_size = 16;
  generator.max_len = 48;
  generator.clip_norm = 5.0;
  fine_tune = generator;
  fine_tune.learning_rate = 0.05;
  fine_tune.epochs = 4;
}

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
  return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
}

ExperimentConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  check_keys(root,
             {"seed", "seeds", "levels", "grammar", "data", "noise", "pseudo", "classifier",
              "generator", "fine_tune", "methods", "metrics", "out"},
             "");
  read(root, "seed", c.seed, "");
  read(root, "seeds", c.seeds, "");
  read(root, "levels", c.levels, "");
  read(root, "grammar", c.grammar, "");
  read(root, "out", c.out, "");
  read(root, "methods", c.methods, "");
  read(root, "metrics", c.metrics, "");
  if (auto it = root.find("data"); it != root.end()) {
    check_keys(*it, {"gold_size", "paraphrase_size", "split"}, "data");
    read(*it, "gold_size", c.gold_size, "data.");
    read(*it, "paraphrase_size", c.paraphrase_size, "data.");
    std::vector<double> split(c.split.begin(), c.split.end());
    read(*it, "split", split, "data.");
    if (split.size() != 3) throw ConfigError("data.split needs three ratios");
    std::copy(split.begin(), split.end(), c.split.begin());
  }
  if (auto it = root.find("noise"); it != root.end()) {
    check_keys(*it, {"classifier_labels", "pseudo_labels"}, "noise");
    read(*it, "classifier_labels", c.classifier_label_noise, "noise.");
    read(*it, "pseudo_labels", c.pseudo_label_noise, "noise.");
  }
  if (auto it = root.find("pseudo"); it != root.end()) {
    check_keys(*it, {"bleu_filter", "bleu_lo", "bleu_hi", "level_token"}, "pseudo");
    read(*it, "bleu_filter", c.bleu_filter, "pseudo.");
    read(*it, "bleu_lo", c.bleu_lo, "pseudo.");
    read(*it, "bleu_hi", c.bleu_hi, "pseudo.");
    std::string token = level_token_name(c.level_token);
    read(*it, "level_token", token, "pseudo.");
    if (token == "target") {
      c.level_token = LevelToken::kTarget;
    } else if (token == "source") {
      c.level_token = LevelToken::kSource;
    } else {
      throw ConfigError("pseudo.level_token must be 'target' or 'source'");
    }
  }
  if (auto it = root.find("classifier"); it != root.end()) {
    check_keys(*it, {"loss", "learning_rate", "epochs", "batch_size", "sce"}, "classifier");
    read(*it, "loss", c.classifier_loss, "classifier.");
    read(*it, "learning_rate", c.classifier.learning_rate, "classifier.");
    read(*it, "epochs", c.classifier.epochs, "classifier.");
    read(*it, "batch_size", c.classifier.batch_size, "classifier.");
    if (auto s = it->find("sce"); s != it->end()) {
      check_keys(*s, {"alpha", "beta", "log_zero"}, "classifier.sce");
      read(*s, "alpha", c.sce.alpha, "classifier.sce.");
      read(*s, "beta", c.sce.beta, "classifier.sce.");
      read(*s, "log_zero", c.sce.log_zero, "classifier.sce.");
    }
  }
  if (auto it = root.find("generator"); it != root.end()) {
    check_keys(*it,
               {"d_model", "learning_rate", "epochs", "batch_size", "max_len", "clip_norm",
                "init_scale", "min_freq"},
               "generator");
    read(*it, "d_model", c.d_model, "generator.");
    read(*it, "learning_rate", c.generator.learning_rate, "generator.");
    read(*it, "epochs", c.generator.epochs, "generator.");
    read(*it, "batch_size", c.generator.batch_size, "generator.");
    read(*it, "max_len", c.generator.max_len, "generator.");
    read(*it, "clip_norm", c.generator.clip_norm, "generator.");
    read(*it, "init_scale", c.init_scale, "generator.");
    read(*it, "min_freq", c.min_freq, "generator.");
  }
  c.fine_tune.max_len = c.generator.max_len;
  c.fine_tune.clip_norm = c.generator.clip_norm;
  if (auto it = root.find("fine_tune"); it != root.end()) {
    check_keys(*it, {"learning_rate", "epochs", "batch_size"}, "fine_tune");
    read(*it, "learning_rate", c.fine_tune.learning_rate, "fine_tune.");
    read(*it, "epochs", c.fine_tune.epochs, "fine_tune.");
    read(*it, "batch_size", c.fine_tune.batch_size, "fine_tune.");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return config_from_json(text);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["seeds"] = c.effective_seeds();
  j["levels"] = c.levels;
  j["grammar"] = c.grammar;
  j["data"] = {{"gold_size", c.gold_size},
               {"paraphrase_size", c.paraphrase_size},
               {"split", c.split}};
  j["noise"] = {{"classifier_labels", c.classifier_label_noise},
                {"pseudo_labels", c.pseudo_label_noise}};
  j["pseudo"] = {{"bleu_filter", c.bleu_filter},
                 {"bleu_lo", c.bleu_lo},
                 {"bleu_hi", c.bleu_hi},
                 {"level_token", level_token_name(c.level_token)}};
  j["classifier"] = {{"loss", c.classifier_loss},
                     {"learning_rate", c.classifier.learning_rate},
                     {"epochs", c.classifier.epochs},
                     {"batch_size", c.classifier.batch_size},
                     {"sce",
                      {{"alpha", c.sce.alpha},
                       {"beta", c.sce.beta},
                       {"log_zero", c.sce.log_zero}}}};
  j["generator"] = {{"d_model", c.d_model},
                    {"learning_rate", c.generator.learning_rate},
                    {"epochs", c.generator.epochs},
                    {"batch_size", c.generator.batch_size},
                    {"max_len", c.generator.max_len},
                    {"clip_norm", c.generator.clip_norm},
                    {"init_scale", c.init_scale},
                    {"min_freq", c.min_freq}};
  j["fine_tune"] = {{"learning_rate", c.fine_tune.learning_rate},
                    {"epochs", c.fine_tune.epochs},
                    {"batch_size", c.fine_tune.batch_size}};
  j["methods"] = c.methods;
  j["metrics"] = c.metrics;
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.levels >= 2 && c.levels <= 32, "levels must lie in [2, 32]");
  require(c.gold_size >= 10, "data.gold_size must be at least 10");
  require(c.paraphrase_size >= 1, "data.paraphrase_size must be positive");
  double sum = 0;
  for (double r : c.split) {
    require(r > 0, "data.split ratios must be positive");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "data.split ratios must sum to 1");
  require(c.classifier_label_noise >= 0 && c.classifier_label_noise <= 1,
          "noise.classifier_labels must lie in [0, 1]");
  require(c.pseudo_label_noise >= 0 && c.pseudo_label_noise <= 1,
          "noise.pseudo_labels must lie in [0, 1]");
  require(c.bleu_lo >= 0 && c.bleu_hi <= 1 && c.bleu_lo < c.bleu_hi,
          "pseudo.bleu_lo < pseudo.bleu_hi within [0, 1] required");
  require(c.classifier_loss == "ce" || c.classifier_loss == "sce",
          "classifier.loss must be 'ce' or 'sce'");
  require(c.classifier.learning_rate > 0, "classifier.learning_rate must be positive");
  require(c.classifier.epochs >= 1, "classifier.epochs must be at least 1");
  require(c.classifier.batch_size >= 1, "classifier.batch_size must be at least 1");
  require(c.sce.alpha >= 0 && c.sce.beta >= 0, "classifier.sce weights must be non-negative");
  require(c.sce.log_zero < 0, "classifier.sce.log_zero must be negative");
  require(c.d_model >= 1, "generator.d_model must be positive");
  require(c.init_scale > 0, "generator.init_scale must be positive");
  require(c.min_freq >= 1, "generator.min_freq must be at least 1");
  for (const auto* g : {&c.generator, &c.fine_tune}) {
    require(g->learning_rate > 0, "learning rates must be positive");
    require(g->epochs >= 0, "epochs must be non-negative");
    require(g->batch_size >= 1, "batch sizes must be at least 1");
    require(g->clip_norm > 0, "generator.clip_norm must be positive");
  }
  require(c.generator.max_len >= 2, "generator.max_len must be at least 2");
  require(!c.methods.empty(), "methods must not be empty");
  std::set<std::string> seen;
  for (const auto& m : c.methods) {
    parse_method(m);
    require(seen.insert(m).second, "duplicate method '" + m + "'");
  }
  require(!c.metrics.empty(), "metrics must not be empty");
  seen.clear();
  for (const auto& m : c.metrics) {
    const bool known = std::any_of(std::begin(kMetricNames), std::end(kMetricNames),
                                   [&](const char* k) { return m == k; });
    require(known, "unknown metric '" + m + "'");
    require(seen.insert(m).second, "duplicate metric '" + m + "'");
  }
  std::set<std::uint64_t> seeds(c.seeds.begin(), c.seeds.end());
  require(seeds.size() == c.seeds.size(), "seeds must be distinct");
  require(!c.out.empty(), "out must not be empty");
}

SyntheticGrammar resolve_grammar(const ExperimentConfig& config) {
  SyntheticGrammar g;
  try {
    g = config.grammar.empty() ? default_grammar() : load_grammar(config.grammar);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot load grammar: ") + e.what());
  }
  if (g.levels != config.levels) {
    throw ConfigError("grammar defines " + std::to_string(g.levels) +
                      " levels but the config asks for " + std::to_string(config.levels));
  }
  return g;
}

// ---------------------------------------------------------------------------

ClassifierStage stage_train_classifier(const ExperimentConfig& config, const LossSpec& loss,
                                       const std::vector<LabeledSentence>& train,
                                       const std::vector<LabeledSentence>& val,
                                       const FrequencyTable& table, std::uint64_t seed,
                                       const fs::path& out, const std::string& tag) {
  if (val.empty()) throw DegenerateDataset("classifier validation set is empty");
  ClassifierTrainConfig tc = config.classifier;
  tc.seed = derive_seed(seed, "classifier");
  ClassifierStage st;
  st.model = train_classifier(train, config.levels + 1, table, loss, tc);
  st.precision = per_class_precision(st.model, val);
  st.summary = summarize(st.model, val);
  // Serialize everything before touching the filesystem.
  const auto model_json = classifier_to_json(st.model);
  const auto precision_json = precision_to_json(st.precision);
  const auto summary_tsv = format_summary_tsv(st.summary);
  write_file(out / tagged(tag, "classifier.json"), model_json);
  write_file(out / tagged(tag, "precision.json"), precision_json);
  write_file(out / tagged(tag, "classifier_summary.tsv"), summary_tsv);
  return st;
}

PseudoStage stage_pseudo_label(const ExperimentConfig& config, const ClassifierModel& model,
                               const PrecisionProfile& precision,
                               const std::vector<ParaphrasePair>& pairs, std::uint64_t seed,
                               const fs::path& out, const std::string& tag) {
  PseudoStage st;
  auto& report = st.corpus.filter;
  report.input = pairs.size();
  std::size_t bleu_removed = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (auto rule = rejection_rule(pairs[i])) {
      ++report.removed[static_cast<std::size_t>(*rule)];
      continue;
    }
    if (config.bleu_filter &&
        pairwise_bleu_filter({{pairs[i].source, pairs[i].target}}, config.bleu_lo, config.bleu_hi)
            .empty()) {
      ++bleu_removed;
      continue;
    }
    st.kept_indices.push_back(i);
    st.corpus.examples.push_back(label_pair(model, precision, pairs[i]));
  }
  report.kept = st.kept_indices.size();
  st.clean = st.corpus.examples;
  st.corrupted = corrupt_target_labels(st.corpus.examples, model, precision,
                                       config.pseudo_label_noise, config.levels,
                                       derive_seed(seed, "pseudo_noise"));
  const auto flipped = static_cast<std::size_t>(
      std::count(st.corrupted.begin(), st.corrupted.end(), true));
  std::string summary = format_filter_report(report);
  if (config.bleu_filter) summary += "bleu_range\t" + std::to_string(bleu_removed) + "\t\n";
  summary += "corrupted_targets\t" + std::to_string(flipped) + "\t\n";
  write_file(out / tagged(tag, "pseudo.jsonl"), pseudo_to_jsonl(st.corpus.examples));
  write_file(out / tagged(tag, "filter_summary.tsv"), summary);
  return st;
}

std::vector<WeightedPair> generator_pairs(const ExperimentConfig& config,
                                          const std::vector<PseudoExample>& corpus,
                                          bool lcwl_weights, std::size_t* skipped) {
  std::vector<WeightedPair> pairs;
  std::size_t dropped = 0;
  for (const auto& ex : corpus) {
    const int level = config.level_token == LevelToken::kTarget ? ex.tgt_level : ex.src_level;
    auto src = tokenize_lenient(ex.source);
    auto tgt = tokenize_lenient(ex.target);
    if (level < 1 || level > config.levels || src.empty() || tgt.empty()) {
      ++dropped;
      continue;
    }
    pairs.push_back({std::move(src), std::move(tgt), level, lcwl_weights ? ex.weight : 1.0});
  }
  if (skipped) *skipped = dropped;
  return pairs;
}

Vocab build_generator_vocab(const std::vector<WeightedPair>& pairs, int levels,
                            std::size_t min_freq) {
  std::vector<Tokens> corpus;
  corpus.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    corpus.push_back(p.source);
    corpus.push_back(p.target);
  }
  return Vocab::build(corpus, levels, min_freq);
}

TrainResult stage_train_generator(const ExperimentConfig& config,
                                  const std::vector<PseudoExample>& corpus, bool lcwl_weights,
                                  std::uint64_t seed, const fs::path& out,
                                  const std::string& tag) {
  std::size_t skipped = 0;
  const auto pairs = generator_pairs(config, corpus, lcwl_weights, &skipped);
  if (pairs.empty()) {
    throw EmptyCorpus("no pseudo-labelled pair has a conditioning level in 1.." +
                      std::to_string(config.levels));
  }
  if (std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.weight == 0.0; })) {
    warn("every training weight is zero; the generator parameters will not change");
  }
  auto model = init_model(build_generator_vocab(pairs, config.levels, config.min_freq),
                          config.d_model, derive_seed(seed, "generator_init"), config.init_scale);
  auto tc = config.generator;
  tc.seed = derive_seed(seed, "generator_order");
  auto result = train(std::move(model), pairs, tc);
  write_file(out / tagged(tag, "generator.json"), seq2seq_to_json(result.model));
  write_file(out / tagged(tag, "loss_curve.csv"), loss_curve_csv(result.loss_curve));
  (void)skipped;
  return result;
}

TrainResult stage_fine_tune(const ExperimentConfig& config, Seq2SeqModel model,
                            const ParallelDataset& gold, std::uint64_t seed, const fs::path& out,
                            const std::string& tag) {
  std::vector<WeightedPair> pairs;
  pairs.reserve(gold.examples.size());
  for (const auto& ex : gold.examples) {
    pairs.push_back({tokenize_lenient(ex.source), tokenize_lenient(ex.target), ex.level, 1.0});
  }
  auto tc = config.fine_tune;
  tc.seed = derive_seed(seed, "fine_tune");
  auto result = fine_tune(std::move(model), pairs, tc);
  write_file(out / tagged(tag, "generator.json"), seq2seq_to_json(result.model));
  write_file(out / tagged(tag, "loss_curve.csv"), loss_curve_csv(result.loss_curve));
  return result;
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
  std::size_t count = 0;
  std::size_t empty = 0;
  double sari = 0;
  double bleu = 0;
  double fkgl = 0;
  double delta = 0;

  LevelScores finish() const {
    LevelScores s;
    s.count = count;
    s.empty_outputs = empty;
    if (count > 0) {
      s.scores.sari = sari / static_cast<double>(count);
      s.scores.bleu = bleu / static_cast<double>(count);
    }
    const std::size_t scored = count - empty;
    if (scored > 0) {
      s.scores.fkgl = fkgl / static_cast<double>(scored);
      s.scores.delta_fkgl = delta / static_cast<double>(scored);
    }
    return s;
  }
};

void score_one(Accumulator& acc, const Tokens& src, const Tokens& ref, const Tokens& hyp) {
  ++acc.count;
  if (count_word_tokens(hyp) == 0) {
    ++acc.empty;
    return;
  }
  acc.sari += sari(src, hyp, {ref});
  acc.bleu += bleu(hyp, {ref});
  const double out_fkgl = fkgl(join_tokens(hyp));
  acc.fkgl += out_fkgl;
  acc.delta += fkgl(join_tokens(src)) - out_fkgl;
}

}  // namespace

EvaluationReport evaluate_hypotheses(const ParallelDataset& test,
                                     const std::vector<Tokens>& hypotheses) {
  if (hypotheses.size() != test.examples.size()) {
    throw DimensionMismatch("got " + std::to_string(hypotheses.size()) + " hypotheses for " +
                            std::to_string(test.examples.size()) + " test examples");
  }
  if (test.examples.empty()) throw EmptyInput("evaluation set is empty");
  std::map<int, Accumulator> acc;
  Accumulator reference;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& ex = test.examples[i];
    const auto src = tokenize(ex.source).tokens;
    const auto ref = tokenize(ex.target).tokens;
    score_one(acc[ex.level], src, ref, hypotheses[i]);
    score_one(acc[0], src, ref, hypotheses[i]);
    score_one(reference, src, ref, ref);
  }
  EvaluationReport report;
  for (const auto& [level, a] : acc) report.per_level[level] = a.finish();
  report.reference = reference.finish();
  return report;
}

std::vector<Tokens> generate_for(const Seq2SeqModel& model, const ParallelDataset& test,
                                 std::size_t max_len) {
  std::vector<Tokens> out;
  out.reserve(test.examples.size());
  for (const auto& ex : test.examples) {
    out.push_back(generate(model, tokenize_lenient(ex.source), ex.level, max_len));
  }
  return out;
}

std::string format_evaluation_tsv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "level\tcount\tempty\tsari\tbleu\tfkgl\tdelta_fkgl\n";
  auto row = [&](const std::string& name, const LevelScores& s) {
    os << name << '\t' << s.count << '\t' << s.empty_outputs << '\t'
       << format_double(s.scores.sari) << '\t' << format_double(s.scores.bleu) << '\t'
       << format_double(s.scores.fkgl) << '\t' << format_double(s.scores.delta_fkgl) << '\n';
  };
  for (const auto& [level, s] : report.per_level) {
    if (level != 0) row(std::to_string(level), s);
  }
  row("all", report.per_level.at(0));
  row("reference", report.reference);
  return os.str();
}

std::map<std::string, double> score_cells(const EvaluationReport& report,
                                          const std::vector<std::string>& metrics) {
  const auto& s = report.per_level.at(0).scores;
  std::map<std::string, double> cells;
  for (const auto& m : metrics) {
    if (m == "sari") cells[m] = s.sari;
    else if (m == "bleu") cells[m] = s.bleu;
    else if (m == "fkgl") cells[m] = s.fkgl;
    else if (m == "delta_fkgl") cells[m] = s.delta_fkgl;
    else throw InvalidArgument("unknown metric '" + m + "'");
  }
  return cells;
}

MetricDirections default_directions(const std::vector<std::string>& metrics,
                                    const EvaluationReport& reference_source) {
  const auto& ref = reference_source.reference.scores;
  MetricDirections dirs;
  for (const auto& m : metrics) {
    if (m == "fkgl") dirs.emplace_back(m, RankDirection::closer_to(ref.fkgl));
    else if (m == "delta_fkgl") dirs.emplace_back(m, RankDirection::closer_to(ref.delta_fkgl));
    else dirs.emplace_back(m, RankDirection::higher_better());
  }
  return dirs;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<LabeledSentence> noisy_labels(std::vector<LabeledSentence> data, int levels,
                                          double rate, std::uint64_t seed) {
  if (rate <= 0) return data;
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& d : data) labels.push_back(d.level);
  inject_level_noise(labels, 0, levels, rate, seed);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].level = labels[i];
  return data;
}

std::pair<double, double> separation(const PseudoStage& st, const SyntheticCorpus& para) {
  double good = 0, bad = 0;
  std::size_t n_good = 0, n_bad = 0;
  for (std::size_t j = 0; j < st.clean.size(); ++j) {
    const auto i = st.kept_indices[j];
    const auto& ex = st.clean[j];
    if (ex.src_level == para.hidden_source_levels[i] &&
        ex.tgt_level == para.hidden_target_levels[i]) {
      good += ex.weight;
      ++n_good;
    } else {
      bad += ex.weight;
      ++n_bad;
    }
  }
  return {n_good ? good / static_cast<double>(n_good) : 0.0,
          n_bad ? bad / static_cast<double>(n_bad) : 0.0};
}

std::string hidden_levels_tsv(const SyntheticCorpus& c) {
  std::string out = "source_level\ttarget_level\n";
  for (std::size_t i = 0; i < c.hidden_source_levels.size(); ++i) {
    out += std::to_string(c.hidden_source_levels[i]) + "\t" +
           std::to_string(c.hidden_target_levels[i]) + "\n";
  }
  return out;
}

std::string generations_txt(const std::vector<Tokens>& hyps) {
  std::string out;
  for (const auto& h : hyps) out += join_tokens(h) + "\n";
  return out;
}

SeedResult run_seed(const ExperimentConfig& config, const SyntheticGrammar& grammar,
                    std::uint64_t seed, const fs::path& dir, std::ostream* log) {
  SeedResult result;
  result.seed = seed;
  const auto gold = synth_generate(grammar, config.gold_size, derive_seed(seed, "gold"));
  const auto parts = split(gold.dataset, config.split, derive_seed(seed, "split"));
  write_file(dir / "train.tsv", parallel_to_tsv(parts[0]));
  write_file(dir / "val.tsv", parallel_to_tsv(parts[1]));
  write_file(dir / "test.tsv", parallel_to_tsv(parts[2]));
  const auto para = synth_generate(grammar, config.paraphrase_size, derive_seed(seed, "paraphrase"));
  write_file(dir / "paraphrases.tsv", paraphrases_to_tsv(para.pairs));
  write_file(dir / "hidden_levels.tsv", hidden_levels_tsv(para));

  const auto train_labeled =
      noisy_labels(to_labeled_sentences(parts[0]), config.levels, config.classifier_label_noise,
                   derive_seed(seed, "classifier_noise"));
  const auto val_labeled = to_labeled_sentences(parts[1]);
  const auto table = grammar_frequency_table(grammar);
  write_file(dir / "classifier_train.jsonl", labeled_to_jsonl(train_labeled));
  write_file(dir / "classifier_val.jsonl", labeled_to_jsonl(val_labeled));

  std::vector<MethodSpec> methods;
  std::set<std::string> losses;
  for (const auto& name : config.methods) {
    methods.push_back(parse_method(name));
    losses.insert(methods.back().sce_classifier ? "sce" : "ce");
  }

  std::map<std::string, PseudoStage> pseudo;
  for (const auto& loss : losses) {
    const auto spec = loss == "sce" ? config.sce : LossSpec::cross_entropy();
    auto cls = stage_train_classifier(config, spec, train_labeled, val_labeled, table, seed, dir,
                                      loss);
    result.classifier_accuracy[loss] = cls.summary.accuracy;
    auto st = stage_pseudo_label(config, cls.model, cls.precision, para.pairs, seed, dir, loss);
    result.weight_separation[loss] = separation(st, para);
    if (log) {
      *log << "seed " << seed << ": " << loss << " classifier accuracy "
           << format_double(cls.summary.accuracy) << ", " << st.corpus.examples.size()
           << " pseudo pairs\n";
    }
    pseudo.emplace(loss, std::move(st));
  }

  std::map<std::string, Seq2SeqModel> base_models;
  SystemScores scores;
  for (const auto& m : methods) {
    const auto base = m.base_name();
    auto it = base_models.find(base);
    if (it == base_models.end()) {
      const auto& corpus = pseudo.at(m.sce_classifier ? "sce" : "ce").corpus.examples;
      auto trained = stage_train_generator(config, corpus, m.lcwl_weights, seed, dir, base);
      it = base_models.emplace(base, std::move(trained.model)).first;
    }
    Seq2SeqModel model =
        m.fine_tune ? stage_fine_tune(config, it->second, parts[0], seed, dir, m.name).model
                    : it->second;
    const auto hyps = generate_for(model, parts[2], config.generator.max_len);
    auto report = evaluate_hypotheses(parts[2], hyps);
    write_file(dir / tagged(m.name, "generations.txt"), generations_txt(hyps));
    write_file(dir / tagged(m.name, "eval.tsv"), format_evaluation_tsv(report));
    scores.emplace_back(m.name, score_cells(report, config.metrics));
    if (log) {
      *log << "seed " << seed << ": " << m.name << " SARI "
           << format_double(report.per_level.at(0).scores.sari) << "\n";
    }
    result.methods.push_back({m.name, std::move(report)});
  }
  write_file(dir / "scores.jsonl", scores_to_jsonl(scores));
  result.ranks =
      average_rank(scores, default_directions(config.metrics, result.methods.front().evaluation));
  write_file(dir / "ranks.tsv", format_rank_table(result.ranks, scores));
  return result;
}

std::string summary_tsv(const ExperimentConfig& config, const ExperimentResult& r) {
  std::ostringstream os;
  os << "system\tquantity";
  for (const auto& s : r.seeds) os << "\tseed_" << s.seed;
  os << "\tmean\n";
  auto row = [&](const std::string& system, const std::string& quantity, auto&& value) {
    os << system << '\t' << quantity;
    double sum = 0;
    for (const auto& s : r.seeds) {
      const double v = value(s);
      sum += v;
      os << '\t' << format_double(v);
    }
    os << '\t' << format_double(sum / static_cast<double>(r.seeds.size())) << '\n';
  };
  for (const auto& [loss, acc] : r.seeds.front().classifier_accuracy) {
    (void)acc;
    row("classifier_" + loss, "accuracy",
        [&](const SeedResult& s) { return s.classifier_accuracy.at(loss); });
    row("classifier_" + loss, "weight_correct",
        [&](const SeedResult& s) { return s.weight_separation.at(loss).first; });
    row("classifier_" + loss, "weight_mislabeled",
        [&](const SeedResult& s) { return s.weight_separation.at(loss).second; });
  }
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    const auto& name = config.methods[k];
    for (const auto& metric : config.metrics) {
      row(name, metric, [&](const SeedResult& s) {
        return score_cells(s.methods[k].evaluation, {metric}).at(metric);
      });
    }
    row(name, "average_rank", [&](const SeedResult& s) { return s.ranks.average_rank.at(name); });
  }
  // SARI gap of every method over the unit-weight baseline when both ran.
  const auto& names = config.methods;
  const auto base = std::find(names.begin(), names.end(), "baseline_unweighted");
  if (base != names.end()) {
    const auto b = static_cast<std::size_t>(base - names.begin());
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (k == b) continue;
      row(names[k] + "-baseline_unweighted", "sari_difference", [&](const SeedResult& s) {
        return s.methods[k].evaluation.per_level.at(0).scores.sari -
               s.methods[b].evaluation.per_level.at(0).scores.sari;
      });
    }
  }
  return os.str();
}

// Rank table over seed-averaged scores; closer_to targets are the averaged
// reference statistics.
std::string pooled_ranks(const ExperimentConfig& config, const ExperimentResult& r) {
  const double n = static_cast<double>(r.seeds.size());
  SystemScores scores;
  EvaluationReport reference;
  auto& ref = reference.reference.scores;
  for (const auto& s : r.seeds) {
    ref.fkgl += s.methods.front().evaluation.reference.scores.fkgl / n;
    ref.delta_fkgl += s.methods.front().evaluation.reference.scores.delta_fkgl / n;
  }
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    std::map<std::string, double> mean;
    for (const auto& s : r.seeds) {
      for (const auto& [metric, v] : score_cells(s.methods[k].evaluation, config.metrics)) {
        mean[metric] += v / n;
      }
    }
    scores.emplace_back(config.methods[k], std::move(mean));
  }
  return format_rank_table(average_rank(scores, default_directions(config.metrics, reference)),
                           scores);
}

std::string manifest_json(const ExperimentConfig& config, const fs::path& dir,
                          const std::string& status, const std::string& error) {
  std::vector<fs::path> files;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), dir);
      if (rel == "manifest.json" || rel.extension() == ".tmp") continue;
      files.push_back(rel);
    }
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const auto& f : files) {
    artifacts.push_back({{"path", f.generic_string()}, {"sha256", sha256_hex(read_file(dir / f))}});
  }
  json j;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["config_sha256"] = sha256_hex(config_to_json(config));
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  validate(config);
  const auto grammar = resolve_grammar(config);
  ExperimentResult result;
  result.dir = config.out;
  write_file(result.dir / "config.json", config_to_json(config));
  try {
    for (auto seed : config.effective_seeds()) {
      result.seeds.push_back(
          run_seed(config, grammar, seed, result.dir / ("seed_" + std::to_string(seed)), log));
    }
    write_file(result.dir / "summary.tsv", summary_tsv(config, result));
    write_file(result.dir / "ranks.tsv", pooled_ranks(config, result));
  } catch (const std::exception& e) {
    write_file(result.dir / "manifest.json", manifest_json(config, result.dir, "partial", e.what()));
    throw;
  }
  write_file(result.dir / "manifest.json", manifest_json(config, result.dir, "complete", ""));
  return result;
}

double mean_sari(const ExperimentResult& result, const std::string& method) {
  double sum = 0;
  for (const auto& s : result.seeds) {
    auto it = std::find_if(s.methods.begin(), s.methods.end(),
                           [&](const MethodResult& m) { return m.method == method; });
    if (it == s.methods.end()) throw InvalidArgument("method '" + method + "' was not run");
    sum += it->evaluation.per_level.at(0).scores.sari;
  }
  return sum / static_cast<double>(result.seeds.size());
}

}  // namespace lcwl
