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

#include "lcwl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"
#include "lcwl/rng.hpp"

namespace lcwl {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

void check_label(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(classes) + ")");
  }
}

}  // namespace

ClassifierModel make_classifier(int num_classes, FeatureSpec spec, FrequencyTable table) {
  if (num_classes < 2) throw InvalidArgument("classifier needs at least two classes");
  const std::size_t dim = spec.names.size();
  if (spec.mean.empty()) spec.mean.assign(dim, 0.0);
  if (spec.stddev.empty()) spec.stddev.assign(dim, 1.0);
  if (spec.mean.size() != dim || spec.stddev.size() != dim) {
    throw DimensionMismatch("feature spec statistics do not match feature names");
  }
  ClassifierModel m;
  m.num_classes = num_classes;
  m.feature_spec = std::move(spec);
  m.weights.assign(static_cast<std::size_t>(num_classes) * dim, 0.0);
  m.bias.assign(static_cast<std::size_t>(num_classes), 0.0);
  m.frequency_table = std::move(table);
  return m;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<double> logits(const ClassifierModel& model, std::span<const double> x) {
  const std::size_t dim = model.feature_dim();
  if (x.size() != dim) {
    throw DimensionMismatch("expected " + std::to_string(dim) + " features, got " +
                            std::to_string(x.size()));
  }
  std::vector<double> z(model.bias);
  for (int k = 0; k < model.num_classes; ++k) {
    const double* row = model.weights.data() + static_cast<std::size_t>(k) * dim;
    double acc = z[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < dim; ++j) acc += row[j] * x[j];
    z[static_cast<std::size_t>(k)] = acc;
  }
  return z;
}

Prediction predict(const ClassifierModel& model, std::span<const double> standardized) {
  Prediction p;
  p.distribution = softmax(logits(model, standardized));
  p.level = argmax(p.distribution);
  p.confidence = p.distribution[static_cast<std::size_t>(p.level)];
  return p;
}

std::vector<double> standardize(const ClassifierModel& model, const FeatureVector& features) {
  auto x = to_vector(features);
  const auto& spec = model.feature_spec;
  if (x.size() != spec.names.size()) {
    throw DimensionMismatch("feature vector does not match the model's feature spec");
  }
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - spec.mean[j]) / spec.stddev[j];
  return x;
}

Prediction predict(const ClassifierModel& model, const FeatureVector& features) {
  return predict(model, standardize(model, features));
}

Prediction classify_text(const ClassifierModel& model, std::string_view text) {
  return predict(model, extract_features(tokenize(text), model.frequency_table));
}

double ce_loss(std::span<const double> distribution, int label) {
  check_label(label, distribution.size());
  return -std::log(std::max(distribution[static_cast<std::size_t>(label)], kProbabilityFloor));
}

double sce_loss(std::span<const double> distribution, int label, double alpha, double beta,
                double log_zero) {
  if (!(log_zero < 0)) throw InvalidArgument("sce_loss: log-zero truncation A must be negative");
  const double p = distribution[static_cast<std::size_t>(label)];
  return alpha * ce_loss(distribution, label) + beta * (-log_zero) * (1.0 - p);
}

double loss_value(const LossSpec& loss, std::span<const double> distribution, int label) {
  return loss.kind == LossSpec::Kind::kCrossEntropy
             ? ce_loss(distribution, label)
             : sce_loss(distribution, label, loss.alpha, loss.beta, loss.log_zero);
}

std::vector<double> loss_logit_gradient(const LossSpec& loss, std::span<const double> p,
                                        int label) {
  check_label(label, p.size());
  const auto y = static_cast<std::size_t>(label);
  std::vector<double> g(p.size());
  if (loss.kind == LossSpec::Kind::kCrossEntropy) {
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] - (k == y ? 1.0 : 0.0);
    return g;
  }
  // d/dz [-A (1 - p_y)] = A p_y (e_y - p).
  const double rce_scale = loss.beta * loss.log_zero * p[y];
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double onehot = k == y ? 1.0 : 0.0;
    g[k] = loss.alpha * (p[k] - onehot) + rce_scale * (onehot - p[k]);
  }
  return g;
}

ClassifierGradient batch_gradient(const ClassifierModel& model, const FeatureDataset& data,
                                  std::span<const std::size_t> rows, const LossSpec& loss) {
  const std::size_t dim = model.feature_dim();
  ClassifierGradient g;
  g.weights.assign(model.weights.size(), 0.0);
  g.bias.assign(model.bias.size(), 0.0);
  if (rows.empty()) return g;
  for (std::size_t r : rows) {
    const auto& x = data.rows[r];
    const int y = data.labels[r];
    const auto p = softmax(logits(model, x));
    g.loss += loss_value(loss, p, y);
    const auto dz = loss_logit_gradient(loss, p, y);
    for (int k = 0; k < model.num_classes; ++k) {
      const double d = dz[static_cast<std::size_t>(k)];
      double* row = g.weights.data() + static_cast<std::size_t>(k) * dim;
      for (std::size_t j = 0; j < dim; ++j) row[j] += d * x[j];
      g.bias[static_cast<std::size_t>(k)] += d;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  g.loss *= inv;
  for (auto& v : g.weights) v *= inv;
  for (auto& v : g.bias) v *= inv;
  return g;
}

ClassifierModel train_on_features(ClassifierModel model, const FeatureDataset& data,
                                  const LossSpec& loss, const ClassifierTrainConfig& config,
                                  std::vector<double>* loss_curve) {
  if (data.rows.empty()) throw DegenerateDataset("classifier training set is empty");
  if (data.rows.size() != data.labels.size()) {
    throw DimensionMismatch("feature rows and labels differ in length");
  }
  for (int y : data.labels) check_label(y, static_cast<std::size_t>(model.num_classes));
  if (config.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  std::fill(model.weights.begin(), model.weights.end(), 0.0);
  std::fill(model.bias.begin(), model.bias.end(), 0.0);

  Rng rng(config.seed);
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const auto g = batch_gradient(model, data, batch, loss);
      epoch_loss += g.loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        model.weights[i] -= config.learning_rate * g.weights[i];
      }
      for (std::size_t i = 0; i < model.bias.size(); ++i) {
        model.bias[i] -= config.learning_rate * g.bias[i];
      }
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return model;
}

ClassifierModel train_classifier(const std::vector<LabeledSentence>& train, int num_classes,
                                 const FrequencyTable& table, const LossSpec& loss,
                                 const ClassifierTrainConfig& config) {
  if (train.empty()) throw DegenerateDataset("classifier training set is empty");
  std::set<int> classes;
  std::vector<std::vector<double>> raw;
  raw.reserve(train.size());
  for (const auto& ex : train) {
    check_label(ex.level, static_cast<std::size_t>(num_classes));
    classes.insert(ex.level);
    raw.push_back(to_vector(extract_features(tokenize(ex.text), table)));
  }
  if (classes.size() < 2) {
    throw DegenerateDataset("classifier training needs at least two distinct levels");
  }
  FeatureSpec spec;
  spec.names = feature_names();
  const std::size_t dim = spec.names.size();
  spec.mean.assign(dim, 0.0);
  spec.stddev.assign(dim, 0.0);
  const double n = static_cast<double>(raw.size());
  for (const auto& x : raw) {
    for (std::size_t j = 0; j < dim; ++j) spec.mean[j] += x[j];
  }
  for (auto& m : spec.mean) m /= n;
  for (const auto& x : raw) {
    for (std::size_t j = 0; j < dim; ++j) {
      spec.stddev[j] += (x[j] - spec.mean[j]) * (x[j] - spec.mean[j]);
    }
  }
  for (auto& s : spec.stddev) {
    s = std::sqrt(s / n);
    if (!(s > 1e-12)) s = 1.0;  // constant feature
  }
  auto model = make_classifier(num_classes, spec, table);
  FeatureDataset data;
  data.rows.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto x = raw[i];
    for (std::size_t j = 0; j < dim; ++j) x[j] = (x[j] - spec.mean[j]) / spec.stddev[j];
    data.rows.push_back(std::move(x));
    data.labels.push_back(train[i].level);
  }
  return train_on_features(std::move(model), data, loss, config);
}

PrecisionProfile precision_from_predictions(std::span<const int> gold, std::span<const int> predicted,
                                            int num_classes) {
  if (gold.size() != predicted.size()) throw DimensionMismatch("gold/predicted length mismatch");
  const auto k = static_cast<std::size_t>(num_classes);
  PrecisionProfile p;
  p.per_class.assign(k, 0.0);
  p.support.assign(k, 0);
  std::vector<std::size_t> correct(k, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    check_label(predicted[i], k);
    const auto c = static_cast<std::size_t>(predicted[i]);
    ++p.support[c];
    if (gold[i] == predicted[i]) ++correct[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (p.support[c]) {
      p.per_class[c] = static_cast<double>(correct[c]) / static_cast<double>(p.support[c]);
    }
  }
  return p;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> gold_and_predicted(
    const ClassifierModel& model, const std::vector<LabeledSentence>& eval_set) {
  std::vector<int> gold, pred;
  gold.reserve(eval_set.size());
  pred.reserve(eval_set.size());
  for (const auto& ex : eval_set) {
    check_label(ex.level, static_cast<std::size_t>(model.num_classes));
    gold.push_back(ex.level);
    pred.push_back(classify_text(model, ex.text).level);
  }
  return {gold, pred};
}

}  // namespace

PrecisionProfile per_class_precision(const ClassifierModel& model,
                                     const std::vector<LabeledSentence>& eval_set) {
  if (eval_set.empty()) throw EmptyInput("per_class_precision: empty evaluation set");
  const auto [gold, pred] = gold_and_predicted(model, eval_set);
  return precision_from_predictions(gold, pred, model.num_classes);
}

ClassificationSummary summarize(const ClassifierModel& model,
                                const std::vector<LabeledSentence>& eval_set) {
  const auto [gold, pred] = gold_and_predicted(model, eval_set);
  const auto k = static_cast<std::size_t>(model.num_classes);
  ClassificationSummary s;
  s.gold_support.assign(k, 0);
  s.recall.assign(k, 0.0);
  const auto prec = precision_from_predictions(gold, pred, model.num_classes);
  s.precision = prec.per_class;
  s.predicted_support = prec.support;
  std::vector<std::size_t> correct(k, 0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++s.gold_support[static_cast<std::size_t>(gold[i])];
    if (gold[i] == pred[i]) {
      ++correct[static_cast<std::size_t>(gold[i])];
      ++total_correct;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (s.gold_support[c]) {
      s.recall[c] = static_cast<double>(correct[c]) / static_cast<double>(s.gold_support[c]);
    }
  }
  s.accuracy = gold.empty() ? 0.0
                            : static_cast<double>(total_correct) / static_cast<double>(gold.size());
  return s;
}

std::string format_summary_tsv(const ClassificationSummary& s) {
  std::ostringstream os;
  char buf[128];
  os << "level\tprecision\trecall\tpredicted\tgold\n";
  for (std::size_t c = 0; c < s.precision.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%zu\t%zu\n", c, s.precision[c], s.recall[c],
                  s.predicted_support[c], s.gold_support[c]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy\t%.6f\n", s.accuracy);
  os << buf;
  return os.str();
}

std::string classifier_to_json(const ClassifierModel& model) {
  json j;
  j["version"] = kModelVersion;
  j["num_classes"] = model.num_classes;
  j["feature_spec"] = {{"names", model.feature_spec.names},
                       {"mean", model.feature_spec.mean},
                       {"std", model.feature_spec.stddev}};
  j["W"] = model.weights;
  j["b"] = model.bias;
  j["frequency_table"] = model.frequency_table.ranked_tokens();
  return j.dump(1) + "\n";
}

ClassifierModel classifier_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("version").get<int>() != kModelVersion) {
      throw ParseError(1, "unsupported classifier model version");
    }
    FeatureSpec spec;
    spec.names = j.at("feature_spec").at("names").get<std::vector<std::string>>();
    spec.mean = j.at("feature_spec").at("mean").get<std::vector<double>>();
    spec.stddev = j.at("feature_spec").at("std").get<std::vector<double>>();
    auto model = make_classifier(
        j.at("num_classes").get<int>(), std::move(spec),
        FrequencyTable::from_ranked(j.value("frequency_table", std::vector<std::string>{})));
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (w.size() != model.weights.size() || b.size() != model.bias.size()) {
      throw DimensionMismatch("classifier parameter shapes do not match num_classes/features");
    }
    model.weights = std::move(w);
    model.bias = std::move(b);
    return model;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("classifier model: ") + e.what());
  }
}

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
  write_file(path, classifier_to_json(model));
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
  return classifier_from_json(read_file(path));
}

std::string precision_to_json(const PrecisionProfile& p) {
  json j;
  j["per_class"] = p.per_class;
  j["support"] = p.support;
  return j.dump(1) + "\n";
}

PrecisionProfile precision_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    PrecisionProfile p;
    p.per_class = j.at("per_class").get<std::vector<double>>();
    p.support = j.at("support").get<std::vector<std::size_t>>();
    if (p.per_class.size() != p.support.size()) {
      throw DimensionMismatch("precision profile: per_class/support length mismatch");
    }
    for (double v : p.per_class) {
      if (!(v >= 0 && v <= 1)) throw ParseError(1, "precision outside [0, 1]");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("precision profile: ") + e.what());
  }
}

std::vector<LabeledSentence> load_labeled_jsonl(const std::filesystem::path& path, int max_level) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(row, e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string() || !j.contains("level") ||
        !j["level"].is_number_integer()) {
      throw ParseError(row, "expected {\"text\": str, \"level\": int}");
    }
    const int level = j["level"].get<int>();
    if (level < 0 || level > max_level) {
      throw ParseError(row, "level " + std::to_string(level) + " outside [0, " +
                                std::to_string(max_level) + "]");
    }
    auto text = j["text"].get<std::string>();
    if (tokenize_lenient(text).empty()) throw ParseError(row, "empty text");
    out.push_back({std::move(text), level});
  }
  return out;
}

std::string labeled_to_jsonl(const std::vector<LabeledSentence>& data) {
  std::string out;
  for (const auto& ex : data) {
    json j;
    j["text"] = ex.text;
    j["level"] = ex.level;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace lcwl
