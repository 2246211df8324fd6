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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcwl/textcore.hpp"

namespace lcwl {

struct LabeledSentence {
  std::string text;
  int level = 0;
};

/// Per-feature standardization learned from the training split.
struct FeatureSpec {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// softmax(W h + b) over K+1 levels (0 = original, 1..K simplified).
struct ClassifierModel {
  int num_classes = 0;
  FeatureSpec feature_spec;
  std::vector<double> weights;  // num_classes x dim, row-major
  std::vector<double> bias;     // num_classes
  FrequencyTable frequency_table;

  std::size_t feature_dim() const { return feature_spec.names.size(); }
  double weight(int k, std::size_t j) const { return weights[static_cast<std::size_t>(k) * feature_dim() + j]; }
};

/// Zero weights and bias, identity standardization.
ClassifierModel make_classifier(int num_classes, FeatureSpec spec, FrequencyTable table = {});

struct Prediction {
  int level = 0;
  double confidence = 0;
  std::vector<double> distribution;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Lowest index wins ties.
int argmax(std::span<const double> values);

std::vector<double> logits(const ClassifierModel& model, std::span<const double> standardized);

/// `standardized` must already be scaled by the model's feature spec.
/// Throws DimensionMismatch on a wrong feature count.
Prediction predict(const ClassifierModel& model, std::span<const double> standardized);

/// Standardizes raw features, then predicts.
Prediction predict(const ClassifierModel& model, const FeatureVector& features);

std::vector<double> standardize(const ClassifierModel& model, const FeatureVector& features);

/// Tokenize, extract features with the model's frequency table, predict.
Prediction classify_text(const ClassifierModel& model, std::string_view text);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log p[label]; probabilities below 1e-12 are clamped before the log.
double ce_loss(std::span<const double> distribution, int label);

/// Symmetric cross entropy: alpha * CE + beta * RCE, where RCE = -A (1 - p_label)
/// (reverse cross entropy against a one-hot target with log 0 truncated to A < 0).
double sce_loss(std::span<const double> distribution, int label, double alpha, double beta,
                double log_zero);

struct LossSpec {
  enum class Kind { kCrossEntropy, kSymmetric };
  Kind kind = Kind::kCrossEntropy;
  double alpha = 0.1;
  double beta = 1.0;
  double log_zero = -4.0;

  static LossSpec cross_entropy() { return {}; }
  static LossSpec symmetric(double alpha = 0.1, double beta = 1.0, double log_zero = -4.0) {
    return {Kind::kSymmetric, alpha, beta, log_zero};
  }
};

double loss_value(const LossSpec& loss, std::span<const double> distribution, int label);

/// d loss / d logits.
std::vector<double> loss_logit_gradient(const LossSpec& loss, std::span<const double> distribution,
                                        int label);

struct ClassifierTrainConfig {
  double learning_rate = 0.5;
  int epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

/// Standardized design matrix with labels.
struct FeatureDataset {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

struct ClassifierGradient {
  double loss = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Mean loss over the given rows and its gradient w.r.t. W and b.
ClassifierGradient batch_gradient(const ClassifierModel& model, const FeatureDataset& data,
                                  std::span<const std::size_t> rows, const LossSpec& loss);

/// Mini-batch gradient descent from zero initialization on features that are
/// already standardized. The returned model keeps `model`'s feature spec.
/// This is the raw optimizer: it accepts any non-empty label set.
ClassifierModel train_on_features(ClassifierModel model, const FeatureDataset& data,
                                  const LossSpec& loss, const ClassifierTrainConfig& config,
                                  std::vector<double>* loss_curve = nullptr);

/// Full sentence-level training: features, standardization from `train`
/// only, then train_on_features. Throws DegenerateDataset when fewer than
/// two classes are present.
ClassifierModel train_classifier(const std::vector<LabeledSentence>& train, int num_classes,
                                 const FrequencyTable& table, const LossSpec& loss,
                                 const ClassifierTrainConfig& config);

struct PrecisionProfile {
  std::vector<double> per_class;
  std::vector<std::size_t> support;  // predictions per class
};

PrecisionProfile precision_from_predictions(std::span<const int> gold, std::span<const int> predicted,
                                            int num_classes);

/// Classes never predicted get precision 0.
PrecisionProfile per_class_precision(const ClassifierModel& model,
                                     const std::vector<LabeledSentence>& eval_set);

struct ClassificationSummary {
  double accuracy = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<std::size_t> gold_support;
  std::vector<std::size_t> predicted_support;
};

ClassificationSummary summarize(const ClassifierModel& model,
                                const std::vector<LabeledSentence>& eval_set);

std::string format_summary_tsv(const ClassificationSummary& s);

std::string classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const std::string& text);
void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

std::string precision_to_json(const PrecisionProfile& p);
PrecisionProfile precision_from_json(const std::string& text);

/// JSON Lines {"text": str, "level": int}; levels must lie in [0, max_level].
std::vector<LabeledSentence> load_labeled_jsonl(const std::filesystem::path& path, int max_level);
std::string labeled_to_jsonl(const std::vector<LabeledSentence>& data);

}  // namespace lcwl
