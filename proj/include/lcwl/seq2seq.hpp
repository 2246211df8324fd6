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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcwl/textcore.hpp"

namespace lcwl {

/// Token <-> id map. Ids 0..3 are PAD, BOS, EOS, UNK; ids 4..3+K are the
/// level tokens <SIMP_1>..<SIMP_K>; corpus tokens follow.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab() = default;
  explicit Vocab(int levels);

  /// Specials, level tokens, then corpus tokens with count >= min_freq by
  /// descending count (ties lexicographic).
  static Vocab build(const std::vector<Tokens>& corpus, int levels, std::size_t min_freq = 1);

  /// Rebuilds from the id-ordered token list written by tokens().
  static Vocab from_tokens(const std::vector<std::string>& tokens, int levels);

  static std::string level_token(int level);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int level_id(int level) const;
  int levels() const { return levels_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  int add(const std::string& token);

  int levels_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Throws LevelOutOfRange unless 1 <= level <= levels.
Tokens prepend_level_token(const Tokens& tokens, int level, int levels);

/// Dense row-major matrix (a vector is a single column).
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
};

enum class Param : std::size_t {
  kEmbedding,       // V x d, shared by encoder and decoder
  kEncFwdIn,        // d x d
  kEncFwdRec,       // d x d
  kEncFwdBias,      // d
  kEncBwdIn,
  kEncBwdRec,
  kEncBwdBias,
  kInitW,           // d x 2d, decoder state from the encoder's final states
  kInitBias,
  kDecIn,           // d x d
  kDecRec,          // d x d
  kDecCtx,          // d x 2d, previous attention context (input feeding)
  kDecBias,
  kAttQuery,        // d x d
  kAttKey,          // d x 2d
  kAttBias,         // d
  kAttScore,        // d
  kOutW,            // V x 3d over [state; context]
  kOutBias,         // V
  kCount
};

inline constexpr std::size_t kNumParams = static_cast<std::size_t>(Param::kCount);

const char* param_name(Param p);

struct Seq2SeqParams {
  std::array<Tensor, kNumParams> tensors;

  Tensor& operator[](Param p) { return tensors[static_cast<std::size_t>(p)]; }
  const Tensor& operator[](Param p) const { return tensors[static_cast<std::size_t>(p)]; }

  /// Same shapes, all zeros.
  Seq2SeqParams zeros_like() const;
  double squared_norm() const;
};

/// Level-conditioned encoder-decoder: bidirectional tanh RNN encoder, tanh
/// RNN decoder with additive attention over the encoder states.
struct Seq2SeqModel {
  Vocab vocab;
  int levels = 0;
  std::size_t d_model = 0;
  Seq2SeqParams params;
};

/// Weights uniform in [-init_scale, init_scale], biases zero.
Seq2SeqModel init_model(Vocab vocab, std::size_t d_model, std::uint64_t seed,
                        double init_scale = 0.1);

/// One training sequence in id space. `source` starts with the level token;
/// `target` holds neither BOS nor EOS (both are added by the model).
struct SequenceExample {
  std::vector<int> source;
  std::vector<int> target;
  double weight = 1.0;
};

struct TrainBatch {
  std::vector<SequenceExample> examples;
  std::size_t max_len = 64;
};

SequenceExample encode_example(const Seq2SeqModel& model, const Tokens& source,
                               const Tokens& target, int level, double weight);

/// Per example, per label position (target tokens then EOS): log-probabilities
/// over the vocabulary under teacher forcing.
using LogProbs = std::vector<std::vector<std::vector<double>>>;

/// Throws SequenceTooLong when a source or label sequence exceeds max_len.
LogProbs forward(const Seq2SeqModel& model, const TrainBatch& batch);

/// -(1/M) sum_j w_j sum_t log p(label_jt). Sequence log-likelihoods are
/// summed over positions, not averaged.
double weighted_ce_loss(const LogProbs& log_probs, const TrainBatch& batch);

/// -(1/M) sum_j sum_t log p(label_jt), same summation order as above.
double mean_sequence_nll(const LogProbs& log_probs, const TrainBatch& batch);

struct LossAndGradient {
  double loss = 0;
  Seq2SeqParams gradient;
};

/// weighted_ce_loss and its analytic gradient in one pass.
LossAndGradient loss_and_gradient(const Seq2SeqModel& model, const TrainBatch& batch);

struct Seq2SeqTrainConfig {
  double learning_rate = 0.1;
  double clip_norm = 5.0;
  int epochs = 10;
  std::size_t batch_size = 16;
  std::size_t max_len = 64;
  std::uint64_t seed = 1;
};

/// Tokenized training pair with its conditioning level and weight.
struct WeightedPair {
  Tokens source;
  Tokens target;
  int level = 1;
  double weight = 1.0;
};

struct TrainResult {
  Seq2SeqModel model;
  std::vector<double> loss_curve;  // one entry per step
  std::size_t steps = 0;
};

/// Mini-batch gradient descent on weighted_ce_loss with global-norm clipping.
/// Throws EmptyCorpus on empty input.
TrainResult train(Seq2SeqModel model, const std::vector<WeightedPair>& corpus,
                  const Seq2SeqTrainConfig& config);

/// Continues training on gold pairs with every weight forced to 1.
TrainResult fine_tune(Seq2SeqModel model, const std::vector<WeightedPair>& gold,
                      const Seq2SeqTrainConfig& config);

/// Greedy decoding (lowest id wins ties) until EOS or max_len tokens.
/// Throws LevelOutOfRange unless 1 <= level <= K.
Tokens generate(const Seq2SeqModel& model, const Tokens& source, int level, std::size_t max_len);

struct GradCheckOptions {
  std::size_t samples_per_tensor = 8;
  std::uint64_t seed = 7;
  /// Test hook applied to the analytic gradient before comparison.
  std::function<void(Seq2SeqParams&)> perturb_analytic;
};

/// Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Largest relative error between analytic and central-difference gradients
/// over sampled parameters. Both zero counts as 0.
double grad_check(const Seq2SeqModel& model, const TrainBatch& batch, double epsilon,
                  const GradCheckOptions& options = {});

std::string seq2seq_to_json(const Seq2SeqModel& model);
Seq2SeqModel seq2seq_from_json(const std::string& text);
void save_seq2seq(const Seq2SeqModel& model, const std::filesystem::path& path);
Seq2SeqModel load_seq2seq(const std::filesystem::path& path);

}  // namespace lcwl
