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

#include "lcwl/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"
#include "lcwl/rng.hpp"

namespace lcwl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocab::Vocab(int levels) : levels_(levels) {
  if (levels < 1) throw InvalidArgument("vocab needs at least one level");
  add("<pad>");
  add("<bos>");
  add("<eos>");
  add("<unk>");
  for (int k = 1; k <= levels; ++k) add(level_token(k));
}

int Vocab::add(const std::string& token) {
  const auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

Vocab Vocab::build(const std::vector<Tokens>& corpus, int levels, std::size_t min_freq) {
  Vocab v(levels);
  std::map<std::string, std::size_t> counts;
  for (const auto& s : corpus) {
    for (const auto& t : s) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, n] : items) {
    if (n >= min_freq) v.add(tok);
  }
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens, int levels) {
  Vocab v(levels);
  const std::size_t specials = v.size();
  if (tokens.size() < specials) throw ParseError(1, "vocab is missing special tokens");
  for (std::size_t i = 0; i < specials; ++i) {
    if (tokens[i] != v.tokens_[i]) throw ParseError(1, "vocab special tokens out of order");
  }
  for (std::size_t i = specials; i < tokens.size(); ++i) {
    if (v.add(tokens[i]) != static_cast<int>(i)) throw ParseError(1, "duplicate vocab token");
  }
  return v;
}

std::string Vocab::level_token(int level) { return "<SIMP_" + std::to_string(level) + ">"; }

int Vocab::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

int Vocab::level_id(int level) const {
  if (level < 1 || level > levels_) {
    throw LevelOutOfRange("level " + std::to_string(level) + " outside [1, " +
                          std::to_string(levels_) + "]");
  }
  return 3 + level;
}

Tokens prepend_level_token(const Tokens& tokens, int level, int levels) {
  if (level < 1 || level > levels) {
    throw LevelOutOfRange("level " + std::to_string(level) + " outside [1, " +
                          std::to_string(levels) + "]");
  }
  Tokens out;
  out.reserve(tokens.size() + 1);
  out.push_back(Vocab::level_token(level));
  out.insert(out.end(), tokens.begin(), tokens.end());
  return out;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

const char* param_name(Param p) {
  static constexpr const char* kNames[kNumParams] = {
      "embedding", "enc_fwd_in",  "enc_fwd_rec", "enc_fwd_bias", "enc_bwd_in",
      "enc_bwd_rec", "enc_bwd_bias", "init_w",   "init_bias",    "dec_in",
      "dec_rec",   "dec_ctx",     "dec_bias",    "att_query",    "att_key",
      "att_bias",  "att_score",   "out_w",       "out_bias"};
  return kNames[static_cast<std::size_t>(p)];
}

Seq2SeqParams Seq2SeqParams::zeros_like() const {
  Seq2SeqParams z;
  for (std::size_t i = 0; i < kNumParams; ++i) z.tensors[i] = Tensor(tensors[i].rows, tensors[i].cols);
  return z;
}

double Seq2SeqParams::squared_norm() const {
  double s = 0;
  for (const auto& t : tensors) {
    for (double v : t.data) s += v * v;
  }
  return s;
}

Seq2SeqModel init_model(Vocab vocab, std::size_t d_model, std::uint64_t seed, double init_scale) {
  if (d_model == 0) throw InvalidArgument("d_model must be positive");
  Seq2SeqModel m;
  m.levels = vocab.levels();
  m.d_model = d_model;
  const std::size_t d = d_model, v = vocab.size();
  m.vocab = std::move(vocab);
  auto& p = m.params;
  p[Param::kEmbedding] = Tensor(v, d);
  p[Param::kEncFwdIn] = Tensor(d, d);
  p[Param::kEncFwdRec] = Tensor(d, d);
  p[Param::kEncFwdBias] = Tensor(d, 1);
  p[Param::kEncBwdIn] = Tensor(d, d);
  p[Param::kEncBwdRec] = Tensor(d, d);
  p[Param::kEncBwdBias] = Tensor(d, 1);
  p[Param::kInitW] = Tensor(d, 2 * d);
  p[Param::kInitBias] = Tensor(d, 1);
  p[Param::kDecIn] = Tensor(d, d);
  p[Param::kDecRec] = Tensor(d, d);
  p[Param::kDecCtx] = Tensor(d, 2 * d);
  p[Param::kDecBias] = Tensor(d, 1);
  p[Param::kAttQuery] = Tensor(d, d);
  p[Param::kAttKey] = Tensor(d, 2 * d);
  p[Param::kAttBias] = Tensor(d, 1);
  p[Param::kAttScore] = Tensor(d, 1);
  p[Param::kOutW] = Tensor(v, 3 * d);
  p[Param::kOutBias] = Tensor(v, 1);

  Rng rng(seed);
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto id = static_cast<Param>(i);
    const bool is_bias = id == Param::kEncFwdBias || id == Param::kEncBwdBias ||
                         id == Param::kInitBias || id == Param::kDecBias ||
                         id == Param::kAttBias || id == Param::kOutBias;
    if (is_bias) continue;
    for (auto& x : p.tensors[i].data) x = rng.uniform(-init_scale, init_scale);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

namespace {

// y += W x
void gemv(const Tensor& w, const double* x, double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.data.data() + r * w.cols;
    double acc = 0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += W^T x
void gemv_t(const Tensor& w, const double* x, double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.data.data() + r * w.cols;
    const double xr = x[r];
    if (xr == 0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += row[c] * xr;
  }
}

// G += a b^T
void outer(Tensor& g, const double* a, const double* b) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double ar = a[r];
    if (ar == 0) continue;
    double* row = g.data.data() + r * g.cols;
    for (std::size_t c = 0; c < g.cols; ++c) row[c] += ar * b[c];
  }
}

const double* row_ptr(const Tensor& t, std::size_t r) { return t.data.data() + r * t.cols; }
double* row_ptr(Tensor& t, std::size_t r) { return t.data.data() + r * t.cols; }

std::vector<double> log_softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double v : z) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

struct Encoded {
  std::vector<int> ids;
  std::size_t n = 0;
  std::vector<double> hf, hb;  // n x d
  std::vector<double> states;  // n x 2d, [hf; hb]
  std::vector<double> keys;    // n x d
  std::vector<double> init_in; // 2d
  std::vector<double> s0;      // d
};

Encoded encode(const Seq2SeqModel& m, const std::vector<int>& ids) {
  const auto& p = m.params;
  const std::size_t d = m.d_model, n = ids.size();
  if (n == 0) throw EmptyInput("encoder input is empty");
  Encoded e;
  e.ids = ids;
  e.n = n;
  e.hf.assign(n * d, 0.0);
  e.hb.assign(n * d, 0.0);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(p[Param::kEncFwdBias].data.begin(), d, z.begin());
    gemv(p[Param::kEncFwdIn], row_ptr(p[Param::kEmbedding], static_cast<std::size_t>(ids[i])), z.data());
    if (i > 0) gemv(p[Param::kEncFwdRec], &e.hf[(i - 1) * d], z.data());
    for (std::size_t k = 0; k < d; ++k) e.hf[i * d + k] = std::tanh(z[k]);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    std::copy_n(p[Param::kEncBwdBias].data.begin(), d, z.begin());
    gemv(p[Param::kEncBwdIn], row_ptr(p[Param::kEmbedding], static_cast<std::size_t>(ids[ii])), z.data());
    if (ii + 1 < n) gemv(p[Param::kEncBwdRec], &e.hb[(ii + 1) * d], z.data());
    for (std::size_t k = 0; k < d; ++k) e.hb[ii * d + k] = std::tanh(z[k]);
  }
  e.states.assign(n * 2 * d, 0.0);
  e.keys.assign(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(&e.hf[i * d], d, &e.states[i * 2 * d]);
    std::copy_n(&e.hb[i * d], d, &e.states[i * 2 * d + d]);
    gemv(p[Param::kAttKey], &e.states[i * 2 * d], &e.keys[i * d]);
  }
  e.init_in.assign(2 * d, 0.0);
  std::copy_n(&e.hf[(n - 1) * d], d, e.init_in.begin());
  std::copy_n(&e.hb[0], d, e.init_in.begin() + static_cast<std::ptrdiff_t>(d));
  e.s0 = p[Param::kInitBias].data;
  gemv(p[Param::kInitW], e.init_in.data(), e.s0.data());
  for (auto& v : e.s0) v = std::tanh(v);
  return e;
}

struct Step {
  int input = 0;
  std::vector<double> s_prev, c_prev;  // d, 2d
  std::vector<double> s;               // d
  std::vector<double> u;               // n x d
  std::vector<double> alpha;           // n
  std::vector<double> c;               // 2d
  std::vector<double> sc;              // 3d, [s; c]
  std::vector<double> log_probs;       // V
};

Step decode_step(const Seq2SeqModel& m, const Encoded& e, int input, std::vector<double> s_prev,
                 std::vector<double> c_prev) {
  const auto& p = m.params;
  const std::size_t d = m.d_model, n = e.n;
  Step st;
  st.input = input;
  st.s = p[Param::kDecBias].data;
  gemv(p[Param::kDecIn], row_ptr(p[Param::kEmbedding], static_cast<std::size_t>(input)), st.s.data());
  gemv(p[Param::kDecRec], s_prev.data(), st.s.data());
  gemv(p[Param::kDecCtx], c_prev.data(), st.s.data());
  for (auto& v : st.s) v = std::tanh(v);

  std::vector<double> q = p[Param::kAttBias].data;
  gemv(p[Param::kAttQuery], st.s.data(), q.data());
  st.u.assign(n * d, 0.0);
  std::vector<double> scores(n, 0.0);
  const double* v = p[Param::kAttScore].data.data();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const double u = std::tanh(q[k] + e.keys[i * d + k]);
      st.u[i * d + k] = u;
      acc += v[k] * u;
    }
    scores[i] = acc;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  st.alpha.assign(n, 0.0);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st.alpha[i] = std::exp(scores[i] - mx);
    sum += st.alpha[i];
  }
  for (auto& a : st.alpha) a /= sum;
  st.c.assign(2 * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = st.alpha[i];
    const double* h = &e.states[i * 2 * d];
    for (std::size_t k = 0; k < 2 * d; ++k) st.c[k] += a * h[k];
  }
  st.sc.resize(3 * d);
  std::copy(st.s.begin(), st.s.end(), st.sc.begin());
  std::copy(st.c.begin(), st.c.end(), st.sc.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> logits = p[Param::kOutBias].data;
  gemv(p[Param::kOutW], st.sc.data(), logits.data());
  st.log_probs = log_softmax(logits);
  st.s_prev = std::move(s_prev);
  st.c_prev = std::move(c_prev);
  return st;
}

void check_lengths(const SequenceExample& ex, std::size_t max_len) {
  if (ex.source.size() > max_len || ex.target.size() + 1 > max_len) {
    throw SequenceTooLong("sequence longer than max_len " + std::to_string(max_len));
  }
  if (ex.source.empty()) throw EmptyInput("empty source sequence");
}

std::vector<int> decoder_inputs(const SequenceExample& ex) {
  std::vector<int> in{Vocab::kBos};
  in.insert(in.end(), ex.target.begin(), ex.target.end());
  return in;
}

std::vector<int> decoder_labels(const SequenceExample& ex) {
  std::vector<int> out(ex.target);
  out.push_back(Vocab::kEos);
  return out;
}

std::vector<Step> teacher_forced(const Seq2SeqModel& m, const Encoded& e, const SequenceExample& ex) {
  const std::size_t d = m.d_model;
  std::vector<Step> steps;
  std::vector<double> s = e.s0, c(2 * d, 0.0);
  for (int input : decoder_inputs(ex)) {
    steps.push_back(decode_step(m, e, input, s, c));
    s = steps.back().s;
    c = steps.back().c;
  }
  return steps;
}

void backward_example(const Seq2SeqModel& m, const Encoded& e, const std::vector<Step>& steps,
                      const std::vector<int>& labels, double scale, Seq2SeqParams& g) {
  const auto& p = m.params;
  const std::size_t d = m.d_model, n = e.n, V = m.vocab.size();
  std::vector<double> ds_next(d, 0.0), dc_next(2 * d, 0.0);
  std::vector<double> dstates(n * 2 * d, 0.0), dkeys(n * d, 0.0);
  std::vector<double> dout(V), dsc(3 * d), ds(d), dc(2 * d), dq(d), dz(d), dalpha(n), de(n);
  const double* v = p[Param::kAttScore].data.data();

  for (std::size_t t = steps.size(); t-- > 0;) {
    const Step& st = steps[t];
    const auto label = static_cast<std::size_t>(labels[t]);
    for (std::size_t k = 0; k < V; ++k) {
      dout[k] = scale * (std::exp(st.log_probs[k]) - (k == label ? 1.0 : 0.0));
    }
    outer(g[Param::kOutW], dout.data(), st.sc.data());
    for (std::size_t k = 0; k < V; ++k) g[Param::kOutBias].data[k] += dout[k];
    std::fill(dsc.begin(), dsc.end(), 0.0);
    gemv_t(p[Param::kOutW], dout.data(), dsc.data());
    for (std::size_t k = 0; k < d; ++k) ds[k] = dsc[k] + ds_next[k];
    for (std::size_t k = 0; k < 2 * d; ++k) dc[k] = dsc[d + k] + dc_next[k];

    // Attention.
    double weighted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* h = &e.states[i * 2 * d];
      double acc = 0;
      for (std::size_t k = 0; k < 2 * d; ++k) acc += h[k] * dc[k];
      dalpha[i] = acc;
      weighted += st.alpha[i] * acc;
      double* dh = &dstates[i * 2 * d];
      for (std::size_t k = 0; k < 2 * d; ++k) dh[k] += st.alpha[i] * dc[k];
    }
    std::fill(dq.begin(), dq.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      de[i] = st.alpha[i] * (dalpha[i] - weighted);
      if (de[i] == 0) continue;
      const double* u = &st.u[i * d];
      for (std::size_t k = 0; k < d; ++k) {
        g[Param::kAttScore].data[k] += de[i] * u[k];
        const double dpre = de[i] * v[k] * (1.0 - u[k] * u[k]);
        dq[k] += dpre;
        dkeys[i * d + k] += dpre;
      }
    }
    for (std::size_t k = 0; k < d; ++k) g[Param::kAttBias].data[k] += dq[k];
    outer(g[Param::kAttQuery], dq.data(), st.s.data());
    gemv_t(p[Param::kAttQuery], dq.data(), ds.data());

    // Decoder cell.
    for (std::size_t k = 0; k < d; ++k) dz[k] = ds[k] * (1.0 - st.s[k] * st.s[k]);
    for (std::size_t k = 0; k < d; ++k) g[Param::kDecBias].data[k] += dz[k];
    const auto in = static_cast<std::size_t>(st.input);
    outer(g[Param::kDecIn], dz.data(), row_ptr(p[Param::kEmbedding], in));
    gemv_t(p[Param::kDecIn], dz.data(), row_ptr(g[Param::kEmbedding], in));
    outer(g[Param::kDecRec], dz.data(), st.s_prev.data());
    outer(g[Param::kDecCtx], dz.data(), st.c_prev.data());
    std::fill(ds_next.begin(), ds_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    gemv_t(p[Param::kDecRec], dz.data(), ds_next.data());
    gemv_t(p[Param::kDecCtx], dz.data(), dc_next.data());
  }

  // Initial decoder state; the initial context is constant zero.
  std::vector<double> dinit(2 * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) dz[k] = ds_next[k] * (1.0 - e.s0[k] * e.s0[k]);
  for (std::size_t k = 0; k < d; ++k) g[Param::kInitBias].data[k] += dz[k];
  outer(g[Param::kInitW], dz.data(), e.init_in.data());
  gemv_t(p[Param::kInitW], dz.data(), dinit.data());

  std::vector<double> dhf(n * d, 0.0), dhb(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    outer(g[Param::kAttKey], &dkeys[i * d], &e.states[i * 2 * d]);
    gemv_t(p[Param::kAttKey], &dkeys[i * d], &dstates[i * 2 * d]);
    for (std::size_t k = 0; k < d; ++k) {
      dhf[i * d + k] = dstates[i * 2 * d + k];
      dhb[i * d + k] = dstates[i * 2 * d + d + k];
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    dhf[(n - 1) * d + k] += dinit[k];
    dhb[k] += dinit[d + k];
  }

  std::vector<double> carry(d, 0.0), dh(d);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = 0; k < d; ++k) {
      dh[k] = dhf[i * d + k] + carry[k];
      const double h = e.hf[i * d + k];
      dz[k] = dh[k] * (1.0 - h * h);
    }
    const auto x = static_cast<std::size_t>(e.ids[i]);
    for (std::size_t k = 0; k < d; ++k) g[Param::kEncFwdBias].data[k] += dz[k];
    outer(g[Param::kEncFwdIn], dz.data(), row_ptr(p[Param::kEmbedding], x));
    gemv_t(p[Param::kEncFwdIn], dz.data(), row_ptr(g[Param::kEmbedding], x));
    std::fill(carry.begin(), carry.end(), 0.0);
    if (i > 0) {
      outer(g[Param::kEncFwdRec], dz.data(), &e.hf[(i - 1) * d]);
      gemv_t(p[Param::kEncFwdRec], dz.data(), carry.data());
    }
  }
  std::fill(carry.begin(), carry.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      dh[k] = dhb[i * d + k] + carry[k];
      const double h = e.hb[i * d + k];
      dz[k] = dh[k] * (1.0 - h * h);
    }
    const auto x = static_cast<std::size_t>(e.ids[i]);
    for (std::size_t k = 0; k < d; ++k) g[Param::kEncBwdBias].data[k] += dz[k];
    outer(g[Param::kEncBwdIn], dz.data(), row_ptr(p[Param::kEmbedding], x));
    gemv_t(p[Param::kEncBwdIn], dz.data(), row_ptr(g[Param::kEmbedding], x));
    std::fill(carry.begin(), carry.end(), 0.0);
    if (i + 1 < n) {
      outer(g[Param::kEncBwdRec], dz.data(), &e.hb[(i + 1) * d]);
      gemv_t(p[Param::kEncBwdRec], dz.data(), carry.data());
    }
  }
}

std::vector<int> to_ids(const Vocab& vocab, const Tokens& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward, loss, gradient
// ---------------------------------------------------------------------------

SequenceExample encode_example(const Seq2SeqModel& model, const Tokens& source,
                               const Tokens& target, int level, double weight) {
  SequenceExample ex;
  ex.source.push_back(model.vocab.level_id(level));
  for (int id : to_ids(model.vocab, source)) ex.source.push_back(id);
  ex.target = to_ids(model.vocab, target);
  ex.weight = weight;
  return ex;
}

LogProbs forward(const Seq2SeqModel& model, const TrainBatch& batch) {
  LogProbs out;
  out.reserve(batch.examples.size());
  for (const auto& ex : batch.examples) {
    check_lengths(ex, batch.max_len);
    const auto enc = encode(model, ex.source);
    std::vector<std::vector<double>> positions;
    for (auto& st : teacher_forced(model, enc, ex)) positions.push_back(std::move(st.log_probs));
    out.push_back(std::move(positions));
  }
  return out;
}

namespace {

template <typename WeightFn>
double sequence_loss(const LogProbs& lp, const TrainBatch& batch, WeightFn weight_of) {
  if (lp.size() != batch.examples.size()) throw DimensionMismatch("log-prob/batch size mismatch");
  if (batch.examples.empty()) return 0.0;
  double total = 0;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    const auto labels = decoder_labels(batch.examples[j]);
    if (labels.size() != lp[j].size()) throw DimensionMismatch("label/position count mismatch");
    double ll = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) ll += lp[j][t][static_cast<std::size_t>(labels[t])];
    total += weight_of(batch.examples[j]) * ll;
  }
  return -total / static_cast<double>(lp.size());
}

}  // namespace

double weighted_ce_loss(const LogProbs& log_probs, const TrainBatch& batch) {
  return sequence_loss(log_probs, batch, [](const SequenceExample& ex) { return ex.weight; });
}

double mean_sequence_nll(const LogProbs& log_probs, const TrainBatch& batch) {
  if (log_probs.size() != batch.examples.size()) {
    throw DimensionMismatch("log-prob/batch size mismatch");
  }
  if (batch.examples.empty()) return 0.0;
  double total = 0;
  for (std::size_t j = 0; j < log_probs.size(); ++j) {
    const auto labels = decoder_labels(batch.examples[j]);
    double ll = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      ll += log_probs[j][t][static_cast<std::size_t>(labels[t])];
    }
    total += ll;
  }
  return -total / static_cast<double>(log_probs.size());
}

LossAndGradient loss_and_gradient(const Seq2SeqModel& model, const TrainBatch& batch) {
  LossAndGradient out;
  out.gradient = model.params.zeros_like();
  if (batch.examples.empty()) return out;
  const double m = static_cast<double>(batch.examples.size());
  double total = 0;
  for (const auto& ex : batch.examples) {
    check_lengths(ex, batch.max_len);
    if (!(ex.weight >= 0 && ex.weight <= 1)) throw InvalidArgument("example weight outside [0, 1]");
    const auto enc = encode(model, ex.source);
    const auto steps = teacher_forced(model, enc, ex);
    const auto labels = decoder_labels(ex);
    double ll = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      ll += steps[t].log_probs[static_cast<std::size_t>(labels[t])];
    }
    total += ex.weight * ll;
    if (ex.weight != 0) backward_example(model, enc, steps, labels, ex.weight / m, out.gradient);
  }
  out.loss = -total / m;
  return out;
}

// ---------------------------------------------------------------------------
// Training and decoding
// ---------------------------------------------------------------------------

TrainResult train(Seq2SeqModel model, const std::vector<WeightedPair>& corpus,
                  const Seq2SeqTrainConfig& config) {
  if (corpus.empty()) throw EmptyCorpus("generator training corpus is empty");
  if (config.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  std::vector<SequenceExample> encoded;
  encoded.reserve(corpus.size());
  for (const auto& pair : corpus) {
    auto ex = encode_example(model, pair.source, pair.target, pair.level, pair.weight);
    check_lengths(ex, config.max_len);
    if (!(ex.weight >= 0 && ex.weight <= 1)) throw InvalidArgument("example weight outside [0, 1]");
    encoded.push_back(std::move(ex));
  }

  TrainResult result;
  Rng rng(config.seed);
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  TrainBatch batch;
  batch.max_len = config.max_len;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.examples.clear();
      for (std::size_t i = start; i < end; ++i) batch.examples.push_back(encoded[order[i]]);
      auto lg = loss_and_gradient(model, batch);
      const double norm = std::sqrt(lg.gradient.squared_norm());
      const double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      const double step = config.learning_rate * scale;
      for (std::size_t i = 0; i < kNumParams; ++i) {
        auto& w = model.params.tensors[i].data;
        const auto& gw = lg.gradient.tensors[i].data;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * gw[k];
      }
      result.loss_curve.push_back(lg.loss);
      ++result.steps;
    }
  }
  result.model = std::move(model);
  return result;
}

TrainResult fine_tune(Seq2SeqModel model, const std::vector<WeightedPair>& gold,
                      const Seq2SeqTrainConfig& config) {
  std::vector<WeightedPair> unit(gold);
  for (auto& p : unit) p.weight = 1.0;
  return train(std::move(model), unit, config);
}

Tokens generate(const Seq2SeqModel& model, const Tokens& source, int level, std::size_t max_len) {
  std::vector<int> ids{model.vocab.level_id(level)};
  for (int id : to_ids(model.vocab, source)) ids.push_back(id);
  Tokens out;
  if (max_len == 0) return out;
  const auto enc = encode(model, ids);
  std::vector<double> s = enc.s0, c(2 * model.d_model, 0.0);
  int input = Vocab::kBos;
  while (out.size() < max_len) {
    auto st = decode_step(model, enc, input, std::move(s), std::move(c));
    const int next = static_cast<int>(
        std::max_element(st.log_probs.begin(), st.log_probs.end()) - st.log_probs.begin());
    if (next == Vocab::kEos) break;
    out.push_back(model.vocab.token(next));
    s = std::move(st.s);
    c = std::move(st.c);
    input = next;
  }
  return out;
}

double grad_check(const Seq2SeqModel& model, const TrainBatch& batch, double epsilon,
                  const GradCheckOptions& options) {
  if (!(epsilon > 0)) throw InvalidArgument("grad_check: epsilon must be positive");
  auto analytic = loss_and_gradient(model, batch).gradient;
  if (options.perturb_analytic) options.perturb_analytic(analytic);
  Seq2SeqModel probe = model;
  Rng rng(options.seed);
  double worst = 0;
  for (std::size_t t = 0; t < kNumParams; ++t) {
    auto& w = probe.params.tensors[t].data;
    for (std::size_t s = 0; s < options.samples_per_tensor; ++s) {
      const auto k = static_cast<std::size_t>(rng.below(w.size()));
      const double saved = w[k];
      w[k] = saved + epsilon;
      const double plus = weighted_ce_loss(forward(probe, batch), batch);
      w[k] = saved - epsilon;
      const double minus = weighted_ce_loss(forward(probe, batch), batch);
      w[k] = saved;
      const double numeric = (plus - minus) / (2 * epsilon);
      const double a = analytic.tensors[t].data[k];
      const double diff = std::fabs(a - numeric);
      if (diff == 0) continue;
      const double denom = std::max({std::fabs(a), std::fabs(numeric), kGradCheckFloor});
      worst = std::max(worst, diff / denom);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {
constexpr int kSeq2SeqVersion = 1;
}

std::string seq2seq_to_json(const Seq2SeqModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "lcwl-seq2seq";
  j["version"] = kSeq2SeqVersion;
  j["d_model"] = model.d_model;
  j["levels"] = model.levels;
  j["vocab"] = model.vocab.tokens();
  j["params"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& t = model.params.tensors[i];
    j["params"][param_name(static_cast<Param>(i))] = {{"shape", {t.rows, t.cols}}, {"data", t.data}};
  }
  return j.dump() + "\n";
}

Seq2SeqModel seq2seq_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "lcwl-seq2seq" ||
        j.at("version").get<int>() != kSeq2SeqVersion) {
      throw ParseError(1, "not a version 1 lcwl-seq2seq model");
    }
    const int levels = j.at("levels").get<int>();
    auto vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>(), levels);
    const auto d = j.at("d_model").get<std::size_t>();
    auto model = init_model(std::move(vocab), d, 0, 0.0);
    for (std::size_t i = 0; i < kNumParams; ++i) {
      const auto& node = j.at("params").at(param_name(static_cast<Param>(i)));
      auto& t = model.params.tensors[i];
      const auto shape = node.at("shape").get<std::vector<std::size_t>>();
      auto data = node.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != t.rows || shape[1] != t.cols || data.size() != t.size()) {
        throw DimensionMismatch(std::string("parameter '") + param_name(static_cast<Param>(i)) +
                                "' has the wrong shape");
      }
      t.data = std::move(data);
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("seq2seq model: ") + e.what());
  }
}

void save_seq2seq(const Seq2SeqModel& model, const std::filesystem::path& path) {
  write_file(path, seq2seq_to_json(model));
}

Seq2SeqModel load_seq2seq(const std::filesystem::path& path) {
  return seq2seq_from_json(read_file(path));
}

}  // namespace lcwl
