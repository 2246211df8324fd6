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

#include "lcwl/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"
#include "lcwl/rng.hpp"

namespace lcwl {

using nlohmann::json;

namespace {

bool has_letter(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
  });
}

bool contains_contiguous(const Tokens& hay, const Tokens& needle) {
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

double precision_for(const PrecisionProfile& precisions, int level) {
  if (level < 0 || static_cast<std::size_t>(level) >= precisions.per_class.size()) {
    throw DimensionMismatch("precision profile has no entry for level " + std::to_string(level));
  }
  return precisions.per_class[static_cast<std::size_t>(level)];
}

}  // namespace

const char* to_string(FilterRule rule) {
  switch (rule) {
    case FilterRule::kIdentical: return "identical";
    case FilterRule::kContained: return "contained";
    case FilterRule::kNoLetters: return "no_letters";
    case FilterRule::kTooShort: return "too_short";
  }
  return "unknown";
}

std::optional<FilterRule> rejection_rule(const ParaphrasePair& pair) {
  const auto a = tokenize_lenient(pair.source);
  const auto b = tokenize_lenient(pair.target);
  if (a == b) return FilterRule::kIdentical;
  if (!a.empty() && !b.empty() && (contains_contiguous(a, b) || contains_contiguous(b, a))) {
    return FilterRule::kContained;
  }
  if (!has_letter(pair.source) || !has_letter(pair.target)) return FilterRule::kNoLetters;
  if (count_word_tokens(a) < kMinWords || count_word_tokens(b) < kMinWords) {
    return FilterRule::kTooShort;
  }
  return std::nullopt;
}

std::vector<ParaphrasePair> filter_paraphrases(const std::vector<ParaphrasePair>& pairs,
                                               FilterReport* report) {
  FilterReport local;
  local.input = pairs.size();
  std::vector<ParaphrasePair> out;
  for (const auto& p : pairs) {
    if (const auto rule = rejection_rule(p)) {
      ++local.removed[static_cast<std::size_t>(*rule)];
    } else {
      out.push_back(p);
    }
  }
  local.kept = out.size();
  if (report) *report = local;
  return out;
}

double confidence_weight(double precision, double confidence) {
  if (!(precision >= 0 && precision <= 1) || !(confidence >= 0 && confidence <= 1)) {
    throw InvalidArgument("confidence_weight: arguments must lie in [0, 1]");
  }
  return std::sqrt(precision * confidence);
}

PseudoExample label_pair(const ClassifierModel& model, const PrecisionProfile& precisions,
                         const ParaphrasePair& pair) {
  const auto src = classify_text(model, pair.source);
  const auto tgt = classify_text(model, pair.target);
  PseudoExample ex;
  ex.source = pair.source;
  ex.target = pair.target;
  ex.src_level = src.level;
  ex.tgt_level = tgt.level;
  ex.src_conf = src.confidence;
  ex.tgt_conf = tgt.confidence;
  ex.src_weight = confidence_weight(precision_for(precisions, src.level), src.confidence);
  ex.tgt_weight = confidence_weight(precision_for(precisions, tgt.level), tgt.confidence);
  ex.weight = ex.src_weight * ex.tgt_weight;
  return ex;
}

PseudoCorpus build_pseudo_corpus(const ClassifierModel& model, const PrecisionProfile& precisions,
                                 const std::vector<ParaphrasePair>& pairs) {
  PseudoCorpus corpus;
  const auto kept = filter_paraphrases(pairs, &corpus.filter);
  corpus.examples.reserve(kept.size());
  for (const auto& p : kept) corpus.examples.push_back(label_pair(model, precisions, p));
  return corpus;
}

std::vector<bool> corrupt_target_labels(std::vector<PseudoExample>& examples,
                                        const ClassifierModel& model,
                                        const PrecisionProfile& precisions, double rate,
                                        int max_level, std::uint64_t seed) {
  if (!(rate >= 0 && rate <= 1)) throw InvalidArgument("corruption rate must lie in [0, 1]");
  if (max_level < 2 && rate > 0) throw InvalidArgument("need at least two levels to corrupt");
  Rng rng(seed);
  std::vector<bool> mask(examples.size(), false);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!rng.bernoulli(rate)) continue;
    auto& ex = examples[i];
    // Uniform over [1, max_level] minus the current label (when it is in range).
    const bool in_range = ex.tgt_level >= 1 && ex.tgt_level <= max_level;
    const auto choices = static_cast<std::uint64_t>(in_range ? max_level - 1 : max_level);
    int level = 1 + static_cast<int>(rng.below(choices));
    if (in_range && level >= ex.tgt_level) ++level;
    const auto dist = classify_text(model, ex.target).distribution;
    ex.tgt_level = level;
    ex.tgt_conf = dist[static_cast<std::size_t>(level)];
    ex.tgt_weight = confidence_weight(precision_for(precisions, level), ex.tgt_conf);
    ex.weight = ex.src_weight * ex.tgt_weight;
    mask[i] = true;
  }
  return mask;
}

std::vector<ParaphrasePair> load_paraphrase_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ParaphrasePair> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(row, "expected exactly two tab-separated columns");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::string paraphrases_to_tsv(const std::vector<ParaphrasePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += p.source + '\t' + p.target + '\n';
  return out;
}

std::string pseudo_to_jsonl(const std::vector<PseudoExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["source"] = ex.source;
    j["target"] = ex.target;
    j["src_level"] = ex.src_level;
    j["tgt_level"] = ex.tgt_level;
    j["src_conf"] = ex.src_conf;
    j["tgt_conf"] = ex.tgt_conf;
    j["weight"] = ex.weight;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<PseudoExample> load_pseudo_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PseudoExample> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      PseudoExample ex;
      ex.source = j.at("source").get<std::string>();
      ex.target = j.at("target").get<std::string>();
      ex.src_level = j.at("src_level").get<int>();
      ex.tgt_level = j.at("tgt_level").get<int>();
      ex.src_conf = j.at("src_conf").get<double>();
      ex.tgt_conf = j.at("tgt_conf").get<double>();
      ex.weight = j.at("weight").get<double>();
      if (!(ex.weight >= 0 && ex.weight <= 1)) throw ParseError(row, "weight outside [0, 1]");
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(row, e.what());
    }
  }
  return out;
}

void recompute_side_weights(std::vector<PseudoExample>& examples,
                            const PrecisionProfile& precisions) {
  for (auto& ex : examples) {
    ex.src_weight = confidence_weight(precision_for(precisions, ex.src_level), ex.src_conf);
    ex.tgt_weight = confidence_weight(precision_for(precisions, ex.tgt_level), ex.tgt_conf);
  }
}

std::string format_filter_report(const FilterReport& report) {
  std::ostringstream os;
  os << "rule\tremoved\tfraction_of_removed\n";
  std::size_t removed = 0;
  for (auto r : report.removed) removed += r;
  char buf[64];
  for (std::size_t i = 0; i < kNumFilterRules; ++i) {
    const double frac = removed ? static_cast<double>(report.removed[i]) / static_cast<double>(removed) : 0.0;
    std::snprintf(buf, sizeof buf, "%.4f", frac);
    os << to_string(static_cast<FilterRule>(i)) << '\t' << report.removed[i] << '\t' << buf << '\n';
  }
  os << "input\t" << report.input << "\t\n";
  os << "kept\t" << report.kept << "\t\n";
  return os.str();
}

}  // namespace lcwl
