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

#include "lcwl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcwl/error.hpp"

namespace lcwl {
namespace {

using NgramCounts = std::map<Tokens, long>;

NgramCounts count_ngrams(const Tokens& toks, int n) {
  NgramCounts out;
  const auto len = static_cast<long>(toks.size());
  for (long i = 0; i + n <= len; ++i) {
    ++out[Tokens(toks.begin() + i, toks.begin() + i + n)];
  }
  return out;
}

long lookup(const NgramCounts& m, const Tokens& g) {
  const auto it = m.find(g);
  return it == m.end() ? 0 : it->second;
}

// 0/0 reads as perfect agreement on an empty operation set.
double ratio_or_one(double num, double den) { return den == 0 ? 1.0 : num / den; }

double f1(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

}  // namespace

double bleu(const Tokens& hyp, const std::vector<Tokens>& refs) {
  if (hyp.empty()) throw EmptyInput("bleu: empty hypothesis");
  if (refs.empty()) throw EmptyInput("bleu: no references");
  for (const auto& r : refs) {
    if (r.empty()) throw EmptyInput("bleu: empty reference");
  }
  double log_sum = 0;
  for (int n = 1; n <= 4; ++n) {
    const auto h = count_ngrams(hyp, n);
    std::vector<NgramCounts> rc;
    rc.reserve(refs.size());
    for (const auto& r : refs) rc.push_back(count_ngrams(r, n));
    long matched = 0, total = 0;
    for (const auto& [g, c] : h) {
      long best = 0;
      for (const auto& m : rc) best = std::max(best, lookup(m, g));
      matched += std::min(c, best);
      total += c;
    }
    if (n == 1) {
      if (matched == 0) return 0.0;
      log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    } else {
      log_sum += std::log(static_cast<double>(matched + 1) / static_cast<double>(total + 1));
    }
  }
  const auto hyp_len = static_cast<long>(hyp.size());
  long closest = static_cast<long>(refs.front().size());
  for (const auto& r : refs) {
    const auto len = static_cast<long>(r.size());
    const long d = std::labs(len - hyp_len), best = std::labs(closest - hyp_len);
    if (d < best || (d == best && len < closest)) closest = len;
  }
  const double bp = hyp_len > closest
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(closest) /
                                             static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / 4.0);
}

SariComponents sari_ngram(const Tokens& source, const Tokens& hyp,
                          const std::vector<Tokens>& refs, int n) {
  const long num_refs = static_cast<long>(refs.size());
  NgramCounts s = count_ngrams(source, n);
  NgramCounts c = count_ngrams(hyp, n);
  NgramCounts r;
  for (const auto& ref : refs) {
    for (const auto& [g, k] : count_ngrams(ref, n)) r[g] += k;
  }
  // Source and hypothesis counts are replicated once per reference.
  for (auto& [g, k] : s) k *= num_refs;
  for (auto& [g, k] : c) k *= num_refs;

  SariComponents out;

  // Keep.
  double keep_p_sum = 0, keep_r_sum = 0;
  std::size_t keep_n = 0, keep_all_n = 0;
  for (const auto& [g, sk] : s) {
    const long ck = lookup(c, g), rk = lookup(r, g);
    const long keep = std::min(sk, ck);
    const long keep_all = std::min(sk, rk);
    const long good = std::min(keep, rk);
    if (keep > 0) {
      ++keep_n;
      keep_p_sum += static_cast<double>(good) / static_cast<double>(keep);
    }
    if (keep_all > 0) {
      ++keep_all_n;
      keep_r_sum += static_cast<double>(good) / static_cast<double>(keep_all);
    }
  }
  out.keep_f1 = f1(ratio_or_one(keep_p_sum, static_cast<double>(keep_n)),
                   ratio_or_one(keep_r_sum, static_cast<double>(keep_all_n)));

  // Delete: an n-gram deletion is good to the extent the references delete it too.
  double del_sum = 0;
  std::size_t del_n = 0;
  for (const auto& [g, sk] : s) {
    const long del = sk - lookup(c, g);
    if (del <= 0) continue;
    const long del_ref = std::max(0L, sk - lookup(r, g));
    ++del_n;
    del_sum += static_cast<double>(std::min(del, del_ref)) / static_cast<double>(del);
  }
  out.delete_precision = ratio_or_one(del_sum, static_cast<double>(del_n));

  // Add operates on n-gram sets.
  std::size_t added = 0, added_good = 0, ref_added = 0;
  for (const auto& [g, _] : c) {
    if (s.count(g)) continue;
    ++added;
    if (r.count(g)) ++added_good;
  }
  for (const auto& [g, _] : r) {
    if (!s.count(g)) ++ref_added;
  }
  out.add_f1 = f1(ratio_or_one(static_cast<double>(added_good), static_cast<double>(added)),
                  ratio_or_one(static_cast<double>(added_good), static_cast<double>(ref_added)));
  return out;
}

double sari(const Tokens& source, const Tokens& hyp, const std::vector<Tokens>& refs) {
  if (source.empty() || hyp.empty()) throw EmptyInput("sari: empty source or hypothesis");
  if (refs.empty()) throw EmptyInput("sari: no references");
  for (const auto& r : refs) {
    if (r.empty()) throw EmptyInput("sari: empty reference");
  }
  double keep = 0, del = 0, add = 0;
  for (int n = 1; n <= 4; ++n) {
    const auto comp = sari_ngram(source, hyp, refs, n);
    keep += comp.keep_f1;
    del += comp.delete_precision;
    add += comp.add_f1;
  }
  return 100.0 * ((keep / 4 + del / 4 + add / 4) / 3);
}

double delta_fkgl(std::string_view source, std::string_view hyp) {
  return fkgl(source) - fkgl(hyp);
}

std::vector<SentencePair> pairwise_bleu_filter(const std::vector<SentencePair>& pairs,
                                               double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("pairwise_bleu_filter: lo must be < hi");
  std::vector<SentencePair> out;
  for (const auto& p : pairs) {
    const auto a = tokenize_lenient(p.first);
    const auto b = tokenize_lenient(p.second);
    if (a.empty() || b.empty()) continue;
    const double score = bleu(a, {b});
    if (score >= lo && score <= hi) out.push_back(p);
  }
  return out;
}

RankTable average_rank(const SystemScores& scores, const MetricDirections& directions) {
  RankTable table;
  const std::size_t n = scores.size();
  for (const auto& [name, _] : scores) table.systems.push_back(name);
  for (const auto& [metric, dir] : directions) {
    table.metrics.push_back(metric);
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cells = scores[i].second;
      const auto it = cells.find(metric);
      if (it == cells.end()) {
        throw MissingScore("system '" + scores[i].first + "' has no score for '" + metric + "'");
      }
      key[i] = dir.kind == RankDirection::Kind::kHigherBetter ? -it->second
                                                              : std::fabs(it->second - dir.target);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && key[order[j + 1]] == key[order[i]]) ++j;
      // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
      const double shared = static_cast<double>(i + j + 2) / 2.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
      i = j + 1;
    }
    table.per_metric_ranks[metric] = std::move(ranks);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (const auto& m : table.metrics) sum += table.per_metric_ranks[m][i];
    table.average_rank[table.systems[i]] =
        table.metrics.empty() ? 0.0 : sum / static_cast<double>(table.metrics.size());
  }
  return table;
}

std::string format_rank_table(const RankTable& table, const SystemScores& scores) {
  std::ostringstream os;
  os << "system";
  for (const auto& m : table.metrics) os << '\t' << m << '\t' << m << "_rank";
  os << "\taverage_rank\n";
  char buf[64];
  for (std::size_t i = 0; i < table.systems.size(); ++i) {
    const auto& name = table.systems[i];
    os << name;
    const auto cells = std::find_if(scores.begin(), scores.end(),
                                    [&](const auto& s) { return s.first == name; });
    for (const auto& m : table.metrics) {
      const double v = cells == scores.end() ? NAN : cells->second.at(m);
      std::snprintf(buf, sizeof buf, "%.6f", v);
      os << '\t' << buf;
      std::snprintf(buf, sizeof buf, "%.2f", table.per_metric_ranks.at(m)[i]);
      os << '\t' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.4f", table.average_rank.at(name));
    os << '\t' << buf << '\n';
  }
  return os.str();
}

SystemScores read_scores_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file " + path.string());
  SystemScores out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(row, e.what());
    }
    if (!j.is_object() || !j.contains("system") || !j["system"].is_string() ||
        !j.contains("scores") || !j["scores"].is_object()) {
      throw ParseError(row, "expected {\"system\": str, \"scores\": {metric: number}}");
    }
    std::map<std::string, double> cells;
    for (const auto& [metric, v] : j["scores"].items()) {
      if (!v.is_number()) throw ParseError(row, "score for '" + metric + "' is not a number");
      cells[metric] = v.get<double>();
    }
    out.emplace_back(j["system"].get<std::string>(), std::move(cells));
  }
  return out;
}

std::string scores_to_jsonl(const SystemScores& scores) {
  std::string out;
  for (const auto& [name, cells] : scores) {
    nlohmann::ordered_json j;
    j["system"] = name;
    j["scores"] = nlohmann::ordered_json::object();
    for (const auto& [m, v] : cells) j["scores"][m] = v;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace lcwl
