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

#include "lcwl/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"

namespace lcwl {

using nlohmann::json;

namespace {

constexpr const char* kConnectorSlot = "CONN";

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

void check_example(const ParallelExample& ex, int levels, std::size_t row) {
  if (ex.level < 1 || ex.level > levels) {
    throw ParseError(row, "level " + std::to_string(ex.level) + " outside [1, " +
                              std::to_string(levels) + "]");
  }
  if (tokenize_lenient(ex.source).empty() || tokenize_lenient(ex.target).empty()) {
    throw ParseError(row, "empty source or target");
  }
}

bool is_slot(const SyntheticGrammar& g, std::string_view name) {
  if (name == kConnectorSlot) return true;
  return std::any_of(g.concepts.begin(), g.concepts.end(),
                     [&](const ConceptChain& c) { return c.category == name; });
}

std::pair<std::string, bool> strip_optional(const std::string& slot) {
  if (!slot.empty() && slot.back() == '?') return {slot.substr(0, slot.size() - 1), true};
  return {slot, false};
}

std::vector<PlanItem> fill_template(const SyntheticGrammar& g,
                                    const std::vector<std::string>& tmpl,
                                    const std::map<std::string, std::vector<int>>& by_category,
                                    Rng& rng) {
  std::vector<PlanItem> items;
  for (const auto& slot : tmpl) {
    const auto [name, optional] = strip_optional(slot);
    if (!is_slot(g, name)) {
      items.push_back({-1, slot});
      continue;
    }
    if (optional && !rng.bernoulli(g.optional_probability)) continue;
    if (name == kConnectorSlot) {
      items.push_back({-1, g.connectors[rng.below(g.connectors.size())]});
    } else {
      const auto& ids = by_category.at(name);
      items.push_back({ids[rng.below(ids.size())], {}});
    }
  }
  return items;
}

}  // namespace

DataFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return DataFormat::kJsonl;
  return DataFormat::kTsv;
}

ParallelDataset load_parallel(const std::filesystem::path& path, DataFormat format, int levels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ParallelDataset data;
  data.levels = levels;
  data.provenance = "file:" + path.string();
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ParallelExample ex;
    if (format == DataFormat::kTsv) {
      const auto cols = split_tabs(line);
      if (cols.size() != 3) throw ParseError(row, "expected source<TAB>target<TAB>level");
      if (!parse_int(cols[2], ex.level)) throw ParseError(row, "level is not an integer");
      ex.source = cols[0];
      ex.target = cols[1];
    } else {
      try {
        const auto j = json::parse(line);
        ex.source = j.at("source").get<std::string>();
        ex.target = j.at("target").get<std::string>();
        ex.level = j.at("level").get<int>();
      } catch (const json::exception& e) {
        throw ParseError(row, e.what());
      }
    }
    check_example(ex, levels, row);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

std::string parallel_to_tsv(const ParallelDataset& data) {
  std::string out;
  for (const auto& ex : data.examples) {
    out += ex.source + '\t' + ex.target + '\t' + std::to_string(ex.level) + '\n';
  }
  return out;
}

std::string parallel_to_jsonl(const ParallelDataset& data) {
  std::string out;
  for (const auto& ex : data.examples) {
    nlohmann::ordered_json j;
    j["source"] = ex.source;
    j["target"] = ex.target;
    j["level"] = ex.level;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

SyntheticGrammar default_grammar() {
  SyntheticGrammar g;
  g.levels = 4;
  auto add = [&](const char* cat, std::vector<std::string> forms) {
    g.concepts.push_back({cat, std::move(forms)});
  };
  add("NOUN", {"automobile", "motorcar", "vehicle", "auto", "car"});
  add("NOUN", {"physician", "clinician", "doctor", "medic", "nurse"});
  add("NOUN", {"residence", "dwelling", "household", "house", "home"});
  add("NOUN", {"individual", "gentleman", "person", "man", "guy"});
  add("NOUN", {"municipality", "metropolis", "township", "city", "town"});
  add("NOUN", {"apparatus", "instrument", "device", "gadget", "tool"});
  add("NOUN", {"legislation", "regulation", "statute", "law", "rule"});
  add("NOUN", {"adolescent", "juvenile", "teenager", "youth", "kid"});
  add("NOUN", {"remuneration", "compensation", "salary", "wage", "pay"});
  add("NOUN", {"sustenance", "nourishment", "provisions", "food", "meal"});
  add("NOUN", {"correspondence", "communication", "message", "letter", "note"});
  add("NOUN", {"institution", "establishment", "organization", "agency", "group"});
  add("VERB", {"purchased", "acquired", "obtained", "bought", "got"});
  add("VERB", {"constructed", "fabricated", "assembled", "built", "made"});
  add("VERB", {"scrutinized", "examined", "inspected", "checked", "saw"});
  add("VERB", {"terminated", "concluded", "finished", "ended", "stopped"});
  add("VERB", {"demonstrated", "illustrated", "presented", "showed", "gave"});
  add("VERB", {"transported", "conveyed", "delivered", "carried", "took"});
  add("VERB", {"solicited", "requested", "demanded", "asked", "begged"});
  add("VERB", {"relinquished", "abandoned", "deserted", "left", "quit"});
  add("ADJ", {"enormous", "substantial", "considerable", "large", "big"});
  add("ADJ", {"antiquated", "ancient", "elderly", "aged", "old"});
  add("ADJ", {"exceptional", "remarkable", "excellent", "great", "good"});
  add("ADJ", {"diminutive", "miniature", "compact", "little", "small"});
  add("ADJ", {"contemporary", "modern", "current", "recent", "new"});
  add("ADJ", {"hazardous", "perilous", "dangerous", "risky", "bad"});
  g.main_template = {"the", "ADJ?", "NOUN", "VERB", "the", "ADJ?", "NOUN"};
  g.clause_template = {"CONN", "the", "NOUN", "VERB", "the", "NOUN"};
  g.connectors = {"because", "although", "while", "since", "after"};
  g.optional_probability = 0.5;
  g.max_clauses = 2;
  return g;
}

std::string grammar_to_json(const SyntheticGrammar& g) {
  nlohmann::ordered_json j;
  j["levels"] = g.levels;
  j["main_template"] = g.main_template;
  j["clause_template"] = g.clause_template;
  j["connectors"] = g.connectors;
  j["optional_probability"] = g.optional_probability;
  j["max_clauses"] = g.max_clauses;
  j["concepts"] = nlohmann::ordered_json::array();
  for (const auto& c : g.concepts) {
    j["concepts"].push_back({{"category", c.category}, {"forms", c.forms}});
  }
  return j.dump(2) + "\n";
}

SyntheticGrammar grammar_from_json(const std::string& text) {
  SyntheticGrammar g;
  try {
    const auto j = json::parse(text);
    g.levels = j.at("levels").get<int>();
    g.main_template = j.at("main_template").get<std::vector<std::string>>();
    g.clause_template = j.at("clause_template").get<std::vector<std::string>>();
    g.connectors = j.at("connectors").get<std::vector<std::string>>();
    g.optional_probability = j.at("optional_probability").get<double>();
    g.max_clauses = j.at("max_clauses").get<int>();
    for (const auto& c : j.at("concepts")) {
      g.concepts.push_back(
          {c.at("category").get<std::string>(), c.at("forms").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("grammar: ") + e.what());
  }
  validate_grammar(g);
  return g;
}

SyntheticGrammar load_grammar(const std::filesystem::path& path) {
  return grammar_from_json(read_file(path));
}

void validate_grammar(const SyntheticGrammar& g) {
  if (g.levels < 1) throw ConfigError("grammar: levels must be >= 1");
  if (g.concepts.empty()) throw ConfigError("grammar: no concepts");
  if (!(g.optional_probability >= 0 && g.optional_probability <= 1)) {
    throw ConfigError("grammar: optional_probability outside [0, 1]");
  }
  if (g.max_clauses < 0) throw ConfigError("grammar: max_clauses must be >= 0");
  std::set<std::string> seen;
  for (const auto& c : g.concepts) {
    if (c.forms.size() != static_cast<std::size_t>(g.levels) + 1) {
      throw ConfigError("grammar: concept '" + (c.forms.empty() ? std::string() : c.forms[0]) +
                        "' needs exactly levels+1 forms");
    }
    for (const auto& f : c.forms) {
      const auto toks = tokenize_lenient(f);
      if (toks.size() != 1 || toks[0] != f) {
        throw ConfigError("grammar: form '" + f + "' must be a single lowercase token");
      }
      if (!seen.insert(f).second) throw ConfigError("grammar: duplicated form '" + f + "'");
    }
  }
  bool has_concept_slot = false;
  for (const auto* tmpl : {&g.main_template, &g.clause_template}) {
    for (const auto& slot : *tmpl) {
      const auto [name, optional] = strip_optional(slot);
      if (is_slot(g, name)) {
        has_concept_slot |= name != kConnectorSlot;
        if (name == kConnectorSlot && g.connectors.empty()) {
          throw ConfigError("grammar: CONN slot without connectors");
        }
      } else if (optional || seen.count(name)) {
        throw ConfigError("grammar: unknown slot or ambiguous literal '" + slot + "'");
      }
    }
  }
  if (!has_concept_slot) throw ConfigError("grammar: main template has no concept slot");
}

FrequencyTable grammar_frequency_table(const SyntheticGrammar& g) {
  std::vector<std::string> ranked;
  std::set<std::string> seen;
  auto push = [&](const std::string& w) {
    if (seen.insert(w).second) ranked.push_back(w);
  };
  for (const auto* tmpl : {&g.main_template, &g.clause_template}) {
    for (const auto& slot : *tmpl) {
      if (!is_slot(g, strip_optional(slot).first)) push(slot);
    }
  }
  for (const auto& c : g.connectors) push(c);
  for (int tier = g.levels; tier >= 0; --tier) {
    for (const auto& c : g.concepts) push(c.forms[static_cast<std::size_t>(tier)]);
  }
  return FrequencyTable::from_ranked(ranked);
}

double complexity_score(const SyntheticGrammar& g, const Tokens& tokens) {
  std::unordered_map<std::string, int> tier;
  for (const auto& c : g.concepts) {
    for (std::size_t t = 0; t < c.forms.size(); ++t) tier[c.forms[t]] = static_cast<int>(t);
  }
  double score = 0;
  for (const auto& tok : tokens) {
    if (!is_word_token(tok)) continue;
    score += 1;
    if (const auto it = tier.find(tok); it != tier.end()) score += g.levels - it->second;
  }
  return score;
}

SentencePlan sample_plan(const SyntheticGrammar& g, Rng& rng) {
  std::map<std::string, std::vector<int>> by_category;
  for (std::size_t i = 0; i < g.concepts.size(); ++i) {
    by_category[g.concepts[i].category].push_back(static_cast<int>(i));
  }
  SentencePlan plan;
  plan.main = fill_template(g, g.main_template, by_category, rng);
  const auto clauses = rng.below(static_cast<std::uint64_t>(g.max_clauses) + 1);
  for (std::uint64_t i = 0; i < clauses; ++i) {
    plan.clauses.push_back(fill_template(g, g.clause_template, by_category, rng));
  }
  return plan;
}

std::string render(const SyntheticGrammar& g, const SentencePlan& plan, int level) {
  if (level < 0 || level > g.levels) throw LevelOutOfRange("render: level out of range");
  std::vector<const std::vector<PlanItem>*> parts = {&plan.main};
  if (level < g.clause_drop_level()) {
    for (const auto& c : plan.clauses) parts.push_back(&c);
  }
  std::string out;
  for (const auto* part : parts) {
    for (const auto& item : *part) {
      if (!out.empty()) out.push_back(' ');
      out += item.concept_id >= 0
                 ? g.concepts[static_cast<std::size_t>(item.concept_id)].forms[static_cast<std::size_t>(level)]
                 : item.literal;
    }
  }
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
  out.push_back('.');
  return out;
}

SyntheticCorpus synth_generate(const SyntheticGrammar& g, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("synth_generate: n must be >= 1");
  validate_grammar(g);
  Rng rng(seed);
  SyntheticCorpus out;
  out.dataset.levels = g.levels;
  out.dataset.provenance = "synthetic:" + std::to_string(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto plan = sample_plan(g, rng);
    const int level = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(g.levels)));
    ParallelExample ex{render(g, plan, 0), render(g, plan, level), level};
    out.pairs.push_back({ex.source, ex.target});
    out.hidden_source_levels.push_back(0);
    out.hidden_target_levels.push_back(level);
    out.dataset.examples.push_back(std::move(ex));
  }
  return out;
}

std::vector<bool> inject_level_noise(std::vector<int>& levels, int lo, int hi, double rate,
                                     std::uint64_t seed) {
  if (!(rate >= 0 && rate <= 1)) throw InvalidArgument("noise rate must lie in [0, 1]");
  if (hi <= lo && rate > 0) throw InvalidArgument("noise needs at least two levels");
  Rng rng(seed);
  std::vector<bool> mask(levels.size(), false);
  const auto span = static_cast<std::uint64_t>(hi - lo);  // number of other levels
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!rng.bernoulli(rate)) continue;
    const bool in_range = levels[i] >= lo && levels[i] <= hi;
    int level = lo + static_cast<int>(rng.below(in_range ? span : span + 1));
    if (in_range && level >= levels[i]) ++level;
    mask[i] = true;
    levels[i] = level;
  }
  return mask;
}

NoisyDataset inject_label_noise(const ParallelDataset& data, double rate, std::uint64_t seed) {
  std::vector<int> levels;
  levels.reserve(data.examples.size());
  for (const auto& ex : data.examples) levels.push_back(ex.level);
  NoisyDataset out{data, inject_level_noise(levels, 1, data.levels, rate, seed)};
  for (std::size_t i = 0; i < levels.size(); ++i) out.dataset.examples[i].level = levels[i];
  return out;
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0)) throw RatioError("split ratios must all be positive");
  }
  if (std::fabs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw RatioError("split ratios must sum to 1");
  }
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(ratios[i] * static_cast<double>(n)));
    assigned += sizes[i];
  }
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++sizes[i];

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::array<std::vector<std::size_t>, 3> out;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    out[s].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[s]));
    pos += sizes[s];
  }
  return out;
}

std::array<ParallelDataset, 3> split(const ParallelDataset& data, std::array<double, 3> ratios,
                                     std::uint64_t seed) {
  const auto idx = split_indices(data.examples.size(), ratios, seed);
  std::array<ParallelDataset, 3> out;
  for (std::size_t s = 0; s < 3; ++s) {
    out[s].levels = data.levels;
    out[s].provenance = data.provenance;
    for (auto i : idx[s]) out[s].examples.push_back(data.examples[i]);
  }
  return out;
}

std::vector<LabeledSentence> to_labeled_sentences(const ParallelDataset& data) {
  std::vector<LabeledSentence> out;
  out.reserve(2 * data.examples.size());
  for (const auto& ex : data.examples) {
    out.push_back({ex.source, 0});
    out.push_back({ex.target, ex.level});
  }
  return out;
}

}  // namespace lcwl
