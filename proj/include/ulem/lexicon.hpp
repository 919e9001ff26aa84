#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ulem/conllu.hpp"
#include "ulem/util.hpp"

namespace ulem {

// One analysis from an external morphological lexicon, already mapped into
// the UD tag schema.
struct LexiconEntry {
  std::string form;
  std::string lemma;
  std::optional<std::string> upos;
  std::optional<std::string> xpos;
  Feats feats;

  auto operator<=>(const LexiconEntry&) const = default;
};

// TSV columns: form, lemma, upos, xpos, feats ("_" for absent). Duplicate
// identical rows collapse to one entry.
inline std::vector<LexiconEntry> load_lexicon(std::string_view text) {
  std::vector<LexiconEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 5)
      throw ParseError("lexicon row needs 5 tab-separated columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    LexiconEntry e;
    e.form = std::string(cols[0]);
    e.lemma = std::string(cols[1]);
    if (e.form.empty() || e.lemma.empty())
      throw ParseError("lexicon row with empty form or lemma", line_no);
    if (cols[2] != "_") e.upos = std::string(cols[2]);
    if (cols[3] != "_") e.xpos = std::string(cols[3]);
    e.feats = detail::parse_feats(cols[4], line_no);
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  return entries;
}

inline std::vector<LexiconEntry> load_lexicon_file(const std::string& path) {
  return load_lexicon(read_file(path));
}

inline std::string lexicon_to_tsv(const std::vector<LexiconEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.form;
    out += '\t';
    out += e.lemma;
    out += '\t';
    out += e.upos ? *e.upos : "_";
    out += '\t';
    out += e.xpos ? *e.xpos : "_";
    out += '\t';
    out += feats_to_string(e.feats);
    out += '\n';
  }
  return out;
}

// Word frequency list: "form<TAB>count" lines.
class FrequencyList {
 public:
  static FrequencyList parse(std::string_view text) {
    FrequencyList fl;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 2)
        throw ParseError("frequency row needs 2 tab-separated columns", line_no);
      std::uint64_t count = 0;
      try {
        count = std::stoull(std::string(cols[1]));
      } catch (const std::exception&) {
        throw ParseError("malformed frequency count '" + std::string(cols[1]) + "'", line_no);
      }
      if (count < 1) throw ParseError("frequency counts must be >= 1", line_no);
      fl.counts_[std::string(cols[0])] += count;
    }
    return fl;
  }

  static FrequencyList from_file(const std::string& path) { return parse(read_file(path)); }

  void add(const std::string& form, std::uint64_t count) { counts_[form] += count; }

  std::uint64_t count_of(const std::string& form) const {
    auto it = counts_.find(form);
    return it == counts_.end() ? 0 : it->second;
  }

  // Iteration by count descending, ties by form.
  std::vector<std::pair<std::string, std::uint64_t>> ranked() const {
    std::vector<std::pair<std::string, std::uint64_t>> v(counts_.begin(), counts_.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return v;
  }

  std::size_t size() const { return counts_.size(); }

 private:
  std::map<std::string, std::uint64_t> counts_;
};

struct CoverageRecall {
  double coverage = 0.0;  // fraction of running test tokens whose form is in the lexicon
  double recall = 0.0;    // fraction whose gold lemma appears among the form's analyses
  std::uint64_t total_tokens = 0;
  std::uint64_t covered = 0;
  std::uint64_t recalled = 0;
};

// Token-level coverage and lemma recall against gold annotation. Recall
// ignores tags: the gold lemma only has to appear among the form's analyses.
inline CoverageRecall coverage_and_recall(const std::vector<LexiconEntry>& lexicon,
                                          const Treebank& test) {
  std::map<std::string, std::set<std::string>> lemmas_by_form;
  for (const auto& e : lexicon) lemmas_by_form[e.form].insert(e.lemma);

  CoverageRecall r;
  for (const auto& sent : test.sentences) {
    for (const auto& t : sent.tokens) {
      if (!t.lemma) throw std::runtime_error("coverage_and_recall: token without gold lemma");
      ++r.total_tokens;
      auto it = lemmas_by_form.find(t.form);
      if (it == lemmas_by_form.end()) continue;
      ++r.covered;
      if (it->second.count(*t.lemma)) ++r.recalled;
    }
  }
  if (r.total_tokens) {
    r.coverage = static_cast<double>(r.covered) / static_cast<double>(r.total_tokens);
    r.recall = static_cast<double>(r.recalled) / static_cast<double>(r.total_tokens);
  }
  return r;
}

}  // namespace ulem
