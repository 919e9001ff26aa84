#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/conllu.hpp"

namespace ulem {

struct AmbiguityReport {
  std::uint64_t total_running_tokens = 0;
  std::uint64_t token_ambiguous_count = 0;
  std::uint64_t tokentag_ambiguous_count = 0;

  double token_ambiguity_rate() const {
    return total_running_tokens ? static_cast<double>(token_ambiguous_count) / total_running_tokens : 0.0;
  }
  double tokentag_ambiguity_rate() const {
    return total_running_tokens ? static_cast<double>(tokentag_ambiguous_count) / total_running_tokens : 0.0;
  }
};

struct SkewEntry {
  std::string form;
  std::string tags;  // canonical tag string, e.g. "UPOS=NOUN XPOS=NNS Number=Plur"
  std::string top_lemma;
  std::uint64_t top_count = 0;
  std::string second_lemma;
  std::uint64_t second_count = 0;
};

// Canonical rendering of the (UPOS, XPOS, FEATS) tag triple; mirrors the tag
// symbol layout used by the lemmatizer input.
inline std::string tag_key(const Token& t) {
  std::string key = "UPOS=" + t.upos;
  if (t.xpos) key += " XPOS=" + *t.xpos;
  for (const auto& [cat, val] : t.feats) {
    key += ' ';
    key += cat;
    key += '=';
    key += val;
  }
  return key;
}

// A running token is token-ambiguous iff its form occurs with two or more
// distinct lemmas anywhere in the treebank, and token-tag-ambiguous iff its
// (form, tags) key does. Counts are over running tokens, not types.
inline AmbiguityReport compute_ambiguity(const Treebank& tb) {
  std::map<std::string, std::set<std::string>> form_lemmas;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> key_lemmas;

  for (std::size_t si = 0; si < tb.sentences.size(); ++si) {
    for (const Token& t : tb.sentences[si].tokens) {
      if (!t.lemma)
        throw std::runtime_error("token '" + t.form + "' in sentence " + std::to_string(si + 1) +
                                 " has no lemma");
      form_lemmas[t.form].insert(*t.lemma);
      key_lemmas[{t.form, tag_key(t)}].insert(*t.lemma);
    }
  }

  AmbiguityReport rep;
  for (const auto& sent : tb.sentences) {
    for (const Token& t : sent.tokens) {
      ++rep.total_running_tokens;
      if (form_lemmas[t.form].size() >= 2) ++rep.token_ambiguous_count;
      if (key_lemmas[{t.form, tag_key(t)}].size() >= 2) ++rep.tokentag_ambiguous_count;
    }
  }
  return rep;
}

// Forms are ranked by total running frequency. For each token-tag-ambiguous
// form the displayed lemma counts come from its most frequent ambiguous
// (form, tags) key; ties on key frequency break by tag string, lemma ties by
// lemma string.
inline std::vector<SkewEntry> top_ambiguous_skew(const Treebank& tb, std::size_t k) {
  if (k < 1) throw std::invalid_argument("top_ambiguous_skew: k must be >= 1");

  std::map<std::string, std::uint64_t> form_count;
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::uint64_t>> key_lemma_counts;
  for (const auto& sent : tb.sentences) {
    for (const Token& t : sent.tokens) {
      if (!t.lemma) throw std::runtime_error("token '" + t.form + "' has no lemma");
      ++form_count[t.form];
      ++key_lemma_counts[{t.form, tag_key(t)}][*t.lemma];
    }
  }

  // Most frequent ambiguous key per form.
  struct KeyPick {
    std::string tags;
    std::uint64_t key_total = 0;
    const std::map<std::string, std::uint64_t>* lemmas = nullptr;
  };
  std::map<std::string, KeyPick> pick;
  for (const auto& [key, lemmas] : key_lemma_counts) {
    if (lemmas.size() < 2) continue;
    std::uint64_t total = 0;
    for (const auto& [_, c] : lemmas) total += c;
    auto it = pick.find(key.first);
    if (it == pick.end() || total > it->second.key_total ||
        (total == it->second.key_total && key.second < it->second.tags)) {
      pick[key.first] = KeyPick{key.second, total, &lemmas};
    }
  }

  std::vector<std::string> forms;
  forms.reserve(pick.size());
  for (const auto& [form, _] : pick) forms.push_back(form);
  std::sort(forms.begin(), forms.end(), [&](const std::string& a, const std::string& b) {
    if (form_count[a] != form_count[b]) return form_count[a] > form_count[b];
    return a < b;
  });
  if (forms.size() > k) forms.resize(k);

  std::vector<SkewEntry> out;
  for (const auto& form : forms) {
    const KeyPick& kp = pick[form];
    // Rank lemmas of the chosen key by count desc, then lemma asc.
    std::vector<std::pair<std::string, std::uint64_t>> ranked(kp.lemmas->begin(), kp.lemmas->end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    SkewEntry e;
    e.form = form;
    e.tags = kp.tags;
    e.top_lemma = ranked[0].first;
    e.top_count = ranked[0].second;
    e.second_lemma = ranked[1].first;
    e.second_count = ranked[1].second;
    out.push_back(std::move(e));
  }
  return out;
}

inline Treebank pool_treebanks(const std::vector<Treebank>& tbs) {
  Treebank out;
  out.source_name = "pooled";
  for (const auto& tb : tbs)
    out.sentences.insert(out.sentences.end(), tb.sentences.begin(), tb.sentences.end());
  return out;
}

}  // namespace ulem
