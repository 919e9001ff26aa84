#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/codec.hpp"
#include "ulem/conllu.hpp"
#include "ulem/lexicon.hpp"
#include "ulem/rng.hpp"

namespace ulem {

// Character sampling distribution estimated from training-data frequencies.
struct CharDistribution {
  std::vector<std::string> chars;    // sorted, unique
  std::vector<double> probabilities; // aligned with chars, sums to 1

  std::size_t alphabet_size() const { return chars.size(); }
};

inline CharDistribution estimate_char_distribution(const std::vector<TrainingExample>& examples) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& ex : examples) {
    for (const Symbol& s : ex.input) {
      if (s.kind != SymbolKind::character) continue;
      ++counts[s.text];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("estimate_char_distribution: no characters observed");
  CharDistribution d;
  for (const auto& [ch, n] : counts) {
    d.chars.push_back(ch);
    d.probabilities.push_back(static_cast<double>(n) / static_cast<double>(total));
  }
  return d;
}

struct AugmentationPlan {
  std::size_t autoencoder_count = 0;
  std::size_t transducer_count = 0;
  std::uint64_t seed = 1;
};

// Random strings of 3-12 characters sampled with replacement from the known
// character distribution; input repeats verbatim in the output, tagged with a
// single AUTOENC symbol. The first |alphabet| strings each pin one alphabet
// character at a random position so every known character is covered.
inline std::vector<TrainingExample> generate_autoencoder_examples(const CharDistribution& dist,
                                                                  std::size_t n,
                                                                  std::uint64_t seed) {
  if (n == 0) return {};
  if (n < dist.alphabet_size())
    throw std::invalid_argument(
        "generate_autoencoder_examples: need n >= alphabet size (" +
        std::to_string(dist.alphabet_size()) + ") so every character can be covered, got " +
        std::to_string(n));

  Rng rng(seed);
  std::vector<TrainingExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = static_cast<std::size_t>(rng.uniform_int(3, 12));
    std::vector<std::string> s(len);
    for (auto& c : s) c = dist.chars[rng.categorical(dist.probabilities)];
    if (i < dist.alphabet_size()) {
      std::size_t pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(len) - 1));
      s[pos] = dist.chars[i];
    }
    TrainingExample ex;
    ex.group = WeightGroup::autoencoder;
    for (const auto& c : s) ex.input.push_back(char_symbol(c));
    ex.input.push_back(sym_autoenc());
    for (const auto& c : s) ex.output.push_back(char_symbol(c));
    ex.output.push_back(sym_eos());
    out.push_back(std::move(ex));
  }
  return out;
}

// Filtering pipeline over a pre-mapped lexicon, in order: forms present in the
// training treebank, entries with no UPOS, and forms ambiguous under identical
// tags are dropped; survivors are ranked by corpus frequency (descending,
// then form) and one example per (form, tags, lemma) entry is taken until n.
inline std::vector<TrainingExample> generate_lexicon_examples(
    const std::vector<LexiconEntry>& lexicon, const FrequencyList& freq, const Treebank& train,
    std::size_t n) {
  std::set<std::string> train_forms;
  for (const auto& sent : train.sentences)
    for (const auto& t : sent.tokens) train_forms.insert(t.form);

  auto entry_tags = [](const LexiconEntry& e) {
    std::string key = "UPOS=" + (e.upos ? *e.upos : "_");
    if (e.xpos) key += " XPOS=" + *e.xpos;
    for (const auto& [cat, val] : e.feats) key += " " + cat + "=" + val;
    return key;
  };

  // Forms with two or more distinct lemmas under exactly the same tags.
  std::map<std::pair<std::string, std::string>, std::set<std::string>> key_lemmas;
  for (const auto& e : lexicon) key_lemmas[{e.form, entry_tags(e)}].insert(e.lemma);
  std::set<std::string> ambiguous_forms;
  for (const auto& [key, lemmas] : key_lemmas)
    if (lemmas.size() >= 2) ambiguous_forms.insert(key.first);

  struct Entry {
    const LexiconEntry* e;
    std::string tags;
  };
  std::map<std::string, std::vector<Entry>> by_form;
  std::set<std::pair<std::string, std::pair<std::string, std::string>>> seen;
  for (const auto& e : lexicon) {
    if (train_forms.count(e.form)) continue;
    if (!e.upos) continue;
    if (ambiguous_forms.count(e.form)) continue;
    std::string tags = entry_tags(e);
    if (!seen.insert({e.form, {tags, e.lemma}}).second) continue;
    by_form[e.form].push_back({&e, std::move(tags)});
  }

  std::vector<std::string> forms;
  forms.reserve(by_form.size());
  for (const auto& [form, _] : by_form) forms.push_back(form);
  std::sort(forms.begin(), forms.end(), [&](const std::string& a, const std::string& b) {
    std::uint64_t fa = freq.count_of(a), fb = freq.count_of(b);
    if (fa != fb) return fa > fb;
    return a < b;
  });

  std::vector<TrainingExample> out;
  for (const auto& form : forms) {
    auto& entries = by_form[form];
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.tags != b.tags) return a.tags < b.tags;
      return a.e->lemma < b.e->lemma;
    });
    for (const Entry& en : entries) {
      if (out.size() >= n) return out;
      Token t;
      t.id = 1;
      t.form = en.e->form;
      t.lemma = en.e->lemma;
      t.upos = *en.e->upos;
      t.xpos = en.e->xpos;
      t.feats = en.e->feats;
      TrainingExample ex = encode_example(t);
      ex.group = WeightGroup::transducer;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// Concatenation followed by a seeded uniform shuffle; the example multiset is
// preserved exactly.
inline std::vector<TrainingExample> mix(std::vector<TrainingExample> gold,
                                        const std::vector<std::vector<TrainingExample>>& aux,
                                        std::uint64_t seed) {
  for (const auto& list : aux) gold.insert(gold.end(), list.begin(), list.end());
  Rng rng(seed);
  rng.shuffle(gold);
  return gold;
}

// Audit dump: input symbols space-joined, output characters, weight group.
inline std::string examples_to_tsv(const std::vector<TrainingExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    std::string in;
    for (std::size_t i = 0; i < ex.input.size(); ++i) {
      if (i) in += ' ';
      in += ex.input[i].text;
    }
    std::string o;
    for (const Symbol& s : ex.output)
      if (s.kind == SymbolKind::character) o += s.text;
    out += in;
    out += '\t';
    out += o;
    out += '\t';
    out += weight_group_name(ex.group);
    out += '\n';
  }
  return out;
}

}  // namespace ulem
