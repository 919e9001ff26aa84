#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ulem/conllu.hpp"
#include "ulem/util.hpp"

namespace ulem {

// Exact-match (form, UPOS, XPOS, FEATS) -> lemma table consulted before the
// neural model.
class LemmaCache {
 public:
  using Key = std::tuple<std::string, std::string, std::string, std::string>;

  static Key key_of(const Token& t) {
    return {t.form, t.upos, t.xpos ? *t.xpos : "_", feats_to_string(t.feats)};
  }

  // Stores the most frequent lemma per key; count ties break to the
  // lexicographically smaller lemma. With skip_ambiguous, keys seen with two
  // or more distinct lemmas are left out entirely.
  static LemmaCache build(const Treebank& train, bool skip_ambiguous = false) {
    std::map<Key, std::map<std::string, std::uint64_t>> counts;
    for (const auto& sent : train.sentences) {
      for (const auto& t : sent.tokens) {
        if (!t.lemma) throw std::runtime_error("build_cache: token without gold lemma");
        ++counts[key_of(t)][*t.lemma];
      }
    }
    LemmaCache cache;
    for (const auto& [key, lemmas] : counts) {
      if (skip_ambiguous && lemmas.size() >= 2) continue;
      const std::string* best = nullptr;
      std::uint64_t best_count = 0;
      for (const auto& [lemma, count] : lemmas) {
        if (best == nullptr || count > best_count) {  // map order = lexicographic tie-break
          best = &lemma;
          best_count = count;
        }
      }
      cache.entries_.emplace(key, *best);
    }
    return cache;
  }

  std::optional<std::string> lookup(const Token& t) const {
    auto it = entries_.find(key_of(t));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

  // TSV "form<TAB>upos<TAB>xpos<TAB>feats<TAB>lemma", sorted by key so the
  // bytes are reproducible.
  std::string serialize() const {
    std::string out;
    for (const auto& [key, lemma] : entries_) {
      out += std::get<0>(key);
      out += '\t';
      out += std::get<1>(key);
      out += '\t';
      out += std::get<2>(key);
      out += '\t';
      out += std::get<3>(key);
      out += '\t';
      out += lemma;
      out += '\n';
    }
    return out;
  }

  static LemmaCache deserialize(std::string_view text) {
    LemmaCache cache;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 5)
        throw ParseError("cache row needs 5 tab-separated columns, got " +
                             std::to_string(cols.size()),
                         line_no);
      Key key{std::string(cols[0]), std::string(cols[1]), std::string(cols[2]),
              std::string(cols[3])};
      if (!cache.entries_.emplace(std::move(key), std::string(cols[4])).second)
        throw ParseError("duplicate cache key", line_no);
    }
    return cache;
  }

  void save(const std::string& path) const { write_file(path, serialize()); }

  static LemmaCache load(const std::string& path) { return deserialize(read_file(path)); }

  bool operator==(const LemmaCache&) const = default;

 private:
  std::map<Key, std::string> entries_;
};

}  // namespace ulem
