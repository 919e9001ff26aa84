#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ulem/conllu.hpp"

namespace ulem {

// Look-up baseline: most common lemma per surface form from the training
// data; unknown forms are copied unchanged.
class LookupBaseline {
 public:
  static LookupBaseline build(const Treebank& train) {
    std::map<std::string, std::map<std::string, std::uint64_t>> counts;
    for (const auto& sent : train.sentences) {
      for (const auto& t : sent.tokens) {
        if (!t.lemma) throw std::runtime_error("build_lookup: token without gold lemma");
        ++counts[t.form][*t.lemma];
      }
    }
    LookupBaseline b;
    for (const auto& [form, lemmas] : counts) {
      const std::string* best = nullptr;
      std::uint64_t best_count = 0;
      for (const auto& [lemma, count] : lemmas) {
        if (best == nullptr || count > best_count) {  // map order = lexicographic tie-break
          best = &lemma;
          best_count = count;
        }
      }
      b.table_.emplace(form, *best);
    }
    return b;
  }

  // Total: every string gets a prediction.
  std::string predict(const std::string& form) const {
    auto it = table_.find(form);
    return it == table_.end() ? form : it->second;
  }

  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, std::string> table_;
};

}  // namespace ulem
