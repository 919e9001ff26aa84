#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/conllu.hpp"
#include "ulem/util.hpp"

namespace ulem {

struct EvalResult {
  std::string treebank_name;
  std::uint64_t total_tokens = 0;  // tokens with a gold lemma
  std::uint64_t correct = 0;
  std::uint64_t excluded = 0;      // gold lemma absent, left out of the denominator

  double accuracy() const {
    return total_tokens ? static_cast<double>(correct) / static_cast<double>(total_tokens) : 0.0;
  }
  double error_rate() const { return 1.0 - accuracy(); }
};

// Word-level exact-match lemma accuracy on identical tokenization. The
// comparison is plain string equality, no normalization.
inline EvalResult evaluate(const Treebank& pred, const Treebank& gold) {
  if (pred.sentences.size() != gold.sentences.size())
    throw std::runtime_error("evaluate: sentence counts differ (" +
                             std::to_string(pred.sentences.size()) + " vs " +
                             std::to_string(gold.sentences.size()) + ")");
  EvalResult r;
  r.treebank_name = gold.source_name;
  for (std::size_t si = 0; si < gold.sentences.size(); ++si) {
    const auto& ps = pred.sentences[si];
    const auto& gs = gold.sentences[si];
    if (ps.tokens.size() != gs.tokens.size())
      throw std::runtime_error("evaluate: token counts differ in sentence " +
                               std::to_string(si + 1));
    for (std::size_t ti = 0; ti < gs.tokens.size(); ++ti) {
      const Token& pt = ps.tokens[ti];
      const Token& gt = gs.tokens[ti];
      if (pt.form != gt.form)
        throw std::runtime_error("evaluate: form mismatch at sentence " + std::to_string(si + 1) +
                                 " token " + std::to_string(ti + 1) + " ('" + pt.form + "' vs '" +
                                 gt.form + "')");
      if (!gt.lemma) {
        ++r.excluded;
        continue;
      }
      ++r.total_tokens;
      if (pt.lemma && *pt.lemma == *gt.lemma) ++r.correct;
    }
  }
  return r;
}

struct GroupSummary {
  std::string group_name;
  std::vector<EvalResult> members;
  double macro_average_error_rate = 0.0;
};

// Unweighted mean of member error rates.
inline GroupSummary macro_average(const std::vector<EvalResult>& results,
                                  std::string group_name = "all") {
  if (results.empty()) throw std::invalid_argument("macro_average: no results");
  GroupSummary g;
  g.group_name = std::move(group_name);
  g.members = results;
  double sum = 0.0;
  for (const auto& r : results) sum += r.error_rate();
  g.macro_average_error_rate = sum / static_cast<double>(results.size());
  return g;
}

// (base - ours) / base; undefined when the baseline makes no errors.
inline std::optional<double> relative_error_reduction(double base_rate, double our_rate) {
  if (base_rate == 0.0) return std::nullopt;
  return (base_rate - our_rate) / base_rate;
}

inline std::string eval_csv(const std::vector<EvalResult>& results,
                            const std::optional<GroupSummary>& summary = std::nullopt) {
  std::string out = "treebank,tokens,correct,excluded,accuracy,error_rate\n";
  for (const auto& r : results) {
    out += csv_escape(r.treebank_name) + "," + std::to_string(r.total_tokens) + "," +
           std::to_string(r.correct) + "," + std::to_string(r.excluded) + "," +
           format_rate(r.accuracy()) + "," + format_rate(r.error_rate()) + "\n";
  }
  if (summary) {
    out += csv_escape("MACRO:" + summary->group_name) + ",,,,," +
           format_rate(summary->macro_average_error_rate) + "\n";
  }
  return out;
}

}  // namespace ulem
