#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>

#include "support/generators.hpp"
#include "ulem/ambiguity.hpp"

using namespace ulem;

namespace {

Token tok(std::string form, std::string lemma, std::string upos, std::string xpos = "",
          Feats feats = {}) {
  Token t;
  t.id = 1;
  t.form = std::move(form);
  t.lemma = std::move(lemma);
  t.upos = std::move(upos);
  if (!xpos.empty()) t.xpos = xpos;
  t.feats = std::move(feats);
  return t;
}

Treebank corpus(std::vector<Token> tokens) {
  Treebank tb;
  Sentence s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i].id = static_cast<int>(i) + 1;
    s.tokens.push_back(std::move(tokens[i]));
  }
  tb.sentences.push_back(std::move(s));
  return tb;
}

// Quadratic recount over all token pairs, independent of the map-based
// implementation. A token is ambiguous iff some other token shares its key
// but not its lemma.
struct BruteReport {
  std::uint64_t total = 0, tok_amb = 0, tag_amb = 0;
};

bool same_tags(const Token& a, const Token& b) {
  return a.upos == b.upos && a.xpos == b.xpos && a.feats == b.feats;
}

BruteReport brute_force(const Treebank& tb) {
  std::vector<const Token*> all;
  for (const auto& s : tb.sentences)
    for (const auto& t : s.tokens) all.push_back(&t);
  BruteReport r;
  r.total = all.size();
  for (const Token* a : all) {
    bool tok_amb = false, tag_amb = false;
    for (const Token* b : all) {
      if (a->form != b->form) continue;
      if (*a->lemma != *b->lemma) {
        tok_amb = true;
        if (same_tags(*a, *b)) tag_amb = true;
      }
    }
    if (tok_amb) ++r.tok_amb;
    if (tag_amb) ++r.tag_amb;
  }
  return r;
}

// Independent skew enumeration mirroring the documented definition.
std::vector<SkewEntry> brute_skew(const Treebank& tb, std::size_t k) {
  std::map<std::string, std::map<std::string, std::map<std::string, std::uint64_t>>> by_form;
  std::map<std::string, std::uint64_t> form_count;
  for (const auto& s : tb.sentences)
    for (const auto& t : s.tokens) {
      ++form_count[t.form];
      ++by_form[t.form][tag_key(t)][*t.lemma];
    }

  std::vector<std::string> candidates;
  for (const auto& [form, keys] : by_form)
    for (const auto& [_, lemmas] : keys)
      if (lemmas.size() >= 2) {
        candidates.push_back(form);
        break;
      }
  std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
    if (form_count[a] != form_count[b]) return form_count[a] > form_count[b];
    return a < b;
  });
  if (candidates.size() > k) candidates.resize(k);

  std::vector<SkewEntry> out;
  for (const auto& form : candidates) {
    std::string best_tags;
    std::uint64_t best_total = 0;
    bool have = false;
    for (const auto& [tags, lemmas] : by_form[form]) {
      if (lemmas.size() < 2) continue;
      std::uint64_t total = 0;
      for (const auto& [_, c] : lemmas) total += c;
      if (!have || total > best_total || (total == best_total && tags < best_tags)) {
        best_total = total;
        best_tags = tags;
        have = true;
      }
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(by_form[form][best_tags].begin(),
                                                              by_form[form][best_tags].end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out.push_back({form, best_tags, ranked[0].first, ranked[0].second, ranked[1].first,
                   ranked[1].second});
  }
  return out;
}

}  // namespace

TEST_CASE("part-of-speech disambiguates 'lives'") {
  Treebank tb = corpus({tok("lives", "life", "NOUN", "NNS"), tok("lives", "live", "VERB", "VBZ")});
  AmbiguityReport r = compute_ambiguity(tb);
  CHECK(r.total_running_tokens == 2);
  CHECK(r.token_ambiguous_count == 2);
  CHECK(r.tokentag_ambiguous_count == 0);
  CHECK(r.token_ambiguity_rate() == 1.0);
  CHECK(r.tokentag_ambiguity_rate() == 0.0);
}

TEST_CASE("unambiguous corpus has zero rates") {
  Treebank tb = corpus({tok("dogs", "dog", "NOUN"), tok("ran", "run", "VERB"),
                        tok("dogs", "dog", "NOUN")});
  AmbiguityReport r = compute_ambiguity(tb);
  CHECK(r.token_ambiguous_count == 0);
  CHECK(r.tokentag_ambiguous_count == 0);
}

TEST_CASE("token without lemma is an error naming the sentence") {
  Treebank tb = corpus({tok("a", "a", "DET")});
  tb.sentences[0].tokens[0].lemma.reset();
  CHECK_THROWS_WITH(compute_ambiguity(tb), Catch::Matchers::ContainsSubstring("sentence 1"));
}

TEST_CASE("random corpora match the brute-force recount exactly") {
  Rng rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    Treebank tb = testgen::random_treebank(rng, 25);
    AmbiguityReport r = compute_ambiguity(tb);
    BruteReport b = brute_force(tb);
    REQUIRE(r.total_running_tokens == b.total);
    REQUIRE(r.token_ambiguous_count == b.tok_amb);
    REQUIRE(r.tokentag_ambiguous_count == b.tag_amb);
    // Refinement: the tag key can only remove ambiguity.
    REQUIRE(r.tokentag_ambiguous_count <= r.token_ambiguous_count);
  }
}

TEST_CASE("skew entry for a heavily skewed form") {
  std::vector<Token> toks;
  for (int i = 0; i < 17; ++i) toks.push_back(tok("vs.", "vs.", "ADP"));
  toks.push_back(tok("vs.", "versus", "ADP"));
  Treebank tb = corpus(std::move(toks));
  auto skew = top_ambiguous_skew(tb, 100);
  REQUIRE(skew.size() == 1);
  CHECK(skew[0].form == "vs.");
  CHECK(skew[0].top_lemma == "vs.");
  CHECK(skew[0].top_count == 17);
  CHECK(skew[0].second_lemma == "versus");
  CHECK(skew[0].second_count == 1);
}

TEST_CASE("no ambiguity means empty skew list") {
  Treebank tb = corpus({tok("dogs", "dog", "NOUN"), tok("lives", "life", "NOUN"),
                        tok("lives", "live", "VERB")});
  CHECK(top_ambiguous_skew(tb, 10).empty());
}

TEST_CASE("skew matches brute-force enumeration on random corpora") {
  Rng rng(77);
  for (int rep = 0; rep < 30; ++rep) {
    Treebank tb = testgen::random_treebank(rng, 30);
    auto got = top_ambiguous_skew(tb, 5);
    auto want = brute_skew(tb, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].form == want[i].form);
      CHECK(got[i].tags == want[i].tags);
      CHECK(got[i].top_lemma == want[i].top_lemma);
      CHECK(got[i].top_count == want[i].top_count);
      CHECK(got[i].second_lemma == want[i].second_lemma);
      CHECK(got[i].second_count == want[i].second_count);
    }
  }
}

TEST_CASE("pooling one treebank is the identity") {
  Rng rng(5);
  Treebank tb = testgen::random_treebank(rng, 5);
  Treebank pooled = pool_treebanks({tb});
  CHECK(pooled.sentences == tb.sentences);
}

TEST_CASE("pooling sums token counts and matches the oracle") {
  Rng rng(6);
  Treebank a = testgen::random_treebank(rng, 5);
  Treebank b = testgen::random_treebank(rng, 7);
  Treebank pooled = pool_treebanks({a, b});
  CHECK(pooled.token_count() == a.token_count() + b.token_count());
  AmbiguityReport r = compute_ambiguity(pooled);
  BruteReport want = brute_force(pooled);
  CHECK(r.token_ambiguous_count == want.tok_amb);
  CHECK(r.tokentag_ambiguous_count == want.tag_amb);
}

TEST_CASE("adding a sentence never decreases the ambiguous count") {
  Rng rng(7);
  Treebank tb = testgen::random_treebank(rng, 10);
  AmbiguityReport before = compute_ambiguity(tb);
  Treebank more = testgen::random_treebank(rng, 1);
  tb.sentences.push_back(more.sentences[0]);
  AmbiguityReport after = compute_ambiguity(tb);
  CHECK(after.token_ambiguous_count >= before.token_ambiguous_count);
}

TEST_CASE("report is invariant under sentence permutation") {
  Rng rng(8);
  Treebank tb = testgen::random_treebank(rng, 12);
  Treebank shuffled = tb;
  std::reverse(shuffled.sentences.begin(), shuffled.sentences.end());
  AmbiguityReport a = compute_ambiguity(tb);
  AmbiguityReport b = compute_ambiguity(shuffled);
  CHECK(a.total_running_tokens == b.total_running_tokens);
  CHECK(a.token_ambiguous_count == b.token_ambiguous_count);
  CHECK(a.tokentag_ambiguous_count == b.tokentag_ambiguous_count);
}
