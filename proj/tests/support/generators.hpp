#pragma once

#include <string>
#include <vector>

#include "ulem/conllu.hpp"
#include "ulem/rng.hpp"

namespace ulem::testgen {

// Small random treebanks for round-trip and oracle tests. Forms/lemmas are
// drawn from a tight pool so that ambiguity actually occurs.
inline Treebank random_treebank(Rng& rng, std::size_t n_sentences, std::size_t max_tokens = 8) {
  static const std::vector<std::string> forms = {"lives", "dogs",  "a",    "ran",  "koirasta",
                                                 "vs.",   "talo",  "on",   "kissa"};
  static const std::vector<std::string> lemmas = {"life", "live", "dog", "a",    "run",
                                                  "koira", "koiras", "vs.", "versus", "talo"};
  static const std::vector<std::string> upos = {"NOUN", "VERB", "DET", "ADP"};
  static const std::vector<std::string> xpos = {"N", "V", "NNS", "_"};
  static const std::vector<std::string> cats = {"Case", "Number", "Tense"};
  static const std::vector<std::string> vals = {"Nom", "Par", "Sing", "Plur", "Past"};

  Treebank tb;
  tb.source_name = "generated";
  for (std::size_t s = 0; s < n_sentences; ++s) {
    Sentence sent;
    sent.comments.push_back("# sent_id = " + std::to_string(s + 1));
    std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_tokens)));
    for (std::size_t i = 0; i < n; ++i) {
      Token t;
      t.id = static_cast<int>(i) + 1;
      t.form = forms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(forms.size()) - 1))];
      t.lemma = lemmas[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lemmas.size()) - 1))];
      t.upos = upos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(upos.size()) - 1))];
      std::string x = xpos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(xpos.size()) - 1))];
      if (x != "_") t.xpos = x;
      std::size_t n_feats = static_cast<std::size_t>(rng.uniform_int(0, 2));
      for (std::size_t f = 0; f < n_feats && f < cats.size(); ++f) {
        const std::string& cat = cats[f];
        const std::string& val =
            vals[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vals.size()) - 1))];
        t.feats.emplace_back(cat, val);
      }
      sent.tokens.push_back(std::move(t));
    }
    tb.sentences.push_back(std::move(sent));
  }
  return tb;
}

}  // namespace ulem::testgen
