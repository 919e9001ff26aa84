#pragma once

#include <algorithm>
#include <any>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/codec.hpp"
#include "ulem/model.hpp"
#include "ulem/unicode.hpp"

namespace ulem {

struct Hypothesis {
  std::vector<int> output_ids;  // emitted symbols, terminating EOS excluded
  double log_prob = 0.0;
  std::vector<std::vector<double>> attention_trace;  // one distribution per emitted symbol
  std::any decoder_state;
};

// Ordering used everywhere ties can occur: higher score first, then
// lexicographically smaller output id sequence.
inline bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.output_ids < b.output_ids;
}

// Decoder concept:
//   struct D {
//     using State = ...;
//     State start() const;
//     struct Step { std::vector<double> log_probs, attention; State state; };
//     Step step(const State&, int prev_output_id) const;
//     int bos_id() const;  int eos_id() const;
//   };
//
// Standard beam search over total log-probability, no length normalization.
// A hypothesis reaching max_len is finalized by forcing EOS (its EOS
// log-probability is included, keeping scores comparable across lengths).
template <class Decoder>
std::vector<Hypothesis> beam_search(const Decoder& dec, int beam_size, int max_len) {
  if (beam_size < 1) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len must be >= 1");

  using State = typename Decoder::State;
  struct Item {
    Hypothesis hyp;
    State state;
  };

  const int eos = dec.eos_id();
  std::vector<Item> live;
  live.push_back({Hypothesis{}, dec.start()});
  std::vector<Hypothesis> finished;

  auto sort_truncate = [&](auto& v, auto before) {
    std::sort(v.begin(), v.end(), before);
    if (static_cast<int>(v.size()) > beam_size) v.resize(static_cast<std::size_t>(beam_size));
  };

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Item> next;
    for (Item& item : live) {
      int prev = item.hyp.output_ids.empty() ? dec.bos_id() : item.hyp.output_ids.back();
      auto r = dec.step(item.state, prev);
      for (int id = 0; id < static_cast<int>(r.log_probs.size()); ++id) {
        double lp = item.hyp.log_prob + r.log_probs[static_cast<std::size_t>(id)];
        if (id == eos) {
          Hypothesis fin = item.hyp;
          fin.log_prob = lp;
          finished.push_back(std::move(fin));
        } else {
          Item ext;
          ext.hyp = item.hyp;
          ext.hyp.output_ids.push_back(id);
          ext.hyp.log_prob = lp;
          ext.hyp.attention_trace.push_back(r.attention);
          ext.state = r.state;
          next.push_back(std::move(ext));
        }
      }
    }
    sort_truncate(finished, hypothesis_before);
    sort_truncate(next, [](const Item& a, const Item& b) { return hypothesis_before(a.hyp, b.hyp); });
    live = std::move(next);
    if (static_cast<int>(finished.size()) >= beam_size) {
      live.clear();
      break;
    }
  }

  // Forced EOS for hypotheses that hit max_len.
  for (Item& item : live) {
    int prev = item.hyp.output_ids.empty() ? dec.bos_id() : item.hyp.output_ids.back();
    auto r = dec.step(item.state, prev);
    Hypothesis fin = std::move(item.hyp);
    fin.log_prob += r.log_probs[static_cast<std::size_t>(eos)];
    fin.decoder_state = std::move(item.state);
    finished.push_back(std::move(fin));
  }
  sort_truncate(finished, hypothesis_before);
  return finished;
}

struct LemmaPrediction {
  std::string lemma;
  double score = 0.0;
  bool used_copy = false;
  bool copy_failed = false;  // UNK emitted but no character position to copy from
};

// Each generated UNK is replaced by the input symbol with the maximal
// attention at that output step. When the argmax lands on a tag or special
// symbol, the highest-attention character position is taken instead; copying
// a tag string into a lemma is never correct.
inline LemmaPrediction replace_unks(const Hypothesis& h, const std::vector<Symbol>& input_symbols,
                                    const Vocabulary& output_vocab) {
  if (h.attention_trace.size() != h.output_ids.size())
    throw std::invalid_argument("replace_unks: attention trace not aligned with outputs");

  LemmaPrediction pred;
  pred.score = h.log_prob;
  for (std::size_t t = 0; t < h.output_ids.size(); ++t) {
    const Symbol& sym = output_vocab.symbol_of(h.output_ids[t]);
    if (sym == sym_unk()) {
      const std::vector<double>& att = h.attention_trace[t];
      if (att.size() != input_symbols.size())
        throw std::invalid_argument("replace_unks: attention width does not match input length");
      std::size_t pos = 0;
      for (std::size_t i = 1; i < att.size(); ++i)
        if (att[i] > att[pos]) pos = i;
      if (input_symbols[pos].kind != SymbolKind::character) {
        bool found = false;
        std::size_t best = 0;
        for (std::size_t i = 0; i < att.size(); ++i) {
          if (input_symbols[i].kind != SymbolKind::character) continue;
          if (!found || att[i] > att[best]) {
            best = i;
            found = true;
          }
        }
        if (!found) {
          pred.copy_failed = true;
          continue;
        }
        pos = best;
      }
      pred.lemma += input_symbols[pos].text;
      pred.used_copy = true;
    } else if (sym.kind == SymbolKind::character) {
      pred.lemma += sym.text;
    }
    // Other specials (PAD/BOS) contribute nothing; a trained model does not
    // emit them.
  }
  return pred;
}

// Beam-search decoder view over a frozen model and one encoded input.
struct ModelDecoder {
  const Seq2SeqModel* model;
  const EncoderOutput* enc;

  using State = DecoderState;

  struct Step {
    std::vector<double> log_probs;
    std::vector<double> attention;
    State state;
  };

  State start() const { return initial_decoder_state(*model, *enc); }

  Step step(const State& s, int prev_id) const {
    DecodeStepOutput o = decode_step(*model, *enc, s, prev_id);
    Step r;
    r.log_probs.assign(o.log_probs.data(), o.log_probs.data() + o.log_probs.size());
    r.attention.assign(o.attention.data(), o.attention.data() + o.attention.size());
    r.state = std::move(o.state);
    return r;
  }

  int bos_id() const { return Vocabulary::kBos; }
  int eos_id() const { return Vocabulary::kEos; }
};

inline int lemmatize_max_len(const std::string& form) {
  return std::max<int>(2 * static_cast<int>(utf8_length(form)) + 8, 16);
}

inline LemmaPrediction lemmatize_token(const Seq2SeqModel& m, const Token& t, int beam_size = 0) {
  TrainingExample ex = encode_example(t);
  std::vector<int> input_ids = ids_of(ex.input, m.input_vocab);
  EncoderOutput enc = encode(m, input_ids);
  ModelDecoder dec{&m, &enc};
  if (beam_size <= 0) beam_size = m.hyper.beam_size;
  auto hyps = beam_search(dec, beam_size, lemmatize_max_len(t.form));
  return replace_unks(hyps.front(), ex.input, m.output_vocab);
}

}  // namespace ulem
