#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ulem/conllu.hpp"
#include "ulem/unicode.hpp"
#include "ulem/util.hpp"

namespace ulem {

enum class SymbolKind : std::uint8_t { character, tag, special };

struct Symbol {
  SymbolKind kind = SymbolKind::character;
  std::string text;

  auto operator<=>(const Symbol&) const = default;
};

inline Symbol char_symbol(std::string text) { return {SymbolKind::character, std::move(text)}; }
inline Symbol tag_symbol(std::string text) { return {SymbolKind::tag, std::move(text)}; }

// Special symbols. PAD and UNKTAG are artifact-internal: PAD fills minibatch
// slack, UNKTAG absorbs inference-time tag symbols never seen in training so
// that tag positions can never trigger the character copy mechanism.
inline const Symbol& sym_pad()     { static const Symbol s{SymbolKind::special, "PAD"}; return s; }
inline const Symbol& sym_bos()     { static const Symbol s{SymbolKind::special, "BOS"}; return s; }
inline const Symbol& sym_eos()     { static const Symbol s{SymbolKind::special, "EOS"}; return s; }
inline const Symbol& sym_unk()     { static const Symbol s{SymbolKind::special, "UNK"}; return s; }
inline const Symbol& sym_unktag()  { static const Symbol s{SymbolKind::special, "UNKTAG"}; return s; }
inline const Symbol& sym_autoenc() { static const Symbol s{SymbolKind::special, "AUTOENC"}; return s; }

enum class WeightGroup : std::uint8_t { gold, autoencoder, transducer };

inline std::string_view weight_group_name(WeightGroup g) {
  switch (g) {
    case WeightGroup::gold: return "gold";
    case WeightGroup::autoencoder: return "autoencoder";
    case WeightGroup::transducer: return "transducer";
  }
  return "gold";
}

struct TrainingExample {
  std::vector<Symbol> input;   // character symbols first, then tag symbols
  std::vector<Symbol> output;  // lemma characters, EOS-terminated; empty at inference
  WeightGroup group = WeightGroup::gold;

  bool operator==(const TrainingExample&) const = default;
};

// Input layout: word characters, then UPOS=…, XPOS=… when present, then one
// Cat=Val symbol per morphological feature pair in sorted order.
inline TrainingExample encode_example(const Token& t) {
  if (t.form.empty()) throw std::invalid_argument("encode_example: empty form");
  TrainingExample ex;
  for (auto& c : utf8_chars(t.form)) ex.input.push_back(char_symbol(std::move(c)));
  ex.input.push_back(tag_symbol("UPOS=" + t.upos));
  if (t.xpos) ex.input.push_back(tag_symbol("XPOS=" + *t.xpos));
  for (const auto& [cat, val] : t.feats) ex.input.push_back(tag_symbol(cat + "=" + val));
  if (t.lemma) {
    for (auto& c : utf8_chars(*t.lemma)) ex.output.push_back(char_symbol(std::move(c)));
    ex.output.push_back(sym_eos());
  }
  return ex;
}

class Vocabulary {
 public:
  // Fixed special ids; UNKTAG/AUTOENC only exist on the input side.
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  static Vocabulary build(const std::vector<const std::vector<Symbol>*>& sequences,
                          std::uint64_t min_frequency, bool input_side) {
    Vocabulary v;
    v.min_frequency_ = min_frequency;
    v.input_side_ = input_side;
    std::map<Symbol, std::uint64_t> freq;
    for (const auto* seq : sequences)
      for (const Symbol& s : *seq)
        if (s.kind != SymbolKind::special) ++freq[s];

    v.push(sym_pad(), 0);
    v.push(sym_bos(), 0);
    v.push(sym_eos(), 0);
    v.push(sym_unk(), 0);
    if (input_side) {
      v.push(sym_unktag(), 0);
      v.push(sym_autoenc(), 0);
    }
    // std::map iteration gives deterministic (kind, text) order.
    for (const auto& [sym, count] : freq) {
      if (sym.kind == SymbolKind::character && count < min_frequency) continue;
      v.push(sym, count);
    }
    return v;
  }

  int size() const { return static_cast<int>(symbols_.size()); }
  std::uint64_t min_frequency() const { return min_frequency_; }
  bool input_side() const { return input_side_; }

  // -1 when absent.
  int find(const Symbol& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? -1 : it->second;
  }

  // OOV characters map to UNK, OOV tags to UNKTAG.
  int id_of(const Symbol& s) const {
    int id = find(s);
    if (id >= 0) return id;
    if (s.kind == SymbolKind::tag) {
      int ut = find(sym_unktag());
      if (ut < 0) throw std::logic_error("vocabulary has no UNKTAG entry");
      return ut;
    }
    return kUnk;
  }

  const Symbol& symbol_of(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("symbol id out of range");
    return symbols_[static_cast<std::size_t>(id)];
  }

  std::uint64_t frequency_of(int id) const { return freqs_.at(static_cast<std::size_t>(id)); }

  std::string serialize() const {
    std::string out;
    for (int i = 0; i < size(); ++i) {
      const Symbol& s = symbols_[static_cast<std::size_t>(i)];
      out += kind_name(s.kind);
      out += '\t';
      out += s.text;
      out += '\t';
      out += std::to_string(i);
      out += '\t';
      out += std::to_string(freqs_[static_cast<std::size_t>(i)]);
      out += '\n';
    }
    return out;
  }

  static Vocabulary deserialize(std::string_view text, std::uint64_t min_frequency,
                                bool input_side) {
    Vocabulary v;
    v.min_frequency_ = min_frequency;
    v.input_side_ = input_side;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      auto cols = split(line, '\t');
      if (cols.size() != 4)
        throw std::runtime_error("vocabulary line " + std::to_string(line_no) +
                                 ": expected 4 columns");
      Symbol s{parse_kind(cols[0]), std::string(cols[1])};
      int id = std::stoi(std::string(cols[2]));
      if (id != v.size())
        throw std::runtime_error("vocabulary ids are not dense at line " + std::to_string(line_no));
      v.push(s, std::stoull(std::string(cols[3])));
    }
    if (v.find(sym_bos()) < 0 || v.find(sym_eos()) < 0 || v.find(sym_unk()) < 0)
      throw std::runtime_error("vocabulary is missing required special symbols");
    return v;
  }

 private:
  void push(const Symbol& s, std::uint64_t freq) {
    if (ids_.count(s)) throw std::logic_error("duplicate vocabulary symbol");
    ids_[s] = size();
    symbols_.push_back(s);
    freqs_.push_back(freq);
  }

  static std::string_view kind_name(SymbolKind k) {
    switch (k) {
      case SymbolKind::character: return "char";
      case SymbolKind::tag: return "tag";
      case SymbolKind::special: return "special";
    }
    return "char";
  }

  static SymbolKind parse_kind(std::string_view s) {
    if (s == "char") return SymbolKind::character;
    if (s == "tag") return SymbolKind::tag;
    if (s == "special") return SymbolKind::special;
    throw std::runtime_error("unknown symbol kind '" + std::string(s) + "'");
  }

  std::map<Symbol, int> ids_;
  std::vector<Symbol> symbols_;
  std::vector<std::uint64_t> freqs_;
  std::uint64_t min_frequency_ = 1;
  bool input_side_ = false;
};

struct VocabularyPair {
  Vocabulary input;
  Vocabulary output;
};

// Character symbols below min_frequency fall out of the vocabulary and map to
// UNK on re-encoding; tag symbols are always kept.
inline VocabularyPair build_vocabularies(const std::vector<TrainingExample>& examples,
                                         std::uint64_t min_frequency = 2) {
  if (examples.empty()) throw std::invalid_argument("build_vocabularies: no examples");
  std::vector<const std::vector<Symbol>*> ins, outs;
  ins.reserve(examples.size());
  outs.reserve(examples.size());
  for (const auto& ex : examples) {
    ins.push_back(&ex.input);
    outs.push_back(&ex.output);
  }
  return {Vocabulary::build(ins, min_frequency, true),
          Vocabulary::build(outs, min_frequency, false)};
}

inline std::vector<int> ids_of(const std::vector<Symbol>& seq, const Vocabulary& v) {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const Symbol& s : seq) out.push_back(v.id_of(s));
  return out;
}

inline std::vector<Symbol> symbols_of(const std::vector<int>& ids, const Vocabulary& v) {
  std::vector<Symbol> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(v.symbol_of(id));
  return out;
}

}  // namespace ulem
