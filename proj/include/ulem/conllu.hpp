#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ulem/util.hpp"

namespace ulem {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line_no)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

// Morphological features as (category, value) pairs, kept strictly sorted by
// category. Categories are unique within one token.
using Feats = std::vector<std::pair<std::string, std::string>>;

struct Token {
  int id = 0;
  std::string form;
  std::optional<std::string> lemma;
  std::string upos;                  // stored verbatim; "_" is the placeholder value
  std::optional<std::string> xpos;
  Feats feats;
  // HEAD, DEPREL, DEPS, MISC preserved verbatim for round-tripping.
  std::array<std::string, 4> misc_columns{"_", "_", "_", "_"};

  bool operator==(const Token&) const = default;
};

// Multiword ranges ("1-2") and empty nodes ("5.1") are carried verbatim and
// excluded from lemmatization. `anchor` is the number of word tokens that
// precede the row inside its sentence.
struct ExtraRow {
  enum class Kind { multiword, empty_node };
  Kind kind = Kind::multiword;
  std::size_t anchor = 0;
  int start = 0, end = 0;   // multiword only
  std::string surface;      // multiword only
  std::string raw;

  bool operator==(const ExtraRow&) const = default;
};

struct Sentence {
  std::vector<std::string> comments;  // verbatim lines including leading '#'
  std::vector<Token> tokens;
  std::vector<ExtraRow> extras;

  bool operator==(const Sentence&) const = default;
};

struct Treebank {
  std::vector<Sentence> sentences;
  std::string source_name;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
  }

  bool operator==(const Treebank&) const = default;
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline int parse_int(std::string_view s, std::size_t line_no) {
  try {
    return std::stoi(std::string(s));
  } catch (const std::exception&) {
    throw ParseError("integer out of range '" + std::string(s) + "'", line_no);
  }
}

inline Feats parse_feats(std::string_view field, std::size_t line_no) {
  Feats feats;
  if (field == "_") return feats;
  for (std::string_view part : split(field, '|')) {
    std::size_t eq = part.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ParseError("malformed FEATS entry '" + std::string(part) + "'", line_no);
    feats.emplace_back(std::string(part.substr(0, eq)), std::string(part.substr(eq + 1)));
  }
  std::sort(feats.begin(), feats.end());
  for (std::size_t i = 1; i < feats.size(); ++i) {
    if (feats[i].first == feats[i - 1].first)
      throw ParseError("duplicate FEATS category '" + feats[i].first + "'", line_no);
  }
  return feats;
}

}  // namespace detail

inline std::string feats_to_string(const Feats& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (i) out += '|';
    out += feats[i].first;
    out += '=';
    out += feats[i].second;
  }
  return out;
}

// Parses one 10-column token row. Exposed so that line-oriented consumers
// (the predict subcommand) can share the exact parsing rules.
inline Token parse_token_row(const std::vector<std::string_view>& cols, std::size_t line_no) {
  Token t;
  t.id = detail::parse_int(cols[0], line_no);
  t.form = std::string(cols[1]);
  if (t.form.empty()) throw ParseError("empty FORM column", line_no);
  if (cols[2] != "_") t.lemma = std::string(cols[2]);
  t.upos = std::string(cols[3]);
  if (cols[4] != "_") t.xpos = std::string(cols[4]);
  t.feats = detail::parse_feats(cols[5], line_no);
  for (int i = 0; i < 4; ++i) t.misc_columns[i] = std::string(cols[6 + i]);
  return t;
}

inline Treebank parse_conllu(std::string_view text, std::string source_name = "") {
  Treebank tb;
  tb.source_name = std::move(source_name);
  Sentence cur;
  std::size_t line_no = 0;
  bool sentence_open = false;

  auto flush = [&](std::size_t at_line) {
    if (!sentence_open) return;
    if (cur.tokens.empty() && cur.extras.empty())
      throw ParseError("sentence without token rows", at_line);
    for (std::size_t i = 0; i < cur.tokens.size(); ++i) {
      if (cur.tokens[i].id != static_cast<int>(i) + 1)
        throw ParseError("token ids are not 1..n consecutive", at_line);
    }
    tb.sentences.push_back(std::move(cur));
    cur = Sentence{};
    sentence_open = false;
  };

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = (nl == std::string_view::npos)
                                ? text.substr(start)
                                : text.substr(start, nl - start);
    bool last = (nl == std::string_view::npos);
    ++line_no;

    if (line.empty()) {
      flush(line_no);
    } else if (line[0] == '#') {
      cur.comments.emplace_back(line);
      sentence_open = true;
    } else {
      auto cols = split(line, '\t');
      if (cols.size() != 10)
        throw ParseError("expected 10 tab-separated columns, got " + std::to_string(cols.size()),
                         line_no);
      std::string_view id = cols[0];
      if (detail::all_digits(id)) {
        cur.tokens.push_back(parse_token_row(cols, line_no));
      } else if (id.find('-') != std::string_view::npos) {
        auto dash = id.find('-');
        if (!detail::all_digits(id.substr(0, dash)) || !detail::all_digits(id.substr(dash + 1)))
          throw ParseError("malformed multiword range id '" + std::string(id) + "'", line_no);
        ExtraRow row;
        row.kind = ExtraRow::Kind::multiword;
        row.anchor = cur.tokens.size();
        row.start = detail::parse_int(id.substr(0, dash), line_no);
        row.end = detail::parse_int(id.substr(dash + 1), line_no);
        row.surface = std::string(cols[1]);
        row.raw = std::string(line);
        cur.extras.push_back(std::move(row));
      } else if (id.find('.') != std::string_view::npos) {
        ExtraRow row;
        row.kind = ExtraRow::Kind::empty_node;
        row.anchor = cur.tokens.size();
        row.raw = std::string(line);
        cur.extras.push_back(std::move(row));
      } else {
        throw ParseError("malformed token id '" + std::string(id) + "'", line_no);
      }
      sentence_open = true;
    }

    if (last) break;
    start = nl + 1;
  }
  flush(line_no);
  return tb;
}

inline Treebank parse_conllu_file(const std::string& path) {
  return parse_conllu(read_file(path), path);
}

inline std::string emit_token(const Token& t) {
  std::string out = std::to_string(t.id);
  out += '\t';
  out += t.form;
  out += '\t';
  out += t.lemma ? *t.lemma : "_";
  out += '\t';
  out += t.upos;
  out += '\t';
  out += t.xpos ? *t.xpos : "_";
  out += '\t';
  out += feats_to_string(t.feats);
  for (const auto& col : t.misc_columns) {
    out += '\t';
    out += col;
  }
  return out;
}

inline std::string emit_conllu(const Treebank& tb) {
  std::string out;
  for (const auto& sent : tb.sentences) {
    for (const auto& c : sent.comments) {
      out += c;
      out += '\n';
    }
    std::size_t extra_idx = 0;
    for (std::size_t i = 0; i <= sent.tokens.size(); ++i) {
      while (extra_idx < sent.extras.size() && sent.extras[extra_idx].anchor == i) {
        out += sent.extras[extra_idx].raw;
        out += '\n';
        ++extra_idx;
      }
      if (i < sent.tokens.size()) {
        out += emit_token(sent.tokens[i]);
        out += '\n';
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace ulem
