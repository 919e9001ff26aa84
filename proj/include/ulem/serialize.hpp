#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ulem/model.hpp"
#include "ulem/util.hpp"

namespace ulem {

// Model file layout (all integers little-endian):
//   "ULEM" magic, u32 format version,
//   u64 header length + UTF-8 key=value lines (hyperparameters),
//   u64 + input vocabulary section, u64 + output vocabulary section,
//   u32 parameter count, then per parameter:
//     u32 name length + name, u32 ndim, u32 dims..., row-major f32 data.
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'U', 'L', 'E', 'M'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  std::string_view bytes(std::uint64_t n) {
    need(n);
    std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (pos_ + n > data_.size()) throw std::runtime_error("model file truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string render_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string render_header(const HyperParams& hp) {
  std::string h;
  h += "embedding_dim=" + std::to_string(hp.embedding_dim) + "\n";
  h += "hidden_dim=" + std::to_string(hp.hidden_dim) + "\n";
  h += "dropout=" + render_double(hp.dropout) + "\n";
  h += "lr=" + render_double(hp.lr) + "\n";
  h += "lr_decay=" + render_double(hp.lr_decay) + "\n";
  h += "decay_start_epoch=" + std::to_string(hp.decay_start_epoch) + "\n";
  h += "epochs=" + std::to_string(hp.epochs) + "\n";
  h += "batch_size=" + std::to_string(hp.batch_size) + "\n";
  h += "beam_size=" + std::to_string(hp.beam_size) + "\n";
  h += "seed=" + std::to_string(hp.seed) + "\n";
  h += "min_frequency=" + std::to_string(hp.min_frequency) + "\n";
  return h;
}

inline HyperParams parse_header(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (std::string_view line : split(text, '\n')) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("model header: malformed line '" + std::string(line) + "'");
    kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  auto want = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("model header: missing key ") + key);
    return it->second;
  };
  HyperParams hp;
  hp.embedding_dim = std::stoi(want("embedding_dim"));
  hp.hidden_dim = std::stoi(want("hidden_dim"));
  hp.dropout = std::stod(want("dropout"));
  hp.lr = std::stod(want("lr"));
  hp.lr_decay = std::stod(want("lr_decay"));
  hp.decay_start_epoch = std::stoi(want("decay_start_epoch"));
  hp.epochs = std::stoi(want("epochs"));
  hp.batch_size = std::stoi(want("batch_size"));
  hp.beam_size = std::stoi(want("beam_size"));
  hp.seed = std::stoull(want("seed"));
  hp.min_frequency = std::stoull(want("min_frequency"));
  return hp;
}

}  // namespace detail

inline std::string save_model_bytes(const Seq2SeqModel& m) {
  using namespace detail;
  std::string out;
  out.append(kModelMagic, 4);
  put_u32(out, kModelFormatVersion);

  std::string header = render_header(m.hyper);
  put_u64(out, header.size());
  out += header;

  std::string in_vocab = m.input_vocab.serialize();
  put_u64(out, in_vocab.size());
  out += in_vocab;
  std::string out_vocab = m.output_vocab.serialize();
  put_u64(out, out_vocab.size());
  out += out_vocab;

  auto params = m.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (long r = 0; r < p->value.rows(); ++r)
      for (long c = 0; c < p->value.cols(); ++c)
        put_f32(out, static_cast<float>(p->value(r, c)));
  }
  return out;
}

inline Seq2SeqModel load_model_bytes(std::string_view data) {
  using namespace detail;
  ByteReader rd(data);
  if (rd.bytes(4) != std::string_view(kModelMagic, 4))
    throw std::runtime_error("not a model file (bad magic)");
  std::uint32_t version = rd.u32();
  if (version != kModelFormatVersion)
    throw std::runtime_error("unsupported model format version " + std::to_string(version));

  HyperParams hp = parse_header(std::string(rd.bytes(rd.u64())));
  Vocabulary in_vocab = Vocabulary::deserialize(rd.bytes(rd.u64()), hp.min_frequency, true);
  Vocabulary out_vocab = Vocabulary::deserialize(rd.bytes(rd.u64()), hp.min_frequency, false);

  Seq2SeqModel m = Seq2SeqModel::create(hp, std::move(in_vocab), std::move(out_vocab));
  auto params = m.parameters();
  std::uint32_t count = rd.u32();
  if (count != params.size())
    throw std::runtime_error("model file has " + std::to_string(count) + " parameters, expected " +
                             std::to_string(params.size()));
  for (Parameter* p : params) {
    std::string name(rd.bytes(rd.u32()));
    if (name != p->name)
      throw std::runtime_error("model file parameter '" + name + "' does not match expected '" +
                               p->name + "'");
    std::uint32_t ndim = rd.u32();
    if (ndim != 2) throw std::runtime_error("parameter '" + name + "' has unsupported rank");
    std::uint32_t rows = rd.u32(), cols = rd.u32();
    if (rows != static_cast<std::uint32_t>(p->value.rows()) ||
        cols != static_cast<std::uint32_t>(p->value.cols()))
      throw std::runtime_error("parameter '" + name + "' shape mismatch");
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) p->value(r, c) = static_cast<double>(rd.f32());
    p->adam_m.setZero();
    p->adam_v.setZero();
    p->step = 0;
    p->zero_grad();
  }
  if (!rd.at_end()) throw std::runtime_error("model file has trailing bytes");
  return m;
}

inline void save_model_file(const Seq2SeqModel& m, const std::string& path) {
  write_file(path, save_model_bytes(m));
}

inline Seq2SeqModel load_model_file(const std::string& path) {
  return load_model_bytes(read_file(path));
}

}  // namespace ulem
