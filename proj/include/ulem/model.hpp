#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/codec.hpp"
#include "ulem/optim.hpp"
#include "ulem/rng.hpp"
#include "ulem/tensor.hpp"

namespace ulem {

struct HyperParams {
  int embedding_dim = 500;
  int hidden_dim = 500;
  double dropout = 0.3;
  double lr = 0.0005;
  double lr_decay = 0.9;
  int decay_start_epoch = 20;
  int epochs = 50;
  int batch_size = 0;  // 0 = derive from the source treebank sentence count
  int beam_size = 5;
  std::uint64_t seed = 1;
  std::uint64_t min_frequency = 2;

  void validate() const {
    if (embedding_dim <= 0 || hidden_dim <= 0) throw std::invalid_argument("dims must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (lr_decay <= 0.0 || lr_decay > 1.0) throw std::invalid_argument("lr_decay must be in (0, 1]");
    if (epochs <= 0 || beam_size <= 0) throw std::invalid_argument("epochs/beam_size must be positive");
  }
};

// Default minibatch is 64; smaller treebanks get more updates per epoch.
inline int batch_size_for_sentence_count(std::size_t sentences) {
  if (sentences < 200) return 6;
  if (sentences < 2000) return 32;
  return 64;
}

// 1-based epochs; the decay multiplies once per epoch past decay_start_epoch.
inline double lr_at_epoch(const HyperParams& hp, int epoch) {
  int k = epoch - hp.decay_start_epoch;
  if (k <= 0) return hp.lr;
  return hp.lr * std::pow(hp.lr_decay, k);
}

// Gate layout inside the fused 4H dimension: [input | forget | cell | output].
struct LstmCell {
  Parameter Wx;  // [in x 4H]
  Parameter Wh;  // [H x 4H]
  Parameter b;   // [1 x 4H]
};

// Two bidirectional encoder layers, two unidirectional decoder layers with
// input-feeding attention, bilinear attention scores over the raw
// concatenated top-layer annotations.
struct Seq2SeqModel {
  HyperParams hyper;
  Vocabulary input_vocab;
  Vocabulary output_vocab;

  Parameter in_embed;              // [Vin x E]
  LstmCell enc1_fwd, enc1_bwd;     // in = E
  LstmCell enc2_fwd, enc2_bwd;     // in = 2H
  Parameter init_h1, init_c1;      // [2H x H] decoder state init from encoder finals
  Parameter init_h2, init_c2;      // [2H x H]
  Parameter out_embed;             // [Vout x E]
  LstmCell dec1;                   // in = E + H (embedding + input feed)
  LstmCell dec2;                   // in = H
  Parameter att_w;                 // [H x 2H] bilinear score against raw annotations
  Parameter att_combine;           // [3H x H] tanh(W [context; h2])
  Parameter out_w;                 // [H x Vout]
  Parameter out_b;                 // [1 x Vout]

  std::vector<Parameter*> parameters() {
    return {&in_embed,
            &enc1_fwd.Wx, &enc1_fwd.Wh, &enc1_fwd.b,
            &enc1_bwd.Wx, &enc1_bwd.Wh, &enc1_bwd.b,
            &enc2_fwd.Wx, &enc2_fwd.Wh, &enc2_fwd.b,
            &enc2_bwd.Wx, &enc2_bwd.Wh, &enc2_bwd.b,
            &init_h1, &init_c1, &init_h2, &init_c2,
            &out_embed,
            &dec1.Wx, &dec1.Wh, &dec1.b,
            &dec2.Wx, &dec2.Wh, &dec2.b,
            &att_w, &att_combine, &out_w, &out_b};
  }

  std::vector<const Parameter*> parameters() const {
    auto ps = const_cast<Seq2SeqModel*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  static Seq2SeqModel create(HyperParams hp, Vocabulary input_vocab, Vocabulary output_vocab) {
    hp.validate();
    Seq2SeqModel m;
    m.hyper = hp;
    m.input_vocab = std::move(input_vocab);
    m.output_vocab = std::move(output_vocab);
    const long E = hp.embedding_dim, H = hp.hidden_dim;
    const long Vin = m.input_vocab.size(), Vout = m.output_vocab.size();
    Rng rng(hp.seed);

    auto mat = [&](std::string name, long r, long c) { return Parameter(std::move(name), uniform_init(r, c, rng)); };
    auto cell = [&](const std::string& name, long in_dim) {
      LstmCell c;
      c.Wx = mat(name + ".Wx", in_dim, 4 * H);
      c.Wh = mat(name + ".Wh", H, 4 * H);
      Mat b = uniform_init(1, 4 * H, rng);
      b.middleCols(H, H).setOnes();  // forget gate bias 1.0
      c.b = Parameter(name + ".b", std::move(b));
      return c;
    };

    m.in_embed = mat("in_embed", Vin, E);
    m.enc1_fwd = cell("enc1_fwd", E);
    m.enc1_bwd = cell("enc1_bwd", E);
    m.enc2_fwd = cell("enc2_fwd", 2 * H);
    m.enc2_bwd = cell("enc2_bwd", 2 * H);
    m.init_h1 = mat("init_h1", 2 * H, H);
    m.init_c1 = mat("init_c1", 2 * H, H);
    m.init_h2 = mat("init_h2", 2 * H, H);
    m.init_c2 = mat("init_c2", 2 * H, H);
    m.out_embed = mat("out_embed", Vout, E);
    m.dec1 = cell("dec1", E + H);
    m.dec2 = cell("dec2", H);
    m.att_w = mat("att_w", H, 2 * H);
    m.att_combine = mat("att_combine", 3 * H, H);
    m.out_w = mat("out_w", H, Vout);
    m.out_b = mat("out_b", 1, Vout);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Eval-mode forward path (no tape). Deterministic; dropout is inactive.

namespace detail {

using Row = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

inline void lstm_step_eval(const LstmCell& cell, const Row& x, Row& h, Row& c) {
  const long H = cell.Wh.value.rows();
  Row z = x * cell.Wx.value + h * cell.Wh.value + cell.b.value;
  Row i = (1.0 / (1.0 + (-z.leftCols(H).array()).exp())).matrix();
  Row f = (1.0 / (1.0 + (-z.middleCols(H, H).array()).exp())).matrix();
  Row g = z.middleCols(2 * H, H).array().tanh().matrix();
  Row o = (1.0 / (1.0 + (-z.rightCols(H).array()).exp())).matrix();
  c = (f.array() * c.array() + i.array() * g.array()).matrix();
  h = (o.array() * c.array().tanh()).matrix();
}

}  // namespace detail

struct EncoderOutput {
  Mat annotations;  // [Tin x 2H], concatenated top-layer bidirectional states
  Mat init_h1, init_c1, init_h2, init_c2;  // [1 x H]

  long length() const { return annotations.rows(); }
};

inline EncoderOutput encode(const Seq2SeqModel& m, const std::vector<int>& input_ids) {
  if (input_ids.empty()) throw std::invalid_argument("encode: empty input");
  using detail::Row;
  const long T = static_cast<long>(input_ids.size());
  const long E = m.hyper.embedding_dim, H = m.hyper.hidden_dim;

  Mat X(T, E);
  for (long t = 0; t < T; ++t) {
    int id = input_ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= m.in_embed.value.rows())
      throw std::out_of_range("encode: input id out of vocabulary");
    X.row(t) = m.in_embed.value.row(id);
  }

  auto run_layer = [&](const LstmCell& cell, const Mat& in, bool reverse, Row& fin_h, Row& fin_c) {
    Mat out(in.rows(), H);
    Row h = Row::Zero(H), c = Row::Zero(H);
    for (long s = 0; s < in.rows(); ++s) {
      long t = reverse ? in.rows() - 1 - s : s;
      Row x = in.row(t);
      detail::lstm_step_eval(cell, x, h, c);
      out.row(t) = h;
    }
    fin_h = h;
    fin_c = c;
    return out;
  };

  Row h1f, c1f, h1b, c1b, h2f, c2f, h2b, c2b;
  Mat f1 = run_layer(m.enc1_fwd, X, false, h1f, c1f);
  Mat b1 = run_layer(m.enc1_bwd, X, true, h1b, c1b);
  Mat l1(T, 2 * H);
  l1.leftCols(H) = f1;
  l1.rightCols(H) = b1;
  Mat f2 = run_layer(m.enc2_fwd, l1, false, h2f, c2f);
  Mat b2 = run_layer(m.enc2_bwd, l1, true, h2b, c2b);
  Mat top(T, 2 * H);
  top.leftCols(H) = f2;
  top.rightCols(H) = b2;

  EncoderOutput enc;
  enc.annotations = std::move(top);

  auto cat = [&](const Row& a, const Row& b) {
    Row r(2 * H);
    r.leftCols(H) = a;
    r.rightCols(H) = b;
    return r;
  };
  enc.init_h1 = cat(h1f, h1b) * m.init_h1.value;
  enc.init_c1 = cat(c1f, c1b) * m.init_c1.value;
  enc.init_h2 = cat(h2f, h2b) * m.init_h2.value;
  enc.init_c2 = cat(c2f, c2b) * m.init_c2.value;
  return enc;
}

struct AttentionResult {
  Eigen::RowVectorXd context;  // [1 x 2H]
  Eigen::RowVectorXd weights;  // [1 x Tin], nonnegative, sums to 1
};

// Bilinear attention: score_t = state . W . annotation_t, softmax over t.
inline AttentionResult attend(const Seq2SeqModel& m, const Eigen::RowVectorXd& decoder_state,
                              const EncoderOutput& enc) {
  Eigen::RowVectorXd q = decoder_state * m.att_w.value;
  Eigen::VectorXd scores = enc.annotations * q.transpose();
  double mx = scores.maxCoeff();
  Eigen::VectorXd w = (scores.array() - mx).exp();
  w /= w.sum();
  AttentionResult r;
  r.weights = w.transpose();
  r.context = w.transpose() * enc.annotations;
  return r;
}

struct DecoderState {
  detail::Row h1, c1, h2, c2, feed;
};

inline DecoderState initial_decoder_state(const Seq2SeqModel& m, const EncoderOutput& enc) {
  DecoderState s;
  s.h1 = enc.init_h1;
  s.c1 = enc.init_c1;
  s.h2 = enc.init_h2;
  s.c2 = enc.init_c2;
  s.feed = detail::Row::Zero(m.hyper.hidden_dim);
  return s;
}

struct DecodeStepOutput {
  Eigen::RowVectorXd log_probs;  // [1 x Vout]
  Eigen::RowVectorXd attention;  // [1 x Tin]
  DecoderState state;
};

inline DecodeStepOutput decode_step(const Seq2SeqModel& m, const EncoderOutput& enc,
                                    const DecoderState& prev, int prev_output_id) {
  using detail::Row;
  const long E = m.hyper.embedding_dim, H = m.hyper.hidden_dim;
  if (prev_output_id < 0 || prev_output_id >= m.out_embed.value.rows())
    throw std::out_of_range("decode_step: output id out of vocabulary");

  DecoderState s = prev;
  Row x(E + H);
  x.leftCols(E) = m.out_embed.value.row(prev_output_id);
  x.rightCols(H) = prev.feed;
  detail::lstm_step_eval(m.dec1, x, s.h1, s.c1);
  Row x2 = s.h1;
  detail::lstm_step_eval(m.dec2, x2, s.h2, s.c2);

  AttentionResult att = attend(m, s.h2, enc);
  Row combined(3 * H);
  combined.leftCols(2 * H) = att.context;
  combined.rightCols(H) = s.h2;
  Row hat = (combined * m.att_combine.value).array().tanh().matrix();
  s.feed = hat;

  Eigen::RowVectorXd logits = hat * m.out_w.value + m.out_b.value;
  double mx = logits.maxCoeff();
  double lse = mx + std::log((logits.array() - mx).exp().sum());

  DecodeStepOutput out;
  out.log_probs = logits.array() - lse;
  out.attention = att.weights;
  out.state = std::move(s);
  return out;
}

}  // namespace ulem
