#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulem/codec.hpp"
#include "ulem/model.hpp"
#include "ulem/optim.hpp"
#include "ulem/tensor.hpp"

namespace ulem {

namespace detail {

// Minibatch in t-major layout: row t*B+b of a stacked matrix belongs to
// timestep t of example b.
struct BatchData {
  long B = 0, Tin = 0, Tout = 0;
  std::vector<int> enc_ids;             // Tin*B, PAD-filled
  std::vector<Mat> enc_mask;            // per t: [B x 1], 1 inside sequence
  Mat att_mask;                         // [B x Tin], 0 valid / -1e30 padded
  std::vector<int> dec_in_ids;          // Tout*B, BOS then shifted targets
  std::vector<int> targets;             // Tout*B
  std::vector<double> target_weights;   // Tout*B
  std::size_t target_chars = 0;
};

inline BatchData make_batch(const Seq2SeqModel& m, const std::vector<const TrainingExample*>& exs) {
  BatchData bd;
  bd.B = static_cast<long>(exs.size());
  std::vector<std::vector<int>> in_ids(exs.size()), out_ids(exs.size());
  for (std::size_t i = 0; i < exs.size(); ++i) {
    if (exs[i]->input.empty()) throw std::invalid_argument("make_batch: example with empty input");
    if (exs[i]->output.empty()) throw std::invalid_argument("make_batch: example with empty output");
    in_ids[i] = ids_of(exs[i]->input, m.input_vocab);
    out_ids[i] = ids_of(exs[i]->output, m.output_vocab);
    bd.Tin = std::max(bd.Tin, static_cast<long>(in_ids[i].size()));
    bd.Tout = std::max(bd.Tout, static_cast<long>(out_ids[i].size()));
  }

  bd.enc_ids.assign(static_cast<std::size_t>(bd.Tin * bd.B), Vocabulary::kPad);
  bd.att_mask = Mat::Zero(bd.B, bd.Tin);
  bd.enc_mask.reserve(static_cast<std::size_t>(bd.Tin));
  for (long t = 0; t < bd.Tin; ++t) {
    Mat mask = Mat::Zero(bd.B, 1);
    for (long b = 0; b < bd.B; ++b) {
      const auto& ids = in_ids[static_cast<std::size_t>(b)];
      if (t < static_cast<long>(ids.size())) {
        bd.enc_ids[static_cast<std::size_t>(t * bd.B + b)] = ids[static_cast<std::size_t>(t)];
        mask(b, 0) = 1.0;
      } else {
        bd.att_mask(b, t) = -1e30;
      }
    }
    bd.enc_mask.push_back(std::move(mask));
  }

  bd.dec_in_ids.assign(static_cast<std::size_t>(bd.Tout * bd.B), Vocabulary::kPad);
  bd.targets.assign(static_cast<std::size_t>(bd.Tout * bd.B), Vocabulary::kPad);
  bd.target_weights.assign(static_cast<std::size_t>(bd.Tout * bd.B), 0.0);
  for (long b = 0; b < bd.B; ++b) {
    const auto& ids = out_ids[static_cast<std::size_t>(b)];
    bd.target_chars += ids.size();
    for (long t = 0; t < static_cast<long>(ids.size()); ++t) {
      bd.dec_in_ids[static_cast<std::size_t>(t * bd.B + b)] =
          t == 0 ? Vocabulary::kBos : ids[static_cast<std::size_t>(t - 1)];
      bd.targets[static_cast<std::size_t>(t * bd.B + b)] = ids[static_cast<std::size_t>(t)];
      bd.target_weights[static_cast<std::size_t>(t * bd.B + b)] = 1.0;
    }
  }
  return bd;
}

struct BatchForward {
  int loss = -1;
  std::vector<int> step_logits;  // node per decoder step, [B x Vout]
};

// Teacher-forced forward over one minibatch. Encoder state updates are masked
// so padded tails never touch the final states; attention over padded
// positions is pushed to exactly zero by the additive mask.
inline BatchForward build_teacher_forced(Graph& g, Seq2SeqModel& m, const BatchData& bd) {
  const long B = bd.B, Tin = bd.Tin, Tout = bd.Tout;
  const long E = m.hyper.embedding_dim, H = m.hyper.hidden_dim;
  const double p = m.hyper.dropout;

  auto run_enc_layer = [&](LstmCell& cellp, int xw, bool reverse,
                           std::vector<int>& hs, int& fin_h, int& fin_c) {
    int wh = g.param(cellp.Wh);
    int h = g.constant(Mat::Zero(B, H));
    int c = g.constant(Mat::Zero(B, H));
    hs.assign(static_cast<std::size_t>(Tin), -1);
    for (long s = 0; s < Tin; ++s) {
      long t = reverse ? Tin - 1 - s : s;
      int z = g.add(g.slice_rows(xw, t * B, B), g.matmul(h, wh));
      int gi = g.sigmoid(g.slice_cols(z, 0, H));
      int gf = g.sigmoid(g.slice_cols(z, H, H));
      int gg = g.tanh_(g.slice_cols(z, 2 * H, H));
      int go = g.sigmoid(g.slice_cols(z, 3 * H, H));
      int c_cand = g.add(g.mul(gf, c), g.mul(gi, gg));
      int h_cand = g.mul(go, g.tanh_(c_cand));
      c = g.select_rows(c_cand, c, bd.enc_mask[static_cast<std::size_t>(t)]);
      h = g.select_rows(h_cand, h, bd.enc_mask[static_cast<std::size_t>(t)]);
      hs[static_cast<std::size_t>(t)] = h;
    }
    fin_h = h;
    fin_c = c;
  };

  // Layer 1: embed all timesteps at once, one GEMM per direction.
  int emb1 = g.embed(m.in_embed, bd.enc_ids);  // [Tin*B x E]
  int xw1f = g.add_rowvec(g.matmul(emb1, g.param(m.enc1_fwd.Wx)), g.param(m.enc1_fwd.b));
  int xw1b = g.add_rowvec(g.matmul(emb1, g.param(m.enc1_bwd.Wx)), g.param(m.enc1_bwd.b));
  std::vector<int> h1f, h1b;
  int h1f_fin, c1f_fin, h1b_fin, c1b_fin;
  run_enc_layer(m.enc1_fwd, xw1f, false, h1f, h1f_fin, c1f_fin);
  run_enc_layer(m.enc1_bwd, xw1b, true, h1b, h1b_fin, c1b_fin);

  // Layer 2 input: per-step [h_fwd | h_bwd] stacked, dropout between layers.
  std::vector<int> l1(static_cast<std::size_t>(Tin));
  for (long t = 0; t < Tin; ++t)
    l1[static_cast<std::size_t>(t)] =
        g.concat_cols(h1f[static_cast<std::size_t>(t)], h1b[static_cast<std::size_t>(t)]);
  int x2 = g.dropout(g.concat_rows(l1), p);  // [Tin*B x 2H]
  int xw2f = g.add_rowvec(g.matmul(x2, g.param(m.enc2_fwd.Wx)), g.param(m.enc2_fwd.b));
  int xw2b = g.add_rowvec(g.matmul(x2, g.param(m.enc2_bwd.Wx)), g.param(m.enc2_bwd.b));
  std::vector<int> h2f, h2b;
  int h2f_fin, c2f_fin, h2b_fin, c2b_fin;
  run_enc_layer(m.enc2_fwd, xw2f, false, h2f, h2f_fin, c2f_fin);
  run_enc_layer(m.enc2_bwd, xw2b, true, h2b, h2b_fin, c2b_fin);

  std::vector<int> top(static_cast<std::size_t>(Tin));
  for (long t = 0; t < Tin; ++t)
    top[static_cast<std::size_t>(t)] =
        g.concat_cols(h2f[static_cast<std::size_t>(t)], h2b[static_cast<std::size_t>(t)]);
  std::vector<int>& ann_t = top;  // raw [B x 2H] annotations per step

  int dh1 = g.matmul(g.concat_cols(h1f_fin, h1b_fin), g.param(m.init_h1));
  int dc1 = g.matmul(g.concat_cols(c1f_fin, c1b_fin), g.param(m.init_c1));
  int dh2 = g.matmul(g.concat_cols(h2f_fin, h2b_fin), g.param(m.init_h2));
  int dc2 = g.matmul(g.concat_cols(c2f_fin, c2b_fin), g.param(m.init_c2));

  // Decoder with input feeding.
  int demb = g.embed(m.out_embed, bd.dec_in_ids);  // [Tout*B x E]
  int dec1_wx = g.param(m.dec1.Wx);
  int dec1_wh = g.param(m.dec1.Wh);
  int dec1_b = g.param(m.dec1.b);
  int dec2_wx = g.param(m.dec2.Wx);
  int dec2_wh = g.param(m.dec2.Wh);
  int dec2_b = g.param(m.dec2.b);
  int att_w = g.param(m.att_w);
  int att_combine = g.param(m.att_combine);
  int out_w = g.param(m.out_w);
  int out_b = g.param(m.out_b);
  int att_mask = g.constant(bd.att_mask);

  auto lstm_step = [&](int wx, int wh, int b, int x, int& h, int& c) {
    int z = g.add_rowvec(g.add(g.matmul(x, wx), g.matmul(h, wh)), b);
    int gi = g.sigmoid(g.slice_cols(z, 0, H));
    int gf = g.sigmoid(g.slice_cols(z, H, H));
    int gg = g.tanh_(g.slice_cols(z, 2 * H, H));
    int go = g.sigmoid(g.slice_cols(z, 3 * H, H));
    c = g.add(g.mul(gf, c), g.mul(gi, gg));
    h = g.mul(go, g.tanh_(c));
  };

  int h1 = dh1, c1 = dc1, h2 = dh2, c2 = dc2;
  int feed = g.constant(Mat::Zero(B, H));
  BatchForward fw;
  fw.step_logits.reserve(static_cast<std::size_t>(Tout));
  for (long t = 0; t < Tout; ++t) {
    int x = g.concat_cols(g.slice_rows(demb, t * B, B), feed);
    lstm_step(dec1_wx, dec1_wh, dec1_b, x, h1, c1);
    int x2d = g.dropout(h1, p);
    lstm_step(dec2_wx, dec2_wh, dec2_b, x2d, h2, c2);

    int q = g.matmul(h2, att_w);  // [B x 2H]
    int scores = -1;
    for (long s = 0; s < Tin; ++s) {
      int sc = g.rowsum(g.mul(q, ann_t[static_cast<std::size_t>(s)]));  // [B x 1]
      scores = (s == 0) ? sc : g.concat_cols(scores, sc);
    }
    int weights = g.softmax_rows(g.add(scores, att_mask));  // [B x Tin]
    int ctx = -1;
    for (long s = 0; s < Tin; ++s) {
      int piece = g.colbroadcast_mul(ann_t[static_cast<std::size_t>(s)], g.slice_cols(weights, s, 1));
      ctx = (s == 0) ? piece : g.add(ctx, piece);
    }
    int hat = g.tanh_(g.matmul(g.concat_cols(ctx, h2), att_combine));
    feed = hat;
    fw.step_logits.push_back(g.add_rowvec(g.matmul(hat, out_w), out_b));
  }

  fw.loss = g.cross_entropy(g.concat_rows(fw.step_logits), bd.targets, bd.target_weights);
  return fw;
}

}  // namespace detail

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  bool dev_evaluated = false;
};

struct TrainOptions {
  // Sentence count of the source treebank, for the batch-size rule. Zero
  // falls back to the training example count.
  std::size_t source_sentence_count = 0;
  std::ostream* live_log = nullptr;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 1-based
  double best_dev_accuracy = 0.0;
  bool dev_fallback_to_final = false;
};

inline std::string format_epoch_log(const EpochLog& e) {
  char buf[160];
  if (e.dev_evaluated) {
    std::snprintf(buf, sizeof(buf), "epoch=%d lr=%.9g loss=%.6f dev_acc=%.4f", e.epoch, e.lr,
                  e.train_loss, e.dev_accuracy);
  } else {
    std::snprintf(buf, sizeof(buf), "epoch=%d lr=%.9g loss=%.6f", e.epoch, e.lr, e.train_loss);
  }
  return buf;
}

// Greedy decode used for per-epoch model selection.
inline std::vector<int> greedy_decode(const Seq2SeqModel& m, const std::vector<int>& input_ids,
                                      int max_len) {
  EncoderOutput enc = encode(m, input_ids);
  DecoderState st = initial_decoder_state(m, enc);
  std::vector<int> out;
  int prev = Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    DecodeStepOutput so = decode_step(m, enc, st, prev);
    int best = 0;
    for (int i = 1; i < so.log_probs.size(); ++i)
      if (so.log_probs(i) > so.log_probs(best)) best = i;
    if (best == Vocabulary::kEos) break;
    out.push_back(best);
    st = std::move(so.state);
    prev = best;
  }
  return out;
}

// Fraction of dev examples whose greedy decode reproduces the target
// character ids exactly (EOS excluded).
inline double dev_exact_match(const Seq2SeqModel& m, const std::vector<TrainingExample>& dev) {
  if (dev.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : dev) {
    std::vector<int> in = ids_of(ex.input, m.input_vocab);
    std::vector<int> want = ids_of(ex.output, m.output_vocab);
    if (!want.empty() && want.back() == Vocabulary::kEos) want.pop_back();
    int max_len = static_cast<int>(want.size()) * 2 + 8;
    if (greedy_decode(m, in, max_len) == want) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dev.size());
}

// Teacher-forced training with per-epoch shuffling, learning-rate decay, and
// dev-based snapshot selection (ties keep the earlier epoch).
inline TrainResult train(Seq2SeqModel& m, const std::vector<TrainingExample>& train_examples,
                         const std::vector<TrainingExample>& dev, const TrainOptions& opt = {}) {
  if (train_examples.empty()) throw std::invalid_argument("train: no training examples");
  m.hyper.validate();

  std::size_t sentences = opt.source_sentence_count ? opt.source_sentence_count
                                                    : train_examples.size();
  const int batch_size = m.hyper.batch_size > 0 ? m.hyper.batch_size
                                                : batch_size_for_sentence_count(sentences);

  std::vector<Parameter*> params = m.parameters();
  Rng rng(m.hyper.seed);
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult res;
  std::vector<Mat> best_snapshot;
  for (int epoch = 1; epoch <= m.hyper.epochs; ++epoch) {
    double lr = lr_at_epoch(m.hyper, epoch);
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t char_count = 0;
    for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(batch_size)) {
      std::vector<const TrainingExample*> chunk;
      for (std::size_t i = off; i < std::min(order.size(), off + static_cast<std::size_t>(batch_size)); ++i)
        chunk.push_back(&train_examples[order[i]]);
      detail::BatchData bd = detail::make_batch(m, chunk);

      Graph g(true, rng.next_u64());
      detail::BatchForward fw = detail::build_teacher_forced(g, m, bd);
      double batch_loss = g.value(fw.loss)(0, 0);
      loss_sum += batch_loss * static_cast<double>(bd.target_chars);
      char_count += bd.target_chars;
      g.backward(fw.loss);
      clip_gradients(params, 5.0);
      adam_step(params, lr);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = char_count ? loss_sum / static_cast<double>(char_count) : 0.0;
    if (!dev.empty()) {
      log.dev_accuracy = dev_exact_match(m, dev);
      log.dev_evaluated = true;
      if (res.best_epoch == 0 || log.dev_accuracy > res.best_dev_accuracy) {
        res.best_epoch = epoch;
        res.best_dev_accuracy = log.dev_accuracy;
        best_snapshot.clear();
        for (Parameter* p : params) best_snapshot.push_back(p->value);
      }
    }
    res.epochs.push_back(log);
    if (opt.live_log) (*opt.live_log) << format_epoch_log(log) << "\n";
  }

  if (dev.empty()) {
    res.dev_fallback_to_final = true;
    res.best_epoch = m.hyper.epochs;
  } else if (!best_snapshot.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_snapshot[i];
  }
  return res;
}

}  // namespace ulem
