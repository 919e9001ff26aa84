#pragma once

#include <cmath>
#include <vector>

#include "ulem/rng.hpp"
#include "ulem/tensor.hpp"

namespace ulem {

inline double round_to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

// Parameter values stay float32-representable at all times so that the
// float32 model file round-trips without changing a single prediction.
inline void quantize_f32(Mat& m) {
  m = m.unaryExpr([](double x) { return round_to_f32(x); });
}

inline Mat uniform_init(long rows, long cols, Rng& rng, double limit = 0.1) {
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = round_to_f32(rng.uniform_real(-limit, limit));
  return m;
}

inline double global_grad_norm(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

// Global-norm clipping; unclipped recurrent training at this depth diverges.
inline double clip_gradients(const std::vector<Parameter*>& params, double max_norm = 5.0) {
  double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

// Standard Adam with bias correction. Clears gradients afterwards.
inline void adam_step(const std::vector<Parameter*>& params, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  for (Parameter* p : params) {
    p->step += 1;
    double t = static_cast<double>(p->step);
    p->adam_m = beta1 * p->adam_m + (1.0 - beta1) * p->grad;
    p->adam_v = beta2 * p->adam_v.array() + (1.0 - beta2) * p->grad.array().square();
    double mc = 1.0 - std::pow(beta1, t);
    double vc = 1.0 - std::pow(beta2, t);
    p->value.array() -=
        lr * (p->adam_m.array() / mc) / ((p->adam_v.array() / vc).sqrt() + eps);
    quantize_f32(p->value);
    p->zero_grad();
  }
}

}  // namespace ulem
