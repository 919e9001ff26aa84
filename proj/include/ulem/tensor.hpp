#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ulem/rng.hpp"

namespace ulem {

// All tensors are dense 2-d row-major doubles. Vectors are 1xN or Nx1 as the
// operation requires; scalars are 1x1. Parameters are serialized as 32-bit
// floats, so adam_step keeps their values float32-representable.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tensor {
  Mat value;
  Mat grad;  // empty until backward touches this node

  std::vector<int> shape() const {
    return {static_cast<int>(value.rows()), static_cast<int>(value.cols())};
  }
};

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
  std::int64_t step = 0;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
    adam_m = Mat::Zero(value.rows(), value.cols());
    adam_v = Mat::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(); }
};

inline std::string shape_str(const Mat& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

inline void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
}

// Reverse-mode tape. Build a graph per batch, call backward(loss) once, then
// discard. Gradients of bound parameters accumulate into Parameter::grad.
class Graph {
 public:
  explicit Graph(bool training = false, std::uint64_t dropout_seed = 0)
      : training_(training), rng_(dropout_seed) {}

  // Backward closures capture `this`.
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }

  int constant(Mat v) { return add_node(std::move(v), false); }

  int param(Parameter& p) {
    int id = add_node(p.value, true);
    nodes_[static_cast<std::size_t>(id)].bound = &p;
    nodes_[static_cast<std::size_t>(id)].back = [this, id] {
      Node& n = node(id);
      n.bound->grad += n.tensor.grad;
    };
    return id;
  }

  const Mat& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).tensor.value; }
  const Mat& grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).tensor.grad; }

  int matmul(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.cols() != B.rows())
      throw std::invalid_argument("matmul: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Mat C(A.rows(), B.cols());
    C.noalias() = A * B;
    int id = add_node(std::move(C), needs(a) || needs(b));
    set_back(id, [this, id, a, b] {
      const Mat& g = grad_of(id);
      if (needs(a)) gref(a).noalias() += g * value(b).transpose();
      if (needs(b)) gref(b).noalias() += value(a).transpose() * g;
    });
    return id;
  }

  int add(int a, int b) {
    check_same_shape(value(a), value(b), "add");
    int id = add_node(value(a) + value(b), needs(a) || needs(b));
    set_back(id, [this, id, a, b] {
      const Mat& g = grad_of(id);
      if (needs(a)) gref(a) += g;
      if (needs(b)) gref(b) += g;
    });
    return id;
  }

  // M [r x c] + row vector [1 x c] broadcast over rows.
  int add_rowvec(int m, int b) {
    const Mat& M = value(m);
    const Mat& B = value(b);
    if (B.rows() != 1 || B.cols() != M.cols())
      throw std::invalid_argument("add_rowvec: shape mismatch " + shape_str(M) + " vs " +
                                  shape_str(B));
    Mat out = M.rowwise() + B.row(0);
    int id = add_node(std::move(out), needs(m) || needs(b));
    set_back(id, [this, id, m, b] {
      const Mat& g = grad_of(id);
      if (needs(m)) gref(m) += g;
      if (needs(b)) gref(b).row(0) += g.colwise().sum();
    });
    return id;
  }

  int mul(int a, int b) {
    check_same_shape(value(a), value(b), "mul");
    int id = add_node(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
    set_back(id, [this, id, a, b] {
      const Mat& g = grad_of(id);
      if (needs(a)) gref(a) += g.cwiseProduct(value(b));
      if (needs(b)) gref(b) += g.cwiseProduct(value(a));
    });
    return id;
  }

  // M [r x c] scaled per row by column vector v [r x 1].
  int colbroadcast_mul(int m, int v) {
    const Mat& M = value(m);
    const Mat& V = value(v);
    if (V.cols() != 1 || V.rows() != M.rows())
      throw std::invalid_argument("colbroadcast_mul: shape mismatch " + shape_str(M) + " vs " +
                                  shape_str(V));
    Mat out = M.array().colwise() * V.col(0).array();
    int id = add_node(std::move(out), needs(m) || needs(v));
    set_back(id, [this, id, m, v] {
      const Mat& g = grad_of(id);
      if (needs(m)) gref(m).array() += g.array().colwise() * value(v).col(0).array();
      if (needs(v)) gref(v).col(0) += g.cwiseProduct(value(m)).rowwise().sum();
    });
    return id;
  }

  // Row-wise sum: [r x c] -> [r x 1].
  int rowsum(int m) {
    int id = add_node(value(m).rowwise().sum(), needs(m));
    set_back(id, [this, id, m] {
      if (needs(m)) gref(m).colwise() += grad_of(id).col(0);
    });
    return id;
  }

  int concat_cols(int a, int b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() != B.rows())
      throw std::invalid_argument("concat_cols: shape mismatch " + shape_str(A) + " vs " +
                                  shape_str(B));
    long ac = A.cols();
    Mat out(A.rows(), ac + B.cols());
    out.leftCols(ac) = A;
    out.rightCols(B.cols()) = B;
    int id = add_node(std::move(out), needs(a) || needs(b));
    set_back(id, [this, id, a, b, ac] {
      const Mat& g = grad_of(id);
      if (needs(a)) gref(a) += g.leftCols(ac);
      if (needs(b)) gref(b) += g.rightCols(g.cols() - ac);
    });
    return id;
  }

  int concat_rows(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    long cols = value(parts[0]).cols();
    long rows = 0;
    bool any = false;
    for (int p : parts) {
      if (value(p).cols() != cols)
        throw std::invalid_argument("concat_rows: shape mismatch " + shape_str(value(parts[0])) +
                                    " vs " + shape_str(value(p)));
      rows += value(p).rows();
      any = any || needs(p);
    }
    Mat out(rows, cols);
    long r = 0;
    for (int p : parts) {
      out.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    int id = add_node(std::move(out), any);
    set_back(id, [this, id, parts] {
      const Mat& g = grad_of(id);
      long r = 0;
      for (int p : parts) {
        long n = value(p).rows();
        if (needs(p)) gref(p) += g.middleRows(r, n);
        r += n;
      }
    });
    return id;
  }

  int slice_rows(int m, long r0, long nrows) {
    const Mat& M = value(m);
    if (r0 < 0 || nrows < 0 || r0 + nrows > M.rows())
      throw std::invalid_argument("slice_rows: range out of bounds for " + shape_str(M));
    int id = add_node(M.middleRows(r0, nrows), needs(m));
    set_back(id, [this, id, m, r0, nrows] {
      if (needs(m)) gref(m).middleRows(r0, nrows) += grad_of(id);
    });
    return id;
  }

  int slice_cols(int m, long c0, long ncols) {
    const Mat& M = value(m);
    if (c0 < 0 || ncols < 0 || c0 + ncols > M.cols())
      throw std::invalid_argument("slice_cols: range out of bounds for " + shape_str(M));
    int id = add_node(M.middleCols(c0, ncols), needs(m));
    set_back(id, [this, id, m, c0, ncols] {
      if (needs(m)) gref(m).middleCols(c0, ncols) += grad_of(id);
    });
    return id;
  }

  int sigmoid(int a) {
    Mat out = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    int id = add_node(std::move(out), needs(a));
    set_back(id, [this, id, a] {
      if (!needs(a)) return;
      const Mat& y = value(id);
      gref(a).array() += grad_of(id).array() * y.array() * (1.0 - y.array());
    });
    return id;
  }

  int tanh_(int a) {
    Mat out = value(a).array().tanh();
    int id = add_node(std::move(out), needs(a));
    set_back(id, [this, id, a] {
      if (!needs(a)) return;
      const Mat& y = value(id);
      gref(a).array() += grad_of(id).array() * (1.0 - y.array().square());
    });
    return id;
  }

  // Row-wise softmax with max subtraction.
  int softmax_rows(int a) {
    const Mat& X = value(a);
    Mat out(X.rows(), X.cols());
    for (long r = 0; r < X.rows(); ++r) {
      double mx = X.row(r).maxCoeff();
      out.row(r) = (X.row(r).array() - mx).exp();
      out.row(r) /= out.row(r).sum();
    }
    int id = add_node(std::move(out), needs(a));
    set_back(id, [this, id, a] {
      if (!needs(a)) return;
      const Mat& y = value(id);
      const Mat& g = grad_of(id);
      Mat& ga = gref(a);
      for (long r = 0; r < y.rows(); ++r) {
        double dot = g.row(r).dot(y.row(r));
        ga.row(r).array() += (g.row(r).array() - dot) * y.row(r).array();
      }
    });
    return id;
  }

  // Row gather from an embedding table bound to a parameter.
  int embed(Parameter& table, const std::vector<int>& ids) {
    int table_node = param(table);
    const Mat& T = value(table_node);
    Mat out(static_cast<long>(ids.size()), T.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= T.rows())
        throw std::out_of_range("embed: id " + std::to_string(ids[i]) + " out of table " +
                                shape_str(T));
      out.row(static_cast<long>(i)) = T.row(ids[i]);
    }
    int id = add_node(std::move(out), true);
    set_back(id, [this, id, table_node, ids] {
      Mat& gt = gref(table_node);
      const Mat& g = grad_of(id);
      for (std::size_t i = 0; i < ids.size(); ++i)
        gt.row(ids[i]) += g.row(static_cast<long>(i));
    });
    return id;
  }

  // Inverted dropout; identity in eval mode. Retained activations scale by
  // 1/(1-p) so expected magnitude is unchanged.
  int dropout(int a, double p) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
    if (!training_ || p == 0.0) return a;
    const Mat& X = value(a);
    Mat mask(X.rows(), X.cols());
    double scale = 1.0 / (1.0 - p);
    for (long r = 0; r < mask.rows(); ++r)
      for (long c = 0; c < mask.cols(); ++c)
        mask(r, c) = rng_.next_double() < p ? 0.0 : scale;
    int id = add_node(X.cwiseProduct(mask), needs(a));
    set_back(id, [this, id, a, mask = std::move(mask)] {
      if (needs(a)) gref(a) += grad_of(id).cwiseProduct(mask);
    });
    return id;
  }

  // Weighted mean cross-entropy from raw logits: rows with weight 0 contribute
  // nothing (padding). Returns a 1x1 node.
  int cross_entropy(int logits, const std::vector<int>& targets,
                    const std::vector<double>& weights) {
    const Mat& L = value(logits);
    if (static_cast<long>(targets.size()) != L.rows() || targets.size() != weights.size())
      throw std::invalid_argument("cross_entropy: targets/weights must match logits rows " +
                                  shape_str(L));
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw std::invalid_argument("cross_entropy: total weight must be positive");
    double loss = 0.0;
    for (long r = 0; r < L.rows(); ++r) {
      if (weights[static_cast<std::size_t>(r)] == 0.0) continue;
      int t = targets[static_cast<std::size_t>(r)];
      if (t < 0 || t >= L.cols())
        throw std::out_of_range("cross_entropy: target id " + std::to_string(t) + " out of range");
      double mx = L.row(r).maxCoeff();
      double lse = mx + std::log((L.row(r).array() - mx).exp().sum());
      loss += weights[static_cast<std::size_t>(r)] * (lse - L(r, t));
    }
    Mat out(1, 1);
    out(0, 0) = loss / wsum;
    int id = add_node(std::move(out), needs(logits));
    set_back(id, [this, id, logits, targets, weights, wsum] {
      if (!needs(logits)) return;
      double gscale = grad_of(id)(0, 0) / wsum;
      const Mat& L = value(logits);
      Mat& gl = gref(logits);
      for (long r = 0; r < L.rows(); ++r) {
        double w = weights[static_cast<std::size_t>(r)];
        if (w == 0.0) continue;
        double mx = L.row(r).maxCoeff();
        Eigen::RowVectorXd p = (L.row(r).array() - mx).exp();
        p /= p.sum();
        gl.row(r) += (gscale * w) * p;
        gl(r, targets[static_cast<std::size_t>(r)]) -= gscale * w;
      }
    });
    return id;
  }

  int scale(int a, double s) {
    int id = add_node(value(a) * s, needs(a));
    set_back(id, [this, id, a, s] {
      if (needs(a)) gref(a) += grad_of(id) * s;
    });
    return id;
  }

  // new = mask*candidate + (1-mask)*previous, with mask a constant [r x 1]
  // column. Used to freeze recurrent state on padded positions.
  int select_rows(int candidate, int previous, const Mat& mask) {
    const Mat& C = value(candidate);
    check_same_shape(C, value(previous), "select_rows");
    if (mask.cols() != 1 || mask.rows() != C.rows())
      throw std::invalid_argument("select_rows: mask shape mismatch " + shape_str(mask));
    Mat out = (C.array().colwise() * mask.col(0).array()) +
              (value(previous).array().colwise() * (1.0 - mask.col(0).array()));
    int id = add_node(std::move(out), needs(candidate) || needs(previous));
    set_back(id, [this, id, candidate, previous, mask] {
      const Mat& g = grad_of(id);
      if (needs(candidate)) gref(candidate).array() += g.array().colwise() * mask.col(0).array();
      if (needs(previous))
        gref(previous).array() += g.array().colwise() * (1.0 - mask.col(0).array());
    });
    return id;
  }

  void backward(int loss) {
    const Mat& L = value(loss);
    if (L.rows() != 1 || L.cols() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(L));
    if (backward_done_)
      throw std::logic_error("backward: already called on this graph");
    backward_done_ = true;
    gref(loss)(0, 0) = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      Node& n = node(id);
      if (!n.needs_grad || !n.grad_alloc || !n.back) continue;
      n.back();
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor tensor;
    bool needs_grad = false;
    bool grad_alloc = false;
    Parameter* bound = nullptr;
    std::function<void()> back;
  };

  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }

  bool needs(int id) const { return nodes_.at(static_cast<std::size_t>(id)).needs_grad; }

  const Mat& grad_of(int id) { return node(id).tensor.grad; }

  Mat& gref(int id) {
    Node& n = node(id);
    if (!n.grad_alloc) {
      n.tensor.grad = Mat::Zero(n.tensor.value.rows(), n.tensor.value.cols());
      n.grad_alloc = true;
    }
    return n.tensor.grad;
  }

  int add_node(Mat v, bool needs_grad) {
    Node n;
    n.tensor.value = std::move(v);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void set_back(int id, std::function<void()> fn) { node(id).back = std::move(fn); }

  // Deque keeps references from value()/grad() stable across node creation.
  std::deque<Node> nodes_;
  bool training_ = false;
  bool backward_done_ = false;
  Rng rng_;
};

}  // namespace ulem
