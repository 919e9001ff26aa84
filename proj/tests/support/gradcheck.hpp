#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ulem/optim.hpp"
#include "ulem/rng.hpp"
#include "ulem/tensor.hpp"

namespace ulem::testgrad {

inline Mat random_mat(Rng& rng, long r, long c, double scale = 1.0) {
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = rng.uniform_real(-scale, scale);
  return m;
}

// Central-difference check. `loss_fn(with_grad)` must rebuild the graph from
// the current parameter values; with_grad=true also runs backward into the
// parameters' grad fields. Returns the worst violation ratio: <= 1 passes the
// (rel_tol, abs_floor) criterion via
//   |fd - an| <= rel_tol * max(abs_floor / rel_tol, |fd|, |an|).
inline double max_fd_violation(const std::function<double(bool)>& loss_fn,
                               const std::vector<Parameter*>& params, double eps = 1e-4,
                               double rel_tol = 1e-3, double abs_floor = 1e-6) {
  for (Parameter* p : params) p->zero_grad();
  loss_fn(true);
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Mat& v = params[pi]->value;
    for (long r = 0; r < v.rows(); ++r) {
      for (long c = 0; c < v.cols(); ++c) {
        double orig = v(r, c);
        v(r, c) = orig + eps;
        double fp = loss_fn(false);
        v(r, c) = orig - eps;
        double fm = loss_fn(false);
        v(r, c) = orig;
        double fd = (fp - fm) / (2.0 * eps);
        double an = analytic[pi](r, c);
        double denom = std::max({abs_floor / rel_tol, std::abs(fd), std::abs(an)});
        worst = std::max(worst, std::abs(fd - an) / (denom * rel_tol));
      }
    }
  }
  return worst;
}

// Sampled variant for large parameter sets: checks n randomly chosen scalar
// components instead of every entry.
inline double sampled_fd_violation(const std::function<double(bool)>& loss_fn,
                                   const std::vector<Parameter*>& params, std::size_t n_samples,
                                   Rng& rng, double eps = 1e-4, double rel_tol = 1e-2,
                                   double abs_floor = 1e-6) {
  for (Parameter* p : params) p->zero_grad();
  loss_fn(true);
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::size_t pi = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
    Mat& v = params[pi]->value;
    long r = rng.uniform_int(0, v.rows() - 1);
    long c = rng.uniform_int(0, v.cols() - 1);
    double orig = v(r, c);
    v(r, c) = orig + eps;
    double fp = loss_fn(false);
    v(r, c) = orig - eps;
    double fm = loss_fn(false);
    v(r, c) = orig;
    double fd = (fp - fm) / (2.0 * eps);
    double an = analytic[pi](r, c);
    double denom = std::max({abs_floor / rel_tol, std::abs(fd), std::abs(an)});
    worst = std::max(worst, std::abs(fd - an) / (denom * rel_tol));
  }
  return worst;
}

// One seeded gradient-check instance per differentiable op. Each returns the
// worst violation ratio for that instance; <= 1 means the op passes at
// rel 1e-3 with the 1e-6 absolute floor.
struct OpCheck {
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

// Projects an arbitrary node to a scalar with fixed random vectors so that
// every Jacobian entry influences the loss.
inline int project_scalar(Graph& g, int node, Rng& rng) {
  const Mat& v = g.value(node);
  int left = g.constant(random_mat(rng, 1, v.rows()));
  int right = g.constant(random_mat(rng, v.cols(), 1));
  return g.matmul(g.matmul(left, node), right);
}

inline std::vector<OpCheck> all_op_checks() {
  std::vector<OpCheck> checks;
  auto add_check = [&](std::string name, std::function<double(std::uint64_t)> fn) {
    checks.push_back({std::move(name), std::move(fn)});
  };

  add_check("matmul", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 4));
    Parameter b("b", random_mat(rng, 4, 2));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int out = g.matmul(g.param(a), g.param(b));
      int loss = project_scalar(g, out, prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("add", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 5));
    Parameter b("b", random_mat(rng, 3, 5));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.add(g.param(a), g.param(b)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("add_rowvec", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 4, 3));
    Parameter b("b", random_mat(rng, 1, 3));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.add_rowvec(g.param(a), g.param(b)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("mul", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 4));
    Parameter b("b", random_mat(rng, 3, 4));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.mul(g.param(a), g.param(b)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("colbroadcast_mul", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 4, 3));
    Parameter b("b", random_mat(rng, 4, 1));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.colbroadcast_mul(g.param(a), g.param(b)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("rowsum", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 4, 6));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.rowsum(g.param(a)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("concat_cols", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 2));
    Parameter b("b", random_mat(rng, 3, 4));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.concat_cols(g.param(a), g.param(b)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("concat_rows_slice_rows", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 2, 3));
    Parameter b("b", random_mat(rng, 3, 3));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int cat = g.concat_rows({g.param(a), g.param(b)});
      int loss = project_scalar(g, g.slice_rows(cat, 1, 3), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("slice_cols", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 6));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.slice_cols(g.param(a), 2, 3), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("sigmoid", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 4, 2.0));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.sigmoid(g.param(a)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("tanh", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 4, 2.0));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.tanh_(g.param(a)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("softmax", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 5, 2.0));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.softmax_rows(g.param(a)), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("embed", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter table("table", random_mat(rng, 5, 3));
    std::vector<int> ids = {0, 3, 3, 1, 4};
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.embed(table, ids), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&table});
  });

  add_check("dropout", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 4, 4));
    std::uint64_t dseed = rng.next_u64();
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g(true, dseed);  // fixed seed: identical mask on every rebuild
      int loss = project_scalar(g, g.dropout(g.param(a), 0.3), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  add_check("cross_entropy", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter logits("logits", random_mat(rng, 4, 6, 2.0));
    std::vector<int> targets = {1, 0, 5, 2};
    std::vector<double> weights = {1.0, 1.0, 0.0, 1.0};
    auto fn = [&](bool grad) {
      Graph g;
      int loss = g.cross_entropy(g.param(logits), targets, weights);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&logits});
  });

  add_check("select_rows", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 4, 3));
    Parameter b("b", random_mat(rng, 4, 3));
    Mat mask(4, 1);
    mask << 1.0, 0.0, 1.0, 0.0;
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.select_rows(g.param(a), g.param(b), mask), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a, &b});
  });

  add_check("scale", [](std::uint64_t seed) {
    Rng rng(seed);
    Parameter a("a", random_mat(rng, 3, 3));
    std::uint64_t pseed = rng.next_u64();
    auto fn = [&](bool grad) {
      Rng prng(pseed);
      Graph g;
      int loss = project_scalar(g, g.scale(g.param(a), -1.7), prng);
      if (grad) g.backward(loss);
      return g.value(loss)(0, 0);
    };
    return max_fd_violation(fn, {&a});
  });

  return checks;
}

}  // namespace ulem::testgrad
