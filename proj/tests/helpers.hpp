#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mweparse/tensor.hpp"

namespace testutil {

// Portable seeded uniforms: mt19937_64 output mapped to [0,1) explicitly so
// frozen expected values do not depend on std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(static_cast<int>(i)))]);
  }

 private:
  std::mt19937_64 gen_;
};

inline mweparse::Tensor random_tensor(Rng& rng, int rows, int cols, bool requires_grad,
                                      double lo = -1.0, double hi = 1.0) {
  std::vector<double> d(static_cast<std::size_t>(rows) * cols);
  for (auto& v : d) v = rng.uniform(lo, hi);
  return mweparse::Tensor::from_data(rows, cols, std::move(d), requires_grad);
}

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Central finite differences on every entry of every leaf, against the tape
// gradient of build(). build() must rebuild the graph from the leaves' current
// values each call. Returns the worst relative error seen.
inline double grad_check(std::vector<mweparse::Tensor> leaves,
                         const std::function<mweparse::Tensor()>& build,
                         double step = 1e-5) {
  mweparse::Tensor loss = build();
  mweparse::backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& leaf : leaves) analytic.push_back(leaf.grad());

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    for (int i = 0; i < leaf.size(); ++i) {
      double saved = leaf.mut_data()[i];
      leaf.mut_data()[i] = saved + step;
      double up = build().item();
      leaf.mut_data()[i] = saved - step;
      double down = build().item();
      leaf.mut_data()[i] = saved;
      double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_err(analytic[li][i], fd));
    }
  }
  return worst;
}

}  // namespace testutil
