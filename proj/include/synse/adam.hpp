#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "synse/error.hpp"

namespace synse {

// Adaptive-moment optimizer over a fixed list of parameter blocks. The block
// layout is fixed by the first call to step(); moment state persists for the
// optimizer's lifetime.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads) {
    if (params.size() != grads.size()) throw Error(ErrorKind::Shape, "adam: block count mismatch");
    if (first_.empty()) {
      for (const auto& p : params) {
        first_.emplace_back(p.size(), 0.0);
        second_.emplace_back(p.size(), 0.0);
      }
    }
    if (first_.size() != params.size()) throw Error(ErrorKind::Shape, "adam: layout changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto p = params[b];
      auto g = grads[b];
      auto& m = first_[b];
      auto& v = second_[b];
      if (p.size() != g.size() || p.size() != m.size()) {
        throw Error(ErrorKind::Shape, "adam: block size mismatch");
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> first_, second_;
};

}  // namespace synse
