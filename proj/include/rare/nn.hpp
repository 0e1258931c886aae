#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace rare {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Callback used by parameter structs to expose their tensors by name.
/// Optimizers, checkpoints and gradient checks all go through it.
using ParamVisitor = std::function<void(std::string_view name, std::span<double> values)>;

inline std::span<double> as_span(Mat& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vec sigmoid(const Vec& x) { return x.unaryExpr([](double v) { return sigmoid(v); }); }
inline Vec relu(const Vec& x) { return x.cwiseMax(0.0); }

/// y = W x + b with W of shape out x in.
struct Linear {
  Mat weight;
  Vec bias;

  Linear() = default;
  Linear(int in, int out) : weight(Mat::Zero(out, in)), bias(Vec::Zero(out)) {}

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  Vec forward(const Vec& x) const { return weight * x + bias; }

  /// Accumulates parameter gradients into `grad`; returns dL/dx.
  Vec backward(const Vec& x, const Vec& dy, Linear& grad) const {
    grad.weight.noalias() += dy * x.transpose();
    grad.bias += dy;
    return weight.transpose() * dy;
  }

  void visit(std::string_view prefix, const ParamVisitor& f) {
    f(std::string(prefix) + ".weight", as_span(weight));
    f(std::string(prefix) + ".bias", as_span(bias));
  }

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) for both weight and bias.
  void init(std::mt19937_64& rng);
};

/// Zeroes every tensor exposed by a parameter struct.
template <class Params>
void zero_params(Params& p) {
  p.visit("", [](std::string_view, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); });
}

/// Total number of scalars exposed by a parameter struct.
template <class Params>
std::size_t param_count(Params& p) {
  std::size_t n = 0;
  p.visit("", [&](std::string_view, std::span<double> v) { n += v.size(); });
  return n;
}

}  // namespace rare
