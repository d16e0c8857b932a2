#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "gcdc/error.hpp"
#include "gcdc/random.hpp"

namespace gcdc::nn {

using Index = Eigen::Index;
/// Training precision matrix; rows are samples.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

  Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

using ParameterList = std::vector<Parameter*>;

std::size_t parameter_count(const ParameterList& params);

/// Rounds every parameter value to the nearest 32-bit float.
void round_to_float(const ParameterList& params);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Mat glorot_uniform(Index fan_in, Index fan_out, Rng& rng);

/// Row-wise softmax, stabilized by subtracting each row's max.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> softmax_rows(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out = logits;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_max = out.rowwise().maxCoeff();
  out.colwise() -= row_max;
  out = out.array().exp();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_sum = out.rowwise().sum();
  out.array().colwise() /= row_sum.array();
  return out;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Scaled dot-product attention over one sequence given its projections.
template <typename DQ, typename DK, typename DV>
Eigen::Matrix<typename DQ::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> scaled_dot_product(
    const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k, const Eigen::MatrixBase<DV>& v) {
  using Scalar = typename DQ::Scalar;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  return softmax_rows((q * k.transpose()) * scale) * v;
}

double mse_loss(const Mat& pred, const Mat& target);
/// d(mse)/d(pred) = 2 (pred - target) / count.
Mat mse_grad(const Mat& pred, const Mat& target);

class Linear {
 public:
  Linear() = default;
  Linear(Index in, Index out, Rng& rng, const std::string& name);

  Mat operator()(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }
  void collect(ParameterList& out) { out.push_back(&weight), out.push_back(&bias); }

  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

 private:
  Mat input_;
};

class Relu {
 public:
  Mat operator()(const Mat& x) const { return relu(x); }
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy) const;

 private:
  Mat mask_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(Index dim, const std::string& name, double eps = 1e-5);

  Mat operator()(const Mat& x) const;
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);

  void collect(ParameterList& out) { out.push_back(&gamma), out.push_back(&beta); }

  Parameter gamma;  // 1 x dim
  Parameter beta;   // 1 x dim
  double eps = 1e-5;

 private:
  Mat normalized_;
  Eigen::VectorXd inv_std_;
};

/// Single-head self-attention applied independently to consecutive groups of
/// `seq_len` rows.
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(Index dim, Index d_k, Index d_v, Rng& rng, const std::string& name);

  Mat operator()(const Mat& x, Index seq_len) const;
  Mat forward(const Mat& x, Index seq_len);
  Mat backward(const Mat& dy);

  /// d * (2 d_k + d_v).
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w_q.size() + w_k.size() + w_v.size());
  }
  void collect(ParameterList& out) { out.push_back(&w_q), out.push_back(&w_k), out.push_back(&w_v); }

  Parameter w_q;  // d x d_k
  Parameter w_k;  // d x d_k
  Parameter w_v;  // d x d_v

 private:
  Index seq_len_ = 0;
  Mat x_, q_, k_, v_;
  Mat probs_;  // (rows x seq_len), one softmax block per sequence
};

/// Linear -> ReLU -> Linear.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(Index in, Index hidden, Index out, Rng& rng, const std::string& name);

  Mat operator()(const Mat& x) const { return second(act(first(x))); }
  Mat forward(const Mat& x) { return second.forward(act.forward(first.forward(x))); }
  Mat backward(const Mat& dy) { return first.backward(act.backward(second.backward(dy))); }

  void collect(ParameterList& out) {
    first.collect(out);
    second.collect(out);
  }

  Linear first;
  Relu act;
  Linear second;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterList params, AdamOptions options = {});

  void zero_grad();
  /// One bias-corrected update from the accumulated gradients.
  void step();
  long steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

 private:
  ParameterList params_;
  AdamOptions opt_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  long t_ = 0;
};

}  // namespace gcdc::nn
