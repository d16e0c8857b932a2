#include "gcdc/nn.hpp"

#include <cmath>

namespace gcdc::nn {

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->size());
  return n;
}

void round_to_float(const ParameterList& params) {
  for (auto* p : params) p->value = p->value.cast<float>().cast<double>();
}

Mat glorot_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat w(fan_in, fan_out);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

double mse_loss(const Mat& pred, const Mat& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), Errc::shape_mismatch,
          "mse_loss operands differ in shape");
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Mat mse_grad(const Mat& pred, const Mat& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), Errc::shape_mismatch,
          "mse_grad operands differ in shape");
  return (2.0 / static_cast<double>(pred.size())) * (pred - target);
}

// Linear

Linear::Linear(Index in, Index out, Rng& rng, const std::string& name)
    : weight(name + ".weight", glorot_uniform(in, out, rng)), bias(name + ".bias", Mat::Zero(1, out)) {}

Mat Linear::operator()(const Mat& x) const {
  require(x.cols() == in_dim(), Errc::shape_mismatch,
          weight.name + ": input has " + std::to_string(x.cols()) + " columns, expected " + std::to_string(in_dim()));
  Mat y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Linear::forward(const Mat& x) {
  input_ = x;
  return (*this)(x);
}

Mat Linear::backward(const Mat& dy) {
  weight.grad.noalias() += input_.transpose() * dy;
  bias.grad += dy.colwise().sum();
  return dy * weight.value.transpose();
}

// Relu

Mat Relu::forward(const Mat& x) {
  mask_ = (x.array() > 0.0).cast<double>().matrix();
  return relu(x);
}

Mat Relu::backward(const Mat& dy) const { return dy.cwiseProduct(mask_); }

// LayerNorm

LayerNorm::LayerNorm(Index dim, const std::string& name, double eps_)
    : gamma(name + ".gamma", Mat::Ones(1, dim)), beta(name + ".beta", Mat::Zero(1, dim)), eps(eps_) {}

namespace {

void standardize_rows(const Mat& x, double eps, Mat& normalized, Eigen::VectorXd& inv_std) {
  const auto cols = static_cast<double>(x.cols());
  const Eigen::VectorXd mean = x.rowwise().sum() / cols;
  normalized = x.colwise() - mean;
  const Eigen::VectorXd var = normalized.rowwise().squaredNorm() / cols;
  inv_std = (var.array() + eps).rsqrt().matrix();
  normalized.array().colwise() *= inv_std.array();
}

}  // namespace

Mat LayerNorm::operator()(const Mat& x) const {
  require(x.cols() == gamma.value.cols(), Errc::shape_mismatch, gamma.name + ": width mismatch");
  Mat normalized;
  Eigen::VectorXd inv_std;
  standardize_rows(x, eps, normalized, inv_std);
  Mat y = normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat LayerNorm::forward(const Mat& x) {
  require(x.cols() == gamma.value.cols(), Errc::shape_mismatch, gamma.name + ": width mismatch");
  standardize_rows(x, eps, normalized_, inv_std_);
  Mat y = normalized_.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat LayerNorm::backward(const Mat& dy) {
  gamma.grad += dy.cwiseProduct(normalized_).colwise().sum();
  beta.grad += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  const auto cols = static_cast<double>(dy.cols());
  const Eigen::VectorXd mean_dxhat = dxhat.rowwise().sum() / cols;
  const Eigen::VectorXd mean_dxhat_xhat = dxhat.cwiseProduct(normalized_).rowwise().sum() / cols;
  Mat dx = dxhat.colwise() - mean_dxhat;
  dx.array() -= normalized_.array().colwise() * mean_dxhat_xhat.array();
  dx.array().colwise() *= inv_std_.array();
  return dx;
}

// SelfAttention

SelfAttention::SelfAttention(Index dim, Index d_k, Index d_v, Rng& rng, const std::string& name)
    : w_q(name + ".w_q", glorot_uniform(dim, d_k, rng)),
      w_k(name + ".w_k", glorot_uniform(dim, d_k, rng)),
      w_v(name + ".w_v", glorot_uniform(dim, d_v, rng)) {}

namespace {

void check_sequences(const Mat& x, Index seq_len, const Parameter& w_q) {
  require(seq_len >= 1, Errc::shape_mismatch, "attention sequence length must be >= 1");
  require(x.rows() % seq_len == 0, Errc::shape_mismatch, "attention rows not a multiple of sequence length");
  require(x.cols() == w_q.value.rows(), Errc::shape_mismatch, w_q.name + ": width mismatch");
}

}  // namespace

Mat SelfAttention::operator()(const Mat& x, Index seq_len) const {
  check_sequences(x, seq_len, w_q);
  const Mat q = x * w_q.value;
  const Mat k = x * w_k.value;
  const Mat v = x * w_v.value;
  Mat out(x.rows(), v.cols());
  for (Index s = 0; s < x.rows(); s += seq_len)
    out.middleRows(s, seq_len) =
        scaled_dot_product(q.middleRows(s, seq_len), k.middleRows(s, seq_len), v.middleRows(s, seq_len));
  return out;
}

Mat SelfAttention::forward(const Mat& x, Index seq_len) {
  check_sequences(x, seq_len, w_q);
  seq_len_ = seq_len;
  x_ = x;
  q_ = x * w_q.value;
  k_ = x * w_k.value;
  v_ = x * w_v.value;
  probs_.resize(x.rows(), seq_len);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q_.cols()));
  Mat out(x.rows(), v_.cols());
  for (Index s = 0; s < x.rows(); s += seq_len) {
    probs_.middleRows(s, seq_len) = softmax_rows((q_.middleRows(s, seq_len) * k_.middleRows(s, seq_len).transpose()) * scale);
    out.middleRows(s, seq_len) = probs_.middleRows(s, seq_len) * v_.middleRows(s, seq_len);
  }
  return out;
}

Mat SelfAttention::backward(const Mat& dy) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q_.cols()));
  Mat dq(q_.rows(), q_.cols()), dk(k_.rows(), k_.cols()), dv(v_.rows(), v_.cols());
  for (Index s = 0; s < dy.rows(); s += seq_len_) {
    const auto p = probs_.middleRows(s, seq_len_);
    const auto dout = dy.middleRows(s, seq_len_);
    dv.middleRows(s, seq_len_) = p.transpose() * dout;
    const Mat dp = dout * v_.middleRows(s, seq_len_).transpose();
    const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
    const Mat ds = p.cwiseProduct(dp.colwise() - row_dot) * scale;
    dq.middleRows(s, seq_len_) = ds * k_.middleRows(s, seq_len_);
    dk.middleRows(s, seq_len_) = ds.transpose() * q_.middleRows(s, seq_len_);
  }
  w_q.grad.noalias() += x_.transpose() * dq;
  w_k.grad.noalias() += x_.transpose() * dk;
  w_v.grad.noalias() += x_.transpose() * dv;
  Mat dx = dq * w_q.value.transpose();
  dx.noalias() += dk * w_k.value.transpose();
  dx.noalias() += dv * w_v.value.transpose();
  return dx;
}

// FeedForward

FeedForward::FeedForward(Index in, Index hidden, Index out, Rng& rng, const std::string& name)
    : first(in, hidden, rng, name + ".0"), second(hidden, out, rng, name + ".1") {}

// Adam

Adam::Adam(ParameterList params, AdamOptions options) : params_(std::move(params)), opt_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * p.grad;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= opt_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opt_.eps);
  }
}

}  // namespace gcdc::nn
