#include "gavatar/deform.hpp"

#include <cmath>

namespace gavatar {

VecX encode_timestep(double t, const PosEncoding& enc) {
  VecX out(enc.output_dim());
  int k = 0;
  if (enc.include_input) out[k++] = t;
  double freq = kPi;
  for (int i = 0; i < enc.num_freqs; ++i) {
    out[k++] = std::sin(freq * t);
    out[k++] = std::cos(freq * t);
    freq *= 2.0;
  }
  return out;
}

VecX encode_timestep_grad(double t, const PosEncoding& enc) {
  VecX out(enc.output_dim());
  int k = 0;
  if (enc.include_input) out[k++] = 1.0;
  double freq = kPi;
  for (int i = 0; i < enc.num_freqs; ++i) {
    out[k++] = freq * std::cos(freq * t);
    out[k++] = -freq * std::sin(freq * t);
    freq *= 2.0;
  }
  return out;
}

DeformMlp::DeformMlp(int psi_dim, int theta_dim, PosEncoding enc, std::vector<int> hidden)
    : psi_dim_(psi_dim), theta_dim_(theta_dim), enc_(enc) {
  widths_.push_back(psi_dim + theta_dim + enc.output_dim());
  for (int h : hidden) widths_.push_back(h);
  widths_.push_back(3);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.emplace_back(MatX::Zero(widths_[l + 1], widths_[l]));
    biases_.emplace_back(VecX::Zero(widths_[l + 1]));
  }
}

void DeformMlp::init_weights(std::mt19937_64& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (l + 1 == weights_.size()) {
      weights_[l].setZero();  // zero output layer: the net starts as the identity deformation
      biases_[l].setZero();
      continue;
    }
    const double bound = std::sqrt(6.0 / (weights_[l].rows() + weights_[l].cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = dist(rng);
    biases_[l].setZero();
  }
}

Vec3 DeformMlp::forward(const VecX& psi, const VecX& theta, double t) const {
  if (psi.size() != psi_dim_ || theta.size() != theta_dim_) {
    throw Error(ErrorKind::DimensionMismatch, "deformation net input dims do not match");
  }
  VecX x(widths_.front());
  x << psi, theta, encode_timestep(t, enc_);

  cache_.input = x;
  cache_.activations.assign(weights_.size(), VecX());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    x = weights_[l] * x + biases_[l];
    if (l + 1 < weights_.size()) x = x.array().tanh();
    cache_.activations[l] = x;
  }
  cache_.valid = true;
  return Vec3(x[0], x[1], x[2]);
}

DeformMlp::Gradients DeformMlp::backward(const Vec3& upstream) const {
  if (!cache_.valid) {
    throw Error(ErrorKind::NoForwardCache, "backward called without a cached forward pass");
  }
  cache_.valid = false;

  Gradients grads;
  grads.params = VecX::Zero(static_cast<Eigen::Index>(param_count()));

  VecX delta = VecX(3);
  delta << upstream.x(), upstream.y(), upstream.z();

  // Walk layers backwards, writing weight/bias gradients into the flat layout
  // (per layer: row-major weights then bias).
  std::vector<Eigen::Index> offsets(weights_.size());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    offsets[l] = off;
    off += weights_[l].size() + biases_[l].size();
  }

  for (std::size_t li = weights_.size(); li-- > 0;) {
    if (li + 1 < weights_.size()) {
      // delta arrives w.r.t. the activation; fold in tanh'.
      const VecX& a = cache_.activations[li];
      delta = delta.cwiseProduct(VecX::Ones(a.size()) - a.cwiseProduct(a));
    }
    const VecX& prev = li == 0 ? cache_.input : cache_.activations[li - 1];
    MatX dW = delta * prev.transpose();
    Eigen::Map<MatX>(grads.params.data() + offsets[li], dW.rows(), dW.cols()) = dW;
    grads.params.segment(offsets[li] + dW.size(), delta.size()) = delta;
    delta = weights_[li].transpose() * delta;
  }
  grads.input = delta;
  return grads;
}

std::size_t DeformMlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

VecX DeformMlp::flat_params() const {
  VecX p(static_cast<Eigen::Index>(param_count()));
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::Map<MatX>(p.data() + off, weights_[l].rows(), weights_[l].cols()) = weights_[l];
    off += weights_[l].size();
    p.segment(off, biases_[l].size()) = biases_[l];
    off += biases_[l].size();
  }
  return p;
}

void DeformMlp::set_flat_params(const VecX& p) {
  if (p.size() != static_cast<Eigen::Index>(param_count())) {
    throw Error(ErrorKind::DimensionMismatch, "flat parameter vector has the wrong size");
  }
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] = Eigen::Map<const MatX>(p.data() + off, weights_[l].rows(), weights_[l].cols());
    off += weights_[l].size();
    biases_[l] = p.segment(off, biases_[l].size());
    off += biases_[l].size();
  }
}

}  // namespace gavatar
