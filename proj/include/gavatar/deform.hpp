#pragma once

#include <random>
#include <vector>

#include "gavatar/types.hpp"

namespace gavatar {

// NeRF-style frequency encoding applied to the normalized timestep.
struct PosEncoding {
  int num_freqs = 6;
  bool include_input = true;

  int output_dim() const { return (include_input ? 1 : 0) + 2 * num_freqs; }
};

// [T]? ++ { sin(2^k pi T), cos(2^k pi T) : k = 0..L-1 }
VecX encode_timestep(double t, const PosEncoding& enc);
VecX encode_timestep_grad(double t, const PosEncoding& enc);  // d(encoding)/dT

// Dense MLP mapping (psi, theta, gamma(T)) to a single 3-vector part offset.
// Hidden layers use tanh; the output layer is zero-initialized so training
// starts from the undeformed mesh.
class DeformMlp {
 public:
  DeformMlp() = default;
  DeformMlp(int psi_dim, int theta_dim, PosEncoding enc, std::vector<int> hidden = {64, 64, 64});

  void init_weights(std::mt19937_64& rng);

  Vec3 forward(const VecX& psi, const VecX& theta, double t) const;

  struct Gradients {
    VecX params;  // aligned with flat_params()
    VecX input;   // d(output)/d(psi ++ theta ++ gamma(T)) pulled back through upstream
  };
  // Reverse-mode gradients for the most recent forward. Throws NoForwardCache
  // if no forward pass is cached; the cache is consumed.
  Gradients backward(const Vec3& upstream) const;

  int psi_dim() const { return psi_dim_; }
  int theta_dim() const { return theta_dim_; }
  const PosEncoding& encoding() const { return enc_; }
  const std::vector<int>& layer_widths() const { return widths_; }

  std::size_t param_count() const;
  VecX flat_params() const;
  void set_flat_params(const VecX& p);

 private:
  int psi_dim_ = 0;
  int theta_dim_ = 0;
  PosEncoding enc_;
  std::vector<int> widths_;  // input, hidden..., 3
  std::vector<MatX> weights_;
  std::vector<VecX> biases_;

  struct Cache {
    bool valid = false;
    VecX input;
    std::vector<VecX> activations;  // post-nonlinearity per layer, last = output
  };
  mutable Cache cache_;
};

}  // namespace gavatar
