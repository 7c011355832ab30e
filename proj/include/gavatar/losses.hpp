#pragma once

#include <vector>

#include "gavatar/image.hpp"
#include "gavatar/splats.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

struct RegThresholds {
  double tau_r = 0.1;
  double tau_f = 2.0;
  double tau_m = 0.1;    // mouth is regularized as strictly as the rigid set
  double tau_phi = 0.78;

  double tau_for(FaceSet s) const {
    switch (s) {
      case FaceSet::Rigid: return tau_r;
      case FaceSet::Flexible: return tau_f;
      case FaceSet::Mouth: return tau_m;
    }
    return tau_r;
  }
};

// Offset penalty on the local-mean radius: max(0, r - tau).
double loss_p(double r, double tau_p);
double loss_p_grad(double r, double tau_p);  // subgradient 0 at the kink

struct AngleLossOptions {
  // Fold phi about the surface plane (phi_eff = min(phi, pi - phi)) so splats
  // straight below the face are not penalized. Off restores the literal reading.
  bool fold_phi = true;
};

// Lateral-drift penalty, gated on the radius: 1_{r > tau_r} * max(0, phi_eff - tau_phi).
// The gate is hard; no gradient flows through r.
double loss_angle(double r, double phi, const RegThresholds& th, const AngleLossOptions& opts = {});
double loss_angle_grad_phi(double r, double phi, const RegThresholds& th,
                           const AngleLossOptions& opts = {});

struct RegOptions {
  AngleLossOptions angle;
  // The default is a plain sum over splats; per-splat magnitudes then scale
  // with the splat count. Mean reduction divides by the splat count.
  bool mean_reduction = false;
};

struct RegLossResult {
  double value = 0.0;
  double l_p_by_set[3] = {0.0, 0.0, 0.0};  // indexed by FaceSet
  double l_angle = 0.0;
  std::vector<Vec3> dmu;  // per-splat gradient w.r.t. the local mean
};

// Sum over splats of loss_p(r) + loss_angle(phi) using the tau of the bound
// face's set. Throws UnassignedFace when a binding points past the assignment.
RegLossResult loss_reg(const SplatSet& set, const std::vector<FaceSet>& set_of_face,
                       const RegThresholds& th, const RegOptions& opts = {});

// --- photometric loss and image metrics -----------------------------------

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 1e-4;
inline constexpr double kSsimC2 = 9e-4;

// Mean SSIM over all fully-interior 11x11 Gaussian-weighted windows, averaged
// across channels. Throws ShapeMismatch on size mismatch or images smaller
// than the window.
double ssim(const Image& x, const Image& y);

// Accumulates upstream * d(ssim)/dx into dx. Returns the ssim value.
double ssim_backward(const Image& x, const Image& y, double upstream, Image& dx);

struct RgbLossResult {
  double value = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  Image grad;  // d(value)/d(rendered)
};

// (1 - lambda) * L1 + lambda * (1 - SSIM)/2 with image-space gradients.
RgbLossResult loss_rgb(const Image& rendered, const Image& target, double lambda);

struct Metrics {
  double mse = 0.0;
  double psnr = 0.0;  // +inf when mse == 0
  double ssim = 0.0;
};

Metrics metrics(const Image& rendered, const Image& target);

// Per-step loss decomposition; total = l_rgb + l_reg holds exactly as summed.
struct LossReport {
  double l_rgb = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  double l_reg = 0.0;
  double l_p_by_set[3] = {0.0, 0.0, 0.0};
  double l_angle = 0.0;
  double total = 0.0;
};

}  // namespace gavatar
