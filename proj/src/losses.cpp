#include "gavatar/losses.hpp"

#include <cmath>
#include <limits>

namespace gavatar {

double loss_p(double r, double tau_p) { return r > tau_p ? r - tau_p : 0.0; }

double loss_p_grad(double r, double tau_p) { return r > tau_p ? 1.0 : 0.0; }

namespace {

// phi_eff and d(phi_eff)/d(phi)
std::pair<double, double> effective_phi(double phi, const AngleLossOptions& opts) {
  if (opts.fold_phi && phi > kPi / 2.0) return {kPi - phi, -1.0};
  return {phi, 1.0};
}

}  // namespace

double loss_angle(double r, double phi, const RegThresholds& th, const AngleLossOptions& opts) {
  if (r <= th.tau_r) return 0.0;
  const auto [phi_eff, _] = effective_phi(phi, opts);
  return phi_eff > th.tau_phi ? phi_eff - th.tau_phi : 0.0;
}

double loss_angle_grad_phi(double r, double phi, const RegThresholds& th,
                           const AngleLossOptions& opts) {
  if (r <= th.tau_r) return 0.0;
  const auto [phi_eff, dfold] = effective_phi(phi, opts);
  return phi_eff > th.tau_phi ? dfold : 0.0;
}

RegLossResult loss_reg(const SplatSet& set, const std::vector<FaceSet>& set_of_face,
                       const RegThresholds& th, const RegOptions& opts) {
  RegLossResult out;
  out.dmu.assign(set.size(), Vec3::Zero());

  for (std::size_t i = 0; i < set.size(); ++i) {
    const Index face = set.binding[i];
    if (face >= set_of_face.size()) {
      throw Error(ErrorKind::UnassignedFace,
                  "face " + std::to_string(face) + " has no set assignment");
    }
    const FaceSet fs = set_of_face[face];
    const double tau_p = th.tau_for(fs);
    const PolarMean polar = to_polar(set.splats[i].mu);

    const double lp = loss_p(polar.r, tau_p);
    const double la = loss_angle(polar.r, polar.phi, th, opts.angle);
    out.l_p_by_set[static_cast<int>(fs)] += lp;
    out.l_angle += la;

    const double dlp = loss_p_grad(polar.r, tau_p);
    const double dla = loss_angle_grad_phi(polar.r, polar.phi, th, opts.angle);
    if (dlp != 0.0 || dla != 0.0) {
      try {
        const PolarGradients pg = polar_gradients(set.splats[i].mu);
        out.dmu[i] = dlp * pg.dr_dmu + dla * pg.dphi_dmu;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NearSingular) throw;
        // Pole or origin: the gradient is masked to zero, except that dr/dmu is
        // still well defined away from the origin.
        if (dlp != 0.0 && set.splats[i].mu.norm() > kPolarMinRadius) {
          out.dmu[i] = dlp * set.splats[i].mu.normalized();
        }
      }
    }
  }

  out.value = out.l_p_by_set[0] + out.l_p_by_set[1] + out.l_p_by_set[2] + out.l_angle;
  if (opts.mean_reduction && !set.splats.empty()) {
    const double inv = 1.0 / static_cast<double>(set.size());
    out.value *= inv;
    out.l_angle *= inv;
    for (double& v : out.l_p_by_set) v *= inv;
    for (Vec3& g : out.dmu) g *= inv;
  }
  return out;
}

// --- SSIM -------------------------------------------------------------------
//
// Valid-mode windows only (every 11x11 window fully inside the image), Gaussian
// weighted. Filtering is separable; the adjoint is the matching zero-padded
// scatter, so gradients are exact.

namespace {

struct SsimKernel1d {
  double k[kSsimWindow];

  SsimKernel1d() {
    double sum = 0.0;
    const int half = kSsimWindow / 2;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - half;
      k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
  }
};

const SsimKernel1d& ssim_kernel() {
  static const SsimKernel1d kernel;
  return kernel;
}

void check_ssim_shapes(const Image& x, const Image& y) {
  if (!x.same_shape(y)) {
    throw Error(ErrorKind::ShapeMismatch, "image dimensions do not match");
  }
  if (x.width < kSsimWindow || x.height < kSsimWindow) {
    throw Error(ErrorKind::ShapeMismatch, "image smaller than the SSIM window");
  }
}

using Plane = std::vector<double>;

Plane channel_plane(const Image& img, int c) {
  Plane p(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) p[static_cast<std::size_t>(y) * img.width + x] = img.at(x, y, c);
  }
  return p;
}

// Valid-mode separable filter: (w, h) -> (w - 10, h - 10).
Plane filter_valid(const Plane& in, int w, int h) {
  const auto& k = ssim_kernel().k;
  const int ww = w - kSsimWindow + 1;
  const int wh = h - kSsimWindow + 1;
  Plane tmp(static_cast<std::size_t>(ww) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ww; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ww + x] = acc;
    }
  }
  Plane out(static_cast<std::size_t>(ww) * wh, 0.0);
  for (int y = 0; y < wh; ++y) {
    for (int x = 0; x < ww; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ww + x];
      out[static_cast<std::size_t>(y) * ww + x] = acc;
    }
  }
  return out;
}

// Adjoint of filter_valid: (w - 10, h - 10) -> (w, h) zero-padded scatter.
Plane scatter_full(const Plane& in, int w, int h) {
  const auto& k = ssim_kernel().k;
  const int ww = w - kSsimWindow + 1;
  const int wh = h - kSsimWindow + 1;
  Plane tmp(static_cast<std::size_t>(ww) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < kSsimWindow; ++i) {
      const int sy = y - i;
      if (sy < 0 || sy >= wh) continue;
      for (int x = 0; x < ww; ++x) {
        tmp[static_cast<std::size_t>(y) * ww + x] += k[i] * in[static_cast<std::size_t>(sy) * ww + x];
      }
    }
  }
  Plane out(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) {
        const int sx = x - i;
        if (sx < 0 || sx >= ww) continue;
        acc += k[i] * tmp[static_cast<std::size_t>(y) * ww + sx];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

struct ChannelMoments {
  Plane mx, my, x2, y2, xy;
  int ww, wh;
};

ChannelMoments channel_moments(const Plane& px, const Plane& py, int w, int h) {
  ChannelMoments m;
  m.ww = w - kSsimWindow + 1;
  m.wh = h - kSsimWindow + 1;
  Plane xx(px.size()), yy(px.size()), xy(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    xx[i] = px[i] * px[i];
    yy[i] = py[i] * py[i];
    xy[i] = px[i] * py[i];
  }
  m.mx = filter_valid(px, w, h);
  m.my = filter_valid(py, w, h);
  m.x2 = filter_valid(xx, w, h);
  m.y2 = filter_valid(yy, w, h);
  m.xy = filter_valid(xy, w, h);
  return m;
}

inline void ssim_terms(const ChannelMoments& m, std::size_t i, double& s, double& a1, double& a2,
                       double& b1, double& b2) {
  const double sx = m.x2[i] - m.mx[i] * m.mx[i];
  const double sy = m.y2[i] - m.my[i] * m.my[i];
  const double sxy = m.xy[i] - m.mx[i] * m.my[i];
  a1 = 2.0 * m.mx[i] * m.my[i] + kSsimC1;
  a2 = 2.0 * sxy + kSsimC2;
  b1 = m.mx[i] * m.mx[i] + m.my[i] * m.my[i] + kSsimC1;
  b2 = sx + sy + kSsimC2;
  s = (a1 * a2) / (b1 * b2);
}

}  // namespace

double ssim(const Image& x, const Image& y) {
  check_ssim_shapes(x, y);
  double total = 0.0;
  std::size_t n_windows = 0;
  for (int c = 0; c < 3; ++c) {
    const ChannelMoments m = channel_moments(channel_plane(x, c), channel_plane(y, c), x.width,
                                             x.height);
    n_windows = m.mx.size();
    for (std::size_t i = 0; i < m.mx.size(); ++i) {
      double s, a1, a2, b1, b2;
      ssim_terms(m, i, s, a1, a2, b1, b2);
      total += s;
    }
  }
  return total / (3.0 * static_cast<double>(n_windows));
}

double ssim_backward(const Image& x, const Image& y, double upstream, Image& dx) {
  check_ssim_shapes(x, y);
  if (!dx.same_shape(x)) dx = Image(x.width, x.height);
  const int w = x.width, h = x.height;
  double total = 0.0;
  std::size_t n_windows = 0;

  for (int c = 0; c < 3; ++c) {
    const Plane px = channel_plane(x, c);
    const Plane py = channel_plane(y, c);
    const ChannelMoments m = channel_moments(px, py, w, h);
    n_windows = m.mx.size();
    const double coeff = upstream / (3.0 * static_cast<double>(n_windows));

    // Window-space gradients: A -> mu_x (total), B -> E[x^2], C -> E[xy].
    Plane ga(m.mx.size()), gb(m.mx.size()), gc(m.mx.size());
    for (std::size_t i = 0; i < m.mx.size(); ++i) {
      double s, a1, a2, b1, b2;
      ssim_terms(m, i, s, a1, a2, b1, b2);
      total += s;
      const double den = b1 * b2;
      const double ds_dmx = (2.0 * m.my[i] * a2 - s * 2.0 * m.mx[i] * b2) / den;
      const double ds_dsxx = -s * b1 / den;
      const double ds_dsxy = 2.0 * a1 / den;
      // sigma_xx = E[x^2] - mu_x^2 and sigma_xy = E[xy] - mu_x mu_y fold into mu_x.
      ga[i] = coeff * (ds_dmx - 2.0 * m.mx[i] * ds_dsxx - m.my[i] * ds_dsxy);
      gb[i] = coeff * ds_dsxx;
      gc[i] = coeff * ds_dsxy;
    }

    const Plane sa = scatter_full(ga, w, h);
    const Plane sb = scatter_full(gb, w, h);
    const Plane sc = scatter_full(gc, w, h);
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
        dx.at(xx, yy, c) += sa[i] + 2.0 * px[i] * sb[i] + py[i] * sc[i];
      }
    }
  }
  return total / (3.0 * static_cast<double>(n_windows));
}

RgbLossResult loss_rgb(const Image& rendered, const Image& target, double lambda) {
  if (!rendered.same_shape(target)) {
    throw Error(ErrorKind::ShapeMismatch, "rendered/target dimensions do not match");
  }
  RgbLossResult out;
  out.grad = Image(rendered.width, rendered.height);

  const std::size_t n = rendered.data.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = rendered.data[i] - target.data[i];
    l1 += std::abs(diff);
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    out.grad.data[i] = (1.0 - lambda) * sign * inv_n;
  }
  out.l1 = l1 * inv_n;

  // D-SSIM = (1 - ssim)/2, so the upstream into ssim is -lambda/2.
  const double s = ssim_backward(rendered, target, -lambda / 2.0, out.grad);
  out.dssim = (1.0 - s) / 2.0;
  out.value = (1.0 - lambda) * out.l1 + lambda * out.dssim;
  return out;
}

Metrics metrics(const Image& rendered, const Image& target) {
  if (!rendered.same_shape(target)) {
    throw Error(ErrorKind::ShapeMismatch, "rendered/target dimensions do not match");
  }
  Metrics m;
  double sq = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - target.data[i];
    sq += d * d;
  }
  m.mse = sq / static_cast<double>(rendered.data.size());
  m.psnr = m.mse > 0.0 ? -10.0 * std::log10(m.mse) : std::numeric_limits<double>::infinity();
  m.ssim = ssim(rendered, target);
  return m;
}

}  // namespace gavatar
