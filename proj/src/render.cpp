#include "gavatar/render.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace gavatar {

namespace {

constexpr double kMaxPixelWeight = 0.99;
constexpr double kMinTransmittance = 1e-12;

Mat3 camera_space_cov(const RenderSplat& g, const Camera& cam) {
  const Mat3 m = g.rot * g.scale.asDiagonal();
  const Mat3 sigma = m * m.transpose();
  return cam.w2c_rot * sigma * cam.w2c_rot.transpose();
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& t, const Camera& cam) {
  Eigen::Matrix<double, 2, 3> j;
  const double inv_z = 1.0 / t.z();
  j << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z * inv_z,
      0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z * inv_z;
  return j;
}

void run_rows(int height, int threads, const std::function<void(int, int)>& body) {
  if (threads <= 1 || height <= 1) {
    body(0, height);
    return;
  }
  const int workers = std::min(threads, height);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const int chunk = (height + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int y0 = w * chunk;
    const int y1 = std::min(height, y0 + chunk);
    if (y0 >= y1) break;
    pool.emplace_back(body, y0, y1);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

ProjectedSplat project(const RenderSplat& g, const Camera& cam) {
  ProjectedSplat out;
  const Vec3 t = cam.w2c_rot * g.mean + cam.w2c_trans;
  if (t.z() <= cam.near) {
    return out;  // behind the camera: culled, not an error
  }
  out.depth = t.z();
  out.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
  const auto j = projection_jacobian(t, cam);
  out.cov2d = j * camera_space_cov(g, cam) * j.transpose() + kCovDilation * Mat2::Identity();
  out.valid = true;
  return out;
}

Image render(const std::vector<RenderSplat>& splats, const Camera& cam, const RenderOptions& opts,
             RenderCache* cache) {
  RenderCache local_cache;
  RenderCache& c = cache != nullptr ? *cache : local_cache;
  c.prepared.clear();
  c.row_lists.assign(static_cast<std::size_t>(cam.height), {});
  c.final_transmittance.assign(static_cast<std::size_t>(cam.width) * cam.height, 1.0);
  c.camera = cam;
  c.options = opts;
  c.num_input_splats = splats.size();

  const double k_sigma = std::max(3.0, std::sqrt(-2.0 * std::log(opts.tail_eps)));

  for (std::size_t i = 0; i < splats.size(); ++i) {
    const ProjectedSplat p = project(splats[i], cam);
    if (!p.valid) continue;

    // Largest eigenvalue of the 2x2 covariance bounds the footprint.
    const double a = p.cov2d(0, 0), b = p.cov2d(0, 1), d = p.cov2d(1, 1);
    const double lam_max = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    const double radius = k_sigma * std::sqrt(lam_max);

    RenderCache::Prepared prep;
    prep.orig_index = i;
    prep.mean2d = p.mean2d;
    prep.inv_cov = p.cov2d.inverse();
    prep.depth = p.depth;
    prep.t_cam = cam.w2c_rot * splats[i].mean + cam.w2c_trans;
    prep.rot = splats[i].rot;
    prep.scale = splats[i].scale;
    prep.color = splats[i].color;
    prep.opacity = splats[i].opacity;
    prep.x0 = std::max(0, static_cast<int>(std::ceil(p.mean2d.x() - radius - 0.5)));
    prep.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(p.mean2d.x() + radius - 0.5)));
    prep.y0 = std::max(0, static_cast<int>(std::ceil(p.mean2d.y() - radius - 0.5)));
    prep.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(p.mean2d.y() + radius - 0.5)));
    if (prep.x0 > prep.x1 || prep.y0 > prep.y1) continue;
    c.prepared.push_back(prep);
  }

  std::sort(c.prepared.begin(), c.prepared.end(),
            [](const RenderCache::Prepared& lhs, const RenderCache::Prepared& rhs) {
              if (lhs.depth != rhs.depth) return lhs.depth < rhs.depth;
              return lhs.orig_index < rhs.orig_index;
            });

  for (Index pi = 0; pi < c.prepared.size(); ++pi) {
    const auto& prep = c.prepared[pi];
    for (int y = prep.y0; y <= prep.y1; ++y) c.row_lists[static_cast<std::size_t>(y)].push_back(pi);
  }

  Image img(cam.width, cam.height);
  run_rows(cam.height, opts.threads, [&](int row_begin, int row_end) {
    for (int y = row_begin; y < row_end; ++y) {
      const auto& row = c.row_lists[static_cast<std::size_t>(y)];
      for (int x = 0; x < cam.width; ++x) {
        const Vec2 pixel(x + 0.5, y + 0.5);
        Vec3 color = Vec3::Zero();
        double transmittance = 1.0;
        for (Index pi : row) {
          const auto& prep = c.prepared[pi];
          if (x < prep.x0 || x > prep.x1) continue;
          const Vec2 diff = pixel - prep.mean2d;
          const double mahal = diff.dot(prep.inv_cov * diff);
          double w = prep.opacity * std::exp(-0.5 * mahal);
          if (w > kMaxPixelWeight) w = kMaxPixelWeight;
          if (w <= 0.0) continue;
          color += prep.color * (w * transmittance);
          transmittance *= 1.0 - w;
          if (transmittance < kMinTransmittance) break;
        }
        color += opts.background * transmittance;
        c.final_transmittance[static_cast<std::size_t>(y) * cam.width + x] = transmittance;
        for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = color[ch];
      }
    }
  });
  return img;
}

namespace {

// Per-splat screen-space gradient accumulators.
struct ScreenGrads {
  Vec2 dmean2d = Vec2::Zero();
  Mat2 dinv_cov = Mat2::Zero();
  Vec3 dcolor = Vec3::Zero();
  double dopacity = 0.0;
};

}  // namespace

std::vector<SplatRenderGrads> render_backward(const RenderCache& cache, const Image& dimage) {
  const Camera& cam = cache.camera;
  if (dimage.width != cam.width || dimage.height != cam.height) {
    throw Error(ErrorKind::ShapeMismatch, "image gradient does not match the render size");
  }
  if (cache.final_transmittance.size() != static_cast<std::size_t>(cam.width) * cam.height) {
    throw Error(ErrorKind::NoForwardCache, "render cache is empty or stale");
  }

  const std::size_t n_prepared = cache.prepared.size();
  const int threads = std::max(1, cache.options.threads);

  // Row-indexed partial accumulators: combining them in row order makes the
  // result identical for every thread count.
  std::vector<std::vector<ScreenGrads>> row_partials(
      static_cast<std::size_t>(cam.height), std::vector<ScreenGrads>());

  run_rows(cam.height, threads, [&](int row_begin, int row_end) {
    for (int y = row_begin; y < row_end; ++y) {
      const auto& row = cache.row_lists[static_cast<std::size_t>(y)];
      if (row.empty()) continue;
      auto& partial = row_partials[static_cast<std::size_t>(y)];
      partial.assign(n_prepared, ScreenGrads());

      for (int x = 0; x < cam.width; ++x) {
        const Vec3 g(dimage.at(x, y, 0), dimage.at(x, y, 1), dimage.at(x, y, 2));
        if (g.isZero(0.0)) continue;
        const Vec2 pixel(x + 0.5, y + 0.5);

        // Reconstruct the per-pixel weights front to back (the forward pass may
        // have stopped early once the transmittance underflowed).
        thread_local std::vector<std::pair<Index, double>> hits;
        hits.clear();
        double transmittance = 1.0;
        for (Index pi : row) {
          const auto& prep = cache.prepared[pi];
          if (x < prep.x0 || x > prep.x1) continue;
          const Vec2 diff = pixel - prep.mean2d;
          const double mahal = diff.dot(prep.inv_cov * diff);
          double w = prep.opacity * std::exp(-0.5 * mahal);
          if (w > kMaxPixelWeight) w = kMaxPixelWeight;
          if (w <= 0.0) continue;
          hits.emplace_back(pi, w);
          transmittance *= 1.0 - w;
          if (transmittance < kMinTransmittance) break;
        }

        // Back-to-front: T_i = T_{i+1} / (1 - w_i); S accumulates the suffix
        // contribution (everything composited behind splat i).
        double t_running = transmittance;
        Vec3 suffix = cache.options.background * transmittance;
        for (std::size_t h = hits.size(); h-- > 0;) {
          const Index pi = hits[h].first;
          const double w = hits[h].second;
          const auto& prep = cache.prepared[pi];
          t_running /= 1.0 - w;

          ScreenGrads& acc = partial[pi];
          acc.dcolor += g * (w * t_running);
          const double dpix_dw = g.dot(prep.color * t_running - suffix / (1.0 - w));
          suffix += prep.color * (w * t_running);

          const bool clamped = w >= kMaxPixelWeight;
          if (clamped) continue;  // flat region of the clamp: no gradient through w

          const Vec2 diff = pixel - prep.mean2d;
          const Vec2 invcov_d = prep.inv_cov * diff;
          acc.dopacity += dpix_dw * (w / prep.opacity);
          acc.dmean2d += dpix_dw * w * invcov_d;
          acc.dinv_cov += dpix_dw * (-0.5 * w) * (diff * diff.transpose());
        }
      }
    }
  });

  // Fold row partials in row order, then push each splat's screen-space
  // gradient back through projection, covariance transport, and activations.
  std::vector<ScreenGrads> screen(n_prepared);
  for (int y = 0; y < cam.height; ++y) {
    const auto& partial = row_partials[static_cast<std::size_t>(y)];
    if (partial.empty()) continue;
    for (std::size_t i = 0; i < n_prepared; ++i) {
      screen[i].dmean2d += partial[i].dmean2d;
      screen[i].dinv_cov += partial[i].dinv_cov;
      screen[i].dcolor += partial[i].dcolor;
      screen[i].dopacity += partial[i].dopacity;
    }
  }

  std::vector<SplatRenderGrads> grads(cache.num_input_splats);
  for (std::size_t i = 0; i < n_prepared; ++i) {
    const auto& prep = cache.prepared[i];
    const ScreenGrads& sg = screen[i];
    SplatRenderGrads& out = grads[prep.orig_index];

    out.dcolor = sg.dcolor;
    out.dopacity = sg.dopacity;
    out.grad2d_norm = sg.dmean2d.norm();

    // d/dSigma2d from d/d(Sigma2d^-1): -A G A with A the inverse.
    const Mat2 dcov2d = -prep.inv_cov * sg.dinv_cov * prep.inv_cov;

    const auto j = projection_jacobian(prep.t_cam, cam);
    const Mat3 dv_cam = j.transpose() * dcov2d * j;

    // Sigma_cam = W Sigma W^T
    const Mat3 dsigma = cam.w2c_rot.transpose() * dv_cam * cam.w2c_rot;

    // dJ for the covariance term: 2 dCov J V  (dCov symmetric, V symmetric).
    const Mat3 m = prep.rot * prep.scale.asDiagonal();
    const Mat3 sigma = m * m.transpose();
    const Mat3 v_cam = cam.w2c_rot * sigma * cam.w2c_rot.transpose();
    const Eigen::Matrix<double, 2, 3> dj = 2.0 * dcov2d * j * v_cam;

    // Gradient w.r.t. the camera-space position from J and from mean2d.
    const double tx = prep.t_cam.x(), ty = prep.t_cam.y(), tz = prep.t_cam.z();
    const double inv_z = 1.0 / tz;
    const double inv_z2 = inv_z * inv_z;
    Vec3 dt = Vec3::Zero();
    dt.x() += dj(0, 2) * (-cam.fx * inv_z2);
    dt.y() += dj(1, 2) * (-cam.fy * inv_z2);
    dt.z() += dj(0, 0) * (-cam.fx * inv_z2) + dj(1, 1) * (-cam.fy * inv_z2) +
              dj(0, 2) * (2.0 * cam.fx * tx * inv_z2 * inv_z) +
              dj(1, 2) * (2.0 * cam.fy * ty * inv_z2 * inv_z);
    dt.x() += sg.dmean2d.x() * cam.fx * inv_z;
    dt.y() += sg.dmean2d.y() * cam.fy * inv_z;
    dt.z() += -sg.dmean2d.x() * cam.fx * tx * inv_z2 - sg.dmean2d.y() * cam.fy * ty * inv_z2;

    out.dmean = cam.w2c_rot.transpose() * dt;

    // Sigma = M M^T with M = R diag(s).
    const Mat3 dm = 2.0 * dsigma * m;
    for (int k = 0; k < 3; ++k) {
      out.dscale[k] = dm.col(k).dot(prep.rot.col(k));
    }
    out.drot = dm * prep.scale.asDiagonal();
  }
  return grads;
}

}  // namespace gavatar
