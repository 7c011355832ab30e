#pragma once

#include <vector>

#include "gavatar/image.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  Mat3 w2c_rot = Mat3::Identity();
  Vec3 w2c_trans = Vec3::Zero();
  int width = 0, height = 0;
  double near = 1e-3;
};

// Global-space Gaussian as the renderer consumes it: activations already applied.
struct RenderSplat {
  Vec3 mean;
  Mat3 rot;      // global rotation matrix
  Vec3 scale;    // global per-axis scale
  Vec3 color;
  double opacity;  // in (0, 1)
};

struct ProjectedSplat {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();  // includes the isotropic dilation
  double depth = 0.0;
  bool valid = false;  // false: culled behind the camera
};

inline constexpr double kCovDilation = 0.3;  // px^2, keeps cov2d positive definite

// Perspective projection of the Gaussian: pinhole mean, first-order covariance
// transport J Sigma J^T plus dilation.
ProjectedSplat project(const RenderSplat& g, const Camera& cam);

struct RenderOptions {
  Vec3 background = Vec3::Zero();
  int threads = 1;
  // Per-splat evaluation is restricted to a bounding box sized so the excluded
  // Gaussian tail stays below this weight.
  double tail_eps = 1e-10;
};

// Forward cache for the backward pass.
struct RenderCache {
  struct Prepared {
    std::size_t orig_index;
    Vec2 mean2d;
    Mat2 inv_cov;
    double depth;
    Vec3 t_cam;
    Mat3 rot;
    Vec3 scale;
    Vec3 color;
    double opacity;
    int x0, x1, y0, y1;  // inclusive pixel bounds
  };
  std::vector<Prepared> prepared;             // depth-sorted, ties by input index
  std::vector<std::vector<Index>> row_lists;  // per row: indices into `prepared`
  std::vector<double> final_transmittance;    // per pixel
  Camera camera;
  RenderOptions options;
  std::size_t num_input_splats = 0;
};

// Depth-sorts, composites front to back with weights clamped to <= 0.99, and
// blends the remaining transmittance with the background. Deterministic for a
// fixed input regardless of the thread count.
Image render(const std::vector<RenderSplat>& splats, const Camera& cam,
             const RenderOptions& opts = {}, RenderCache* cache = nullptr);

struct SplatRenderGrads {
  Vec3 dmean = Vec3::Zero();
  Mat3 drot = Mat3::Zero();
  Vec3 dscale = Vec3::Zero();
  Vec3 dcolor = Vec3::Zero();
  double dopacity = 0.0;
  double grad2d_norm = 0.0;  // norm of the accumulated screen-space mean gradient
};

// Exact adjoint of render() for every input splat attribute.
std::vector<SplatRenderGrads> render_backward(const RenderCache& cache, const Image& dimage);

}  // namespace gavatar
