#pragma once

#include <random>
#include <vector>

#include "gavatar/geometry.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

// One Gaussian in its bound face's frame: local mean, local rotation, log of the
// per-axis local scale, degree-0 RGB color, and pre-sigmoid opacity.
struct Splat {
  Vec3 mu = Vec3::Zero();
  Quat rot = Quat::Identity();       // unit quaternion, renormalized each optimizer step
  Vec3 log_scale = Vec3::Zero();
  Vec3 color = Vec3::Constant(0.5);  // [0,1] per channel
  double opacity_logit = 0.0;
};

struct GlobalGaussian {
  Vec3 mean;
  Quat rot;
  Vec3 scale;
};

// Splats plus a parallel face-binding array. The inverted index (face -> bound
// splats) is rebuilt on demand and after every densify/prune.
struct SplatSet {
  std::vector<Splat> splats;
  std::vector<Index> binding;

  std::size_t size() const { return splats.size(); }
  void validate(std::size_t num_faces) const;
  std::vector<std::vector<Index>> bound_by_face(std::size_t num_faces) const;
};

// S_face * R_face * mu + C_face, S_face * exp(log_scale), quat(R_face) * rot.
GlobalGaussian to_global(const Splat& splat, const FaceFrame& frame);

inline constexpr double kDefaultInitLocalScale = 0.5;   // face-scale-relative
inline constexpr double kDefaultInitOpacity = 0.1;

SplatSet initialize_on_mesh(const TriMesh& mesh, int per_face,
                            double init_local_scale = kDefaultInitLocalScale,
                            double init_opacity = kDefaultInitOpacity);

struct DensifyOptions {
  double grad_threshold = 0.05;    // positional-gradient norm that triggers clone/split
  double split_scale = 0.35;       // local scales above this split, below clone
  double split_ratio = 1.6;        // child scale = parent scale / split_ratio
  double prune_opacity = 5e-3;
  std::size_t max_splats = 100000;
};

struct DensifyReport {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
  std::size_t empty_faces = 0;  // faces left with no bound splat, allowed but flagged
  // Provenance per surviving splat, so optimizer state can be carried over:
  // source = old index, is_new = attributes were rewritten (split children and
  // clone copies start with fresh optimizer moments).
  std::vector<Index> source;
  std::vector<std::uint8_t> is_new;
};

// Clone/split splats whose accumulated positional-gradient norm exceeds the
// threshold, prune low-opacity splats. Children inherit the parent binding.
DensifyReport densify_and_prune(SplatSet& set, const std::vector<double>& grad_norms,
                                const DensifyOptions& opts, std::size_t num_faces,
                                std::mt19937_64& rng);

// Bounds used to clamp log_scale after optimizer steps so exp(log_scale)
// stays inside (1e-8, 1e3).
inline constexpr double kMinLogScale = -18.0;
inline constexpr double kMaxLogScale = 6.9;

// Quaternion gradient storage order (w, x, y, z).
using QuatGrad = Eigen::Vector4d;

// Pullback of a rotation-matrix gradient onto the unit quaternion it came from.
QuatGrad quat_rotmat_backward(const Quat& q_unit, const Mat3& drot);

// Pullback through q_hat = q / |q|.
QuatGrad quat_normalize_backward(const Quat& q_raw, const QuatGrad& dq_unit);

}  // namespace gavatar
