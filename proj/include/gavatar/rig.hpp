#pragma once

#include <string>
#include <vector>

#include "gavatar/geometry.hpp"
#include "gavatar/image.hpp"
#include "gavatar/mouth.hpp"
#include "gavatar/render.hpp"
#include "gavatar/splats.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

// Per-frame animation parameters.
struct RigParams {
  VecX psi;          // expression coefficients
  VecX theta;        // pose; theta[0] drives the jaw joint
  Vec3 rotation = Vec3::Zero();  // global axis-angle
  Vec3 translation = Vec3::Zero();
  double t_norm = 0.0;  // timestep normalized to [0, 1] over the sequence
};

// Linear blendshape rig with one jaw joint and a global rigid transform:
//   V = global(R, t) . jaw_rotate(theta) . (V_base + B psi)
struct BlendRig {
  TriMesh base;
  MatX expr_basis;  // (3 * num_vertices) x psi_dim
  Vec3 jaw_pivot = Vec3::Zero();
  Vec3 jaw_axis = Vec3::UnitX();
  std::vector<std::uint8_t> jaw_weight;  // binary, per vertex
  int theta_dim = 1;

  int psi_dim() const { return static_cast<int>(expr_basis.cols()); }
  TriMesh evaluate(const RigParams& params) const;
};

Mat3 axis_angle_to_matrix(const Vec3& axis_angle);

// A generated scene: ground-truth frames plus everything the trainer needs to
// refit them. The ground-truth splats use the same renderer that training
// uses, so targets are exactly representable (a deliberate closed-loop setup;
// this verifies optimization behavior, not real-capture robustness).
struct Scene {
  std::string preset;
  std::uint64_t seed = 0;
  BlendRig rig;
  MouthAugmentation aug;  // empty when has_mouth == false
  bool has_mouth = false;
  std::vector<int> mouth_parts;
  Camera camera;
  Vec3 background = Vec3::Zero();
  std::vector<RigParams> params;
  std::vector<Image> frames;
  std::vector<FaceSet> gt_set_of_part;  // rigid/flexible truth for scoring
  SplatSet gt_splats;
  // Ground-truth mouth misalignment injected on top of the rig (what the
  // deformation networks are expected to absorb).
  Vec3 gt_mouth_upper_per_jaw = Vec3::Zero();
  Vec3 gt_mouth_lower_per_jaw = Vec3::Zero();
};

struct SceneSpec {
  std::string preset = "smoke";  // smoke | aps | mouth
  int frames = 20;
  int width = 64, height = 64;
  std::uint64_t seed = 1;
  double detail_rigid = 0.02;     // ground-truth |mu| on rigid-truth parts (face units)
  double detail_flexible = 0.35;  // and on flexible-truth parts
};

Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                          int width, int height);

TriMesh make_uv_sphere(int n_lat, int n_lon, double radius);

Scene generate_scene(const SceneSpec& spec);

// Ground-truth frame render for one frame index (used by generate_scene and by
// tests that need targets without storing them).
Image render_scene_frame(const Scene& scene, const RigParams& params);

}  // namespace gavatar
