#pragma once

#include <array>
#include <string>
#include <vector>

#include "gavatar/types.hpp"

namespace gavatar {

// Deformable triangle mesh with a per-face part segmentation.
// Part ids are contiguous 0..num_parts()-1; every face belongs to exactly one part.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 3>> faces;
  std::vector<int> part_of_face;
  std::vector<std::string> part_names;

  int num_parts() const { return static_cast<int>(part_names.size()); }
  std::size_t num_faces() const { return faces.size(); }
  std::size_t num_vertices() const { return vertices.size(); }

  // Throws on out-of-range face indices or a broken part partition.
  void validate() const;

  std::vector<std::vector<Index>> faces_of_part() const;
};

// Local frame of one triangle: orthonormal rotation (third column = face normal),
// centroid, and a scalar scale (mean edge length).
struct FaceFrame {
  Mat3 rotation;
  Vec3 center;
  double scale = 1.0;
};

struct PolarMean {
  double r = 0.0;
  double theta = 0.0;  // angle to the local +x axis, in [0, pi]
  double phi = 0.0;    // angle to the local +z axis (face normal), in [0, pi]
};

double face_area(const TriMesh& mesh, Index face_index);

// Throws DegenerateFace when the triangle area is <= 1e-12.
FaceFrame compute_face_frame(const TriMesh& mesh, Index face_index);

std::vector<FaceFrame> compute_all_frames(const TriMesh& mesh);

// Zero vector maps to (0, 0, 0) by convention.
PolarMean to_polar(const Vec3& mu);

struct PolarGradients {
  Vec3 dr_dmu;
  Vec3 dphi_dmu;
};

// Valid away from the origin and the +-z poles; throws NearSingular otherwise
// (callers mask the gradient to zero in that case).
PolarGradients polar_gradients(const Vec3& mu);

inline constexpr double kPolarMinRadius = 1e-8;
inline constexpr double kPolarPoleMargin = 1e-8;  // |z/r| must stay below 1 - margin

}  // namespace gavatar
