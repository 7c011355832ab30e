#pragma once

#include <array>
#include <string>
#include <vector>

#include "gavatar/geometry.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

// 15 ordered vertices along the dental arch. All points share one y value; the
// arc lives in that xz-plane.
struct TeethTrajectory {
  std::array<Vec3, 15> points;

  void validate() const;
  double plane_y() const { return points[0].y(); }
};

enum class MouthPart : std::uint8_t { Upper = 0, Lower = 1 };

// Teeth strip plus palate/floor sheet for both rings, expressed against the mesh
// it was built from: new_faces index into the augmented mesh (original vertices
// first, then new_vertices).
struct MouthAugmentation {
  std::size_t base_vertex_count = 0;
  std::vector<Vec3> new_vertices;
  std::vector<std::array<Index, 3>> new_faces;
  std::vector<MouthPart> part_label;       // per new face
  std::vector<Index> upper_vertex_ids;     // indices into the augmented mesh
  std::vector<Index> lower_vertex_ids;
};

// Uniform arc-length resampling of an ordered ring polyline down to the 15
// trajectory points; y is flattened to the mean of the resampled points.
TeethTrajectory extract_trajectory(const TriMesh& mesh, const std::vector<Index>& ring);

// Intersection (x, z) of the perpendicular bisectors of v0v1 and v13v14.
// Throws ParallelBisectors for a near-straight trajectory.
Vec2 pseudo_center(const TeethTrajectory& traj);

// Reflects v1..v5 across the line C-v0 and v9..v13 across C-v14. Returns the 10
// new points in polyline order: left extension (farthest first), then right
// extension (nearest first), so that
//   left[0..4], v0..v14, right[0..4]
// is a simple polyline extending the arc past both ends.
std::vector<Vec3> extend_trajectory(const TeethTrajectory& traj, const Vec2& c);

MouthAugmentation build_mouth_structure(const TriMesh& mesh, const std::vector<Index>& upper_ring,
                                        const std::vector<Index>& lower_ring, double depth);

// Appends the augmentation geometry to the mesh under a single new part.
// Returns the new part id.
int splice_augmentation(TriMesh& mesh, const MouthAugmentation& aug,
                        const std::string& part_name = "mouth-interior");

// v' = v + dv for every vertex of the part; everything else untouched.
TriMesh apply_part_offsets(const TriMesh& mesh, const MouthAugmentation& aug, const Vec3& dv_upper,
                           const Vec3& dv_lower);

void apply_part_offsets_in_place(TriMesh& mesh, const MouthAugmentation& aug, const Vec3& dv_upper,
                                 const Vec3& dv_lower);

}  // namespace gavatar
