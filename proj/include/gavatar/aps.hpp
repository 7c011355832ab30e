#pragma once

#include <vector>

#include "gavatar/geometry.hpp"
#include "gavatar/splats.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

// Output of the pre-allocation stage: per-part and per-face set membership.
// Mouth parts are fixed up front and never reassigned.
struct FaceSetAssignment {
  std::vector<FaceSet> set_of_part;
  std::vector<FaceSet> set_of_face;
  std::vector<double> part_distance;  // Distance(k); mouth entries reported but unused
  double tau_part = 0.0;

  static FaceSetAssignment all_rigid(const TriMesh& mesh, const std::vector<int>& mouth_parts);
};

// Mean over the part's faces of the mean local-mean radius of the bound
// Gaussians. Faces with no bound Gaussian contribute 0.
double part_distance(const SplatSet& set, const TriMesh& mesh, int part_k);

struct ApsResult {
  FaceSetAssignment assignment;
  std::size_t empty_faces = 0;  // faces that contributed 0 because nothing binds to them
};

// Splits non-mouth parts into rigid/flexible around the mean of their
// distances. Ties go rigid. Needs at least two non-mouth parts.
ApsResult assign_sets(const std::vector<double>& distances, const std::vector<int>& mouth_parts,
                      const TriMesh& mesh);

ApsResult run_aps(const SplatSet& set, const TriMesh& mesh, const std::vector<int>& mouth_parts);

}  // namespace gavatar
