#include "gavatar/aps.hpp"

#include <algorithm>

namespace gavatar {

namespace {

bool is_mouth_part(const std::vector<int>& mouth_parts, int part) {
  return std::find(mouth_parts.begin(), mouth_parts.end(), part) != mouth_parts.end();
}

void fill_faces(FaceSetAssignment& a, const TriMesh& mesh) {
  a.set_of_face.resize(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    a.set_of_face[f] = a.set_of_part[static_cast<std::size_t>(mesh.part_of_face[f])];
  }
}

}  // namespace

FaceSetAssignment FaceSetAssignment::all_rigid(const TriMesh& mesh,
                                               const std::vector<int>& mouth_parts) {
  FaceSetAssignment a;
  a.set_of_part.assign(static_cast<std::size_t>(mesh.num_parts()), FaceSet::Rigid);
  for (int p : mouth_parts) a.set_of_part[static_cast<std::size_t>(p)] = FaceSet::Mouth;
  a.part_distance.assign(a.set_of_part.size(), 0.0);
  fill_faces(a, mesh);
  return a;
}

double part_distance(const SplatSet& set, const TriMesh& mesh, int part_k) {
  const auto by_face = set.bound_by_face(mesh.num_faces());
  double sum = 0.0;
  std::size_t n_faces = 0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.part_of_face[f] != part_k) continue;
    ++n_faces;
    const auto& bound = by_face[f];
    if (bound.empty()) continue;  // contributes 0
    double face_mean = 0.0;
    for (Index s : bound) face_mean += set.splats[s].mu.norm();
    sum += face_mean / static_cast<double>(bound.size());
  }
  if (n_faces == 0) {
    throw Error(ErrorKind::EmptyPart, "part " + std::to_string(part_k) + " has no faces");
  }
  return sum / static_cast<double>(n_faces);
}

ApsResult assign_sets(const std::vector<double>& distances, const std::vector<int>& mouth_parts,
                      const TriMesh& mesh) {
  if (distances.size() != static_cast<std::size_t>(mesh.num_parts())) {
    throw Error(ErrorKind::ShapeMismatch, "distance list does not match the part count");
  }

  double tau = 0.0;
  std::size_t n_non_mouth = 0;
  for (int p = 0; p < mesh.num_parts(); ++p) {
    if (is_mouth_part(mouth_parts, p)) continue;
    tau += distances[static_cast<std::size_t>(p)];
    ++n_non_mouth;
  }
  if (n_non_mouth < 2) {
    throw Error(ErrorKind::TooFewParts, "need at least two non-mouth parts to split");
  }
  tau /= static_cast<double>(n_non_mouth);

  ApsResult out;
  out.assignment.tau_part = tau;
  out.assignment.part_distance = distances;
  out.assignment.set_of_part.resize(static_cast<std::size_t>(mesh.num_parts()));
  for (int p = 0; p < mesh.num_parts(); ++p) {
    if (is_mouth_part(mouth_parts, p)) {
      out.assignment.set_of_part[static_cast<std::size_t>(p)] = FaceSet::Mouth;
    } else if (distances[static_cast<std::size_t>(p)] > tau) {
      out.assignment.set_of_part[static_cast<std::size_t>(p)] = FaceSet::Flexible;
    } else {
      // Strictly-below goes rigid; exact ties also go rigid (the stronger
      // regularization is the conservative default).
      out.assignment.set_of_part[static_cast<std::size_t>(p)] = FaceSet::Rigid;
    }
  }
  fill_faces(out.assignment, mesh);
  return out;
}

ApsResult run_aps(const SplatSet& set, const TriMesh& mesh, const std::vector<int>& mouth_parts) {
  std::vector<double> distances(static_cast<std::size_t>(mesh.num_parts()), 0.0);
  for (int p = 0; p < mesh.num_parts(); ++p) {
    distances[static_cast<std::size_t>(p)] = part_distance(set, mesh, p);
  }
  ApsResult out = assign_sets(distances, mouth_parts, mesh);

  const auto by_face = set.bound_by_face(mesh.num_faces());
  for (const auto& bound : by_face) {
    if (bound.empty()) ++out.empty_faces;
  }
  return out;
}

}  // namespace gavatar
