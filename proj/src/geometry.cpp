#include "gavatar/geometry.hpp"

#include <cmath>

namespace gavatar {

void TriMesh::validate() const {
  const std::size_t nv = vertices.size();
  if (part_of_face.size() != faces.size()) {
    throw Error(ErrorKind::UnassignedFace, "part_of_face size does not match face count");
  }
  const int np = num_parts();
  std::vector<std::size_t> part_sizes(static_cast<std::size_t>(np), 0);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (Index v : faces[i]) {
      if (v >= nv) {
        throw Error(ErrorKind::BadFile, "face " + std::to_string(i) + " references vertex " +
                                            std::to_string(v) + " out of range");
      }
    }
    const int p = part_of_face[i];
    if (p < 0 || p >= np) {
      throw Error(ErrorKind::UnassignedFace,
                  "face " + std::to_string(i) + " has invalid part id " + std::to_string(p));
    }
    ++part_sizes[static_cast<std::size_t>(p)];
  }
  std::size_t total = 0;
  for (std::size_t s : part_sizes) total += s;
  if (total != faces.size()) {
    throw Error(ErrorKind::UnassignedFace, "part masks do not partition the face set");
  }
}

std::vector<std::vector<Index>> TriMesh::faces_of_part() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(num_parts()));
  for (std::size_t i = 0; i < faces.size(); ++i) {
    out[static_cast<std::size_t>(part_of_face[i])].push_back(static_cast<Index>(i));
  }
  return out;
}

double face_area(const TriMesh& mesh, Index face_index) {
  const auto& f = mesh.faces[face_index];
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3& b = mesh.vertices[f[1]];
  const Vec3& c = mesh.vertices[f[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

FaceFrame compute_face_frame(const TriMesh& mesh, Index face_index) {
  const auto& f = mesh.faces[face_index];
  const Vec3& v0 = mesh.vertices[f[0]];
  const Vec3& v1 = mesh.vertices[f[1]];
  const Vec3& v2 = mesh.vertices[f[2]];

  const Vec3 e01 = v1 - v0;
  const Vec3 e02 = v2 - v0;
  const Vec3 n_raw = e01.cross(e02);
  const double area = 0.5 * n_raw.norm();
  if (area <= 1e-12) {
    throw Error(ErrorKind::DegenerateFace,
                "face " + std::to_string(face_index) + " is degenerate (area <= 1e-12)");
  }

  const Vec3 tangent = e01.normalized();
  const Vec3 normal = n_raw.normalized();
  const Vec3 bitangent = normal.cross(tangent);  // unit since normal is orthogonal to tangent

  FaceFrame frame;
  frame.rotation.col(0) = tangent;
  frame.rotation.col(1) = bitangent;
  frame.rotation.col(2) = normal;
  frame.center = (v0 + v1 + v2) / 3.0;
  frame.scale = ((v1 - v0).norm() + (v2 - v1).norm() + (v0 - v2).norm()) / 3.0;
  return frame;
}

std::vector<FaceFrame> compute_all_frames(const TriMesh& mesh) {
  std::vector<FaceFrame> frames;
  frames.reserve(mesh.faces.size());
  for (Index i = 0; i < mesh.faces.size(); ++i) frames.push_back(compute_face_frame(mesh, i));
  return frames;
}

PolarMean to_polar(const Vec3& mu) {
  PolarMean p;
  p.r = mu.norm();
  if (p.r < 1e-12) {
    return {0.0, 0.0, 0.0};
  }
  const double cx = std::clamp(mu.x() / p.r, -1.0, 1.0);
  const double cz = std::clamp(mu.z() / p.r, -1.0, 1.0);
  p.theta = std::acos(cx);
  p.phi = std::acos(cz);
  return p;
}

PolarGradients polar_gradients(const Vec3& mu) {
  const double r = mu.norm();
  if (r <= kPolarMinRadius) {
    throw Error(ErrorKind::NearSingular, "polar gradient undefined near the origin");
  }
  const double u = mu.z() / r;
  if (std::abs(u) >= 1.0 - kPolarPoleMargin) {
    throw Error(ErrorKind::NearSingular, "phi gradient undefined near the +-z pole");
  }
  PolarGradients g;
  g.dr_dmu = mu / r;
  // phi = acos(z/r); d(z/r)/dmu = e_z/r - z*mu/r^3
  const Vec3 du_dmu = Vec3(0, 0, 1) / r - mu.z() * mu / (r * r * r);
  g.dphi_dmu = -du_dmu / std::sqrt(1.0 - u * u);
  return g;
}

}  // namespace gavatar
