#include "gavatar/mouth.hpp"

#include <cmath>

namespace gavatar {

namespace {

constexpr std::size_t kTrajectoryPoints = 15;

Vec2 xz(const Vec3& p) { return Vec2(p.x(), p.z()); }

// Reflection of p across the line through a and b, restricted to the xz-plane.
Vec3 reflect_xz(const Vec3& p, const Vec2& a, const Vec2& b) {
  const Vec2 axis = b - a;
  const double len = axis.norm();
  if (len < 1e-12) {
    throw Error(ErrorKind::DegenerateAxis, "reflection axis has zero length");
  }
  const Vec2 d = axis / len;
  const Vec2 v = xz(p) - a;
  const Vec2 reflected = a + 2.0 * v.dot(d) * d - v;
  return Vec3(reflected.x(), p.y(), reflected.y());
}

}  // namespace

void TeethTrajectory::validate() const {
  const double y0 = points[0].y();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(points[i].y() - y0) > 1e-9) {
      throw Error(ErrorKind::BadFile, "teeth trajectory points do not share one y value");
    }
    if (i > 0 && (points[i] - points[i - 1]).norm() < 1e-12) {
      throw Error(ErrorKind::BadFile, "teeth trajectory has coincident consecutive points");
    }
  }
}

TeethTrajectory extract_trajectory(const TriMesh& mesh, const std::vector<Index>& ring) {
  if (ring.size() < kTrajectoryPoints) {
    throw Error(ErrorKind::BadFile, "ring needs at least 15 vertices, got " +
                                        std::to_string(ring.size()));
  }
  std::vector<Vec3> poly;
  poly.reserve(ring.size());
  for (Index id : ring) {
    if (id >= mesh.num_vertices()) {
      throw Error(ErrorKind::BadFile, "ring vertex id out of range");
    }
    poly.push_back(mesh.vertices[id]);
  }

  std::vector<double> cumulative(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + (poly[i] - poly[i - 1]).norm();
  }
  const double total = cumulative.back();
  if (total < 1e-12) {
    throw Error(ErrorKind::BadFile, "ring polyline has zero length");
  }

  TeethTrajectory traj;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < kTrajectoryPoints; ++i) {
    const double target = total * static_cast<double>(i) / (kTrajectoryPoints - 1);
    while (seg + 2 < poly.size() && cumulative[seg + 1] < target) ++seg;
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double t = seg_len > 0.0 ? (target - cumulative[seg]) / seg_len : 0.0;
    traj.points[i] = poly[seg] + t * (poly[seg + 1] - poly[seg]);
  }

  double y_mean = 0.0;
  for (const Vec3& p : traj.points) y_mean += p.y();
  y_mean /= kTrajectoryPoints;
  for (Vec3& p : traj.points) p.y() = y_mean;

  traj.validate();
  return traj;
}

Vec2 pseudo_center(const TeethTrajectory& traj) {
  const Vec2 a0 = xz(traj.points[0]);
  const Vec2 a1 = xz(traj.points[1]);
  const Vec2 b0 = xz(traj.points[13]);
  const Vec2 b1 = xz(traj.points[14]);

  const Vec2 m1 = 0.5 * (a0 + a1);
  const Vec2 m2 = 0.5 * (b0 + b1);
  // Bisector directions: segment directions rotated by 90 degrees.
  const Vec2 s1 = a1 - a0;
  const Vec2 s2 = b1 - b0;
  const Vec2 d1(-s1.y(), s1.x());
  const Vec2 d2(-s2.y(), s2.x());

  const double cross = d1.x() * d2.y() - d1.y() * d2.x();
  const double sin_angle = std::abs(cross) / (d1.norm() * d2.norm());
  if (sin_angle <= 1e-6) {
    throw Error(ErrorKind::ParallelBisectors,
                "perpendicular bisectors are parallel; trajectory is near-straight");
  }
  // m1 + t*d1 = m2 + s*d2, solved for t by Cramer's rule.
  const Vec2 rhs = m2 - m1;
  const double t = (rhs.x() * d2.y() - rhs.y() * d2.x()) / cross;
  return m1 + t * d1;
}

std::vector<Vec3> extend_trajectory(const TeethTrajectory& traj, const Vec2& c) {
  const Vec2 v0 = xz(traj.points[0]);
  const Vec2 v14 = xz(traj.points[14]);
  if ((v0 - c).norm() < 1e-12 || (v14 - c).norm() < 1e-12) {
    throw Error(ErrorKind::DegenerateAxis, "pseudo-center coincides with a trajectory endpoint");
  }

  std::vector<Vec3> out;
  out.reserve(10);
  // Left of v0: reflections of v5..v1 across C-v0, farthest first.
  for (int i = 5; i >= 1; --i) {
    out.push_back(reflect_xz(traj.points[static_cast<std::size_t>(i)], c, v0));
  }
  // Right of v14: reflections of v13..v9 across C-v14, nearest first.
  for (int i = 13; i >= 9; --i) {
    out.push_back(reflect_xz(traj.points[static_cast<std::size_t>(i)], c, v14));
  }
  return out;
}

namespace {

struct RingSheet {
  std::vector<Vec3> vertices;                 // teeth row (25), shifted row (25), apex (1)
  std::vector<std::array<Index, 3>> faces;    // local indices into `vertices`
};

RingSheet build_ring_sheet(const TeethTrajectory& traj, double depth) {
  const Vec2 c = pseudo_center(traj);
  const std::vector<Vec3> ext = extend_trajectory(traj, c);

  std::vector<Vec3> row;
  row.reserve(25);
  row.insert(row.end(), ext.begin(), ext.begin() + 5);
  row.insert(row.end(), traj.points.begin(), traj.points.end());
  row.insert(row.end(), ext.begin() + 5, ext.end());

  // Backward shift: in-plane, from the trajectory midpoint toward the
  // pseudo-center (into the dental arch).
  const Vec2 mid = xz(traj.points[7]);
  const Vec2 dir2 = c - mid;
  const double dn = dir2.norm();
  if (dn < 1e-12) {
    throw Error(ErrorKind::DegenerateAxis, "pseudo-center coincides with the trajectory midpoint");
  }
  const Vec3 shift(depth * dir2.x() / dn, 0.0, depth * dir2.y() / dn);

  RingSheet sheet;
  sheet.vertices = row;
  for (const Vec3& p : row) sheet.vertices.push_back(p + shift);
  Vec3 apex = Vec3::Zero();
  for (std::size_t i = 25; i < 50; ++i) apex += sheet.vertices[i];
  apex /= 25.0;
  sheet.vertices.push_back(apex);

  const Index row2 = 25;
  const Index apex_id = 50;
  for (Index i = 0; i + 1 < 25; ++i) {
    // Teeth strip quad, alternating diagonal split.
    if (i % 2 == 0) {
      sheet.faces.push_back({i, static_cast<Index>(i + 1), static_cast<Index>(row2 + i + 1)});
      sheet.faces.push_back({i, static_cast<Index>(row2 + i + 1), static_cast<Index>(row2 + i)});
    } else {
      sheet.faces.push_back({i, static_cast<Index>(i + 1), static_cast<Index>(row2 + i)});
      sheet.faces.push_back(
          {static_cast<Index>(i + 1), static_cast<Index>(row2 + i + 1), static_cast<Index>(row2 + i)});
    }
  }
  for (Index i = 0; i + 1 < 25; ++i) {
    // Palate/floor fan over the shifted row.
    sheet.faces.push_back({static_cast<Index>(row2 + i), static_cast<Index>(row2 + i + 1), apex_id});
  }
  return sheet;
}

}  // namespace

MouthAugmentation build_mouth_structure(const TriMesh& mesh, const std::vector<Index>& upper_ring,
                                        const std::vector<Index>& lower_ring, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorKind::BadConfig, "mouth structure depth must be > 0");
  }

  MouthAugmentation aug;
  aug.base_vertex_count = mesh.num_vertices();

  const auto add_ring = [&](const std::vector<Index>& ring, MouthPart part) {
    const TeethTrajectory traj = extract_trajectory(mesh, ring);
    const RingSheet sheet = build_ring_sheet(traj, depth);
    const Index offset = static_cast<Index>(aug.base_vertex_count + aug.new_vertices.size());
    auto& ids = part == MouthPart::Upper ? aug.upper_vertex_ids : aug.lower_vertex_ids;
    for (const Vec3& v : sheet.vertices) {
      ids.push_back(static_cast<Index>(aug.base_vertex_count + aug.new_vertices.size()));
      aug.new_vertices.push_back(v);
    }
    for (const auto& f : sheet.faces) {
      aug.new_faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
      aug.part_label.push_back(part);
    }
  };

  add_ring(upper_ring, MouthPart::Upper);
  add_ring(lower_ring, MouthPart::Lower);

  // All sheet faces must survive as real geometry.
  for (std::size_t i = 0; i < aug.new_faces.size(); ++i) {
    const auto& f = aug.new_faces[i];
    const Vec3& a = aug.new_vertices[f[0] - aug.base_vertex_count];
    const Vec3& b = aug.new_vertices[f[1] - aug.base_vertex_count];
    const Vec3& c = aug.new_vertices[f[2] - aug.base_vertex_count];
    if (0.5 * (b - a).cross(c - a).norm() <= 1e-12) {
      throw Error(ErrorKind::DegenerateFace, "mouth augmentation produced a degenerate face");
    }
  }
  return aug;
}

int splice_augmentation(TriMesh& mesh, const MouthAugmentation& aug, const std::string& part_name) {
  if (mesh.num_vertices() != aug.base_vertex_count) {
    throw Error(ErrorKind::ShapeMismatch, "augmentation was built against a different mesh");
  }
  const int part_id = mesh.num_parts();
  mesh.part_names.push_back(part_name);
  mesh.vertices.insert(mesh.vertices.end(), aug.new_vertices.begin(), aug.new_vertices.end());
  for (const auto& f : aug.new_faces) {
    mesh.faces.push_back(f);
    mesh.part_of_face.push_back(part_id);
  }
  mesh.validate();
  return part_id;
}

void apply_part_offsets_in_place(TriMesh& mesh, const MouthAugmentation& aug, const Vec3& dv_upper,
                                 const Vec3& dv_lower) {
  for (Index id : aug.upper_vertex_ids) mesh.vertices[id] += dv_upper;
  for (Index id : aug.lower_vertex_ids) mesh.vertices[id] += dv_lower;
}

TriMesh apply_part_offsets(const TriMesh& mesh, const MouthAugmentation& aug, const Vec3& dv_upper,
                           const Vec3& dv_lower) {
  TriMesh out = mesh;
  apply_part_offsets_in_place(out, aug, dv_upper, dv_lower);
  return out;
}

}  // namespace gavatar
