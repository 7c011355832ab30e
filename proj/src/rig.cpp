#include "gavatar/rig.hpp"

#include <cmath>
#include <random>

namespace gavatar {

Mat3 axis_angle_to_matrix(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

TriMesh BlendRig::evaluate(const RigParams& params) const {
  if (params.psi.size() != psi_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "psi has dim " + std::to_string(params.psi.size()) +
                                                  ", rig expects " + std::to_string(psi_dim()));
  }
  if (params.theta.size() != theta_dim) {
    throw Error(ErrorKind::DimensionMismatch, "theta has dim " +
                                                  std::to_string(params.theta.size()) +
                                                  ", rig expects " + std::to_string(theta_dim));
  }

  TriMesh mesh = base;
  if (psi_dim() > 0) {
    const VecX offsets = expr_basis * params.psi;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      mesh.vertices[i] += offsets.segment<3>(static_cast<Eigen::Index>(3 * i));
    }
  }

  const double jaw_angle = theta_dim > 0 ? params.theta[0] : 0.0;
  if (jaw_angle != 0.0 && !jaw_weight.empty()) {
    const Mat3 jaw_rot = Eigen::AngleAxisd(jaw_angle, jaw_axis.normalized()).toRotationMatrix();
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      if (jaw_weight[i]) {
        mesh.vertices[i] = jaw_pivot + jaw_rot * (mesh.vertices[i] - jaw_pivot);
      }
    }
  }

  const Mat3 global_rot = axis_angle_to_matrix(params.rotation);
  for (Vec3& v : mesh.vertices) {
    v = global_rot * v + params.translation;
  }
  return mesh;
}

Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                          int width, int height) {
  Camera cam;
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  cam.w2c_rot.row(0) = x;
  cam.w2c_rot.row(1) = y;
  cam.w2c_rot.row(2) = z;
  cam.w2c_trans = -(cam.w2c_rot * eye);
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

TriMesh make_uv_sphere(int n_lat, int n_lon, double radius) {
  TriMesh mesh;
  mesh.vertices.push_back(Vec3(0, radius, 0));  // north pole
  for (int i = 1; i < n_lat; ++i) {
    const double polar = kPi * i / n_lat;
    const double y = radius * std::cos(polar);
    const double ring = radius * std::sin(polar);
    for (int j = 0; j < n_lon; ++j) {
      const double lon = 2.0 * kPi * j / n_lon;
      mesh.vertices.push_back(Vec3(ring * std::sin(lon), y, ring * std::cos(lon)));
    }
  }
  mesh.vertices.push_back(Vec3(0, -radius, 0));  // south pole

  const auto ring_vertex = [&](int ring, int j) -> Index {
    return static_cast<Index>(1 + ring * n_lon + (j % n_lon));
  };
  const Index south = static_cast<Index>(mesh.vertices.size() - 1);

  for (int j = 0; j < n_lon; ++j) {
    mesh.faces.push_back({0, ring_vertex(0, j), ring_vertex(0, j + 1)});
  }
  for (int i = 0; i + 1 < n_lat - 1; ++i) {
    for (int j = 0; j < n_lon; ++j) {
      const Index a = ring_vertex(i, j);
      const Index b = ring_vertex(i, j + 1);
      const Index c = ring_vertex(i + 1, j);
      const Index d = ring_vertex(i + 1, j + 1);
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({b, d, c});
    }
  }
  for (int j = 0; j < n_lon; ++j) {
    mesh.faces.push_back({south, ring_vertex(n_lat - 2, j + 1), ring_vertex(n_lat - 2, j)});
  }

  mesh.part_of_face.assign(mesh.faces.size(), 0);
  mesh.part_names = {"all"};
  return mesh;
}

namespace {

Vec3 face_centroid(const TriMesh& mesh, std::size_t f) {
  const auto& face = mesh.faces[f];
  return (mesh.vertices[face[0]] + mesh.vertices[face[1]] + mesh.vertices[face[2]]) / 3.0;
}

double centroid_lat(const TriMesh& mesh, std::size_t f) {
  const Vec3 d = face_centroid(mesh, f).normalized();
  return std::asin(std::clamp(d.y(), -1.0, 1.0));
}

double centroid_lon(const TriMesh& mesh, std::size_t f) {
  const Vec3 c = face_centroid(mesh, f);
  return std::atan2(c.x(), c.z());
}

void assign_parts_by_bands(TriMesh& mesh, const std::vector<std::string>& names,
                           const std::vector<double>& lat_bounds) {
  // names.size() == lat_bounds.size() + 1, bands from top latitude down.
  mesh.part_names = names;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const double lat = centroid_lat(mesh, f);
    int part = static_cast<int>(lat_bounds.size());
    for (std::size_t b = 0; b < lat_bounds.size(); ++b) {
      if (lat > lat_bounds[b]) {
        part = static_cast<int>(b);
        break;
      }
    }
    mesh.part_of_face[f] = part;
  }
}

// Caps by latitude plus longitude sectors in the middle band.
void assign_parts_cap_sectors(TriMesh& mesh, const std::string& top_name,
                              const std::string& bottom_name,
                              const std::vector<std::string>& sector_names, double top_lat,
                              double bottom_lat) {
  mesh.part_names.clear();
  mesh.part_names.push_back(top_name);
  mesh.part_names.push_back(bottom_name);
  for (const auto& n : sector_names) mesh.part_names.push_back(n);
  const int n_sectors = static_cast<int>(sector_names.size());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const double lat = centroid_lat(mesh, f);
    if (lat > top_lat) {
      mesh.part_of_face[f] = 0;
    } else if (lat < bottom_lat) {
      mesh.part_of_face[f] = 1;
    } else {
      const double lon = centroid_lon(mesh, f);  // in (-pi, pi]
      int sector = static_cast<int>(std::floor((lon + kPi) / (2.0 * kPi) * n_sectors));
      sector = std::clamp(sector, 0, n_sectors - 1);
      mesh.part_of_face[f] = 2 + sector;
    }
  }
}

struct GtAppearance {
  std::vector<Vec3> part_palette;
  double opacity = 0.92;
  double base_scale = 0.35;
  // Fully random per-splat hues instead of per-part palette jitter. Strong
  // per-splat color identity anchors the fit to exact splat positions.
  bool per_splat_colors = false;
};

std::vector<Vec3> make_palette(int n, std::mt19937_64& rng) {
  std::vector<Vec3> palette;
  std::uniform_real_distribution<double> hue(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    // Evenly spread hues with seeded phase; keeps parts visually distinct.
    const double h = std::fmod(static_cast<double>(i) / n + 0.13 * hue(rng), 1.0);
    const double r = 0.5 + 0.45 * std::cos(2.0 * kPi * h);
    const double g = 0.5 + 0.45 * std::cos(2.0 * kPi * (h + 1.0 / 3.0));
    const double b = 0.5 + 0.45 * std::cos(2.0 * kPi * (h + 2.0 / 3.0));
    palette.push_back(Vec3(std::clamp(r, 0.08, 0.95), std::clamp(g, 0.08, 0.95),
                           std::clamp(b, 0.08, 0.95)));
  }
  return palette;
}

// Ground-truth splats sitting at controlled offsets from their faces. The
// per-part detail level is the local-mean radius in face units.
SplatSet make_gt_splats(const TriMesh& mesh, const std::vector<double>& detail_of_part,
                        int per_face, const GtAppearance& look, std::mt19937_64& rng) {
  SplatSet set;
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const int part = mesh.part_of_face[f];
    const double detail = detail_of_part[static_cast<std::size_t>(part)];
    for (int k = 0; k < per_face; ++k) {
      Splat s;
      const Vec3 dir =
          Vec3(0.3 * jitter(rng), 0.3 * jitter(rng), 1.0).normalized();
      s.mu = dir * detail * (1.0 + 0.15 * jitter(rng));
      s.log_scale = Vec3::Constant(std::log(look.base_scale * (1.0 + 0.2 * jitter(rng))));
      if (look.per_splat_colors) {
        const double h = 0.5 + 0.5 * jitter(rng);
        s.color = Vec3(std::clamp(0.5 + 0.45 * std::cos(2.0 * kPi * h), 0.05, 0.95),
                       std::clamp(0.5 + 0.45 * std::cos(2.0 * kPi * (h + 1.0 / 3.0)), 0.05, 0.95),
                       std::clamp(0.5 + 0.45 * std::cos(2.0 * kPi * (h + 2.0 / 3.0)), 0.05, 0.95));
      } else {
        const Vec3 base = look.part_palette[static_cast<std::size_t>(part)];
        for (int c = 0; c < 3; ++c) {
          s.color[c] = std::clamp(base[c] + 0.08 * jitter(rng), 0.05, 0.95);
        }
      }
      s.opacity_logit = logit(look.opacity);
      set.splats.push_back(s);
      set.binding.push_back(f);
    }
  }
  return set;
}

std::vector<Index> make_arc_ring(TriMesh& mesh, double radius, double y, double half_span,
                                 int count) {
  std::vector<Index> ids;
  for (int i = 0; i < count; ++i) {
    const double a = -half_span + 2.0 * half_span * i / (count - 1);
    ids.push_back(static_cast<Index>(mesh.vertices.size()));
    mesh.vertices.push_back(Vec3(radius * std::sin(a), y, radius * std::cos(a)));
  }
  return ids;
}

Scene make_smoke_scene(const SceneSpec& spec, std::mt19937_64& rng) {
  Scene scene;
  scene.preset = "smoke";

  TriMesh mesh = make_uv_sphere(6, 10, 1.0);
  assign_parts_by_bands(mesh, {"top", "middle", "bottom"}, {0.34, -0.34});
  mesh.validate();

  BlendRig rig;
  rig.base = mesh;
  rig.theta_dim = 1;
  rig.jaw_weight.assign(mesh.num_vertices(), 0);
  // Two smooth radial expression modes.
  const int psi_dim = 2;
  rig.expr_basis = MatX::Zero(static_cast<Eigen::Index>(3 * mesh.num_vertices()), psi_dim);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3 n = mesh.vertices[i].normalized();
    const Vec3 b0 = 0.06 * std::sin(3.0 * mesh.vertices[i].y()) * n;
    const Vec3 b1 = 0.06 * std::cos(2.0 * mesh.vertices[i].x() + 0.7) * n;
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 0) = b0;
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 1) = b1;
  }
  scene.rig = rig;

  GtAppearance look;
  look.part_palette = make_palette(3, rng);
  std::vector<double> detail(3, 0.05);
  scene.gt_splats = make_gt_splats(mesh, detail, 2, look, rng);
  scene.gt_set_of_part.assign(3, FaceSet::Rigid);

  scene.camera = make_lookat_camera(Vec3(0, 0, 3.2), Vec3::Zero(), Vec3::UnitY(), 0.88 * spec.width,
                                    spec.width, spec.height);

  for (int t = 0; t < spec.frames; ++t) {
    const double tt = spec.frames > 1 ? static_cast<double>(t) / (spec.frames - 1) : 0.0;
    RigParams p;
    p.psi = VecX(psi_dim);
    p.psi << 0.4 * std::sin(2.0 * kPi * tt), 0.4 * std::cos(2.0 * kPi * tt);
    p.theta = VecX::Zero(1);
    p.rotation = Vec3(0.0, 0.35 * std::sin(2.0 * kPi * tt), 0.0);
    p.translation = Vec3(0.0, 0.05 * std::sin(4.0 * kPi * tt), 0.0);
    p.t_norm = tt;
    scene.params.push_back(p);
  }
  return scene;
}

Scene make_aps_scene(const SceneSpec& spec, std::mt19937_64& rng) {
  Scene scene;
  scene.preset = "aps";

  // A front-facing shell: faces that the camera sweep never observes would be
  // pure unanchored noise in the distance statistics, so they are not built.
  TriMesh mesh = make_uv_sphere(10, 24, 1.0);
  {
    std::vector<std::array<Index, 3>> kept;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const double lat = centroid_lat(mesh, f);
      const double lon = centroid_lon(mesh, f);
      if (std::abs(lat) <= 1.2 && std::abs(lon) <= 1.55) kept.push_back(mesh.faces[f]);
    }
    mesh.faces = std::move(kept);
    mesh.part_of_face.assign(mesh.faces.size(), 0);
  }
  // Scalp and neck are wide, well-observed latitude bands; the middle band
  // splits into longitude sectors.
  {
    mesh.part_names = {"scalp", "neck", "face", "lips", "eyes",
                       "ears",  "nose", "jaw",  "chin", "boundary"};
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const double lat = centroid_lat(mesh, f);
      const double lon = centroid_lon(mesh, f);
      int part;
      if (lat > 0.50) {
        part = 0;
      } else if (lat < -0.50) {
        part = 1;
      } else {
        int sector = static_cast<int>(std::floor((lon + 1.55) / 3.1 * 8.0));
        sector = std::clamp(sector, 0, 7);
        part = 2 + sector;
      }
      mesh.part_of_face[f] = part;
    }
  }
  mesh.validate();
  const int n_parts = mesh.num_parts();

  BlendRig rig;
  rig.base = mesh;
  rig.theta_dim = 1;
  rig.jaw_weight.assign(mesh.num_vertices(), 0);
  rig.expr_basis = MatX::Zero(static_cast<Eigen::Index>(3 * mesh.num_vertices()), 2);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3 n = mesh.vertices[i].normalized();
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 0) =
        0.04 * std::sin(2.5 * mesh.vertices[i].y() + 0.3) * n;
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 1) =
        0.04 * std::cos(2.0 * mesh.vertices[i].z()) * n;
  }
  scene.rig = rig;

  // Scalp and neck carry the injected off-mesh detail; everything else hugs
  // the surface.
  scene.gt_set_of_part.assign(static_cast<std::size_t>(n_parts), FaceSet::Rigid);
  for (int p = 0; p < n_parts; ++p) {
    if (mesh.part_names[static_cast<std::size_t>(p)] == "scalp" ||
        mesh.part_names[static_cast<std::size_t>(p)] == "neck") {
      scene.gt_set_of_part[static_cast<std::size_t>(p)] = FaceSet::Flexible;
    }
  }

  // Ground-truth splats sit at the part's detail offset from the surface. The
  // flexible offset stays within the initial splats' gradient footprint; a
  // splat can only chase detail it overlaps, so far-out disconnected geometry
  // is not resolvable by a desk-scale warmup fit.
  std::vector<double> detail(static_cast<std::size_t>(n_parts), spec.detail_rigid);
  for (int p = 0; p < n_parts; ++p) {
    if (scene.gt_set_of_part[static_cast<std::size_t>(p)] == FaceSet::Flexible) {
      detail[static_cast<std::size_t>(p)] = spec.detail_flexible;
    }
  }
  GtAppearance look;
  look.per_splat_colors = true;
  look.base_scale = 0.16;  // crisp texture anchors fitted splats to exact spots
  scene.gt_splats = make_gt_splats(mesh, detail, 1, look, rng);

  // Tight framing: positional precision (and with it the distance signal)
  // scales with pixels per world unit.
  scene.camera = make_lookat_camera(Vec3(0, 0, 3.8), Vec3::Zero(), Vec3::UnitY(),
                                    1.55 * spec.width, spec.width, spec.height);

  for (int t = 0; t < spec.frames; ++t) {
    const double tt = spec.frames > 1 ? static_cast<double>(t) / (spec.frames - 1) : 0.0;
    RigParams p;
    p.psi = VecX(2);
    p.psi << 0.3 * std::sin(2.0 * kPi * tt + 0.4), 0.3 * std::cos(2.0 * kPi * tt);
    p.theta = VecX::Zero(1);
    // A wide sweep: off-surface detail needs parallax to be identifiable.
    p.rotation = Vec3(0.3 * std::sin(2.0 * kPi * tt), 0.9 * std::sin(2.0 * kPi * tt + 1.1), 0.0);
    p.translation = Vec3::Zero();
    p.t_norm = tt;
    scene.params.push_back(p);
  }
  return scene;
}

Scene make_mouth_scene(const SceneSpec& spec, std::mt19937_64& rng) {
  Scene scene;
  scene.preset = "mouth";

  TriMesh mesh = make_uv_sphere(10, 14, 1.0);
  assign_parts_cap_sectors(mesh, "scalp", "neck",
                           {"face", "lips", "eyes", "ears", "nose", "boundary", "jaw"}, 0.85,
                           -0.85);

  // Open the mouth: remove the patch of faces in front of the cavity.
  {
    std::vector<std::array<Index, 3>> kept_faces;
    std::vector<int> kept_parts;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const double lat = centroid_lat(mesh, f);
      const double lon = centroid_lon(mesh, f);
      const bool in_hole = std::abs(lon) < 0.42 && lat > -0.52 && lat < -0.10;
      if (!in_hole) {
        kept_faces.push_back(mesh.faces[f]);
        kept_parts.push_back(mesh.part_of_face[f]);
      }
    }
    mesh.faces = std::move(kept_faces);
    mesh.part_of_face = std::move(kept_parts);
  }

  const std::vector<Index> upper_ring = make_arc_ring(mesh, 0.55, -0.14, 0.5, 21);
  const std::vector<Index> lower_ring = make_arc_ring(mesh, 0.50, -0.42, 0.5, 21);

  scene.aug = build_mouth_structure(mesh, upper_ring, lower_ring, 0.18);
  const int mouth_part = splice_augmentation(mesh, scene.aug, "mouth-interior");
  scene.has_mouth = true;
  scene.mouth_parts = {mouth_part};
  mesh.validate();

  BlendRig rig;
  rig.base = mesh;
  rig.theta_dim = 1;
  rig.jaw_pivot = Vec3(0.0, -0.15, -0.35);
  rig.jaw_axis = Vec3::UnitX();
  rig.jaw_weight.assign(mesh.num_vertices(), 0);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const double r = v.norm();
    if (r > 0.5 && v.y() / r < -0.45 && v.z() / r > -0.2) {
      rig.jaw_weight[i] = 1;  // chin region of the shell
    }
  }
  for (Index id : lower_ring) rig.jaw_weight[id] = 1;
  for (Index id : scene.aug.lower_vertex_ids) rig.jaw_weight[id] = 1;

  rig.expr_basis = MatX::Zero(static_cast<Eigen::Index>(3 * mesh.num_vertices()), 2);
  for (std::size_t i = 0; i < rig.base.num_vertices(); ++i) {
    const double r = rig.base.vertices[i].norm();
    if (r < 1e-9) continue;
    const Vec3 n = rig.base.vertices[i] / r;
    // Expression modes act on the head shell only, not the mouth interior.
    const bool interior = i >= scene.aug.base_vertex_count - 42;  // rings + augmentation
    if (interior) continue;
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 0) =
        0.035 * std::sin(2.2 * rig.base.vertices[i].y() + 0.8) * n;
    rig.expr_basis.block<3, 1>(static_cast<Eigen::Index>(3 * i), 1) =
        0.035 * std::cos(1.8 * rig.base.vertices[i].x()) * n;
  }
  scene.rig = rig;

  const int n_parts = mesh.num_parts();
  std::vector<double> detail(static_cast<std::size_t>(n_parts), 0.04);
  detail[static_cast<std::size_t>(mouth_part)] = 0.02;
  scene.gt_set_of_part.assign(static_cast<std::size_t>(n_parts), FaceSet::Rigid);
  scene.gt_set_of_part[static_cast<std::size_t>(mouth_part)] = FaceSet::Mouth;

  GtAppearance look;
  look.part_palette = make_palette(n_parts, rng);
  scene.gt_splats = make_gt_splats(mesh, detail, 1, look, rng);

  // Recolor the mouth interior: bright teeth strips, darker palate/floor.
  const std::size_t base_faces = mesh.num_faces() - scene.aug.new_faces.size();
  for (std::size_t i = 0; i < scene.gt_splats.size(); ++i) {
    const Index f = scene.gt_splats.binding[i];
    if (f < base_faces) continue;
    const std::size_t aug_face = f - base_faces;
    const std::size_t within_ring = aug_face % 72;  // 48 strip + 24 fan faces per ring
    std::uniform_real_distribution<double> tint(-0.03, 0.03);
    if (within_ring < 48) {
      scene.gt_splats.splats[i].color = Vec3(0.92 + tint(rng), 0.92 + tint(rng), 0.86 + tint(rng));
    } else {
      scene.gt_splats.splats[i].color = Vec3(0.62 + tint(rng), 0.28 + tint(rng), 0.28 + tint(rng));
    }
    scene.gt_splats.splats[i].opacity_logit = logit(0.95);
  }

  // Tracking-error analogue: the ground-truth mouth interiors ride on the rig
  // plus a jaw-proportional offset that the trainer is never told about.
  scene.gt_mouth_upper_per_jaw = Vec3(0.0, -0.20, 0.10);
  scene.gt_mouth_lower_per_jaw = Vec3(0.0, 0.30, -0.15);

  scene.camera = make_lookat_camera(Vec3(0, -0.26, 2.7), Vec3(0, -0.26, 0), Vec3::UnitY(),
                                    1.5 * spec.width, spec.width, spec.height);

  for (int t = 0; t < spec.frames; ++t) {
    const double tt = spec.frames > 1 ? static_cast<double>(t) / (spec.frames - 1) : 0.0;
    RigParams p;
    p.psi = VecX(2);
    p.psi << 0.3 * std::sin(2.0 * kPi * tt + 0.2), 0.3 * std::cos(4.0 * kPi * tt);
    p.theta = VecX(1);
    // Two open/close cycles with uneven amplitude, so the jaw angle is not a
    // monotone function of the timestep.
    p.theta << 0.42 * (0.5 - 0.5 * std::cos(4.0 * kPi * tt)) *
                   (0.75 + 0.25 * std::sin(2.0 * kPi * tt + 0.9));
    p.rotation = Vec3(0.0, 0.18 * std::sin(2.0 * kPi * tt + 0.5), 0.0);
    p.translation = Vec3::Zero();
    p.t_norm = tt;
    scene.params.push_back(p);
  }
  return scene;
}

}  // namespace

Image render_scene_frame(const Scene& scene, const RigParams& params) {
  TriMesh mesh = scene.rig.evaluate(params);
  if (scene.has_mouth) {
    const double jaw = params.theta.size() > 0 ? params.theta[0] : 0.0;
    apply_part_offsets_in_place(mesh, scene.aug, jaw * scene.gt_mouth_upper_per_jaw,
                                jaw * scene.gt_mouth_lower_per_jaw);
  }
  const std::vector<FaceFrame> frames = compute_all_frames(mesh);
  std::vector<RenderSplat> globals(scene.gt_splats.size());
  for (std::size_t i = 0; i < scene.gt_splats.size(); ++i) {
    const Splat& s = scene.gt_splats.splats[i];
    const FaceFrame& fr = frames[scene.gt_splats.binding[i]];
    globals[i].mean = fr.scale * (fr.rotation * s.mu) + fr.center;
    globals[i].rot = fr.rotation * s.rot.normalized().toRotationMatrix();
    globals[i].scale = fr.scale * s.log_scale.array().exp().matrix();
    globals[i].color = s.color;
    globals[i].opacity = sigmoid(s.opacity_logit);
  }
  RenderOptions opts;
  opts.background = scene.background;
  return render(globals, scene.camera, opts);
}

Scene generate_scene(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  Scene scene;
  if (spec.preset == "smoke") {
    scene = make_smoke_scene(spec, rng);
  } else if (spec.preset == "aps") {
    scene = make_aps_scene(spec, rng);
  } else if (spec.preset == "mouth") {
    scene = make_mouth_scene(spec, rng);
  } else {
    throw Error(ErrorKind::BadConfig, "unknown scene preset '" + spec.preset + "'");
  }
  scene.seed = spec.seed;

  scene.frames.reserve(scene.params.size());
  for (const RigParams& p : scene.params) {
    scene.frames.push_back(render_scene_frame(scene, p));
  }
  return scene;
}

}  // namespace gavatar
