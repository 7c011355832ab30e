// Acceptance suite: every criterion prints one pass/fail line and the binary
// exits nonzero if any requested criterion fails.
//
//   acceptance_tests [--criterion N]    (default: run all)

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "gavatar/formats.hpp"
#include "gavatar/gradcheck.hpp"
#include "gavatar/mouth.hpp"
#include "gavatar/train.hpp"

using namespace gavatar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "gavatar_acceptance";
  fs::create_directories(dir);
  return dir;
}

// --- criterion 1: formula fidelity -------------------------------------------

Outcome criterion_formulas() {
  Outcome o;
  const RegThresholds th;
  o.require(th.tau_r == 0.1 && th.tau_f == 2.0 && th.tau_m == th.tau_r && th.tau_phi == 0.78,
            "default thresholds");
  o.require(TrainConfig{}.lambda == 0.2, "default photometric mix");
  o.require(TrainConfig{}.total_steps == 200000 && TrainConfig{}.aps_step == 100000,
            "full-scale schedule defaults");

  o.require(loss_p(0.05, th.tau_r) == 0.0, "loss_p inside threshold");
  o.require(std::abs(loss_p(0.30, th.tau_r) - 0.20) < 1e-12, "loss_p arithmetic");
  o.require(loss_p(th.tau_r, th.tau_r) == 0.0 && loss_p_grad(th.tau_r, th.tau_r) == 0.0,
            "loss_p kink convention");

  o.require(loss_angle(0.05, 1.2, th) == 0.0, "loss_angle gate");
  o.require(std::abs(loss_angle(0.5, 0.9, th) - 0.12) < 1e-12, "loss_angle arithmetic");
  o.require(loss_angle(0.5, 0.3, th) == 0.0, "loss_angle below threshold");

  {
    SplatSet set;
    Splat s;
    s.mu = Vec3(0, 0, 0.2);
    set.splats.push_back(s);
    set.binding.push_back(0);
    const RegLossResult r = loss_reg(set, {FaceSet::Rigid}, th);
    o.require(std::abs(r.value - 0.1) < 1e-12, "loss_reg single-term sum");
    for (auto& sp : set.splats) sp.mu.setZero();
    o.require(loss_reg(set, {FaceSet::Rigid}, th).value == 0.0, "loss_reg at initialization");
  }

  {
    TriMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0), Vec3(3, 0, 0),
                     Vec3(2, 1, 0)};
    mesh.faces = {{0, 1, 2}, {3, 4, 5}};
    mesh.part_of_face = {0, 0};
    mesh.part_names = {"p"};
    SplatSet set;
    const auto add = [&set](Index face, double r) {
      Splat s;
      s.mu = Vec3(r, 0, 0);
      set.splats.push_back(s);
      set.binding.push_back(face);
    };
    add(0, 0.1);
    add(1, 0.3);
    add(1, 0.5);
    o.require(std::abs(part_distance(set, mesh, 0) - 0.25) < 1e-12, "part_distance two-level mean");
  }

  {
    TriMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0), Vec3(3, 0, 0),
                     Vec3(2, 1, 0)};
    mesh.faces = {{0, 1, 2}, {3, 4, 5}};
    mesh.part_of_face = {0, 1};
    mesh.part_names = {"a", "b"};
    const ApsResult r = assign_sets({0.05, 0.50}, {}, mesh);
    o.require(std::abs(r.assignment.tau_part - 0.275) < 1e-12, "assign_sets threshold mean");
    o.require(r.assignment.set_of_part[0] == FaceSet::Rigid &&
                  r.assignment.set_of_part[1] == FaceSet::Flexible,
              "assign_sets split");
    const ApsResult tie = assign_sets({0.3, 0.3}, {}, mesh);
    o.require(tie.assignment.set_of_part[0] == FaceSet::Rigid &&
                  tie.assignment.set_of_part[1] == FaceSet::Rigid,
              "assign_sets tie rule");
  }
  return o;
}

// --- criterion 2: gradient suite ----------------------------------------------

Outcome criterion_gradients() {
  Outcome o;
  std::mt19937_64 rng(20240607);
  for (const DiffOp& op : gradcheck_registry()) {
    const GradCheckResult r = check_gradients(op, 100, 1e-6, rng);
    std::ostringstream msg;
    msg << op.name << " rel_error " << r.max_rel_error << " > " << op.tolerance;
    o.require(r.max_rel_error <= op.tolerance, msg.str());
  }
  return o;
}

// --- criterion 3: geometry suite ----------------------------------------------

Outcome criterion_geometry() {
  Outcome o;

  // Pseudo-center of an exact circular arc.
  TeethTrajectory traj;
  const Vec2 center(0.1, -0.3);
  for (int i = 0; i < 15; ++i) {
    const double a = (-50.0 + 100.0 * i / 14.0) * kPi / 180.0;
    traj.points[static_cast<std::size_t>(i)] =
        Vec3(center.x() + 2.0 * std::sin(a), 0.2, center.y() + 2.0 * std::cos(a));
  }
  const Vec2 c = pseudo_center(traj);
  o.require((c - center).norm() < 1e-9, "pseudo-center recovery");

  const std::vector<Vec3> ext = extend_trajectory(traj, c);
  for (const Vec3& p : ext) {
    o.require(std::abs((Vec2(p.x(), p.z()) - c).norm() - 2.0) < 1e-9, "reflection isometry");
    o.require(p.y() == 0.2, "reflection preserves the plane");
  }

  // Part offsets: exact translation behavior on a real augmentation.
  TriMesh mesh;
  mesh.vertices = {Vec3(-3, -2, 0), Vec3(3, -2, 0), Vec3(0, -2, 3)};
  mesh.faces = {{0, 1, 2}};
  mesh.part_of_face = {0};
  mesh.part_names = {"base"};
  std::vector<Index> upper, lower;
  for (int i = 0; i < 17; ++i) {
    const double a = -0.55 + 1.1 * i / 16.0;
    upper.push_back(static_cast<Index>(mesh.vertices.size()));
    mesh.vertices.push_back(Vec3(1.1 * std::sin(a), 0.25, 1.1 * std::cos(a)));
  }
  for (int i = 0; i < 17; ++i) {
    const double a = -0.55 + 1.1 * i / 16.0;
    lower.push_back(static_cast<Index>(mesh.vertices.size()));
    mesh.vertices.push_back(Vec3(1.05 * std::sin(a), -0.25, 1.05 * std::cos(a)));
  }
  const MouthAugmentation aug = build_mouth_structure(mesh, upper, lower, 0.2);
  TriMesh augmented = mesh;
  splice_augmentation(augmented, aug, "mouth-interior");

  const Vec3 dv_up(0.02, -0.01, 0.015);
  const Vec3 dv_low(-0.01, 0.03, -0.02);
  const TriMesh moved = apply_part_offsets(augmented, aug, dv_up, dv_low);

  for (std::size_t i = 0; i < aug.upper_vertex_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < aug.upper_vertex_ids.size(); j += 5) {
      const Index a = aug.upper_vertex_ids[i];
      const Index b = aug.upper_vertex_ids[j];
      const double before = (augmented.vertices[a] - augmented.vertices[b]).norm();
      const double after = (moved.vertices[a] - moved.vertices[b]).norm();
      o.require(std::abs(after - before) < 1e-12, "intra-part distance preservation");
    }
  }

  SplatSet set = initialize_on_mesh(augmented, 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-0.4, 0.4);
  for (auto& s : set.splats) s.mu = Vec3(d(rng), d(rng), d(rng));
  const std::size_t base_faces = augmented.num_faces() - aug.new_faces.size();
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.binding[i] < base_faces) continue;
    const Vec3 dv =
        aug.part_label[set.binding[i] - base_faces] == MouthPart::Upper ? dv_up : dv_low;
    const GlobalGaussian ga =
        to_global(set.splats[i], compute_face_frame(augmented, set.binding[i]));
    const GlobalGaussian gb = to_global(set.splats[i], compute_face_frame(moved, set.binding[i]));
    o.require((gb.mean - (ga.mean + dv)).norm() < 1e-12, "bound splat offset");
  }
  return o;
}

// --- criterion 4: pre-allocation classification --------------------------------

Outcome criterion_aps() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SceneSpec spec;
    spec.preset = "aps";
    spec.frames = 16;
    spec.width = 64;
    spec.height = 64;
    spec.seed = seed;
    Scene scene = generate_scene(spec);
    const std::vector<FaceSet> gt = scene.gt_set_of_part;

    TrainConfig cfg;
    cfg.seed = seed;
    cfg.total_steps = 4001;
    cfg.aps_step = 4000;  // warmup schedule, then the one-shot barrier
    cfg.per_face_init = 1;
    cfg.init_scale = 0.35;
    cfg.reg_mean_reduction = true;
    cfg.threads = 2;
    cfg.log_interval = 1000;

    Trainer trainer(std::move(scene), cfg);
    trainer.run();
    o.require(trainer.aps_done(), "barrier ran");

    const auto& assigned = trainer.assignment().set_of_part;
    for (std::size_t p = 0; p < gt.size(); ++p) {
      if (assigned[p] != gt[p]) {
        std::ostringstream msg;
        msg << "seed " << seed << " part "
            << trainer.scene().rig.base.part_names[p] << " assigned "
            << face_set_name(assigned[p]) << " expected " << face_set_name(gt[p])
            << " (distance " << trainer.assignment().part_distance[p] << ", tau "
            << trainer.assignment().tau_part << ")";
        o.require(false, msg.str());
      }
    }
  }
  return o;
}

// --- criterion 5: end-to-end smoke fit -----------------------------------------

Outcome criterion_smoke() {
  Outcome o;
  SceneSpec spec;
  spec.preset = "smoke";
  spec.frames = 20;
  spec.width = 64;
  spec.height = 64;
  spec.seed = 11;

  TrainConfig cfg;
  cfg.seed = 11;
  cfg.total_steps = 5000;
  cfg.aps_step = 2500;
  cfg.per_face_init = 2;  // 100 faces -> the pinned 200 splats
  cfg.reg_mean_reduction = true;
  cfg.threads = 1;
  cfg.log_interval = 1000;

  const auto dir = work_dir();

  Trainer a(generate_scene(spec), cfg);
  a.run();
  o.require(a.splats().size() == 200, "splat count stays at 200");
  const Metrics train_metrics = a.evaluate_split(false);
  {
    std::ostringstream msg;
    msg << "train PSNR " << train_metrics.psnr << " < 30";
    o.require(train_metrics.psnr >= 30.0, msg.str());
  }
  a.save_checkpoint((dir / "smoke_a.gavt").string());

  Trainer b(generate_scene(spec), cfg);
  b.run();
  b.save_checkpoint((dir / "smoke_b.gavt").string());

  TrainConfig cfg4 = cfg;
  cfg4.threads = 4;
  Trainer c(generate_scene(spec), cfg4);
  c.run();
  c.save_checkpoint((dir / "smoke_c.gavt").string());

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  o.require(slurp(dir / "smoke_a.gavt") == slurp(dir / "smoke_b.gavt"),
            "same seed twice is bit-identical");
  o.require(slurp(dir / "smoke_a.gavt") == slurp(dir / "smoke_c.gavt"),
            "1 thread vs 4 threads is bit-identical");

  const Image ra = a.render_current(a.scene().params[0], a.scene().camera, true);
  const Image rb = b.render_current(b.scene().params[0], b.scene().camera, true);
  const Image rc = c.render_current(c.scene().params[0], c.scene().camera, true);
  o.require(ra.data == rb.data && ra.data == rc.data, "renders are bit-identical");
  return o;
}

// --- criterion 6: part-wise deformation ablation --------------------------------

Outcome criterion_ablation() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SceneSpec spec;
    spec.preset = "mouth";
    spec.frames = 32;  // dense coverage of the (psi, theta) input space
    spec.width = 64;
    spec.height = 64;
    spec.seed = seed;

    TrainConfig cfg;
    cfg.seed = seed;
    cfg.total_steps = 2600;
    cfg.aps_step = 1300;
    cfg.per_face_init = 1;
    cfg.reg_mean_reduction = true;
    cfg.threads = 2;
    cfg.test_stride = 4;  // interleaved held-out frames
    // A linear timestep feature and a small net: the jaw-correlated
    // misalignment routes through theta, which survives the T=0 inference rule.
    cfg.deform_freqs = 0;
    cfg.deform_hidden_layers = 2;
    cfg.deform_hidden_width = 32;
    cfg.log_interval = 1000;

    TrainConfig cfg_off = cfg;
    cfg_off.deform_enabled = false;

    Trainer with_deform(generate_scene(spec), cfg);
    with_deform.run();
    const double mse_on = with_deform.evaluate_split(true).mse;

    Trainer without_deform(generate_scene(spec), cfg_off);
    without_deform.run();
    const double mse_off = without_deform.evaluate_split(true).mse;

    std::ostringstream msg;
    msg << "seed " << seed << ": held-out MSE with deformation " << mse_on
        << " !< without " << mse_off;
    o.require(mse_on < mse_off, msg.str());
  }
  return o;
}

// --- criterion 7: renderer and SSIM oracles -------------------------------------

Image render_bruteforce(const std::vector<RenderSplat>& splats, const Camera& cam,
                        const Vec3& background) {
  std::vector<std::pair<ProjectedSplat, std::size_t>> projected;
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const ProjectedSplat p = project(splats[i], cam);
    if (p.valid) projected.emplace_back(p, i);
  }
  std::sort(projected.begin(), projected.end(), [](const auto& a, const auto& b) {
    if (a.first.depth != b.first.depth) return a.first.depth < b.first.depth;
    return a.second < b.second;
  });
  Image img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Vec3 color = Vec3::Zero();
      double transmittance = 1.0;
      for (const auto& [proj, idx] : projected) {
        const Vec2 d = Vec2(x + 0.5, y + 0.5) - proj.mean2d;
        double w = splats[idx].opacity * std::exp(-0.5 * d.dot(proj.cov2d.inverse() * d));
        w = std::min(w, 0.99);
        color += splats[idx].color * (w * transmittance);
        transmittance *= 1.0 - w;
      }
      color += background * transmittance;
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = color[ch];
    }
  }
  return img;
}

double ssim_reference(const Image& x, const Image& y) {
  const int win = kSsimWindow;
  std::vector<double> k(static_cast<std::size_t>(win) * win);
  double ksum = 0.0;
  for (int j = 0; j < win; ++j) {
    for (int i = 0; i < win; ++i) {
      const double dx = i - win / 2, dy = j - win / 2;
      k[static_cast<std::size_t>(j) * win + i] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
      ksum += k[static_cast<std::size_t>(j) * win + i];
    }
  }
  for (double& v : k) v /= ksum;
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int wy = 0; wy + win <= x.height; ++wy) {
      for (int wx = 0; wx + win <= x.width; ++wx) {
        double mx = 0, my = 0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = k[static_cast<std::size_t>(j) * win + i];
            mx += w * x.at(wx + i, wy + j, c);
            my += w * y.at(wx + i, wy + j, c);
          }
        }
        double sx = 0, sy = 0, sxy = 0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = k[static_cast<std::size_t>(j) * win + i];
            const double ddx = x.at(wx + i, wy + j, c) - mx;
            const double ddy = y.at(wx + i, wy + j, c) - my;
            sx += w * ddx * ddx;
            sy += w * ddy * ddy;
            sxy += w * ddx * ddy;
          }
        }
        total += ((2 * mx * my + kSsimC1) * (2 * sxy + kSsimC2)) /
                 ((mx * mx + my * my + kSsimC1) * (sx + sy + kSsimC2));
        ++count;
      }
    }
  }
  return total / count;
}

Outcome criterion_oracles() {
  Outcome o;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> d(0.0, 1.0);

  for (int scene_i = 0; scene_i < 20; ++scene_i) {
    const Camera cam = make_lookat_camera(Vec3(0, 0, 4), Vec3::Zero(), Vec3::UnitY(),
                                          16.0 + 6.0 * d(rng), 16, 16);
    std::vector<RenderSplat> splats;
    const int n = 3 + scene_i % 5;
    for (int i = 0; i < n; ++i) {
      RenderSplat g;
      g.mean = Vec3(2.0 * d(rng) - 1.0, 2.0 * d(rng) - 1.0, 1.2 * d(rng) - 0.6);
      Quat q(d(rng) * 2 - 1, d(rng) * 2 - 1, d(rng) * 2 - 1, d(rng) * 2 - 1);
      g.rot = q.normalized().toRotationMatrix();
      g.scale = Vec3(0.05 + 0.3 * d(rng), 0.05 + 0.3 * d(rng), 0.05 + 0.3 * d(rng));
      g.color = Vec3(d(rng), d(rng), d(rng));
      g.opacity = 0.15 + 0.8 * d(rng);
      splats.push_back(g);
    }
    RenderOptions opts;
    opts.background = Vec3(d(rng) * 0.5, d(rng) * 0.5, d(rng) * 0.5);
    const Image fast = render(splats, cam, opts);
    const Image slow = render_bruteforce(splats, cam, opts.background);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(fast.data[i] - slow.data[i]));
    }
    std::ostringstream msg;
    msg << "composite scene " << scene_i << " diff " << max_diff;
    o.require(max_diff < 1e-6, msg.str());
  }

  for (int pair_i = 0; pair_i < 20; ++pair_i) {
    Image x(32, 32), y(32, 32);
    for (auto& v : x.data) v = d(rng);
    for (auto& v : y.data) v = d(rng);
    const double diff = std::abs(ssim(x, y) - ssim_reference(x, y));
    std::ostringstream msg;
    msg << "ssim pair " << pair_i << " diff " << diff;
    o.require(diff < 1e-6, msg.str());
  }
  return o;
}

// --- criterion 8: format round trips --------------------------------------------

Outcome criterion_formats() {
  Outcome o;
  const auto dir = work_dir();
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };

  // OBJ: value-exact round trip.
  std::mt19937_64 rng(4321);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  TriMesh mesh;
  for (int i = 0; i < 30; ++i) mesh.vertices.push_back(Vec3(d(rng), d(rng), d(rng)));
  for (Index f = 0; f + 3 <= 30; f += 3) mesh.faces.push_back({f, f + 1, f + 2});
  mesh.part_of_face.assign(mesh.num_faces(), 0);
  mesh.part_names = {"all"};
  write_obj(mesh, (dir / "rt.obj").string());
  const TriMesh mesh_back = read_obj((dir / "rt.obj").string());
  bool obj_ok = mesh_back.num_vertices() == mesh.num_vertices();
  for (std::size_t v = 0; obj_ok && v < mesh.num_vertices(); ++v) {
    obj_ok = mesh_back.vertices[v] == mesh.vertices[v];
  }
  o.require(obj_ok, "OBJ round trip");
  write_obj(mesh_back, (dir / "rt2.obj").string());
  o.require(slurp(dir / "rt.obj") == slurp(dir / "rt2.obj"), "OBJ bytes stable");

  // Checkpoint: bit-exact round trip.
  SceneSpec spec;
  spec.preset = "smoke";
  spec.frames = 3;
  spec.width = 24;
  spec.height = 24;
  TrainConfig cfg;
  cfg.total_steps = 6;
  cfg.aps_step = 3;
  cfg.log_interval = 3;
  Trainer trainer(generate_scene(spec), cfg);
  trainer.run();
  trainer.save_checkpoint((dir / "rt.gavt").string());
  Trainer loaded = Trainer::load_checkpoint((dir / "rt.gavt").string(), generate_scene(spec), cfg);
  loaded.save_checkpoint((dir / "rt2.gavt").string());
  o.require(slurp(dir / "rt.gavt") == slurp(dir / "rt2.gavt"), "checkpoint round trip");

  // PPM: quantization follows the round-half-up rule and re-encoding is a fixpoint.
  Image img(9, 6);
  std::uniform_real_distribution<double> du(0.0, 1.0);
  for (auto& v : img.data) v = du(rng);
  img.data[0] = 0.0;
  img.data[1] = 1.0;
  img.data[2] = 0.5 / 255.0;        // rounds up to 1
  img.data[3] = 0.499999 / 255.0;   // rounds down to 0
  write_ppm(img, (dir / "rt.ppm").string());
  const Image ppm_back = read_ppm((dir / "rt.ppm").string());
  bool ppm_ok = true;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const int expected = static_cast<int>(std::floor(std::clamp(img.data[i], 0.0, 1.0) * 255.0 + 0.5));
    const int actual = static_cast<int>(std::lround(ppm_back.data[i] * 255.0));
    ppm_ok = ppm_ok && expected == actual;
  }
  o.require(ppm_ok, "PPM quantization rule");
  write_ppm(ppm_back, (dir / "rt2.ppm").string());
  const Image ppm_again = read_ppm((dir / "rt2.ppm").string());
  o.require(ppm_back.data == ppm_again.data && slurp(dir / "rt.ppm") == slurp(dir / "rt2.ppm"),
            "PPM re-encode fixpoint");

  // Scene directory replay.
  const Scene scene = generate_scene(spec);
  save_scene(scene, (dir / "scene_rt").string());
  const Scene scene_back = load_scene((dir / "scene_rt").string());
  bool scene_ok = scene_back.params.size() == scene.params.size() &&
                  scene_back.rig.expr_basis == scene.rig.expr_basis;
  for (std::size_t f = 0; scene_ok && f < scene.frames.size(); ++f) {
    Image requant(scene.frames[f].width, scene.frames[f].height);
    write_ppm(scene.frames[f], (dir / "tmp.ppm").string());
    requant = read_ppm((dir / "tmp.ppm").string());
    scene_ok = requant.data == scene_back.frames[f].data;
  }
  o.require(scene_ok, "scene directory replay");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
      ++i;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "formula fidelity (thresholds, losses, distances, assignment)", criterion_formulas},
      {2, "gradient suite (every registered adjoint vs finite differences)", criterion_gradients},
      {3, "geometry suite (pseudo-center, reflections, part offsets)", criterion_geometry},
      {4, "pre-allocation classification on the constructed scene", criterion_aps},
      {5, "end-to-end smoke fit (PSNR, determinism, thread independence)", criterion_smoke},
      {6, "part-wise deformation ablation direction", criterion_ablation},
      {7, "renderer and SSIM brute-force oracles", criterion_oracles},
      {8, "format round trips (OBJ, checkpoint, PPM, scene)", criterion_formats},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name
              << " (" << secs << " s)";
    if (!outcome.detail.empty()) std::cout << " -- " << outcome.detail;
    std::cout << "\n";
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
