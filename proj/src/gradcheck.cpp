#include "gavatar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gavatar/deform.hpp"
#include "gavatar/losses.hpp"
#include "gavatar/render.hpp"
#include "gavatar/rig.hpp"
#include "gavatar/train.hpp"

namespace gavatar {

GradCheckResult check_gradients(const DiffOp& op, int trials, double h, std::mt19937_64& rng) {
  GradCheckResult result;
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int trial = 0; trial < trials; ++trial) {
    const VecX x = op.sample(rng);
    if (op.at_kink && op.at_kink(x)) {
      throw Error(ErrorKind::SampledAtKink,
                  op.name + ": sampler produced a point inside an exclusion zone");
    }
    VecX upstream(op.output_dim);
    for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream[i] = gauss(rng);

    const VecX analytic = op.vjp(x, upstream);
    VecX probe = x;
    for (int i = 0; i < op.input_dim; ++i) {
      probe[i] = x[i] + h;
      const double up = upstream.dot(op.forward(probe));
      probe[i] = x[i] - h;
      const double down = upstream.dot(op.forward(probe));
      probe[i] = x[i];
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
      const double rel = std::abs(numeric - analytic[i]) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_coord = i;
        result.worst_trial = trial;
      }
    }
  }
  return result;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// Local mean with polar coordinates clear of every documented exclusion zone:
// radius away from tau_r/tau_f kinks and the gate, phi away from the angular
// kink, its fold, and the poles.
Vec3 sample_safe_mu(std::mt19937_64& rng) {
  const RegThresholds th;
  for (;;) {
    const double r = uniform(rng, 0.15, 1.5);
    const double phi = uniform(rng, 0.2, kPi - 0.2);
    if (std::abs(r - th.tau_r) < 5e-3) continue;
    const double phi_eff = std::min(phi, kPi - phi);
    if (std::abs(phi_eff - th.tau_phi) < 5e-3) continue;
    if (std::abs(phi - kPi / 2.0) < 5e-3) continue;
    const double beta = uniform(rng, 0.0, 2.0 * kPi);
    return Vec3(r * std::sin(phi) * std::cos(beta), r * std::sin(phi) * std::sin(beta),
                r * std::cos(phi));
  }
}

DiffOp make_polar_op() {
  DiffOp op;
  op.name = "geometry.polar";
  op.input_dim = 3;
  op.output_dim = 2;  // (r, phi); theta is not used by any loss
  op.forward = [](const VecX& x) {
    const PolarMean p = to_polar(Vec3(x[0], x[1], x[2]));
    VecX out(2);
    out << p.r, p.phi;
    return out;
  };
  op.vjp = [](const VecX& x, const VecX& u) {
    const PolarGradients g = polar_gradients(Vec3(x[0], x[1], x[2]));
    const Vec3 grad = u[0] * g.dr_dmu + u[1] * g.dphi_dmu;
    return VecX(grad);
  };
  op.sample = [](std::mt19937_64& rng) { return VecX(sample_safe_mu(rng)); };
  return op;
}

DiffOp make_loss_p_op() {
  DiffOp op;
  op.name = "losses.loss_p";
  op.input_dim = 1;
  op.output_dim = 1;
  op.forward = [](const VecX& x) {
    VecX out(1);
    out << loss_p(x[0], 0.1);
    return out;
  };
  op.vjp = [](const VecX& x, const VecX& u) {
    VecX g(1);
    g << u[0] * loss_p_grad(x[0], 0.1);
    return g;
  };
  op.sample = [](std::mt19937_64& rng) {
    for (;;) {
      const double r = uniform(rng, 0.0, 1.0);
      if (std::abs(r - 0.1) > kKinkMargin) {
        VecX x(1);
        x << r;
        return x;
      }
    }
  };
  op.at_kink = [](const VecX& x) { return std::abs(x[0] - 0.1) <= 1e-5; };
  return op;
}

DiffOp make_loss_angle_op() {
  DiffOp op;
  op.name = "losses.loss_angle";
  op.input_dim = 2;  // (r, phi)
  op.output_dim = 1;
  const RegThresholds th;
  op.forward = [th](const VecX& x) {
    VecX out(1);
    out << loss_angle(x[0], x[1], th);
    return out;
  };
  op.vjp = [th](const VecX& x, const VecX& u) {
    VecX g(2);
    g << 0.0, u[0] * loss_angle_grad_phi(x[0], x[1], th);  // hard gate: no gradient through r
    return g;
  };
  op.sample = [th](std::mt19937_64& rng) {
    for (;;) {
      const double r = uniform(rng, 0.0, 1.0);
      const double phi = uniform(rng, 0.05, kPi - 0.05);
      if (std::abs(r - th.tau_r) < 5e-3) continue;
      const double phi_eff = std::min(phi, kPi - phi);
      if (std::abs(phi_eff - th.tau_phi) < 5e-3) continue;
      if (std::abs(phi - kPi / 2.0) < 5e-3) continue;
      VecX x(2);
      x << r, phi;
      return x;
    }
  };
  return op;
}

DiffOp make_loss_reg_op() {
  DiffOp op;
  op.name = "losses.loss_reg";
  constexpr int kSplats = 9;
  op.input_dim = 3 * kSplats;
  op.output_dim = 1;

  // Three splats in each set, one per face.
  auto make_set = [](const VecX& x) {
    SplatSet set;
    for (int i = 0; i < kSplats; ++i) {
      Splat s;
      s.mu = Vec3(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
      set.splats.push_back(s);
      set.binding.push_back(static_cast<Index>(i));
    }
    return set;
  };
  static const std::vector<FaceSet> kSets = {
      FaceSet::Rigid,    FaceSet::Rigid,    FaceSet::Rigid,  FaceSet::Flexible, FaceSet::Flexible,
      FaceSet::Flexible, FaceSet::Mouth,    FaceSet::Mouth,  FaceSet::Mouth};

  op.forward = [make_set](const VecX& x) {
    const RegLossResult r = loss_reg(make_set(x), kSets, RegThresholds{});
    VecX out(1);
    out << r.value;
    return out;
  };
  op.vjp = [make_set](const VecX& x, const VecX& u) {
    const RegLossResult r = loss_reg(make_set(x), kSets, RegThresholds{});
    VecX g(3 * kSplats);
    for (int i = 0; i < kSplats; ++i) g.segment<3>(3 * i) = u[0] * r.dmu[i];
    return g;
  };
  op.sample = [](std::mt19937_64& rng) {
    VecX x(3 * kSplats);
    for (int i = 0; i < kSplats; ++i) x.segment<3>(3 * i) = sample_safe_mu(rng);
    return x;
  };
  return op;
}

DiffOp make_loss_rgb_op() {
  DiffOp op;
  op.name = "losses.loss_rgb";
  static constexpr int kSide = 12;
  static constexpr int kDim = kSide * kSide * 3;
  op.input_dim = kDim;
  op.output_dim = 1;

  // Fixed target; sampled images keep every pixel away from the L1 kink.
  auto target = std::make_shared<Image>(kSide, kSide);
  std::mt19937_64 seed_rng(314159);
  for (auto& v : target->data) v = uniform(seed_rng, 0.0, 1.0);

  auto to_image = [](const VecX& x) {
    Image img(kSide, kSide);
    for (int i = 0; i < kDim; ++i) img.data[static_cast<std::size_t>(i)] = x[i];
    return img;
  };
  op.forward = [to_image, target](const VecX& x) {
    const RgbLossResult r = loss_rgb(to_image(x), *target, 0.2);
    VecX out(1);
    out << r.value;
    return out;
  };
  op.vjp = [to_image, target](const VecX& x, const VecX& u) {
    const RgbLossResult r = loss_rgb(to_image(x), *target, 0.2);
    VecX g(kDim);
    for (int i = 0; i < kDim; ++i) g[i] = u[0] * r.grad.data[static_cast<std::size_t>(i)];
    return g;
  };
  op.sample = [target](std::mt19937_64& rng) {
    VecX x(kDim);
    for (int i = 0; i < kDim; ++i) {
      double v = uniform(rng, 0.0, 1.0);
      const double t = target->data[static_cast<std::size_t>(i)];
      // Keep each pixel clear of the L1 kink at v == t.
      if (std::abs(v - t) < 1e-4) v = t > 0.5 ? t - 2e-4 : t + 2e-4;
      x[i] = v;
    }
    return x;
  };
  return op;
}

struct DeformFixture {
  DeformMlp net;
  VecX psi, theta;
  double t;

  DeformFixture() {
    PosEncoding enc;
    enc.num_freqs = 3;
    net = DeformMlp(3, 2, enc, {8, 8});
    std::mt19937_64 rng(77);
    net.init_weights(rng);
    // Give the zero-initialized output layer nonzero weights so input
    // gradients are informative.
    VecX p = net.flat_params();
    std::uniform_real_distribution<double> d(-0.4, 0.4);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] == 0.0) p[i] = d(rng);
    }
    net.set_flat_params(p);
    psi = VecX(3);
    psi << 0.3, -0.2, 0.5;
    theta = VecX(2);
    theta << 0.4, -0.1;
    t = 0.37;
  }
};

DiffOp make_deform_params_op() {
  DiffOp op;
  op.name = "deform.params";
  auto fx = std::make_shared<DeformFixture>();
  op.input_dim = static_cast<int>(fx->net.param_count());
  op.output_dim = 3;
  op.forward = [fx](const VecX& x) {
    DeformMlp net = fx->net;
    net.set_flat_params(x);
    return VecX(net.forward(fx->psi, fx->theta, fx->t));
  };
  op.vjp = [fx](const VecX& x, const VecX& u) {
    DeformMlp net = fx->net;
    net.set_flat_params(x);
    net.forward(fx->psi, fx->theta, fx->t);
    return net.backward(Vec3(u[0], u[1], u[2])).params;
  };
  op.sample = [fx](std::mt19937_64& rng) {
    VecX x(fx->net.param_count());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = uniform(rng, -0.6, 0.6);
    return x;
  };
  return op;
}

DiffOp make_deform_inputs_op() {
  DiffOp op;
  op.name = "deform.inputs";
  auto fx = std::make_shared<DeformFixture>();
  op.input_dim = 6;  // psi(3) ++ theta(2) ++ T
  op.output_dim = 3;
  op.forward = [fx](const VecX& x) {
    return VecX(fx->net.forward(x.segment<3>(0), x.segment<2>(3), x[5]));
  };
  op.vjp = [fx](const VecX& x, const VecX& u) {
    fx->net.forward(x.segment<3>(0), x.segment<2>(3), x[5]);
    const DeformMlp::Gradients g = fx->net.backward(Vec3(u[0], u[1], u[2]));
    VecX out(6);
    out.segment<5>(0) = g.input.segment<5>(0);
    const VecX enc_grad = encode_timestep_grad(x[5], fx->net.encoding());
    out[5] = g.input.tail(enc_grad.size()).dot(enc_grad);
    return out;
  };
  op.sample = [](std::mt19937_64& rng) {
    VecX x(6);
    for (int i = 0; i < 6; ++i) x[i] = uniform(rng, -1.0, 1.0);
    x[5] = uniform(rng, 0.0, 1.0);
    return x;
  };
  return op;
}

// Shared unpacking for raw splat parameter vectors:
// per splat [mean(3), quat wxyz(4), log_scale(3), color(3), opacity_logit].
constexpr int kSplatDim = 14;

RenderSplat splat_from_raw(const double* p) {
  RenderSplat g;
  g.mean = Vec3(p[0], p[1], p[2]);
  const Quat q = Quat(p[3], p[4], p[5], p[6]).normalized();
  g.rot = q.toRotationMatrix();
  g.scale = Vec3(std::exp(p[7]), std::exp(p[8]), std::exp(p[9]));
  g.color = Vec3(p[10], p[11], p[12]);
  g.opacity = sigmoid(p[13]);
  return g;
}

void raw_grad_from_render(const double* p, const SplatRenderGrads& rg, double* out) {
  const Quat q_raw(p[3], p[4], p[5], p[6]);
  const Quat q = q_raw.normalized();
  out[0] = rg.dmean.x();
  out[1] = rg.dmean.y();
  out[2] = rg.dmean.z();
  const QuatGrad dq = quat_normalize_backward(q_raw, quat_rotmat_backward(q, rg.drot));
  out[3] = dq[0];
  out[4] = dq[1];
  out[5] = dq[2];
  out[6] = dq[3];
  for (int k = 0; k < 3; ++k) out[7 + k] = rg.dscale[k] * std::exp(p[7 + k]);
  out[10] = rg.dcolor.x();
  out[11] = rg.dcolor.y();
  out[12] = rg.dcolor.z();
  const double sig = sigmoid(p[13]);
  out[13] = rg.dopacity * sig * (1.0 - sig);
}

void sample_raw_splat(std::mt19937_64& rng, double* p) {
  p[0] = uniform(rng, -0.5, 0.5);
  p[1] = uniform(rng, -0.5, 0.5);
  p[2] = uniform(rng, -0.3, 0.3);
  p[3] = uniform(rng, 0.6, 1.2);  // near-unit raw quaternion, normalized in the forward
  p[4] = uniform(rng, -0.4, 0.4);
  p[5] = uniform(rng, -0.4, 0.4);
  p[6] = uniform(rng, -0.4, 0.4);
  for (int k = 0; k < 3; ++k) p[7 + k] = uniform(rng, std::log(0.06), std::log(0.3));
  for (int k = 0; k < 3; ++k) p[10 + k] = uniform(rng, 0.1, 0.9);
  p[13] = uniform(rng, -2.0, 1.3);  // sigmoid stays below the 0.99 weight clamp
}

DiffOp make_render_op() {
  DiffOp op;
  op.name = "render.forward";
  constexpr int kSplats = 5;
  constexpr int kSide = 16;
  op.input_dim = kSplats * kSplatDim;
  op.output_dim = kSide * kSide * 3;
  op.tolerance = 1e-4;

  auto cam = std::make_shared<Camera>(
      make_lookat_camera(Vec3(0, 0, 4), Vec3::Zero(), Vec3::UnitY(), 18.0, kSide, kSide));
  RenderOptions opts;
  opts.background = Vec3(0.1, 0.1, 0.1);
  opts.tail_eps = 1e-12;  // shrink the box-boundary step below finite-difference noise

  op.forward = [cam, opts](const VecX& x) {
    std::vector<RenderSplat> splats(kSplats);
    for (int i = 0; i < kSplats; ++i) splats[i] = splat_from_raw(x.data() + i * kSplatDim);
    const Image img = render(splats, *cam, opts);
    return Eigen::Map<const VecX>(img.data.data(), static_cast<Eigen::Index>(img.data.size()))
        .eval();
  };
  op.vjp = [cam, opts](const VecX& x, const VecX& u) {
    std::vector<RenderSplat> splats(kSplats);
    for (int i = 0; i < kSplats; ++i) splats[i] = splat_from_raw(x.data() + i * kSplatDim);
    RenderCache cache;
    render(splats, *cam, opts, &cache);
    Image du(kSide, kSide);
    for (std::size_t i = 0; i < du.data.size(); ++i) du.data[i] = u[static_cast<Eigen::Index>(i)];
    const std::vector<SplatRenderGrads> grads = render_backward(cache, du);
    VecX out(kSplats * kSplatDim);
    for (int i = 0; i < kSplats; ++i) {
      raw_grad_from_render(x.data() + i * kSplatDim, grads[static_cast<std::size_t>(i)],
                           out.data() + i * kSplatDim);
    }
    return out;
  };
  op.sample = [](std::mt19937_64& rng) {
    VecX x(kSplats * kSplatDim);
    for (int i = 0; i < kSplats; ++i) sample_raw_splat(rng, x.data() + i * kSplatDim);
    return x;
  };
  return op;
}

// Micro scene with a real mouth structure: a base quad plus the augmented
// sheets, a handful of splats, both deformation nets.
struct PipelineFixture {
  Scene scene;
  TrainConfig cfg;
  SplatSet base_set;
  DeformMlp net_upper, net_lower;
  std::vector<Index> tracked;  // splat indices exposed to the checker

  PipelineFixture() {
    TriMesh mesh;
    mesh.vertices = {Vec3(-1.5, -1.2, -0.5), Vec3(1.5, -1.2, -0.5), Vec3(1.5, -1.4, 1.0),
                     Vec3(-1.5, -1.4, 1.0)};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}};
    mesh.part_of_face = {0, 0};
    mesh.part_names = {"base"};

    std::vector<Index> upper_ring, lower_ring;
    for (int i = 0; i < 17; ++i) {
      const double a = -0.55 + 1.1 * i / 16.0;
      upper_ring.push_back(static_cast<Index>(mesh.vertices.size()));
      mesh.vertices.push_back(Vec3(0.8 * std::sin(a), 0.25, 0.8 * std::cos(a)));
    }
    for (int i = 0; i < 17; ++i) {
      const double a = -0.55 + 1.1 * i / 16.0;
      lower_ring.push_back(static_cast<Index>(mesh.vertices.size()));
      mesh.vertices.push_back(Vec3(0.75 * std::sin(a), -0.25, 0.75 * std::cos(a)));
    }
    scene.aug = build_mouth_structure(mesh, upper_ring, lower_ring, 0.15);
    const int mouth_part = splice_augmentation(mesh, scene.aug, "mouth");
    scene.has_mouth = true;
    scene.mouth_parts = {mouth_part};

    scene.rig.base = mesh;
    scene.rig.theta_dim = 1;
    scene.rig.jaw_weight.assign(mesh.num_vertices(), 0);
    scene.rig.expr_basis = MatX::Zero(static_cast<Eigen::Index>(3 * mesh.num_vertices()), 2);
    scene.camera = make_lookat_camera(Vec3(0, 0, 4.5), Vec3::Zero(), Vec3::UnitY(), 14.0, 16, 16);
    scene.background = Vec3(0.05, 0.05, 0.05);

    RigParams p;
    p.psi = VecX(2);
    p.psi << 0.4, -0.3;
    p.theta = VecX(1);
    p.theta << 0.3;
    p.t_norm = 0.4;
    scene.params.push_back(p);

    cfg.lambda = 1.0;  // pure D-SSIM keeps the photometric term smooth
    cfg.threads = 1;
    cfg.reg_weight = 1.0;

    // Eight splats: two on the base, three on each mouth sheet.
    std::mt19937_64 rng(2024);
    const std::size_t base_faces = mesh.num_faces() - scene.aug.new_faces.size();
    const std::vector<Index> faces = {0,
                                      1,
                                      static_cast<Index>(base_faces + 5),
                                      static_cast<Index>(base_faces + 30),
                                      static_cast<Index>(base_faces + 55),
                                      static_cast<Index>(base_faces + 75),
                                      static_cast<Index>(base_faces + 100),
                                      static_cast<Index>(base_faces + 130)};
    for (Index f : faces) {
      Splat s;
      s.mu = sample_safe_mu(rng) * 0.3;
      s.color = Vec3(uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8));
      s.log_scale = Vec3::Constant(std::log(uniform(rng, 0.3, 0.8)));
      s.opacity_logit = uniform(rng, -0.5, 1.0);
      base_set.splats.push_back(s);
      base_set.binding.push_back(f);
    }

    PosEncoding enc;
    enc.num_freqs = 2;
    net_upper = DeformMlp(2, 1, enc, {6});
    net_lower = DeformMlp(2, 1, enc, {6});
    net_upper.init_weights(rng);
    net_lower.init_weights(rng);
    // Nonzero output layers so the offset actually moves the sheets.
    for (DeformMlp* net : {&net_upper, &net_lower}) {
      VecX w = net->flat_params();
      std::uniform_real_distribution<double> d(-0.05, 0.05);
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) w[i] = d(rng);
      }
      net->set_flat_params(w);
    }

    // Target: a render of a jittered configuration, fixed once.
    SplatSet jittered = base_set;
    for (auto& s : jittered.splats) {
      s.mu += Vec3(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05));
      for (int c = 0; c < 3; ++c) s.color[c] = std::clamp(s.color[c] + uniform(rng, -0.2, 0.2), 0.05, 0.95);
    }
    std::vector<FaceSet> sets(mesh.num_faces(), FaceSet::Rigid);
    for (std::size_t f = base_faces; f < mesh.num_faces(); ++f) sets[f] = FaceSet::Mouth;
    const StepGradients g = compute_step_gradients(scene, jittered, &net_upper, &net_lower, sets,
                                                   cfg, scene.params[0], Image(16, 16, 0.3));
    scene.frames.push_back(g.rendered);
  }

  std::vector<FaceSet> face_sets() const {
    std::vector<FaceSet> sets(scene.rig.base.num_faces(), FaceSet::Rigid);
    const std::size_t base_faces = scene.rig.base.num_faces() - scene.aug.new_faces.size();
    for (std::size_t f = base_faces; f < scene.rig.base.num_faces(); ++f) sets[f] = FaceSet::Mouth;
    return sets;
  }

  double loss_for(const SplatSet& set, const DeformMlp& up, const DeformMlp& low) const {
    const StepGradients g = compute_step_gradients(scene, set, &up, &low, face_sets(), cfg,
                                                   scene.params[0], scene.frames[0]);
    return g.report.total;
  }
};

DiffOp make_pipeline_splats_op() {
  DiffOp op;
  op.name = "pipeline.render_loss";
  auto fx = std::make_shared<PipelineFixture>();
  const int n = static_cast<int>(fx->base_set.size());
  op.input_dim = n * kSplatDim;
  op.output_dim = 1;
  op.tolerance = 1e-4;

  auto unpack = [fx, n](const VecX& x) {
    SplatSet set = fx->base_set;
    for (int i = 0; i < n; ++i) {
      const double* p = x.data() + i * kSplatDim;
      Splat& s = set.splats[static_cast<std::size_t>(i)];
      s.mu = Vec3(p[0], p[1], p[2]);
      s.rot = Quat(p[3], p[4], p[5], p[6]);
      s.log_scale = Vec3(p[7], p[8], p[9]);
      s.color = Vec3(p[10], p[11], p[12]);
      s.opacity_logit = p[13];
    }
    return set;
  };
  op.forward = [fx, unpack](const VecX& x) {
    VecX out(1);
    out << fx->loss_for(unpack(x), fx->net_upper, fx->net_lower);
    return out;
  };
  op.vjp = [fx, unpack, n](const VecX& x, const VecX& u) {
    const SplatSet set = unpack(x);
    const StepGradients g =
        compute_step_gradients(fx->scene, set, &fx->net_upper, &fx->net_lower, fx->face_sets(),
                               fx->cfg, fx->scene.params[0], fx->scene.frames[0]);
    VecX out(n * kSplatDim);
    for (int i = 0; i < n; ++i) {
      double* o = out.data() + i * kSplatDim;
      const std::size_t si = static_cast<std::size_t>(i);
      o[0] = u[0] * g.dmu[si].x();
      o[1] = u[0] * g.dmu[si].y();
      o[2] = u[0] * g.dmu[si].z();
      for (int k = 0; k < 4; ++k) o[3 + k] = u[0] * g.dquat[si][k];
      for (int k = 0; k < 3; ++k) o[7 + k] = u[0] * g.dlog_scale[si][k];
      for (int k = 0; k < 3; ++k) o[10 + k] = u[0] * g.dcolor[si][k];
      o[13] = u[0] * g.dopacity_logit[si];
    }
    return out;
  };
  op.sample = [fx, n](std::mt19937_64& rng) {
    VecX x(n * kSplatDim);
    for (int i = 0; i < n; ++i) {
      double* p = x.data() + i * kSplatDim;
      sample_raw_splat(rng, p);
      // The regularizer sees these means directly, so they must respect its
      // exclusion zones.
      const Vec3 mu = sample_safe_mu(rng);
      p[0] = mu.x();
      p[1] = mu.y();
      p[2] = mu.z();
    }
    return x;
  };
  return op;
}

DiffOp make_pipeline_deform_op() {
  DiffOp op;
  op.name = "pipeline.deform";
  auto fx = std::make_shared<PipelineFixture>();
  const Eigen::Index np = static_cast<Eigen::Index>(fx->net_upper.param_count());
  op.input_dim = static_cast<int>(2 * np);
  op.output_dim = 1;
  op.tolerance = 1e-4;

  op.forward = [fx, np](const VecX& x) {
    DeformMlp up = fx->net_upper;
    DeformMlp low = fx->net_lower;
    up.set_flat_params(x.segment(0, np));
    low.set_flat_params(x.segment(np, np));
    VecX out(1);
    out << fx->loss_for(fx->base_set, up, low);
    return out;
  };
  op.vjp = [fx, np](const VecX& x, const VecX& u) {
    DeformMlp up = fx->net_upper;
    DeformMlp low = fx->net_lower;
    up.set_flat_params(x.segment(0, np));
    low.set_flat_params(x.segment(np, np));
    const StepGradients g =
        compute_step_gradients(fx->scene, fx->base_set, &up, &low, fx->face_sets(), fx->cfg,
                               fx->scene.params[0], fx->scene.frames[0]);
    VecX out(2 * np);
    out.segment(0, np) = u[0] * g.ddeform_upper;
    out.segment(np, np) = u[0] * g.ddeform_lower;
    return out;
  };
  op.sample = [np](std::mt19937_64& rng) {
    VecX x(2 * np);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = uniform(rng, -0.4, 0.4);
    return x;
  };
  return op;
}

}  // namespace

std::vector<DiffOp> gradcheck_registry() {
  std::vector<DiffOp> ops;
  ops.push_back(make_polar_op());
  ops.push_back(make_loss_p_op());
  ops.push_back(make_loss_angle_op());
  ops.push_back(make_loss_reg_op());
  ops.push_back(make_loss_rgb_op());
  ops.push_back(make_deform_params_op());
  ops.push_back(make_deform_inputs_op());
  ops.push_back(make_render_op());
  ops.push_back(make_pipeline_splats_op());
  ops.push_back(make_pipeline_deform_op());
  return ops;
}

}  // namespace gavatar
