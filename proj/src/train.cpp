#include "gavatar/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gavatar {

void TrainConfig::validate() const {
  if (total_steps <= 0) throw Error(ErrorKind::BadConfig, "total_steps must be > 0");
  if (aps_step <= 0 || aps_step >= total_steps) {
    throw Error(ErrorKind::BadConfig, "aps_step must satisfy 0 < aps_step < total_steps");
  }
  for (double lr : {lr_mean, lr_rot, lr_scale, lr_color, lr_opacity, lr_deform}) {
    if (lr < 0.0) throw Error(ErrorKind::BadConfig, "learning rates must be >= 0");
  }
  if (!(thresholds.tau_r > 0.0) || !(thresholds.tau_r < thresholds.tau_f)) {
    throw Error(ErrorKind::BadConfig, "thresholds must satisfy 0 < tau_r < tau_f");
  }
  if (!(thresholds.tau_phi > 0.0) || thresholds.tau_phi > kPi / 2.0) {
    throw Error(ErrorKind::BadConfig, "tau_phi must lie in (0, pi/2]");
  }
  if (per_face_init < 1) throw Error(ErrorKind::BadConfig, "per_face_init must be >= 1");
  if (threads < 1) throw Error(ErrorKind::BadConfig, "threads must be >= 1");
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorKind::BadConfig, "lambda must be in [0, 1]");
}

namespace {

bool use_deform(const Scene& scene, const TrainConfig& cfg) {
  return cfg.deform_enabled && scene.has_mouth;
}

}  // namespace

StepGradients compute_step_gradients(const Scene& scene, const SplatSet& set,
                                     const DeformMlp* net_upper, const DeformMlp* net_lower,
                                     const std::vector<FaceSet>& set_of_face,
                                     const TrainConfig& cfg, const RigParams& params,
                                     const Image& target) {
  TriMesh mesh = scene.rig.evaluate(params);
  const bool deform = net_upper != nullptr && net_lower != nullptr && scene.has_mouth;
  if (deform) {
    const Vec3 dv_up = net_upper->forward(params.psi, params.theta, params.t_norm);
    const Vec3 dv_low = net_lower->forward(params.psi, params.theta, params.t_norm);
    apply_part_offsets_in_place(mesh, scene.aug, dv_up, dv_low);
  }
  const std::vector<FaceFrame> frames = compute_all_frames(mesh);

  const std::size_t n = set.size();
  std::vector<RenderSplat> globals(n);
  std::vector<Quat> unit_quats(n);
  std::vector<Vec3> exp_scales(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Splat& s = set.splats[i];
    const FaceFrame& fr = frames[set.binding[i]];
    unit_quats[i] = s.rot.normalized();
    exp_scales[i] = s.log_scale.array().exp();
    globals[i].mean = fr.scale * (fr.rotation * s.mu) + fr.center;
    globals[i].rot = fr.rotation * unit_quats[i].toRotationMatrix();
    globals[i].scale = fr.scale * exp_scales[i];
    globals[i].color = s.color;
    globals[i].opacity = sigmoid(s.opacity_logit);
  }

  RenderOptions ropts;
  ropts.background = scene.background;
  ropts.threads = cfg.threads;
  RenderCache cache;
  StepGradients out;
  out.rendered = render(globals, scene.camera, ropts, &cache);

  const RgbLossResult rgb = loss_rgb(out.rendered, target, cfg.lambda);

  RegOptions reg_opts;
  reg_opts.angle.fold_phi = cfg.fold_phi;
  reg_opts.mean_reduction = cfg.reg_mean_reduction;
  const RegLossResult reg = loss_reg(set, set_of_face, cfg.thresholds, reg_opts);

  out.report.l_rgb = rgb.value;
  out.report.l1 = rgb.l1;
  out.report.dssim = rgb.dssim;
  out.report.l_reg = cfg.reg_weight * reg.value;
  for (int k = 0; k < 3; ++k) out.report.l_p_by_set[k] = cfg.reg_weight * reg.l_p_by_set[k];
  out.report.l_angle = cfg.reg_weight * reg.l_angle;
  out.report.total = out.report.l_rgb + out.report.l_reg;

  const std::vector<SplatRenderGrads> rgrads = render_backward(cache, rgb.grad);

  out.dmu.assign(n, Vec3::Zero());
  out.dquat.assign(n, QuatGrad::Zero());
  out.dlog_scale.assign(n, Vec3::Zero());
  out.dcolor.assign(n, Vec3::Zero());
  out.dopacity_logit.assign(n, 0.0);
  out.grad2d.assign(n, 0.0);

  Vec3 dv_upper_grad = Vec3::Zero();
  Vec3 dv_lower_grad = Vec3::Zero();
  const std::size_t base_faces = scene.rig.base.num_faces() - scene.aug.new_faces.size();

  for (std::size_t i = 0; i < n; ++i) {
    const Splat& s = set.splats[i];
    const FaceFrame& fr = frames[set.binding[i]];
    const SplatRenderGrads& rg = rgrads[i];

    out.dmu[i] = fr.scale * (fr.rotation.transpose() * rg.dmean) + cfg.reg_weight * reg.dmu[i];
    const QuatGrad dq_unit = quat_rotmat_backward(unit_quats[i], fr.rotation.transpose() * rg.drot);
    out.dquat[i] = quat_normalize_backward(s.rot, dq_unit);
    out.dlog_scale[i] = rg.dscale.cwiseProduct(globals[i].scale);
    out.dcolor[i] = rg.dcolor;
    const double sig = globals[i].opacity;
    out.dopacity_logit[i] = rg.dopacity * sig * (1.0 - sig);
    out.grad2d[i] = rg.grad2d_norm;

    if (deform) {
      const Index face = set.binding[i];
      if (face >= base_faces) {
        // A uniform part translation moves the face frame center one-to-one,
        // so the offset gradient is the sum of the bound means' gradients.
        const MouthPart label = scene.aug.part_label[face - base_faces];
        if (label == MouthPart::Upper) {
          dv_upper_grad += rg.dmean;
        } else {
          dv_lower_grad += rg.dmean;
        }
      }
    }
  }

  if (deform) {
    out.ddeform_upper = net_upper->backward(dv_upper_grad).params;
    out.ddeform_lower = net_lower->backward(dv_lower_grad).params;
  }
  return out;
}

Trainer::Trainer(Scene scene, TrainConfig cfg)
    : scene_(std::move(scene)), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  scene_.rig.base.validate();
  if (scene_.params.size() != scene_.frames.size() || scene_.frames.empty()) {
    throw Error(ErrorKind::BadConfig, "scene has no frames or mismatched params");
  }

  set_ = initialize_on_mesh(scene_.rig.base, cfg_.per_face_init, cfg_.init_scale,
                            cfg_.init_opacity);
  assignment_ = FaceSetAssignment::all_rigid(scene_.rig.base, scene_.mouth_parts);

  if (use_deform(scene_, cfg_)) {
    const int psi_dim = scene_.rig.psi_dim();
    const int theta_dim = scene_.rig.theta_dim;
    PosEncoding enc;
    enc.num_freqs = cfg_.deform_freqs;
    std::vector<int> hidden(static_cast<std::size_t>(cfg_.deform_hidden_layers),
                            cfg_.deform_hidden_width);
    net_upper_ = DeformMlp(psi_dim, theta_dim, enc, hidden);
    net_lower_ = DeformMlp(psi_dim, theta_dim, enc, hidden);
    net_upper_.init_weights(rng_);
    net_lower_.init_weights(rng_);
    adam_deform_up_.resize(static_cast<Eigen::Index>(net_upper_.param_count()));
    adam_deform_low_.resize(static_cast<Eigen::Index>(net_lower_.param_count()));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(set_.size());
  adam_mean_.resize(3 * n);
  adam_rot_.resize(4 * n);
  adam_scale_.resize(3 * n);
  adam_color_.resize(3 * n);
  adam_opacity_.resize(n);
  grad2d_accum_.assign(set_.size(), 0.0);
  grad2d_count_.assign(set_.size(), 0);

  start_epoch();
}

std::vector<int> Trainer::test_frames() const {
  const int f = static_cast<int>(scene_.frames.size());
  std::vector<int> out;
  if (cfg_.test_tail > 0) {
    for (int i = std::max(0, f - cfg_.test_tail); i < f; ++i) out.push_back(i);
  } else if (cfg_.test_stride > 1) {
    for (int i = cfg_.test_stride - 1; i < f; i += cfg_.test_stride) out.push_back(i);
  }
  return out;
}

std::vector<int> Trainer::train_frames() const {
  const auto test = test_frames();
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(scene_.frames.size()); ++i) {
    if (std::find(test.begin(), test.end(), i) == test.end()) out.push_back(i);
  }
  if (out.empty()) {
    throw Error(ErrorKind::BadConfig, "train/test split leaves no training frames");
  }
  return out;
}

void Trainer::start_epoch() {
  train_order_ = train_frames();
  std::shuffle(train_order_.begin(), train_order_.end(), rng_);
  epoch_pos_ = 0;
}

int Trainer::next_frame() {
  if (epoch_pos_ >= train_order_.size()) start_epoch();
  return train_order_[epoch_pos_++];
}

void Trainer::apply_adam(Adam& state, double lr, const VecX& grad, VecX& params) const {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

LossReport Trainer::step() {
  const int frame = next_frame();
  const bool deform = use_deform(scene_, cfg_);
  const StepGradients grads = compute_step_gradients(
      scene_, set_, deform ? &net_upper_ : nullptr, deform ? &net_lower_ : nullptr,
      assignment_.set_of_face, cfg_, scene_.params[static_cast<std::size_t>(frame)],
      scene_.frames[static_cast<std::size_t>(frame)]);

  if (!std::isfinite(grads.report.total)) {
    std::ostringstream dump;
    dump << "non-finite loss at step " << step_ + 1 << " frame " << frame
         << " (l_rgb=" << grads.report.l_rgb << " l_reg=" << grads.report.l_reg << ")";
    throw Error(ErrorKind::NonFiniteLoss, dump.str());
  }

  ++adam_t_;
  const std::size_t n = set_.size();

  // Pack, update, unpack each attribute group.
  VecX p_mean(3 * n), g_mean(3 * n), p_rot(4 * n), g_rot(4 * n), p_scale(3 * n), g_scale(3 * n),
      p_color(3 * n), g_color(3 * n), p_op(n), g_op(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Splat& s = set_.splats[i];
    p_mean.segment<3>(3 * static_cast<Eigen::Index>(i)) = s.mu;
    g_mean.segment<3>(3 * static_cast<Eigen::Index>(i)) = grads.dmu[i];
    p_rot.segment<4>(4 * static_cast<Eigen::Index>(i)) << s.rot.w(), s.rot.x(), s.rot.y(),
        s.rot.z();
    g_rot.segment<4>(4 * static_cast<Eigen::Index>(i)) = grads.dquat[i];
    p_scale.segment<3>(3 * static_cast<Eigen::Index>(i)) = s.log_scale;
    g_scale.segment<3>(3 * static_cast<Eigen::Index>(i)) = grads.dlog_scale[i];
    p_color.segment<3>(3 * static_cast<Eigen::Index>(i)) = s.color;
    g_color.segment<3>(3 * static_cast<Eigen::Index>(i)) = grads.dcolor[i];
    p_op[static_cast<Eigen::Index>(i)] = s.opacity_logit;
    g_op[static_cast<Eigen::Index>(i)] = grads.dopacity_logit[i];
  }
  apply_adam(adam_mean_, cfg_.lr_mean, g_mean, p_mean);
  apply_adam(adam_rot_, cfg_.lr_rot, g_rot, p_rot);
  apply_adam(adam_scale_, cfg_.lr_scale, g_scale, p_scale);
  apply_adam(adam_color_, cfg_.lr_color, g_color, p_color);
  apply_adam(adam_opacity_, cfg_.lr_opacity, g_op, p_op);

  for (std::size_t i = 0; i < n; ++i) {
    Splat& s = set_.splats[i];
    s.mu = p_mean.segment<3>(3 * static_cast<Eigen::Index>(i));
    const Eigen::Index q = 4 * static_cast<Eigen::Index>(i);
    s.rot = Quat(p_rot[q], p_rot[q + 1], p_rot[q + 2], p_rot[q + 3]).normalized();
    s.log_scale = p_scale.segment<3>(3 * static_cast<Eigen::Index>(i))
                      .cwiseMax(kMinLogScale)
                      .cwiseMin(kMaxLogScale);
    s.color = p_color.segment<3>(3 * static_cast<Eigen::Index>(i)).cwiseMax(0.0).cwiseMin(1.0);
    s.opacity_logit = p_op[static_cast<Eigen::Index>(i)];
  }

  if (use_deform(scene_, cfg_)) {
    VecX p_up = net_upper_.flat_params();
    apply_adam(adam_deform_up_, cfg_.lr_deform, grads.ddeform_upper, p_up);
    net_upper_.set_flat_params(p_up);
    VecX p_low = net_lower_.flat_params();
    apply_adam(adam_deform_low_, cfg_.lr_deform, grads.ddeform_lower, p_low);
    net_lower_.set_flat_params(p_low);
  }

  for (std::size_t i = 0; i < n; ++i) {
    grad2d_accum_[i] += grads.grad2d[i];
    ++grad2d_count_[i];
  }

  ++step_;

  const bool densify_due = cfg_.densify_interval > 0 && step_ >= static_cast<std::uint64_t>(cfg_.densify_start) &&
                           (cfg_.densify_stop == 0 || step_ <= static_cast<std::uint64_t>(cfg_.densify_stop)) &&
                           step_ % static_cast<std::uint64_t>(cfg_.densify_interval) == 0;
  if (densify_due) {
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
      norms[i] = grad2d_count_[i] > 0 ? grad2d_accum_[i] / grad2d_count_[i] : 0.0;
    }
    const DensifyReport report =
        densify_and_prune(set_, norms, cfg_.densify, scene_.rig.base.num_faces(), rng_);
    remap_moments(report);
    grad2d_accum_.assign(set_.size(), 0.0);
    grad2d_count_.assign(set_.size(), 0);
  }

  if (step_ == static_cast<std::uint64_t>(cfg_.aps_step)) {
    run_aps_barrier();
  }
  return grads.report;
}

void Trainer::remap_moments(const DensifyReport& report) {
  const std::size_t n = set_.size();
  Adam mean_new, rot_new, scale_new, color_new, op_new;
  mean_new.resize(3 * static_cast<Eigen::Index>(n));
  rot_new.resize(4 * static_cast<Eigen::Index>(n));
  scale_new.resize(3 * static_cast<Eigen::Index>(n));
  color_new.resize(3 * static_cast<Eigen::Index>(n));
  op_new.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (report.is_new[i]) continue;  // fresh splats start with zero moments
    const Eigen::Index src = static_cast<Eigen::Index>(report.source[i]);
    const Eigen::Index dst = static_cast<Eigen::Index>(i);
    mean_new.m.segment<3>(3 * dst) = adam_mean_.m.segment<3>(3 * src);
    mean_new.v.segment<3>(3 * dst) = adam_mean_.v.segment<3>(3 * src);
    rot_new.m.segment<4>(4 * dst) = adam_rot_.m.segment<4>(4 * src);
    rot_new.v.segment<4>(4 * dst) = adam_rot_.v.segment<4>(4 * src);
    scale_new.m.segment<3>(3 * dst) = adam_scale_.m.segment<3>(3 * src);
    scale_new.v.segment<3>(3 * dst) = adam_scale_.v.segment<3>(3 * src);
    color_new.m.segment<3>(3 * dst) = adam_color_.m.segment<3>(3 * src);
    color_new.v.segment<3>(3 * dst) = adam_color_.v.segment<3>(3 * src);
    op_new.m[dst] = adam_opacity_.m[src];
    op_new.v[dst] = adam_opacity_.v[src];
  }
  adam_mean_ = std::move(mean_new);
  adam_rot_ = std::move(rot_new);
  adam_scale_ = std::move(scale_new);
  adam_color_ = std::move(color_new);
  adam_opacity_ = std::move(op_new);
}

void Trainer::run_aps_barrier() {
  if (aps_done_) {
    throw Error(ErrorKind::AlreadyRan, "the pre-allocation stage already ran");
  }
  const ApsResult result = measure_aps();
  assignment_ = result.assignment;
  aps_done_ = true;
}

ApsResult Trainer::measure_aps() const {
  return run_aps(set_, scene_.rig.base, scene_.mouth_parts);
}

void Trainer::run(std::ostream* log) {
  const bool has_test = !test_frames().empty();
  while (step_ < static_cast<std::uint64_t>(cfg_.total_steps)) {
    const LossReport report = step();
    const bool last = step_ == static_cast<std::uint64_t>(cfg_.total_steps);
    if (step_ % static_cast<std::uint64_t>(std::max(1, cfg_.log_interval)) == 0 || last) {
      HistoryRow row;
      row.step = step_;
      row.report = report;
      if (has_test && (last || step_ % static_cast<std::uint64_t>(
                                           std::max(1, cfg_.log_interval * 10)) == 0)) {
        row.eval = evaluate_split(true);
      }
      history_.push_back(row);
      if (log != nullptr) {
        (*log) << "step=" << row.step << " total=" << report.total << " l_rgb=" << report.l_rgb
               << " l1=" << report.l1 << " dssim=" << report.dssim << " l_reg=" << report.l_reg
               << " l_p_rigid=" << report.l_p_by_set[0] << " l_p_flexible=" << report.l_p_by_set[1]
               << " l_p_mouth=" << report.l_p_by_set[2] << " l_angle=" << report.l_angle;
        if (row.eval) {
          (*log) << " eval_mse=" << row.eval->mse << " eval_psnr=" << row.eval->psnr
                 << " eval_ssim=" << row.eval->ssim;
        }
        (*log) << "\n";
      }
    }
  }
}

Image Trainer::render_current(const RigParams& params, const Camera& camera,
                              bool zero_timestep) const {
  TriMesh mesh = scene_.rig.evaluate(params);
  if (use_deform(scene_, cfg_)) {
    const double t = zero_timestep ? 0.0 : params.t_norm;
    const Vec3 dv_up = net_upper_.forward(params.psi, params.theta, t);
    const Vec3 dv_low = net_lower_.forward(params.psi, params.theta, t);
    apply_part_offsets_in_place(mesh, scene_.aug, dv_up, dv_low);
  }
  const std::vector<FaceFrame> frames = compute_all_frames(mesh);
  std::vector<RenderSplat> globals(set_.size());
  for (std::size_t i = 0; i < set_.size(); ++i) {
    const Splat& s = set_.splats[i];
    const FaceFrame& fr = frames[set_.binding[i]];
    globals[i].mean = fr.scale * (fr.rotation * s.mu) + fr.center;
    globals[i].rot = fr.rotation * s.rot.normalized().toRotationMatrix();
    globals[i].scale = fr.scale * s.log_scale.array().exp().matrix();
    globals[i].color = s.color;
    globals[i].opacity = sigmoid(s.opacity_logit);
  }
  RenderOptions opts;
  opts.background = scene_.background;
  opts.threads = cfg_.threads;
  return render(globals, camera, opts);
}

Metrics Trainer::evaluate_split(bool held_out) const {
  const std::vector<int> frames = held_out ? test_frames() : train_frames();
  if (frames.empty()) {
    throw Error(ErrorKind::BadConfig, "no frames in the requested split");
  }
  Metrics avg;
  for (int f : frames) {
    const Image img =
        render_current(scene_.params[static_cast<std::size_t>(f)], scene_.camera, true);
    const Metrics m = metrics(img, scene_.frames[static_cast<std::size_t>(f)]);
    avg.mse += m.mse;
    avg.psnr += m.psnr;
    avg.ssim += m.ssim;
  }
  const double inv = 1.0 / static_cast<double>(frames.size());
  avg.mse *= inv;
  avg.psnr *= inv;
  avg.ssim *= inv;
  return avg;
}

std::vector<Image> Trainer::animate(const std::vector<RigParams>& sequence, const Camera& camera,
                                    bool zero_timestep) const {
  std::vector<Image> out;
  out.reserve(sequence.size());
  for (const RigParams& p : sequence) {
    out.push_back(render_current(p, camera, zero_timestep));
  }
  return out;
}

// --- checkpoint I/O ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'A', 'V', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void put(std::ostream& out, T v) {
  put_bytes(out, &v, sizeof(T));
}
void put_vec(std::ostream& out, const VecX& v) {
  put_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void take_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw Error(ErrorKind::BadCheckpoint, "truncated checkpoint");
}
template <typename T>
T take(std::istream& in) {
  T v;
  take_bytes(in, &v, sizeof(T));
  return v;
}
VecX take_vec(std::istream& in, Eigen::Index n) {
  VecX v(n);
  take_bytes(in, v.data(), sizeof(double) * static_cast<std::size_t>(n));
  return v;
}

void put_net(std::ostream& out, const DeformMlp& net) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_widths().size()));
  for (int w : net.layer_widths()) put<std::int32_t>(out, w);
  put<std::int32_t>(out, net.psi_dim());
  put<std::int32_t>(out, net.theta_dim());
  put<std::int32_t>(out, net.encoding().num_freqs);
  put<std::uint8_t>(out, net.encoding().include_input ? 1 : 0);
  const VecX p = net.flat_params();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
  put_vec(out, p);
}

DeformMlp take_net(std::istream& in) {
  const std::uint32_t n_widths = take<std::uint32_t>(in);
  std::vector<int> widths(n_widths);
  for (auto& w : widths) w = take<std::int32_t>(in);
  const int psi_dim = take<std::int32_t>(in);
  const int theta_dim = take<std::int32_t>(in);
  PosEncoding enc;
  enc.num_freqs = take<std::int32_t>(in);
  enc.include_input = take<std::uint8_t>(in) != 0;
  std::vector<int> hidden(widths.begin() + 1, widths.end() - 1);
  DeformMlp net(psi_dim, theta_dim, enc, hidden);
  const std::uint64_t np = take<std::uint64_t>(in);
  if (np != net.param_count()) {
    throw Error(ErrorKind::BadCheckpoint, "deformation net parameter count mismatch");
  }
  net.set_flat_params(take_vec(in, static_cast<Eigen::Index>(np)));
  return net;
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::BadFile, "cannot open " + path + " for writing");

  put_bytes(out, kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(set_.size()));
  for (const Splat& s : set_.splats) {
    put(out, s.mu.x());
    put(out, s.mu.y());
    put(out, s.mu.z());
    put(out, s.rot.w());
    put(out, s.rot.x());
    put(out, s.rot.y());
    put(out, s.rot.z());
    put_vec(out, s.log_scale);
    put_vec(out, s.color);
    put(out, s.opacity_logit);
  }
  for (Index b : set_.binding) put<std::uint32_t>(out, b);

  // DEFN
  put_bytes(out, "DEFN", 4);
  const bool deform = use_deform(scene_, cfg_);
  put<std::uint8_t>(out, deform ? 1 : 0);
  if (deform) {
    put_net(out, net_upper_);
    put_net(out, net_lower_);
  }

  // OPTM
  put_bytes(out, "OPTM", 4);
  put<std::uint64_t>(out, adam_t_);
  for (const Adam* a : {&adam_mean_, &adam_rot_, &adam_scale_, &adam_color_, &adam_opacity_}) {
    put_vec(out, a->m);
    put_vec(out, a->v);
  }
  if (deform) {
    put_vec(out, adam_deform_up_.m);
    put_vec(out, adam_deform_up_.v);
    put_vec(out, adam_deform_low_.m);
    put_vec(out, adam_deform_low_.v);
  }

  // APSS
  put_bytes(out, "APSS", 4);
  put<std::uint8_t>(out, aps_done_ ? 1 : 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(assignment_.set_of_part.size()));
  for (std::size_t p = 0; p < assignment_.set_of_part.size(); ++p) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(assignment_.set_of_part[p]));
    put<double>(out, p < assignment_.part_distance.size() ? assignment_.part_distance[p] : 0.0);
  }
  put<double>(out, assignment_.tau_part);

  // TRNR
  put_bytes(out, "TRNR", 4);
  put<std::uint64_t>(out, step_);
  std::ostringstream rng_state;
  rng_state << rng_;
  const std::string rs = rng_state.str();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(rs.size()));
  put_bytes(out, rs.data(), rs.size());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(epoch_pos_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(train_order_.size()));
  for (int f : train_order_) put<std::int32_t>(out, f);
  for (double g : grad2d_accum_) put<double>(out, g);
  for (std::uint32_t c : grad2d_count_) put<std::uint32_t>(out, c);

  if (!out) throw Error(ErrorKind::BadFile, "write failed for " + path);
}

Trainer Trainer::load_checkpoint(const std::string& path, Scene scene, TrainConfig cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::BadCheckpoint, "cannot open " + path);

  char magic[4];
  take_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorKind::BadCheckpoint, path + " is not a checkpoint (bad magic)");
  }
  if (take<std::uint32_t>(in) != kVersion) {
    throw Error(ErrorKind::BadCheckpoint, "unsupported checkpoint version");
  }

  Trainer t(std::move(scene), cfg);

  const std::uint64_t count = take<std::uint64_t>(in);
  t.set_.splats.assign(count, Splat{});
  t.set_.binding.assign(count, 0);
  for (auto& s : t.set_.splats) {
    const double mx = take<double>(in), my = take<double>(in), mz = take<double>(in);
    s.mu = Vec3(mx, my, mz);
    const double qw = take<double>(in), qx = take<double>(in), qy = take<double>(in),
                 qz = take<double>(in);
    s.rot = Quat(qw, qx, qy, qz);
    s.log_scale = take_vec(in, 3);
    s.color = take_vec(in, 3);
    s.opacity_logit = take<double>(in);
  }
  for (auto& b : t.set_.binding) b = take<std::uint32_t>(in);
  t.set_.validate(t.scene_.rig.base.num_faces());

  char tag[4];
  take_bytes(in, tag, 4);
  if (std::memcmp(tag, "DEFN", 4) != 0) throw Error(ErrorKind::BadCheckpoint, "missing DEFN");
  const bool deform = take<std::uint8_t>(in) != 0;
  if (deform) {
    t.net_upper_ = take_net(in);
    t.net_lower_ = take_net(in);
  }

  take_bytes(in, tag, 4);
  if (std::memcmp(tag, "OPTM", 4) != 0) throw Error(ErrorKind::BadCheckpoint, "missing OPTM");
  t.adam_t_ = take<std::uint64_t>(in);
  const Eigen::Index n = static_cast<Eigen::Index>(count);
  for (Adam* a : {&t.adam_mean_, &t.adam_rot_, &t.adam_scale_, &t.adam_color_, &t.adam_opacity_}) {
    const Eigen::Index sz = a == &t.adam_rot_ ? 4 * n : (a == &t.adam_opacity_ ? n : 3 * n);
    a->m = take_vec(in, sz);
    a->v = take_vec(in, sz);
  }
  if (deform) {
    const Eigen::Index np_up = static_cast<Eigen::Index>(t.net_upper_.param_count());
    const Eigen::Index np_low = static_cast<Eigen::Index>(t.net_lower_.param_count());
    t.adam_deform_up_.m = take_vec(in, np_up);
    t.adam_deform_up_.v = take_vec(in, np_up);
    t.adam_deform_low_.m = take_vec(in, np_low);
    t.adam_deform_low_.v = take_vec(in, np_low);
  }

  take_bytes(in, tag, 4);
  if (std::memcmp(tag, "APSS", 4) != 0) throw Error(ErrorKind::BadCheckpoint, "missing APSS");
  t.aps_done_ = take<std::uint8_t>(in) != 0;
  const std::uint32_t n_parts = take<std::uint32_t>(in);
  if (n_parts != static_cast<std::uint32_t>(t.scene_.rig.base.num_parts())) {
    throw Error(ErrorKind::BadCheckpoint, "checkpoint part count does not match the scene");
  }
  t.assignment_.set_of_part.resize(n_parts);
  t.assignment_.part_distance.resize(n_parts);
  for (std::uint32_t p = 0; p < n_parts; ++p) {
    t.assignment_.set_of_part[p] = static_cast<FaceSet>(take<std::uint8_t>(in));
    t.assignment_.part_distance[p] = take<double>(in);
  }
  t.assignment_.tau_part = take<double>(in);
  t.assignment_.set_of_face.resize(t.scene_.rig.base.num_faces());
  for (std::size_t f = 0; f < t.scene_.rig.base.num_faces(); ++f) {
    t.assignment_.set_of_face[f] =
        t.assignment_.set_of_part[static_cast<std::size_t>(t.scene_.rig.base.part_of_face[f])];
  }

  take_bytes(in, tag, 4);
  if (std::memcmp(tag, "TRNR", 4) != 0) throw Error(ErrorKind::BadCheckpoint, "missing TRNR");
  t.step_ = take<std::uint64_t>(in);
  const std::uint64_t rs_len = take<std::uint64_t>(in);
  std::string rs(rs_len, '\0');
  take_bytes(in, rs.data(), rs_len);
  std::istringstream rng_state(rs);
  rng_state >> t.rng_;
  t.epoch_pos_ = take<std::uint64_t>(in);
  const std::uint32_t n_order = take<std::uint32_t>(in);
  t.train_order_.resize(n_order);
  for (auto& f : t.train_order_) f = take<std::int32_t>(in);
  t.grad2d_accum_.resize(count);
  for (auto& g : t.grad2d_accum_) g = take<double>(in);
  t.grad2d_count_.resize(count);
  for (auto& c : t.grad2d_count_) c = take<std::uint32_t>(in);

  return t;
}

}  // namespace gavatar
