#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gavatar/aps.hpp"
#include "gavatar/deform.hpp"
#include "gavatar/losses.hpp"
#include "gavatar/rig.hpp"
#include "gavatar/splats.hpp"
#include "gavatar/types.hpp"

namespace gavatar {

struct TrainConfig {
  std::uint64_t seed = 1;
  int total_steps = 200000;  // full-scale default; desk-scale runs override
  int aps_step = 100000;
  double lambda = 0.2;
  RegThresholds thresholds;
  bool fold_phi = true;
  bool reg_mean_reduction = false;
  double reg_weight = 1.0;

  double lr_mean = 1.6e-4;
  double lr_rot = 1e-3;
  double lr_scale = 5e-3;
  double lr_color = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_deform = 1e-4;

  int per_face_init = 1;
  double init_scale = 0.5;
  double init_opacity = 0.1;

  int densify_interval = 0;  // 0 disables adaptive density control
  int densify_start = 500;
  int densify_stop = 0;  // 0 = never stop
  DensifyOptions densify;

  int threads = 1;
  int log_interval = 100;
  int test_tail = 0;    // hold out the last K frames
  int test_stride = 0;  // or hold out every K-th frame (tail wins if both set)

  bool deform_enabled = true;
  int deform_hidden_width = 64;
  int deform_hidden_layers = 3;
  int deform_freqs = 6;

  void validate() const;
};

// One optimization step's gradients for every trainable parameter, plus the
// loss decomposition. Shared between the trainer and the gradient checker so
// the checked path is the trained path.
struct StepGradients {
  std::vector<Vec3> dmu;
  std::vector<QuatGrad> dquat;  // w.r.t. the stored (unnormalized) quaternion
  std::vector<Vec3> dlog_scale;
  std::vector<Vec3> dcolor;
  std::vector<double> dopacity_logit;
  std::vector<double> grad2d;  // screen-space positional gradient norms
  VecX ddeform_upper, ddeform_lower;
  LossReport report;
  Image rendered;
};

StepGradients compute_step_gradients(const Scene& scene, const SplatSet& set,
                                     const DeformMlp* net_upper, const DeformMlp* net_lower,
                                     const std::vector<FaceSet>& set_of_face,
                                     const TrainConfig& cfg, const RigParams& params,
                                     const Image& target);

struct HistoryRow {
  std::uint64_t step = 0;
  LossReport report;
  std::optional<Metrics> eval;  // held-out metrics when computed
};

class Trainer {
 public:
  Trainer(Scene scene, TrainConfig cfg);

  // One optimization step on the next scheduled frame. Runs the one-shot
  // pre-allocation pass when the step counter hits aps_step.
  LossReport step();

  // Runs until total_steps; appends one history row per log interval.
  void run(std::ostream* log = nullptr);

  Metrics evaluate_split(bool held_out) const;
  std::vector<int> test_frames() const;
  std::vector<int> train_frames() const;

  // Renders a parameter sequence with the current model; no optimization.
  // Timesteps are taken from the sequence (novel sequences carry T=0).
  std::vector<Image> animate(const std::vector<RigParams>& sequence, const Camera& camera,
                             bool zero_timestep = false) const;
  Image render_current(const RigParams& params, const Camera& camera, bool zero_timestep) const;

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path, Scene scene, TrainConfig cfg);

  const SplatSet& splats() const { return set_; }
  const FaceSetAssignment& assignment() const { return assignment_; }
  bool aps_done() const { return aps_done_; }
  std::uint64_t current_step() const { return step_; }
  const Scene& scene() const { return scene_; }
  const std::vector<HistoryRow>& history() const { return history_; }
  const DeformMlp& net_upper() const { return net_upper_; }
  const DeformMlp& net_lower() const { return net_lower_; }

  // Exposed for the aps-report command: distances measured on the current state.
  ApsResult measure_aps() const;

  // One-shot barrier; throws AlreadyRan on a second invocation. step() calls
  // this automatically when the step counter reaches aps_step.
  void run_aps_barrier();

 private:
  struct Adam {
    VecX m, v;
    void resize(Eigen::Index n) {
      m = VecX::Zero(n);
      v = VecX::Zero(n);
    }
  };

  void start_epoch();
  int next_frame();
  void apply_adam(Adam& state, double lr, const VecX& grad, VecX& params) const;
  void remap_moments(const DensifyReport& report);

  Scene scene_;
  TrainConfig cfg_;
  SplatSet set_;
  DeformMlp net_upper_, net_lower_;
  FaceSetAssignment assignment_;
  bool aps_done_ = false;
  std::uint64_t step_ = 0;
  std::uint64_t adam_t_ = 0;
  std::mt19937_64 rng_;

  Adam adam_mean_, adam_rot_, adam_scale_, adam_color_, adam_opacity_;
  Adam adam_deform_up_, adam_deform_low_;

  std::vector<double> grad2d_accum_;
  std::vector<std::uint32_t> grad2d_count_;

  std::vector<int> train_order_;
  std::size_t epoch_pos_ = 0;

  std::vector<HistoryRow> history_;
};

}  // namespace gavatar
