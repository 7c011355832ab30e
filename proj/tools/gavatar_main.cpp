#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gavatar/formats.hpp"
#include "gavatar/gradcheck.hpp"
#include "gavatar/train.hpp"

namespace fs = std::filesystem;
using namespace gavatar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::BadConfig:
      return kExitUsage;
    case ErrorKind::NonFiniteLoss:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

struct TrainCliOverrides {
  std::string config_path;
  std::vector<std::string> set_args;  // key=value overrides, flags win over the file
};

TrainConfig resolve_config(const TrainCliOverrides& o, TrainConfig base) {
  if (!o.config_path.empty()) {
    base = train_config_from_kv(read_kv_file(o.config_path), base);
  }
  std::map<std::string, std::string> kv;
  for (const std::string& arg : o.set_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::BadConfig, "--set expects key=value, got '" + arg + "'");
    }
    kv[arg.substr(0, eq)] = arg.substr(eq + 1);
  }
  return train_config_from_kv(kv, base);
}

void write_history(const Trainer& trainer, const std::string& path) {
  std::ofstream out(path);
  for (const HistoryRow& row : trainer.history()) {
    out << "step=" << row.step << " total=" << fmt_double(row.report.total)
        << " l_rgb=" << fmt_double(row.report.l_rgb) << " l1=" << fmt_double(row.report.l1)
        << " dssim=" << fmt_double(row.report.dssim) << " l_reg=" << fmt_double(row.report.l_reg)
        << " l_angle=" << fmt_double(row.report.l_angle);
    if (row.eval) {
      out << " eval_mse=" << fmt_double(row.eval->mse) << " eval_psnr=" << fmt_double(row.eval->psnr)
          << " eval_ssim=" << fmt_double(row.eval->ssim);
    }
    out << "\n";
  }
}

void print_aps_report(std::ostream& out, const Scene& scene, const ApsResult& result,
                      const SplatSet& set) {
  for (int p = 0; p < scene.rig.base.num_parts(); ++p) {
    out << "part=" << scene.rig.base.part_names[static_cast<std::size_t>(p)]
        << " distance=" << fmt_double(result.assignment.part_distance[static_cast<std::size_t>(p)])
        << " set=" << face_set_name(result.assignment.set_of_part[static_cast<std::size_t>(p)])
        << "\n";
  }
  out << "tau_part=" << fmt_double(result.assignment.tau_part) << "\n";
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < set.size(); ++i) {
    counts[static_cast<int>(result.assignment.set_of_face[set.binding[i]])] += 1;
  }
  out << "splats_total=" << set.size() << " splats_rigid=" << counts[0]
      << " splats_flexible=" << counts[1] << " splats_mouth=" << counts[2]
      << " empty_faces=" << result.empty_faces << "\n";
}

int cmd_augment_mesh(const std::string& mesh_path, const std::string& parts_path,
                     const std::string& rings_path, double depth, const std::string& out_mesh,
                     const std::string& out_parts, const std::string& out_aug) {
  TriMesh mesh = read_obj(mesh_path);
  if (!parts_path.empty()) {
    read_parts(mesh, parts_path);
  }
  const RingSpec rings = read_rings(rings_path);
  const MouthAugmentation aug = build_mouth_structure(mesh, rings.upper, rings.lower, depth);
  const std::size_t base_faces = mesh.num_faces();
  TriMesh augmented = mesh;
  const int mouth_part = splice_augmentation(augmented, aug, "mouth-interior");
  write_obj(augmented, out_mesh);
  write_parts(augmented, out_parts, &aug, mouth_part);
  if (!out_aug.empty()) {
    write_augmentation(aug, base_faces, out_aug);
  }
  std::cout << "faces_added=" << aug.new_faces.size() << " vertices_added="
            << aug.new_vertices.size() << " mouth_part=" << mouth_part << "\n";
  return kExitOk;
}

int cmd_gen_scene(const SceneSpec& spec, const std::string& out_dir) {
  const Scene scene = generate_scene(spec);
  save_scene(scene, out_dir);
  std::cout << "preset=" << scene.preset << " frames=" << scene.frames.size()
            << " faces=" << scene.rig.base.num_faces() << " gt_splats=" << scene.gt_splats.size()
            << " out=" << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& scene_dir, const std::string& out_dir,
              const TrainCliOverrides& overrides) {
  const TrainConfig cfg = resolve_config(overrides, TrainConfig{});
  Scene scene = load_scene(scene_dir);
  Trainer trainer(std::move(scene), cfg);
  fs::create_directories(out_dir);
  write_train_config(cfg, (fs::path(out_dir) / "config.txt").string());
  std::ofstream log((fs::path(out_dir) / "log.txt").string());
  trainer.run(&log);

  trainer.save_checkpoint((fs::path(out_dir) / "checkpoint.gavt").string());
  write_history(trainer, (fs::path(out_dir) / "metrics.txt").string());
  if (trainer.aps_done()) {
    std::ofstream aps_out((fs::path(out_dir) / "aps.txt").string());
    ApsResult result;
    result.assignment = trainer.assignment();
    print_aps_report(aps_out, trainer.scene(), result, trainer.splats());
  }
  const Metrics train_metrics = trainer.evaluate_split(false);
  std::cout << "steps=" << trainer.current_step() << " train_mse=" << fmt_double(train_metrics.mse)
            << " train_psnr=" << fmt_double(train_metrics.psnr)
            << " train_ssim=" << fmt_double(train_metrics.ssim);
  if (!trainer.test_frames().empty()) {
    const Metrics test_metrics = trainer.evaluate_split(true);
    std::cout << " test_mse=" << fmt_double(test_metrics.mse)
              << " test_psnr=" << fmt_double(test_metrics.psnr)
              << " test_ssim=" << fmt_double(test_metrics.ssim);
  }
  std::cout << " checkpoint=" << (fs::path(out_dir) / "checkpoint.gavt").string() << "\n";
  return kExitOk;
}

int cmd_animate(const std::string& scene_dir, const std::string& checkpoint,
                const std::string& params_path, const std::string& out_dir, bool zero_timestep,
                const TrainCliOverrides& overrides) {
  const TrainConfig cfg = resolve_config(overrides, TrainConfig{});
  Scene scene = load_scene(scene_dir);
  const Camera camera = scene.camera;
  Trainer trainer = Trainer::load_checkpoint(checkpoint, std::move(scene), cfg);
  const std::vector<RigParams> sequence =
      params_path.empty() ? trainer.scene().params : read_params_sequence(params_path);
  const std::vector<Image> images = trainer.animate(sequence, camera, zero_timestep);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "anim_%05zu.ppm", i);
    write_ppm(images[i], (fs::path(out_dir) / name).string());
  }
  std::cout << "frames=" << images.size() << " out=" << out_dir << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred, const std::string& ref) {
  const Image a = read_ppm(pred);
  const Image b = read_ppm(ref);
  const Metrics m = metrics(a, b);
  std::cout << "mse=" << fmt_double(m.mse) << " psnr=" << fmt_double(m.psnr)
            << " ssim=" << fmt_double(m.ssim) << "\n";
  return kExitOk;
}

int cmd_aps_report(const std::string& scene_dir, const std::string& checkpoint,
                   const TrainCliOverrides& overrides) {
  const TrainConfig cfg = resolve_config(overrides, TrainConfig{});
  Scene scene = load_scene(scene_dir);
  Trainer trainer = Trainer::load_checkpoint(checkpoint, std::move(scene), cfg);
  const ApsResult result = trainer.measure_aps();
  print_aps_report(std::cout, trainer.scene(), result, trainer.splats());
  return kExitOk;
}

int cmd_grad_check(const std::string& module, std::uint64_t seed, int trials, double h) {
  std::mt19937_64 rng(seed);
  double overall_max = 0.0;
  bool all_passed = true;
  bool matched = false;
  for (const DiffOp& op : gradcheck_registry()) {
    if (!module.empty() && module != "all" && op.name.find(module) == std::string::npos) continue;
    matched = true;
    const GradCheckResult r = check_gradients(op, trials, h, rng);
    const bool ok = r.max_rel_error <= op.tolerance;
    all_passed = all_passed && ok;
    overall_max = std::max(overall_max, r.max_rel_error);
    std::cout << "op=" << op.name << " max_rel_error=" << fmt_double(r.max_rel_error)
              << " tolerance=" << fmt_double(op.tolerance) << " worst_coord=" << r.worst_coord
              << " status=" << (ok ? "pass" : "FAIL") << "\n";
  }
  if (!matched) {
    std::cerr << "no gradient-checked operation matches '" << module << "'\n";
    return kExitUsage;
  }
  std::cout << "max_rel_error=" << fmt_double(overall_max) << "\n";
  return all_passed && overall_max <= 1e-4 ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-rigged Gaussian splat avatars with adaptive offset regularization"};
  app.require_subcommand(1);

  // augment-mesh
  auto* augment = app.add_subcommand("augment-mesh", "Add teeth/palate/floor sheets to a mesh");
  std::string mesh_path, parts_path, rings_path, out_mesh, out_parts, out_aug;
  double depth = 0.02;
  augment->add_option("--mesh", mesh_path, "input OBJ")->required();
  augment->add_option("--parts", parts_path, "input part mask");
  augment->add_option("--rings", rings_path, "ring sidecar (upper/lower vertex ids)")->required();
  augment->add_option("--depth", depth, "backward shift depth (model units)");
  augment->add_option("--out-mesh", out_mesh, "augmented OBJ")->required();
  augment->add_option("--out-parts", out_parts, "updated part mask")->required();
  augment->add_option("--out-aug", out_aug, "augmentation sidecar");

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic scene directory");
  SceneSpec spec;
  std::string gen_out, gen_spec_path;
  gen->add_option("--spec", gen_spec_path, "scene spec file (key = value); flags override");
  gen->add_option("--preset", spec.preset, "smoke | aps | mouth");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--frames", spec.frames, "frame count");
  gen->add_option("--width", spec.width, "image width");
  gen->add_option("--height", spec.height, "image height");
  gen->add_option("--seed", spec.seed, "random seed");
  gen->add_option("--detail-rigid", spec.detail_rigid, "ground-truth offset on rigid-truth parts");
  gen->add_option("--detail-flexible", spec.detail_flexible,
                  "ground-truth offset on flexible-truth parts");

  // train
  auto* train = app.add_subcommand("train", "Fit splats and deformation nets to a scene");
  std::string train_scene, train_out;
  TrainCliOverrides train_overrides;
  train->add_option("--scene", train_scene, "scene directory")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--config", train_overrides.config_path, "config file (key = value)");
  train->add_option("--set", train_overrides.set_args, "config override key=value (flags win)");

  // animate
  auto* animate = app.add_subcommand("animate", "Render a parameter sequence from a checkpoint");
  std::string anim_scene, anim_ckpt, anim_params, anim_out;
  bool zero_timestep = false;
  TrainCliOverrides anim_overrides;
  animate->add_option("--scene", anim_scene, "scene directory")->required();
  animate->add_option("--checkpoint", anim_ckpt, "checkpoint file")->required();
  animate->add_option("--params", anim_params, "parameter sequence (defaults to the scene's)");
  animate->add_option("--out", anim_out, "output directory")->required();
  animate->add_flag("--zero-timestep", zero_timestep,
                    "force T=0 (novel-animation rule; replay keeps sequence timesteps)");
  animate->add_option("--config", anim_overrides.config_path, "config file");
  animate->add_option("--set", anim_overrides.set_args, "config override key=value");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Image metrics between two PPM files");
  std::string eval_pred, eval_ref;
  eval_cmd->add_option("--pred", eval_pred, "predicted image")->required();
  eval_cmd->add_option("--ref", eval_ref, "reference image")->required();

  // aps-report
  auto* aps = app.add_subcommand("aps-report", "Per-part distances and set assignment");
  std::string aps_scene, aps_ckpt;
  TrainCliOverrides aps_overrides;
  aps->add_option("--scene", aps_scene, "scene directory")->required();
  aps->add_option("--checkpoint", aps_ckpt, "checkpoint file")->required();
  aps->add_option("--config", aps_overrides.config_path, "config file");
  aps->add_option("--set", aps_overrides.set_args, "config override key=value");

  // grad-check
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of all adjoints");
  std::string grad_module = "all";
  std::uint64_t grad_seed = 7;
  int grad_trials = 100;
  double grad_h = 1e-6;
  grad->add_option("--module", grad_module, "substring filter (default: all)");
  grad->add_option("--seed", grad_seed, "random seed");
  grad->add_option("--trials", grad_trials, "trials per operation");
  grad->add_option("--step", grad_h, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (augment->parsed()) {
      return cmd_augment_mesh(mesh_path, parts_path, rings_path, depth, out_mesh, out_parts,
                              out_aug);
    }
    if (gen->parsed()) {
      SceneSpec resolved;
      if (!gen_spec_path.empty()) resolved = scene_spec_from_kv(read_kv_file(gen_spec_path));
      if (gen->count("--preset")) resolved.preset = spec.preset;
      if (gen->count("--frames")) resolved.frames = spec.frames;
      if (gen->count("--width")) resolved.width = spec.width;
      if (gen->count("--height")) resolved.height = spec.height;
      if (gen->count("--seed")) resolved.seed = spec.seed;
      if (gen->count("--detail-rigid")) resolved.detail_rigid = spec.detail_rigid;
      if (gen->count("--detail-flexible")) resolved.detail_flexible = spec.detail_flexible;
      if (gen_spec_path.empty() && gen->count("--preset") == 0) {
        throw Error(ErrorKind::BadConfig, "gen-scene needs --preset or a --spec file");
      }
      return cmd_gen_scene(resolved, gen_out);
    }
    if (train->parsed()) return cmd_train(train_scene, train_out, train_overrides);
    if (animate->parsed()) {
      return cmd_animate(anim_scene, anim_ckpt, anim_params, anim_out, zero_timestep,
                         anim_overrides);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_pred, eval_ref);
    if (aps->parsed()) return cmd_aps_report(aps_scene, aps_ckpt, aps_overrides);
    if (grad->parsed()) return cmd_grad_check(grad_module, grad_seed, grad_trials, grad_h);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
