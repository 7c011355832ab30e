#include "gavatar/splats.hpp"

#include <cmath>

namespace gavatar {

void SplatSet::validate(std::size_t num_faces) const {
  if (binding.size() != splats.size()) {
    throw Error(ErrorKind::ShapeMismatch, "binding array size does not match splat count");
  }
  for (std::size_t i = 0; i < binding.size(); ++i) {
    if (binding[i] >= num_faces) {
      throw Error(ErrorKind::BadFile, "splat " + std::to_string(i) + " bound to missing face " +
                                          std::to_string(binding[i]));
    }
  }
}

std::vector<std::vector<Index>> SplatSet::bound_by_face(std::size_t num_faces) const {
  std::vector<std::vector<Index>> index(num_faces);
  for (std::size_t i = 0; i < binding.size(); ++i) {
    index[binding[i]].push_back(static_cast<Index>(i));
  }
  return index;
}

GlobalGaussian to_global(const Splat& splat, const FaceFrame& frame) {
  GlobalGaussian g;
  g.mean = frame.scale * (frame.rotation * splat.mu) + frame.center;
  g.scale = frame.scale * splat.log_scale.array().exp().matrix();
  g.rot = (Quat(frame.rotation) * splat.rot).normalized();
  return g;
}

SplatSet initialize_on_mesh(const TriMesh& mesh, int per_face, double init_local_scale,
                            double init_opacity) {
  if (per_face < 1) {
    throw Error(ErrorKind::BadConfig, "per_face must be >= 1");
  }
  SplatSet set;
  set.splats.reserve(mesh.num_faces() * static_cast<std::size_t>(per_face));
  set.binding.reserve(set.splats.capacity());
  Splat proto;
  proto.log_scale = Vec3::Constant(std::log(init_local_scale));
  proto.opacity_logit = logit(init_opacity);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    for (int k = 0; k < per_face; ++k) {
      set.splats.push_back(proto);
      set.binding.push_back(f);
    }
  }
  return set;
}

DensifyReport densify_and_prune(SplatSet& set, const std::vector<double>& grad_norms,
                                const DensifyOptions& opts, std::size_t num_faces,
                                std::mt19937_64& rng) {
  if (grad_norms.size() != set.size()) {
    throw Error(ErrorKind::ShapeMismatch, "grad_norms not aligned with splats");
  }

  DensifyReport report;
  SplatSet out;
  out.splats.reserve(set.size() + set.size() / 4);
  out.binding.reserve(out.splats.capacity());
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto emit = [&](const Splat& s, Index face, Index source, bool is_new) {
    out.splats.push_back(s);
    out.binding.push_back(face);
    report.source.push_back(source);
    report.is_new.push_back(is_new ? 1 : 0);
  };

  for (std::size_t i = 0; i < set.size(); ++i) {
    const Splat& s = set.splats[i];
    const Index face = set.binding[i];
    const Index src = static_cast<Index>(i);
    if (sigmoid(s.opacity_logit) < opts.prune_opacity) {
      ++report.pruned;
      continue;
    }
    const bool over = grad_norms[i] > opts.grad_threshold && set.size() < opts.max_splats;
    if (!over) {
      emit(s, face, src, false);
      continue;
    }
    const Vec3 scale = s.log_scale.array().exp();
    if (scale.maxCoeff() > opts.split_scale) {
      // Split: two children at reduced scale, means jittered inside the parent footprint.
      ++report.split;
      for (int child = 0; child < 2; ++child) {
        Splat c = s;
        Vec3 jitter;
        for (int k = 0; k < 3; ++k) jitter[k] = gauss(rng) * scale[k];
        c.mu = s.mu + s.rot.toRotationMatrix() * jitter;
        c.log_scale = s.log_scale.array() - std::log(opts.split_ratio);
        emit(c, face, src, true);
      }
    } else {
      // Clone: keep the parent and add an identical sibling.
      ++report.cloned;
      emit(s, face, src, false);
      emit(s, face, src, true);
    }
  }

  if (out.splats.empty()) {
    throw Error(ErrorKind::EmptySet, "densify/prune removed every splat");
  }

  const auto index = out.bound_by_face(num_faces);
  for (const auto& bucket : index) {
    if (bucket.empty()) ++report.empty_faces;
  }

  set = std::move(out);
  return report;
}

QuatGrad quat_rotmat_backward(const Quat& q_unit, const Mat3& g) {
  const double w = q_unit.w(), x = q_unit.x(), y = q_unit.y(), z = q_unit.z();
  QuatGrad out;
  out[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) +
                  x * g(2, 1));
  out[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) +
                  z * g(2, 0) + w * g(2, 1) - 2.0 * x * g(2, 2));
  out[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                  w * g(2, 0) + z * g(2, 1) - 2.0 * y * g(2, 2));
  out[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
                  2.0 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return out;
}

QuatGrad quat_normalize_backward(const Quat& q_raw, const QuatGrad& dq_unit) {
  const double n = std::sqrt(q_raw.w() * q_raw.w() + q_raw.x() * q_raw.x() +
                             q_raw.y() * q_raw.y() + q_raw.z() * q_raw.z());
  QuatGrad q_hat;
  q_hat << q_raw.w() / n, q_raw.x() / n, q_raw.y() / n, q_raw.z() / n;
  const double dot = q_hat.dot(dq_unit);
  return (dq_unit - dot * q_hat) / n;
}

}  // namespace gavatar
