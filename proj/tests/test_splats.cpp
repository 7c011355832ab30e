#include <doctest.h>

#include <cmath>

#include "gavatar/losses.hpp"
#include "gavatar/splats.hpp"
#include "test_helpers.hpp"

using namespace gavatar;

TEST_SUITE_BEGIN("splats");

namespace {

FaceFrame identity_frame() {
  FaceFrame f;
  f.rotation = Mat3::Identity();
  f.center = Vec3::Zero();
  f.scale = 1.0;
  return f;
}

}  // namespace

TEST_CASE("to_global with the identity frame is the identity") {
  Splat s;
  s.mu = Vec3(0.2, -0.1, 0.4);
  s.log_scale = Vec3(std::log(0.5), std::log(0.25), std::log(2.0));
  const GlobalGaussian g = to_global(s, identity_frame());
  CHECK(g.mean.isApprox(s.mu, 1e-15));
  CHECK(g.scale.isApprox(Vec3(0.5, 0.25, 2.0), 1e-12));
  CHECK(std::abs(g.rot.angularDistance(s.rot)) < 1e-12);
}

TEST_CASE("to_global scales and translates per the transform rule") {
  Splat s;
  s.mu = Vec3(0, 0, 1);
  FaceFrame f = identity_frame();
  f.scale = 2.0;
  f.center = Vec3(1, 0, 0);
  const GlobalGaussian g = to_global(s, f);
  CHECK(g.mean.isApprox(Vec3(1, 0, 2), 1e-15));
  CHECK(g.scale.isApprox(Vec3(2, 2, 2), 1e-12));
}

TEST_CASE("pure translation of the bound face translates the global mean only") {
  std::mt19937_64 rng(21);
  TriMesh mesh = testing::random_mesh(rng, 1);
  const Vec3 delta(0.4, 0.8, -0.3);
  TriMesh moved = mesh;
  for (Vec3& v : moved.vertices) v += delta;

  Splat s;
  s.mu = Vec3(0.3, 0.2, 0.5);
  s.rot = testing::random_rotation(rng);
  const GlobalGaussian a = to_global(s, compute_face_frame(mesh, 0));
  const GlobalGaussian b = to_global(s, compute_face_frame(moved, 0));
  CHECK((b.mean - (a.mean + delta)).norm() < 1e-12);
  CHECK(std::abs(b.rot.angularDistance(a.rot)) < 1e-12);
  CHECK((b.scale - a.scale).norm() < 1e-12);
}

TEST_CASE("re-expressing a global gaussian in the inverse frame recovers it") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    TriMesh mesh = testing::random_mesh(rng, 1);
    const FaceFrame f = compute_face_frame(mesh, 0);
    Splat s;
    s.mu = testing::random_vec3(rng);
    s.rot = testing::random_rotation(rng);
    s.log_scale = testing::random_vec3(rng, -1.0, 0.5);
    const GlobalGaussian g = to_global(s, f);

    const Vec3 mu_back = f.rotation.transpose() * (g.mean - f.center) / f.scale;
    const Vec3 scale_back = g.scale / f.scale;
    const Quat rot_back = (Quat(f.rotation).conjugate() * g.rot).normalized();
    CHECK((mu_back - s.mu).norm() < 1e-9);
    CHECK((scale_back - s.log_scale.array().exp().matrix()).norm() < 1e-9);
    CHECK(rot_back.angularDistance(s.rot) < 1e-9);
  }
}

TEST_CASE("initialization covers every face with surface-centered splats") {
  std::mt19937_64 rng(8);
  TriMesh mesh = testing::random_mesh(rng, 2);
  const SplatSet set = initialize_on_mesh(mesh, 1);
  REQUIRE(set.size() == 2);
  CHECK(set.binding[0] == 0);
  CHECK(set.binding[1] == 1);

  // All local means at zero: the offset regularizer starts at exactly zero.
  const std::vector<FaceSet> sets(mesh.num_faces(), FaceSet::Rigid);
  const RegLossResult reg = loss_reg(set, sets, RegThresholds{});
  CHECK(reg.value == 0.0);

  // Initial global means sit at the face centroids.
  for (std::size_t i = 0; i < set.size(); ++i) {
    const FaceFrame f = compute_face_frame(mesh, set.binding[i]);
    const GlobalGaussian g = to_global(set.splats[i], f);
    CHECK((g.mean - f.center).norm() < 1e-15);
  }

  CHECK_THROWS_AS(initialize_on_mesh(mesh, 0), Error);
}

TEST_CASE("densify is a no-op for calm gradients and high opacity") {
  std::mt19937_64 rng(100);
  TriMesh mesh = testing::random_mesh(rng, 2);
  SplatSet set = initialize_on_mesh(mesh, 2, 0.5, 0.9);
  const SplatSet before = set;
  std::vector<double> grad_norms(set.size(), 0.0);
  const DensifyReport report = densify_and_prune(set, grad_norms, DensifyOptions{}, 2, rng);
  CHECK(report.cloned == 0);
  CHECK(report.split == 0);
  CHECK(report.pruned == 0);
  REQUIRE(set.size() == before.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(set.splats[i].mu == before.splats[i].mu);
    CHECK(set.binding[i] == before.binding[i]);
  }
}

TEST_CASE("children inherit the parent binding") {
  std::mt19937_64 rng(101);
  TriMesh mesh = testing::random_mesh(rng, 3);
  SplatSet set = initialize_on_mesh(mesh, 1, 0.1, 0.9);  // small scale: clone path
  std::vector<double> grad_norms(set.size(), 0.0);
  grad_norms[1] = 1.0;
  DensifyOptions opts;
  const DensifyReport report = densify_and_prune(set, grad_norms, opts, 3, rng);
  CHECK(report.cloned == 1);
  REQUIRE(set.size() == 4);
  int bound_to_1 = 0;
  for (Index b : set.binding) bound_to_1 += b == 1 ? 1 : 0;
  CHECK(bound_to_1 == 2);

  // Large-scale splats split instead, again inheriting the binding.
  SplatSet set2 = initialize_on_mesh(mesh, 1, 0.6, 0.9);
  std::vector<double> grads2(set2.size(), 0.0);
  grads2[2] = 1.0;
  const DensifyReport report2 = densify_and_prune(set2, grads2, opts, 3, rng);
  CHECK(report2.split == 1);
  REQUIRE(set2.size() == 4);
  int bound_to_2 = 0;
  for (Index b : set2.binding) bound_to_2 += b == 2 ? 1 : 0;
  CHECK(bound_to_2 == 2);
  set2.validate(3);
}

TEST_CASE("low-opacity splats are pruned and empty faces flagged") {
  std::mt19937_64 rng(102);
  TriMesh mesh = testing::random_mesh(rng, 2);
  SplatSet set = initialize_on_mesh(mesh, 1, 0.5, 0.9);
  set.splats[0].opacity_logit = logit(1e-4);
  std::vector<double> grad_norms(set.size(), 0.0);
  DensifyOptions opts;
  opts.prune_opacity = 5e-3;
  const DensifyReport report = densify_and_prune(set, grad_norms, opts, 2, rng);
  CHECK(report.pruned == 1);
  CHECK(report.empty_faces == 1);
  CHECK(set.size() == 1);

  // Removing everything is an error.
  SplatSet all_dim = initialize_on_mesh(mesh, 1, 0.5, 1e-4);
  std::vector<double> zeros(all_dim.size(), 0.0);
  CHECK_THROWS_AS(densify_and_prune(all_dim, zeros, opts, 2, rng), Error);
}

TEST_CASE("part-wise rigidity: translating a part translates its bound splats") {
  std::mt19937_64 rng(55);
  TriMesh mesh = testing::random_mesh(rng, 4);
  mesh.part_names = {"a", "b"};
  mesh.part_of_face = {0, 0, 1, 1};

  SplatSet set = initialize_on_mesh(mesh, 1);
  for (auto& s : set.splats) s.mu = testing::random_vec3(rng, -0.5, 0.5);

  const Vec3 delta(0.05, -0.02, 0.08);
  TriMesh moved = mesh;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.part_of_face[f] != 1) continue;
    for (Index v : mesh.faces[f]) moved.vertices[v] = mesh.vertices[v] + delta;
  }

  for (std::size_t i = 0; i < set.size(); ++i) {
    const GlobalGaussian a = to_global(set.splats[i], compute_face_frame(mesh, set.binding[i]));
    const GlobalGaussian b = to_global(set.splats[i], compute_face_frame(moved, set.binding[i]));
    if (mesh.part_of_face[set.binding[i]] == 1) {
      CHECK((b.mean - (a.mean + delta)).norm() < 1e-12);
    } else {
      CHECK((b.mean - a.mean).norm() == 0.0);
    }
  }
}

TEST_CASE("quaternion rotation-matrix pullback matches finite differences") {
  std::mt19937_64 rng(77);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    Quat q_raw(testing::random_vec3(rng, 0.5, 1.5).x(), testing::random_vec3(rng).x(),
               testing::random_vec3(rng).y(), testing::random_vec3(rng).z());
    Mat3 upstream;
    for (int i = 0; i < 9; ++i) upstream.data()[i] = testing::random_vec3(rng).x();

    const QuatGrad analytic =
        quat_normalize_backward(q_raw, quat_rotmat_backward(q_raw.normalized(), upstream));

    double coeffs[4] = {q_raw.w(), q_raw.x(), q_raw.y(), q_raw.z()};
    for (int k = 0; k < 4; ++k) {
      double up_c[4], dn_c[4];
      std::copy(coeffs, coeffs + 4, up_c);
      std::copy(coeffs, coeffs + 4, dn_c);
      up_c[k] += h;
      dn_c[k] -= h;
      const Mat3 ru = Quat(up_c[0], up_c[1], up_c[2], up_c[3]).normalized().toRotationMatrix();
      const Mat3 rd = Quat(dn_c[0], dn_c[1], dn_c[2], dn_c[3]).normalized().toRotationMatrix();
      const double numeric = ((ru - rd) / (2 * h)).cwiseProduct(upstream).sum();
      CHECK(std::abs(numeric - analytic[k]) /
                std::max({std::abs(numeric), std::abs(analytic[k]), 1e-3}) <
            1e-5);
    }
  }
}

TEST_SUITE_END();
