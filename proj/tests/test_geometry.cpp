#include <doctest.h>

#include <cmath>

#include "gavatar/geometry.hpp"
#include "test_helpers.hpp"

using namespace gavatar;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("face frame of the unit right triangle") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  mesh.faces = {{0, 1, 2}};
  mesh.part_of_face = {0};
  mesh.part_names = {"all"};

  const FaceFrame f = compute_face_frame(mesh, 0);
  CHECK(f.center.isApprox(Vec3(1.0 / 3, 1.0 / 3, 0), 1e-15));
  CHECK(f.rotation.col(2).isApprox(Vec3(0, 0, 1), 1e-15));
  CHECK(f.rotation.col(0).isApprox(Vec3(1, 0, 0), 1e-15));
  CHECK(f.scale == doctest::Approx((1.0 + 1.0 + std::sqrt(2.0)) / 3.0).epsilon(1e-15));
}

TEST_CASE("frame columns stay orthonormal with unit determinant") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const TriMesh mesh = testing::random_mesh(rng, 3);
    for (Index f = 0; f < mesh.num_faces(); ++f) {
      const FaceFrame frame = compute_face_frame(mesh, f);
      CHECK((frame.rotation.transpose() * frame.rotation - Mat3::Identity()).norm() < 1e-9);
      CHECK(frame.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(frame.scale > 0.0);
    }
  }
}

TEST_CASE("frame equivariance under rigid rotation") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    TriMesh mesh = testing::random_mesh(rng, 2);
    const Mat3 q = testing::random_rotation(rng).toRotationMatrix();
    TriMesh rotated = mesh;
    for (Vec3& v : rotated.vertices) v = q * v;

    for (Index f = 0; f < mesh.num_faces(); ++f) {
      const FaceFrame a = compute_face_frame(mesh, f);
      const FaceFrame b = compute_face_frame(rotated, f);
      CHECK((b.rotation - q * a.rotation).norm() < 1e-9);
      CHECK((b.center - q * a.center).norm() < 1e-9);
      CHECK(b.scale == doctest::Approx(a.scale).epsilon(1e-12));
    }
  }
}

TEST_CASE("frame translation invariance") {
  std::mt19937_64 rng(7);
  TriMesh mesh = testing::random_mesh(rng, 3);
  const Vec3 delta(0.3, -1.7, 2.5);
  TriMesh moved = mesh;
  for (Vec3& v : moved.vertices) v += delta;
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const FaceFrame a = compute_face_frame(mesh, f);
    const FaceFrame b = compute_face_frame(moved, f);
    CHECK((b.rotation - a.rotation).norm() < 1e-12);
    CHECK((b.center - (a.center + delta)).norm() < 1e-12);
    CHECK(b.scale == doctest::Approx(a.scale).epsilon(1e-14));
  }
}

TEST_CASE("degenerate face is rejected") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  mesh.faces = {{0, 1, 2}};
  mesh.part_of_face = {0};
  mesh.part_names = {"all"};
  CHECK_THROWS_AS(compute_face_frame(mesh, 0), Error);
}

TEST_CASE("polar axis cases") {
  const PolarMean a = to_polar(Vec3(1, 0, 0));
  CHECK(a.r == doctest::Approx(1.0));
  CHECK(a.theta == doctest::Approx(0.0));
  CHECK(a.phi == doctest::Approx(kPi / 2));

  const PolarMean b = to_polar(Vec3(0, 0, 1));
  CHECK(b.theta == doctest::Approx(kPi / 2));
  CHECK(b.phi == doctest::Approx(0.0));

  const PolarMean c = to_polar(Vec3(0, 0, -1));
  CHECK(c.phi == doctest::Approx(kPi));

  const PolarMean zero = to_polar(Vec3::Zero());
  CHECK(zero.r == 0.0);
  CHECK(zero.theta == 0.0);
  CHECK(zero.phi == 0.0);
}

TEST_CASE("polar round trip reproduces direction cosines") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Vec3 mu = testing::random_vec3(rng, -2.0, 2.0);
    if (mu.norm() < 1e-6) continue;
    const PolarMean p = to_polar(mu);
    CHECK(std::abs(std::cos(p.theta) - mu.x() / p.r) < 1e-12);
    CHECK(std::abs(std::cos(p.phi) - mu.z() / p.r) < 1e-12);
    // Two direction cosines of one unit vector.
    CHECK(std::cos(p.theta) * std::cos(p.theta) + std::cos(p.phi) * std::cos(p.phi) <=
          1.0 + 1e-9);
  }
}

TEST_CASE("polar gradients match central differences") {
  std::mt19937_64 rng(13);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    const Vec3 mu = testing::random_vec3(rng, -1.5, 1.5);
    const double r = mu.norm();
    if (r < 0.1 || std::abs(mu.z() / r) > 0.9) continue;
    ++checked;
    const PolarGradients g = polar_gradients(mu);
    for (int k = 0; k < 3; ++k) {
      Vec3 up = mu, down = mu;
      up[k] += h;
      down[k] -= h;
      const PolarMean pu = to_polar(up), pd = to_polar(down);
      const double dr = (pu.r - pd.r) / (2 * h);
      const double dphi = (pu.phi - pd.phi) / (2 * h);
      CHECK(std::abs(dr - g.dr_dmu[k]) / std::max({std::abs(dr), std::abs(g.dr_dmu[k]), 1e-3}) <
            1e-5);
      CHECK(std::abs(dphi - g.dphi_dmu[k]) /
                std::max({std::abs(dphi), std::abs(g.dphi_dmu[k]), 1e-3}) <
            1e-5);
    }
  }
}

TEST_CASE("polar gradient spot checks and singularities") {
  const PolarGradients g = polar_gradients(Vec3(1, 0, 0));
  CHECK(g.dr_dmu.isApprox(Vec3(1, 0, 0), 1e-14));
  CHECK_THROWS_AS(polar_gradients(Vec3(0, 0, 1)), Error);   // pole
  CHECK_THROWS_AS(polar_gradients(Vec3::Zero()), Error);    // origin

  Vec3 mu(0.3, 0.4, 0.5);
  const PolarGradients g2 = polar_gradients(mu);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 up = mu, down = mu;
    up[k] += h;
    down[k] -= h;
    const double dphi = (to_polar(up).phi - to_polar(down).phi) / (2 * h);
    CHECK(std::abs(dphi - g2.dphi_dmu[k]) < 1e-5 * std::max(1.0, std::abs(dphi)));
  }
}

TEST_CASE("part masks partition the face set") {
  std::mt19937_64 rng(3);
  TriMesh mesh = testing::random_mesh(rng, 6);
  mesh.part_names = {"a", "b"};
  mesh.part_of_face = {0, 1, 0, 1, 1, 0};
  mesh.validate();
  const auto parts = mesh.faces_of_part();
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  CHECK(total == mesh.num_faces());

  mesh.part_of_face[2] = 7;  // invalid id breaks the partition
  CHECK_THROWS_AS(mesh.validate(), Error);
}

TEST_SUITE_END();
