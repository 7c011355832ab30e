#include <doctest.h>

#include <cmath>
#include <random>

#include "gavatar/losses.hpp"
#include "test_helpers.hpp"

using namespace gavatar;

TEST_SUITE_BEGIN("losses");

TEST_CASE("offset penalty arithmetic") {
  CHECK(loss_p(0.05, 0.1) == 0.0);
  CHECK(loss_p(0.30, 0.1) == doctest::Approx(0.20).epsilon(1e-12));
  CHECK(loss_p(0.1, 0.1) == 0.0);
  CHECK(loss_p_grad(0.1, 0.1) == 0.0);  // kink convention
  CHECK(loss_p_grad(0.2, 0.1) == 1.0);
}

TEST_CASE("angle penalty gate and arithmetic") {
  const RegThresholds th;
  CHECK(loss_angle(0.05, 1.2, th) == 0.0);  // gate closed
  CHECK(loss_angle(0.5, 0.9, th) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(loss_angle(0.5, 0.3, th) == 0.0);

  // Folding: straight below the surface is unpenalized by default.
  CHECK(loss_angle(0.5, kPi - 0.1, th) == 0.0);
  AngleLossOptions literal;
  literal.fold_phi = false;
  CHECK(loss_angle(0.5, kPi - 0.1, th, literal) ==
        doctest::Approx(kPi - 0.1 - 0.78).epsilon(1e-12));

  // No gradient through the gate radius.
  CHECK(loss_angle_grad_phi(0.05, 1.2, th) == 0.0);
  CHECK(loss_angle_grad_phi(0.5, 0.9, th) == 1.0);
  CHECK(loss_angle_grad_phi(0.5, kPi - 0.1, th) == 0.0);
}

namespace {

SplatSet single_splat_set(const Vec3& mu) {
  SplatSet set;
  Splat s;
  s.mu = mu;
  set.splats.push_back(s);
  set.binding.push_back(0);
  return set;
}

}  // namespace

TEST_CASE("regularizer examples") {
  const RegThresholds th;

  SUBCASE("all local means at zero") {
    SplatSet set = single_splat_set(Vec3::Zero());
    const RegLossResult r = loss_reg(set, {FaceSet::Rigid}, th);
    CHECK(r.value == 0.0);
  }

  SUBCASE("one rigid splat at radius 0.2 straight above the face") {
    SplatSet set = single_splat_set(Vec3(0, 0, 0.2));  // phi = 0
    const RegLossResult r = loss_reg(set, {FaceSet::Rigid}, th);
    CHECK(r.value == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.l_p_by_set[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.l_angle == 0.0);
  }

  SUBCASE("missing assignment is an error") {
    SplatSet set = single_splat_set(Vec3::Zero());
    set.binding[0] = 3;
    CHECK_THROWS_AS(loss_reg(set, {FaceSet::Rigid}, th), Error);
  }

  SUBCASE("mean reduction divides by the splat count") {
    SplatSet set = single_splat_set(Vec3(0, 0, 0.2));
    set.splats.push_back(set.splats[0]);
    set.binding.push_back(0);
    RegOptions opts;
    opts.mean_reduction = true;
    const RegLossResult r = loss_reg(set, {FaceSet::Rigid}, th, opts);
    CHECK(r.value == doctest::Approx(0.1).epsilon(1e-12));  // (0.1 + 0.1) / 2
  }
}

TEST_CASE("regularizer monotonicity and set-swap properties") {
  const RegThresholds th;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rd(0.0, 2.5);

  SUBCASE("penalty is non-decreasing in the radius") {
    double prev = -1.0;
    for (double r = 0.0; r < 3.0; r += 0.01) {
      const double v = loss_p(r, th.tau_r);
      CHECK(v >= prev);
      prev = v;
    }
  }

  SUBCASE("moving a face from flexible to rigid never decreases the loss") {
    for (int trial = 0; trial < 100; ++trial) {
      SplatSet set;
      for (int i = 0; i < 6; ++i) {
        Splat s;
        s.mu = testing::random_vec3(rng, -1.5, 1.5);
        set.splats.push_back(s);
        set.binding.push_back(static_cast<Index>(i % 3));
      }
      std::vector<FaceSet> flexible = {FaceSet::Flexible, FaceSet::Rigid, FaceSet::Flexible};
      std::vector<FaceSet> swapped = flexible;
      swapped[0] = FaceSet::Rigid;
      const double before = loss_reg(set, flexible, th).value;
      const double after = loss_reg(set, swapped, th).value;
      CHECK(after >= before);
    }
  }
}

TEST_CASE("regularizer gradients match central differences") {
  const RegThresholds th;
  std::mt19937_64 rng(19);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 50) {
    Splat s;
    // Stay away from every kink: radius, angle threshold, fold, gate, poles.
    const double r = 0.15 + 1.3 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi = 0.2 + (kPi - 0.4) * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi_eff = std::min(phi, kPi - phi);
    if (std::abs(r - th.tau_r) < 5e-3 || std::abs(phi_eff - th.tau_phi) < 5e-3 ||
        std::abs(phi - kPi / 2) < 5e-3) {
      continue;
    }
    ++checked;
    const double beta = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
    s.mu = Vec3(r * std::sin(phi) * std::cos(beta), r * std::sin(phi) * std::sin(beta),
                r * std::cos(phi));
    SplatSet set;
    set.splats.push_back(s);
    set.binding.push_back(0);
    const std::vector<FaceSet> sets = {checked % 2 == 0 ? FaceSet::Rigid : FaceSet::Flexible};

    const RegLossResult base = loss_reg(set, sets, th);
    for (int k = 0; k < 3; ++k) {
      SplatSet up = set, down = set;
      up.splats[0].mu[k] += h;
      down.splats[0].mu[k] -= h;
      const double numeric = (loss_reg(up, sets, th).value - loss_reg(down, sets, th).value) /
                             (2 * h);
      CHECK(std::abs(numeric - base.dmu[0][k]) /
                std::max({std::abs(numeric), std::abs(base.dmu[0][k]), 1e-3}) <
            1e-5);
    }
  }
}

// Independent SSIM reference: per-window two-pass moments (mean first, then
// weighted deviations), no shared code with the filtering implementation.
namespace {

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
        double mx = 0.0, my = 0.0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = k[static_cast<std::size_t>(j) * win + i];
            mx += w * x.at(wx + i, wy + j, c);
            my += w * y.at(wx + i, wy + j, c);
          }
        }
        double sx = 0.0, sy = 0.0, sxy = 0.0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = k[static_cast<std::size_t>(j) * win + i];
            const double dx = x.at(wx + i, wy + j, c) - mx;
            const double dy = y.at(wx + i, wy + j, c) - my;
            sx += w * dx * dx;
            sy += w * dy * dy;
            sxy += w * dx * dy;
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

Image random_image(std::mt19937_64& rng, int w, int h) {
  Image img(w, h);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (auto& v : img.data) v = d(rng);
  return img;
}

}  // namespace

TEST_CASE("ssim matches the sliding-window reference") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Image x = random_image(rng, 32, 32);
    const Image y = random_image(rng, 32, 32);
    CHECK(std::abs(ssim(x, y) - ssim_reference(x, y)) < 1e-6);
  }
  const Image x = random_image(rng, 32, 32);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim gradient matches finite differences") {
  std::mt19937_64 rng(29);
  Image x = random_image(rng, 14, 14);
  const Image y = random_image(rng, 14, 14);
  Image grad(14, 14);
  ssim_backward(x, y, 1.0, grad);
  const double h = 1e-6;
  std::uniform_int_distribution<std::size_t> pick(0, x.data.size() - 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t i = pick(rng);
    const double saved = x.data[i];
    x.data[i] = saved + h;
    const double up = ssim(x, y);
    x.data[i] = saved - h;
    const double down = ssim(x, y);
    x.data[i] = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(std::abs(numeric - grad.data[i]) /
              std::max({std::abs(numeric), std::abs(grad.data[i]), 1e-3}) <
          1e-5);
  }
}

TEST_CASE("photometric loss examples") {
  SUBCASE("identical images") {
    std::mt19937_64 rng(31);
    const Image x = random_image(rng, 16, 16);
    const RgbLossResult r = loss_rgb(x, x, 0.2);
    CHECK(r.l1 == 0.0);
    CHECK(r.dssim == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("all-zero target, all-one rendering") {
    const Image target(16, 16, 0.0);
    const Image rendered(16, 16, 1.0);
    const RgbLossResult r = loss_rgb(rendered, target, 0.2);
    CHECK(r.l1 == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(loss_rgb(Image(16, 16), Image(16, 12), 0.2), Error);
  }

  SUBCASE("constant shift keeps structure but not intensity") {
    std::mt19937_64 rng(37);
    Image target(24, 24);
    std::uniform_real_distribution<double> d(0.05, 0.8);
    for (auto& v : target.data) v = d(rng);
    Image rendered = target;
    for (auto& v : rendered.data) v += 0.1;  // stays in range by construction
    const Metrics m = metrics(rendered, target);
    CHECK(m.mse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(m.ssim < 1.0);
  }
}

TEST_CASE("metric definitions") {
  std::mt19937_64 rng(41);
  const Image x = random_image(rng, 16, 16);
  const Metrics same = metrics(x, x);
  CHECK(same.mse == 0.0);
  CHECK(std::isinf(same.psnr));
  CHECK(same.ssim == doctest::Approx(1.0).epsilon(1e-12));

  Image target(16, 16, 0.5);
  Image rendered(16, 16, 0.5 + std::sqrt(1e-3));
  const Metrics m = metrics(rendered, target);
  CHECK(m.mse == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(m.psnr == doctest::Approx(30.0).epsilon(1e-9));
}

TEST_SUITE_END();
