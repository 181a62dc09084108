#include <doctest.h>

#include <cmath>
#include <limits>

#include "smr/bm3d_frame.hpp"
#include "smr/decomposition.hpp"
#include "smr/metrics.hpp"
#include "support.hpp"

using namespace smr;

namespace {

Image filled(std::size_t w, std::size_t h, std::vector<double> values) {
  Image img(w, h);
  img.data = std::move(values);
  return img;
}

}  // namespace

TEST_CASE("rmse examples") {
  std::mt19937_64 rng(1);
  const Image a = smr::testing::random_image(rng, 8, 8);
  CHECK(rmse(a, a) == 0.0);
  Image b = a;
  for (double& v : b.data) v += 0.3;
  CHECK(rmse(b, a) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rmse(filled(2, 1, {0, 0}), filled(2, 1, {3, 4})) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(Image(2, 2), Image(2, 3)), ShapeError);
}

TEST_CASE("rmse triangle inequality") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Image f = smr::testing::random_image(rng, 5, 5);
    const Image g = smr::testing::random_image(rng, 5, 5);
    const Image h = smr::testing::random_image(rng, 5, 5);
    CHECK(rmse(f, h) <= rmse(f, g) + rmse(g, h) + 1e-15);
  }
}

TEST_CASE("psnr examples") {
  Image ref(10, 10, 0.0);
  ref.data[0] = 1.0;
  Image f = ref;
  for (double& v : f.data) v += 0.1;
  CHECK(psnr(f, ref) == doctest::Approx(20.0).epsilon(1e-12));
  f = ref;
  for (double& v : f.data) v += 0.3;
  CHECK(psnr(f, ref) == doctest::Approx(20.0 * std::log10(1.0 / 0.3)).epsilon(1e-12));
  CHECK(psnr(ref, ref) == std::numeric_limits<double>::infinity());
  Image worse = ref;
  for (double& v : worse.data) v += 0.5;
  CHECK(psnr(worse, ref) < psnr(f, ref));
}

TEST_CASE("ssim examples") {
  std::mt19937_64 rng(3);
  const Image a = smr::testing::random_image(rng, 9, 9, 0.0, 2.0);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-15));

  Image z = smr::testing::random_image(rng, 16, 16, -1.0, 1.0);
  double mean = 0.0;
  for (double v : z.data) mean += v;
  mean /= static_cast<double>(z.size());
  for (double& v : z.data) v -= mean;
  Image neg = z;
  for (double& v : neg.data) v = -v;
  CHECK(ssim(neg, z, 1e-12, 1e-12) == doctest::Approx(-1.0).epsilon(1e-9));

  // 2x2 pair by hand: c_f = 2.5, c_g = 2, var_f = 1.25, var_g = 0.5, cov = 0.75.
  const Image f = filled(2, 2, {1, 2, 3, 4});
  const Image g = filled(2, 2, {1, 2, 2, 3});
  const double e1 = 0.01, e2 = 0.02;
  const double expected = (2 * 2.5 * 2 + e1) * (2 * 0.75 + e2) / ((6.25 + 4 + e1) * (1.25 + 0.5 + e2));
  CHECK(ssim(f, g, e1, e2) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(ssim(Image(2, 2), Image(3, 2)), ShapeError);
}

TEST_CASE("ssim of nonnegative images lies in the unit interval") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const double s = ssim(smr::testing::random_image(rng, 6, 6), smr::testing::random_image(rng, 6, 6));
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("bmfmr objective examples") {
  const SystemMatrix a = build_system_matrix(smr::testing::small_geometry(8, 6, 12));
  const Image zero(8, 8);
  const std::vector<double> p0(a.rays(), 0.0);
  CHECK(bmfmr_objective(zero, zero, zero, p0, a, 0.5, 0.1, 0) == 0.0);
  CHECK(bmfmr_objective(zero, zero, zero, p0, a, 0.5, 0.1, 5) == doctest::Approx(0.5));

  std::mt19937_64 rng(5);
  const Image f = smr::testing::random_image(rng, 8, 8);
  const Image g = smr::testing::random_image(rng, 8, 8);
  const Image t = smr::testing::random_image(rng, 8, 8, -0.1, 0.1);
  const auto p = smr::testing::random_vector(rng, a.rays());
  const auto af = forward_project(a, f.data);
  double naive = 0.0;
  for (std::size_t r = 0; r < a.rays(); ++r) naive += (af[r] - p[r]) * (af[r] - p[r]);
  double coupling = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) coupling += std::pow(f.data[j] - g.data[j] - t.data[j], 2);
  naive += 0.3 * coupling + 0.01 * 17;
  CHECK(bmfmr_objective(f, g, t, p, a, 0.3, 0.01, 17) == doctest::Approx(naive).epsilon(1e-12));
  CHECK(bmfmr_objective(af, f, g, t, p, 0.3, 0.01, 17) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("decomposition objective examples") {
  const auto sm = smr::testing::synthetic_model(4, 2);
  const SpectralForward fwd(sm.model, sm.basis);
  DecomposedSinogram p(2, 3);
  p.values = {1.0, 2.0, 3.0, 0.1, 0.2, 0.3};
  std::vector<RayLinearization> lins;
  for (std::size_t r = 0; r < 3; ++r) lins.push_back(linearize(fwd, std::vector<double>{p.at(0, r), p.at(1, r)}));
  const auto q = log_forward(sm.model, sm.basis, p, 1, 3);
  CHECK(decomposition_objective(p, p, lins, q, p, 0.5) == doctest::Approx(0.0).epsilon(1e-14));

  DecomposedSinogram fproj = p;
  fproj.at(1, 2) += 1.0;
  // Only the penalty sees the difference.
  CHECK(decomposition_objective(p, p, lins, q, fproj, 0.5) == doctest::Approx(0.5).epsilon(1e-14));

  std::mt19937_64 rng(6);
  DecomposedSinogram other = p;
  for (double& v : other.values) v += smr::testing::random_vector(rng, 1, -0.2, 0.2)[0];
  MeasuredProjections qbar = q;
  for (double& v : qbar.values) v += smr::testing::random_vector(rng, 1, -0.01, 0.01)[0];
  double naive = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t m = 0; m < 4; ++m) {
      double res = lins[r].s[m] * (qbar.at(m, r) - lins[r].q[m]);
      for (std::size_t n = 0; n < 2; ++n) res += lins[r].theta_at(m, n) * (other.at(n, r) - p.at(n, r));
      naive += res * res;
    }
    for (std::size_t n = 0; n < 2; ++n) naive += 0.5 * std::pow(fproj.at(n, r) - other.at(n, r), 2);
  }
  CHECK(decomposition_objective(other, p, lins, qbar, fproj, 0.5) == doctest::Approx(naive).epsilon(1e-12));
}
