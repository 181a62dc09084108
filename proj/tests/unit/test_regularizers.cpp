#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smr/regularizers.hpp"
#include "support.hpp"

using namespace smr;

TEST_CASE("tv of a constant image is the smoothing floor") {
  const Image img(6, 5, 2.5);
  CHECK(tv_value(img, 1e-3) == doctest::Approx(30 * 1e-3).epsilon(1e-12));
}

TEST_CASE("tv of a vertical step") {
  Image img(4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 2; x < 4; ++x) img.at(x, y) = 0.7;
  const double eps = 1e-8;
  // Four pixels see the jump; the remaining twelve contribute eps.
  CHECK(tv_value(img, eps) == doctest::Approx(4 * std::sqrt(0.49 + eps * eps) + 12 * eps).epsilon(1e-12));
}

TEST_CASE("tv is unchanged by transpose") {
  std::mt19937_64 rng(1);
  const Image img = smr::testing::random_image(rng, 7, 7);
  Image tr(7, 7);
  for (std::size_t y = 0; y < 7; ++y)
    for (std::size_t x = 0; x < 7; ++x) tr.at(y, x) = img.at(x, y);
  CHECK(tv_value(tr, 1e-4) == doctest::Approx(tv_value(img, 1e-4)).epsilon(1e-12));
}

TEST_CASE("tv is bounded below by the floor with equality only for constants") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const Image img = smr::testing::random_image(rng, 9, 6);
    CHECK(tv_value(img, 1e-3) > 54 * 1e-3);
  }
}

TEST_CASE("tv gradient matches finite differences") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    Image img = smr::testing::random_image(rng, 8, 8);
    const double eps = 1e-2;
    const Image g = tv_gradient(img, eps);
    const double h = 1e-6;
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double keep = img.data[i];
      img.data[i] = keep + h;
      const double up = tv_value(img, eps);
      img.data[i] = keep - h;
      const double dn = tv_value(img, eps);
      img.data[i] = keep;
      CHECK(g.data[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("tv descent leaves a constant image alone and smooths a noisy step") {
  TvParams params;
  params.xi = 1.0;
  params.step_size = 0.1;
  const Image flat(10, 10, 0.3);
  CHECK(tv_descent_step(flat, params).data == flat.data);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.05);
  Image step(32, 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) step.at(x, y) = (x < 16 ? 0.0 : 1.0) + noise(rng);
  const Image out = tv_descent_step(step, params);
  CHECK(tv_value(out, params.smoothing_eps) < tv_value(step, params.smoothing_eps));

  params.xi = 0.0;
  CHECK(tv_descent_step(step, params).data == step.data);
  CHECK(tv_descent_step(step, TvParams{1.0, 1e-8, 10, 0.2}).data == tv_descent_step(step, TvParams{1.0, 1e-8, 10, 0.2}).data);
}

TEST_CASE("tv parameter validation") {
  TvParams p;
  p.xi = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.smoothing_eps = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("nlm keeps constants and stays within the input range") {
  NlmParams params;
  params.filtering_h = 0.2;
  const Image flat(16, 12, 0.42);
  for (double v : nlm_filter(flat, params).data) CHECK(v == doctest::Approx(0.42).epsilon(1e-14));

  std::mt19937_64 rng(5);
  const Image img = smr::testing::random_image(rng, 20, 20, 0.1, 0.9);
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  for (double v : nlm_filter(img, params).data) {
    CHECK(v >= *lo - 1e-15);
    CHECK(v <= *hi + 1e-15);
  }
}

TEST_CASE("nlm with vanishing h returns the input") {
  std::mt19937_64 rng(6);
  const Image img = smr::testing::random_image(rng, 16, 16);
  NlmParams params;
  params.filtering_h = 0.0;
  CHECK(nlm_filter(img, params).data == img.data);
  params.filtering_h = 1e-6;
  const Image out = nlm_filter(img, params);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("nlm preserves region means of a two-level image") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.02);
  Image img(40, 40);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 40; ++x) img.at(x, y) = (x < 20 ? 0.2 : 1.0) + noise(rng);
  NlmParams params;
  params.filtering_h = 0.2;
  const Image out = nlm_filter(img, params);
  double left = 0.0, right = 0.0, in_left = 0.0, in_right = 0.0;
  for (std::size_t y = 0; y < 40; ++y) {
    for (std::size_t x = 0; x < 40; ++x) {
      (x < 20 ? left : right) += out.at(x, y);
      (x < 20 ? in_left : in_right) += img.at(x, y);
    }
  }
  CHECK(left == doctest::Approx(in_left).epsilon(0.01));
  CHECK(right == doctest::Approx(in_right).epsilon(0.01));
}

TEST_CASE("nlm parameter validation") {
  NlmParams p;
  p.patch_radius = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.window_radius = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.filtering_h = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
