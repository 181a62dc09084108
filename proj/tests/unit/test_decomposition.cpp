#include <doctest.h>

#include <cmath>

#include "smr/decomposition.hpp"
#include "smr/metrics.hpp"
#include "smr/oracle.hpp"
#include "smr/parallel.hpp"
#include "support.hpp"

using namespace smr;

namespace {

std::vector<double> q_of(const SpectralForward& fwd, const std::vector<double>& p) {
  return linearize(fwd, p).q;
}

}  // namespace

TEST_CASE("theta is minus the Jacobian of S") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> p{smr::testing::random_vector(rng, 1, 0.0, 8.0)[0],
                                smr::testing::random_vector(rng, 1, 0.0, 2.0)[0],
                                smr::testing::random_vector(rng, 1, 0.0, 0.2)[0]};
    const RayLinearization lin = linearize(fwd, p);
    const double h = 1e-6;
    for (std::size_t n = 0; n < 3; ++n) {
      auto up = p, dn = p;
      up[n] += h;
      dn[n] -= h;
      const auto lu = linearize(fwd, up);
      const auto ld = linearize(fwd, dn);
      for (std::size_t m = 0; m < 8; ++m) {
        CHECK(lin.theta_at(m, n) == doctest::Approx(-(lu.s[m] - ld.s[m]) / (2 * h)).epsilon(1e-6));
        CHECK(lin.theta_at(m, n) / lin.s[m] == doctest::Approx(-(lu.q[m] - ld.q[m]) / (2 * h)).epsilon(1e-6));
      }
    }
    for (std::size_t m = 0; m < 8; ++m) CHECK(lin.q[m] == doctest::Approx(std::log(lin.s[m])).epsilon(1e-14));
  }
}

TEST_CASE("zero path linearisation") {
  const auto sm = smr::testing::synthetic_model();
  const auto lin = linearize(sm.model, sm.basis, std::vector<double>(3, 0.0));
  const auto& g = sm.model.grid();
  for (std::size_t m = 0; m < lin.bins; ++m) {
    CHECK(lin.s[m] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(lin.q[m] == doctest::Approx(0.0));
    for (std::size_t n = 0; n < 3; ++n) {
      double mean = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) mean += sm.basis.phi[n][i] * sm.model.s(m)[i] * g.delta_kev[i];
      CHECK(lin.theta_at(m, n) == doctest::Approx(mean).epsilon(1e-13));
    }
  }
}

TEST_CASE("both linearize overloads agree") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  const std::vector<double> p{2.0, 0.5, 0.05};
  const auto a = linearize(fwd, p);
  const auto b = linearize(sm.model, sm.basis, p);
  for (std::size_t i = 0; i < a.theta.size(); ++i) CHECK(a.theta[i] == doctest::Approx(b.theta[i]).epsilon(1e-13));
  for (std::size_t i = 0; i < a.s.size(); ++i) CHECK(a.s[i] == doctest::Approx(b.s[i]).epsilon(1e-13));
}

TEST_CASE("scalar update has the closed form") {
  const RayLinearization lin{1, 1, {0.3}, {0.5}, {std::log(0.5)}};
  const std::vector<double> p{2.0};
  const std::vector<double> qbar{std::log(0.4)};
  const double beta = 0.7, lambda = 0.05;
  const auto out = update_ray(p, lin, qbar, beta, lambda);
  const double expected = 2.0 - beta * 0.3 * 0.5 * (std::log(0.4) - std::log(0.5)) / (0.09 + lambda);
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("update is stationary at the truth") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  const std::vector<double> p{3.0, 0.4, 0.1};
  const auto lin = linearize(fwd, p);
  const auto out = update_ray(p, lin, lin.q, 1.0, 1e-3);
  for (std::size_t n = 0; n < 3; ++n) CHECK(out[n] == doctest::Approx(p[n]).epsilon(1e-14));
}

TEST_CASE("repeated updates recover a two-material ray") {
  const auto sm = smr::testing::synthetic_model(4, 2);
  const SpectralForward fwd(sm.model, sm.basis);
  const std::vector<double> truth{5.0, 1.5};
  const auto qbar = q_of(fwd, truth);
  std::vector<double> p{0.0, 0.0};
  for (int k = 0; k < 500; ++k) p = update_ray(p, linearize(fwd, p), qbar, 1.0, 1e-9);
  CHECK(p[0] == doctest::Approx(truth[0]).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(truth[1]).epsilon(1e-4));
}

TEST_CASE("descend_ray coincides with update_ray at the expansion point") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  const std::vector<double> p{1.0, 0.3, 0.02};
  const auto lin = linearize(fwd, p);
  const auto qbar = q_of(fwd, {1.5, 0.2, 0.03});
  const auto a = update_ray(p, lin, qbar, 0.8, 0.01);
  const auto b = descend_ray(p, p, lin, qbar, p, 0.8, 0.01);
  for (std::size_t n = 0; n < 3; ++n) CHECK(a[n] == doctest::Approx(b[n]).epsilon(1e-13));
}

TEST_CASE("ray objective is the quadratic it documents") {
  const RayLinearization lin{2, 1, {0.3, 0.2}, {0.5, 0.6}, {std::log(0.5), std::log(0.6)}};
  const std::vector<double> p{1.0}, prev{0.5}, fproj{0.8}, qbar{-0.6, -0.4};
  const double r0 = 0.3 * 0.5 + 0.5 * (-0.6 - std::log(0.5));
  const double r1 = 0.2 * 0.5 + 0.6 * (-0.4 - std::log(0.6));
  const double expected = r0 * r0 + r1 * r1 + 0.1 * 0.04;
  CHECK(ray_objective(p, prev, lin, qbar, fproj, 0.1) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("regularisation keeps the normal matrix positive definite") {
  const RayLinearization lin{2, 2, {1.0, 2.0, 2.0, 4.0}, {1.0, 1.0}, {0.0, 0.0}};
  CHECK(min_eigenvalue(lin, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(min_eigenvalue(lin, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("decompose_step does not depend on thread count") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  std::mt19937_64 rng(5);
  const std::size_t rays = 500;
  DecomposedSinogram truth(3, rays), start(3, rays);
  for (std::size_t r = 0; r < rays; ++r) {
    truth.at(0, r) = 5.0 * static_cast<double>(r % 7) / 7.0;
    truth.at(1, r) = 0.3 * static_cast<double>(r % 5) / 5.0;
    truth.at(2, r) = 0.01 * static_cast<double>(r % 3);
    for (std::size_t n = 0; n < 3; ++n) start.at(n, r) = 0.9 * truth.at(n, r);
  }
  const MeasuredProjections qbar = log_forward(sm.model, sm.basis, truth, 1, rays);
  const int before = thread_count();
  set_thread_count(1);
  double obj1 = 0.0;
  const auto serial = decompose_step(start, qbar, fwd, 0.5, 1e-4, &obj1);
  set_thread_count(4);
  double obj4 = 0.0;
  const auto parallel = decompose_step(start, qbar, fwd, 0.5, 1e-4, &obj4);
  set_thread_count(before);
  CHECK(serial == parallel);
  CHECK(obj1 == obj4);
  CHECK(obj1 >= 0.0);
}

TEST_CASE("decompose_step objective equals the summed ray objective") {
  const auto sm = smr::testing::synthetic_model(4, 2);
  const SpectralForward fwd(sm.model, sm.basis);
  DecomposedSinogram p(2, 3), truth(2, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    p.at(0, r) = 1.0 + r;
    p.at(1, r) = 0.2;
    truth.at(0, r) = 1.5 + r;
    truth.at(1, r) = 0.1;
  }
  const auto qbar = log_forward(sm.model, sm.basis, truth, 1, 3);
  double obj = 0.0;
  const auto next = decompose_step(p, qbar, fwd, 0.5, 0.01, &obj);
  std::vector<RayLinearization> lins;
  for (std::size_t r = 0; r < 3; ++r) lins.push_back(linearize(fwd, std::vector<double>{p.at(0, r), p.at(1, r)}));
  CHECK(decomposition_objective(next, p, lins, qbar, p, 0.01) == doctest::Approx(obj).epsilon(1e-12));
}

TEST_CASE("brute force finds the quadratic minimiser") {
  const RayLinearization lin{2, 1, {0.3, 0.2}, {0.5, 0.6}, {std::log(0.5), std::log(0.6)}};
  const std::vector<double> prev{0.5}, fproj{0.8}, qbar{-0.6, -0.4};
  // d/dp = 0 of sum (theta_m (p - prev) + c_m)^2 + lambda (fproj - p)^2.
  const double c0 = 0.5 * (-0.6 - std::log(0.5)), c1 = 0.6 * (-0.4 - std::log(0.6));
  const double lambda = 0.1;
  const double num = -(0.3 * (c0 - 0.3 * 0.5) + 0.2 * (c1 - 0.2 * 0.5)) + lambda * 0.8;
  const double den = 0.09 + 0.04 + lambda;
  const auto best = brute_force_minimize_Y(lin, qbar, prev, fproj, lambda, SearchBox{{-5.0}, {5.0}});
  CHECK(best[0] == doctest::Approx(num / den).epsilon(1e-6));
}

TEST_CASE("descent oracle agrees with brute force on a few instances") {
  const auto model = embedded_two_material_model();
  const OracleReport report = run_theorem1_oracle(model.model, model.basis, 3, 8);
  CHECK(report.instances == 8);
  CHECK(report.passed());
  CHECK(report.min_eigen_margin > 0.0);
}

TEST_CASE("decompose_step is stationary at the truth and matches update_ray per ray") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  DecomposedSinogram truth(3, 6);
  for (std::size_t r = 0; r < 6; ++r) {
    truth.at(0, r) = 1.0 + r;
    truth.at(1, r) = 0.1 * r;
    truth.at(2, r) = 0.01 * r;
  }
  const auto qbar = log_forward(sm.model, sm.basis, truth, 2, 3);
  const auto same = decompose_step(truth, qbar, fwd, 0.5, 0.002);
  for (std::size_t i = 0; i < truth.values.size(); ++i) CHECK(std::abs(same.values[i] - truth.values[i]) <= 1e-12);

  DecomposedSinogram start(3, 6);
  const auto next = decompose_step(start, qbar, fwd, 0.5, 0.002);
  for (std::size_t r = 0; r < 6; ++r) {
    std::vector<double> col(3, 0.0), qcol(8);
    for (std::size_t m = 0; m < 8; ++m) qcol[m] = qbar.at(m, r);
    const auto one = update_ray(col, linearize(fwd, col), qcol, 0.5, 0.002);
    for (std::size_t n = 0; n < 3; ++n) CHECK(next.at(n, r) == one[n]);
  }
}

TEST_CASE("ray order does not change decompose_step") {
  const auto sm = smr::testing::synthetic_model();
  const SpectralForward fwd(sm.model, sm.basis);
  const std::size_t rays = 40;
  DecomposedSinogram truth(3, rays), start(3, rays);
  for (std::size_t r = 0; r < rays; ++r) {
    truth.at(0, r) = 0.2 * r;
    truth.at(1, r) = 0.02 * (r % 9);
    truth.at(2, r) = 0.003 * (r % 4);
  }
  const auto qbar = log_forward(sm.model, sm.basis, truth, 1, rays);
  const auto out = decompose_step(start, qbar, fwd, 0.7, 1e-3);
  std::vector<std::size_t> perm(rays);
  for (std::size_t r = 0; r < rays; ++r) perm[r] = (r * 17 + 5) % rays;
  MeasuredProjections qp(8, 1, rays);
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t r = 0; r < rays; ++r) qp.at(m, r) = qbar.at(m, perm[r]);
  const auto outp = decompose_step(start, qp, fwd, 0.7, 1e-3);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t r = 0; r < rays; ++r) CHECK(outp.at(n, r) == out.at(n, perm[r]));
}

TEST_CASE("brute force agrees with the converged update on a two-material ray") {
  const auto sm = smr::testing::synthetic_model(4, 2);
  const SpectralForward fwd(sm.model, sm.basis);
  const std::vector<double> truth{5.0, 1.5};
  const auto qbar = q_of(fwd, truth);
  const std::vector<double> prev{4.0, 1.0};
  const auto lin = linearize(fwd, prev);
  const double lambda = 1e-3;
  std::vector<double> p = prev;
  for (int k = 0; k < 2000; ++k) p = descend_ray(p, prev, lin, qbar, prev, 1.0, lambda);
  const auto best = brute_force_minimize_Y(lin, qbar, prev, prev, lambda, SearchBox{{0.0, 0.0}, {10.0, 4.0}});
  CHECK(best[0] == doctest::Approx(p[0]).epsilon(1e-4));
  CHECK(best[1] == doctest::Approx(p[1]).epsilon(1e-4));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> jitter(0.0, 0.01);
  const double y = ray_objective(best, prev, lin, qbar, prev, lambda);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> probe{best[0] + jitter(rng), best[1] + jitter(rng)};
    CHECK(y <= ray_objective(probe, prev, lin, qbar, prev, lambda));
  }

  const std::vector<double> fproj{2.0, 0.5};
  const auto pulled = brute_force_minimize_Y(lin, qbar, prev, fproj, 1e4, SearchBox{{0.0, 0.0}, {10.0, 4.0}});
  CHECK(pulled[0] == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(pulled[1] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("normal matrix eigenvalues are bounded by lambda") {
  const auto sm = smr::testing::synthetic_model();
  std::mt19937_64 rng(12);
  for (int k = 0; k < 50; ++k) {
    const auto p = smr::testing::random_vector(rng, 3, 0.0, 3.0);
    CHECK(min_eigenvalue(linearize(sm.model, sm.basis, p), 0.002) >= 0.002 * (1.0 - 1e-9));
  }
}
