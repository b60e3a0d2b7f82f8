#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dopo/error.hpp"
#include "dopo/fluctuations.hpp"

using namespace dopo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Ordered covariance G_ij = <v_i v_j> of v = (db_p, db_p^+, db_s, db_s^+)
// from L G + G L^T + D = 0, solved through the Kronecker form.
Eigen::Matrix4cd lyapunov(const Eigen::Matrix4cd& L, double kappa, double g) {
  Eigen::Matrix4cd D = Eigen::Matrix4cd::Zero();
  D(0, 1) = 2.0 * g * g * kappa * kappa;
  D(2, 3) = 2.0 * g * g;
  const Eigen::Matrix4cd I = Eigen::Matrix4cd::Identity();
  Eigen::Matrix<complex, 16, 16> K;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      // vec(A X B^T) = (B kron A) vec(X), column-major.
      K.block<4, 4>(4 * j, 4 * i) = I(j, i) * L + L(j, i) * I;
    }
  }
  Eigen::Matrix<complex, 16, 1> d = Eigen::Map<Eigen::Matrix<complex, 16, 1>>(D.data());
  Eigen::Matrix<complex, 16, 1> x = K.fullPivLu().solve(-d);
  return Eigen::Map<Eigen::Matrix4cd>(x.data());
}

MeanField random_mean_field(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  return {complex(u(rng), u(rng)), complex(u(rng), u(rng))};
}

}  // namespace

TEST_CASE("vacuum has no fluctuations", "[fluctuations]") {
  const NormalizedParams p{0.0, 3.0, 0.01};
  const SecondMoments m = solve_steady_moments(build_moment_system({}, p));
  CHECK(m.cpp == complex(0.0, 0.0));
  CHECK(m.npp == 0.0);
  CHECK(m.cps == complex(0.0, 0.0));
  CHECK(m.xps == complex(0.0, 0.0));
  CHECK(m.css == complex(0.0, 0.0));
  CHECK(m.nss == 0.0);
  const QuadratureVariances v = signal_quadrature_variances(0.0, 0.0, 3.0);
  CHECK(v.vx == 1.0);
  CHECK(v.vy == 1.0);
}

TEST_CASE("moment solve agrees with an independent Lyapunov solve", "[fluctuations]") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const MeanField mf = random_mean_field(rng);
    const double kappa = std::array<double, 4>{0.3, 1.0, 10.0, 200.0}[trial % 4];
    const double g = 0.05;
    const StabilityMatrix L = build_stability_matrix(mf, kappa);
    REQUIRE(max_real_part(stability_eigenvalues(L)) < 0.0);
    const Eigen::Matrix4cd G = lyapunov(L, kappa, g);
    const SecondMoments m = solve_steady_moments(build_moment_system(mf, {0.5, kappa, g}));
    const double scale = g * g * kappa;
    CHECK(std::abs(m.cpp - G(0, 0)) < 1e-10 * scale);
    CHECK(std::abs(m.npp - G(1, 0)) < 1e-10 * scale);
    CHECK(std::abs(m.cps - G(0, 2)) < 1e-10 * scale);
    CHECK(std::abs(m.xps - G(0, 3)) < 1e-10 * scale);
    CHECK(std::abs(m.css - G(2, 2)) < 1e-10 * scale);
    CHECK(std::abs(m.nss - G(3, 2)) < 1e-10 * scale);
  }
}

TEST_CASE("complex moment system closes under conjugation", "[fluctuations]") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const MeanField mf = random_mean_field(rng);
    const MomentSystem sys = build_moment_system(mf, {0.5, 2.0, 0.1});
    const SecondMoments m = solve_steady_moments(sys);
    const MomentVector residual = sys.matrix * to_moment_vector(m) + sys.drive;
    CHECK(residual.norm() < 1e-13);
  }
}

TEST_CASE("closed-form pair moments match the linear solve", "[fluctuations]") {
  for (double kappa : {0.5, 1.0, 50.0}) {
    for (double bp : {0.2, 0.9, 1.0 + 1e-3}) {
      for (double bs : {0.0, 0.1, 0.8}) {
        const NormalizedParams p{1.0, kappa, 0.02};
        const MeanField mf{bp, bs};
        if (max_real_part(stability_eigenvalues(build_stability_matrix(mf, kappa))) >= 0.0) {
          continue;
        }
        const SecondMoments m = solve_steady_moments(build_moment_system(mf, p));
        const PairMoments c = closed_form_pair_moments(mf, p);
        CHECK(std::abs(c.css - m.css) <= 1e-10 * std::abs(m.css) + 1e-300);
        CHECK(std::abs(c.xps - m.xps) <= 1e-10 * std::abs(m.xps) + 1e-300);
      }
    }
  }
}

TEST_CASE("variance formulas agree with moment reconstruction", "[fluctuations]") {
  for (double kappa : {1.0, 10.0}) {
    for (auto [bp, bs] : {std::pair{0.5, 0.0}, std::pair{0.95, 0.0}, std::pair{1.0, 0.7}}) {
      const NormalizedParams p{1.0, kappa, 0.01};
      const MeanField mf{bp, bs};
      const SecondMoments m = solve_steady_moments(build_moment_system(mf, p));
      const QuadratureVariances a = signal_quadrature_variances(bp * bp, bs * bs, kappa);
      const QuadratureVariances b = variances_from_moments(m, p.g);
      CHECK_THAT(a.vx, WithinRel(b.vx, 1e-9));
      CHECK_THAT(a.vy, WithinRel(b.vy, 1e-9));
    }
  }
  // Below threshold the signal variances are 1/(1 - x) and 1/(1 + x).
  const QuadratureVariances v = signal_quadrature_variances(0.81, 0.0, 3.0);
  CHECK_THAT(v.vx, WithinRel(10.0, 1e-14));
  CHECK_THAT(v.vy, WithinRel(1.0 / 1.9, 1e-14));
}

TEST_CASE("critical point is singular", "[fluctuations]") {
  const MeanField mf{1.0, 0.0};
  const NormalizedParams p{1.0, 1.0, 0.01};
  try {
    solve_steady_moments(build_moment_system(mf, p));
    FAIL("expected a singularity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CriticalPointSingularity);
    CHECK(is_physics_error(e.kind()));
  }
  CHECK_THROWS_AS(signal_quadrature_variances(1.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(closed_form_pair_moments(mf, p), Error);
}

TEST_CASE("stability spectrum", "[fluctuations]") {
  SECTION("below threshold: -kappa twice and -1 +- x") {
    const auto e = stability_eigenvalues(build_stability_matrix({0.6, 0.0}, 3.0));
    CHECK_THAT(e[0].real(), WithinAbs(-0.4, 1e-14));
    CHECK_THAT(e[1].real(), WithinAbs(-1.6, 1e-14));
    CHECK_THAT(e[2].real(), WithinAbs(-3.0, 1e-14));
    CHECK_THAT(e[3].real(), WithinAbs(-3.0, 1e-14));
  }
  SECTION("classical threshold has a zero mode") {
    const auto e = stability_eigenvalues(build_stability_matrix({1.0, 0.0}, 1.0));
    CHECK_THAT(max_real_part(e), WithinAbs(0.0, 1e-15));
  }
  SECTION("sorted by real part") {
    const auto e = stability_eigenvalues(build_stability_matrix({1.0, 0.5}, 2.0));
    for (int i = 0; i + 1 < 4; ++i) CHECK(e[i].real() >= e[i + 1].real());
  }
}

TEST_CASE("normalized determinant", "[fluctuations]") {
  CHECK_THAT(normalized_determinant(RealMomentMatrix::Identity()), WithinAbs(1.0, 1e-15));
  RealMomentMatrix a = RealMomentMatrix::Identity() * 1e6;
  CHECK_THAT(normalized_determinant(a), WithinAbs(1.0, 1e-12));
  a.col(3) = a.col(2);
  CHECK(normalized_determinant(a) == 0.0);
}

TEST_CASE("physicality check flags violations", "[fluctuations]") {
  const MeanField mf{0.5, 0.0};
  const auto stable = stability_eigenvalues(build_stability_matrix(mf, 1.0));
  SecondMoments m;
  CHECK(physicality_check(mf, m, {1.0, 1.0}, stable).pass);
  CHECK_FALSE(physicality_check(mf, m, {2.0, 0.4}, stable).pass);
  m.nss = -1e-6;
  CHECK_FALSE(physicality_check(mf, m, {1.0, 1.0}, stable).pass);
  const auto unstable = stability_eigenvalues(build_stability_matrix({1.2, 0.0}, 1.0));
  CHECK_FALSE(physicality_check(mf, {}, {1.0, 1.0}, unstable).pass);
}

TEST_CASE("real degrees of freedom round-trip", "[fluctuations]") {
  SecondMoments m;
  m.cpp = {1, 2};
  m.npp = 3;
  m.cps = {4, 5};
  m.xps = {6, 7};
  m.css = {8, 9};
  m.nss = 10;
  const SecondMoments r = from_real_dof(to_real_dof(m));
  CHECK(r.cpp == m.cpp);
  CHECK(r.css == m.css);
  CHECK(r.nss == m.nss);
  const SecondMoments v = from_moment_vector(to_moment_vector(m));
  CHECK(v.xps == m.xps);
  CHECK(v.npp == m.npp);
}
