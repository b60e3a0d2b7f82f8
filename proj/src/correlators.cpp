#include "dopo/correlators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <unsupported/Eigen/MatrixFunctions>

#include "dopo/error.hpp"
#include "dopo/io.hpp"

namespace dopo {
namespace {

constexpr double kDecayLengths = 40.0;

StabilityMatrix stable_matrix(const SteadyStateSolution& sol) {
  const StabilityMatrix L = build_stability_matrix(sol.mean_field, sol.params.kappa);
  if (!(max_real_part(stability_eigenvalues(L)) < 0.0)) {
    throw Error(ErrorKind::UnstableSolution,
                "correlators need max Re eig(L) < 0");
  }
  return L;
}

// Rows: x_p, y_p, x_s, y_s in terms of (db_p, db_p^+, db_s, db_s^+), with
// x = b + b^+ and y = i(b^+ - b).
Eigen::Matrix4cd to_quadratures() {
  const complex i(0.0, 1.0);
  Eigen::Matrix4cd q = Eigen::Matrix4cd::Zero();
  q(0, 0) = 1.0;
  q(0, 1) = 1.0;
  q(1, 0) = -i;
  q(1, 1) = i;
  q(2, 2) = 1.0;
  q(2, 3) = 1.0;
  q(3, 2) = -i;
  q(3, 3) = i;
  return q;
}

Eigen::Matrix4cd from_quadratures() {
  const complex i(0.0, 1.0);
  Eigen::Matrix4cd q = Eigen::Matrix4cd::Zero();
  q(0, 0) = 0.5;
  q(0, 1) = 0.5 * i;
  q(1, 0) = 0.5;
  q(1, 1) = -0.5 * i;
  q(2, 2) = 0.5;
  q(2, 3) = 0.5 * i;
  q(3, 2) = 0.5;
  q(3, 3) = -0.5 * i;
  return q;
}

}  // namespace

CovarianceMatrix stationary_covariance(const SteadyStateSolution& sol) {
  const SecondMoments& m = sol.moments;
  const double g2 = sol.params.g * sol.params.g;
  Eigen::Matrix4cd n;
  // Rows/columns: db_p, db_p^+, db_s, db_s^+.
  n << m.cpp, m.npp, m.cps, m.xps,
       m.npp, std::conj(m.cpp), std::conj(m.xps), std::conj(m.cps),
       m.cps, std::conj(m.xps), m.css, m.nss,
       m.xps, std::conj(m.cps), m.nss, std::conj(m.css);
  CovarianceMatrix c;
  c.normal = n;
  c.ordered = n;
  c.ordered(0, 1) += sol.params.kappa * g2;  // [b_p, b_p^+]
  c.ordered(2, 3) += g2;                      // [b_s, b_s^+]
  return c;
}

Eigen::Matrix4cd two_time_correlator(const SteadyStateSolution& sol, double tau) {
  if (!(tau >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "tau must be >= 0");
  }
  const StabilityMatrix L = stable_matrix(sol);
  const Eigen::Matrix4cd c0 = stationary_covariance(sol).ordered;
  if (tau == 0.0) return c0;
  return (L * tau).exp() * c0;
}

complex x_correlation(const Eigen::Matrix4cd& c, double g) {
  return (c(2, 2) + c(2, 3) + c(3, 2) + c(3, 3)) / (g * g);
}

complex y_correlation(const Eigen::Matrix4cd& c, double g) {
  // y = i(a^+ - a)
  return -(c(3, 3) - c(3, 2) - c(2, 3) + c(2, 2)) / (g * g);
}

SpectrumCurve quadrature_spectrum(const SteadyStateSolution& sol,
                                  std::span<const double> omega) {
  // Work with quadratures: for a real pump and zero signal the x and y
  // blocks decouple exactly, so the tiny y spectrum is not swamped by
  // rounding from the huge x one near threshold.
  const Eigen::Matrix4cd q = to_quadratures();
  const Eigen::Matrix4cd L = q * stable_matrix(sol) * from_quadratures();
  const Eigen::Matrix4cd c0 = q * stationary_covariance(sol).ordered * q.transpose();
  const double t_end =
      kDecayLengths / std::abs(max_real_part(stability_eigenvalues(L)));
  const Eigen::Matrix4cd decay = (L * t_end).exp();
  const Eigen::Matrix4cd identity = Eigen::Matrix4cd::Identity();
  const double g2 = sol.params.g * sol.params.g;

  SpectrumCurve s;
  s.omega.assign(omega.begin(), omega.end());
  s.s_x.reserve(omega.size());
  s.s_y.reserve(omega.size());
  for (double w : omega) {
    // int_0^T e^{(L + i w) t} dt = (L + i w)^-1 (e^{i w T} e^{L T} - 1)
    const Eigen::Matrix4cd shifted = L + complex(0.0, w) * identity;
    const Eigen::Matrix4cd window = std::polar(1.0, w * t_end) * decay - identity;
    const Eigen::Matrix4cd c = shifted.partialPivLu().solve(window) * c0;
    // Negative lags are the complex conjugates, hence 2 Re.
    s.s_x.push_back(2.0 * c(2, 2).real() / g2);
    s.s_y.push_back(2.0 * c(3, 3).real() / g2);
  }
  return s;
}

void write_spectrum_csv(std::ostream& os, const SteadyStateSolution& sol,
                        const SpectrumCurve& spectrum) {
  write_params_header(os, to_string(sol.method), sol.params,
                      "branch=" + std::string(to_string(sol.branch)));
  os << "omega,S_x,S_y\n";
  for (std::size_t i = 0; i < spectrum.omega.size(); ++i) {
    os << format_number(spectrum.omega[i]) << ',' << format_number(spectrum.s_x[i])
       << ',' << format_number(spectrum.s_y[i]) << '\n';
  }
}

}  // namespace dopo
