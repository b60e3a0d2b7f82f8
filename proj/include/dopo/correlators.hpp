#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dopo/solver.hpp"

namespace dopo {

/// Equal-time fluctuation correlators C_ij = <db_i db_j> over the ordering
/// (db_p, db_p^+, db_s, db_s^+). `normal` drops the commutators, so it vanishes
/// in the vacuum and matches SecondMoments entry by entry; `ordered` keeps
/// them and seeds the regression.
struct CovarianceMatrix {
  Eigen::Matrix4cd normal;
  Eigen::Matrix4cd ordered;
};

struct SpectrumCurve {
  std::vector<double> omega;
  std::vector<double> s_x;
  std::vector<double> s_y;
};

CovarianceMatrix stationary_covariance(const SteadyStateSolution& sol);

/// lim_t <db_i(t + tau) db_j(t)> = exp(L tau) C(0) for tau >= 0. Throws
/// UnstableSolution unless max Re eig(L) < 0.
Eigen::Matrix4cd two_time_correlator(const SteadyStateSolution& sol, double tau);

/// <dx(t + tau) dx(t)> and <dy(t + tau) dy(t)> in a units, from a correlator
/// matrix.
complex x_correlation(const Eigen::Matrix4cd& c, double g);
complex y_correlation(const Eigen::Matrix4cd& c, double g);

/// Intracavity quadrature spectra S(Omega) = int dtau e^{i Omega tau} <dq(tau) dq(0)>.
/// The lag integral is cut at T = 40 / |max Re eig| and evaluated in closed
/// form on [0, T].
SpectrumCurve quadrature_spectrum(const SteadyStateSolution& sol,
                                  std::span<const double> omega);

void write_spectrum_csv(std::ostream& os, const SteadyStateSolution& sol,
                        const SpectrumCurve& spectrum);

}  // namespace dopo
