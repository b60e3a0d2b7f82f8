#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dopo/model.hpp"

namespace dopo {

/// Drift matrix of the linearized fluctuations over the ordering
/// (db_p, db_p^+, db_s, db_s^+).
using StabilityMatrix = Eigen::Matrix4cd;
using StabilityEigenvalues = std::array<complex, 4>;

using MomentVector = Eigen::Matrix<complex, 10, 1>;
using MomentMatrix = Eigen::Matrix<complex, 10, 10>;
using RealMomentVector = Eigen::Matrix<double, 10, 1>;
using RealMomentMatrix = Eigen::Matrix<double, 10, 10>;

/// Closed Gaussian moment dynamics dm/dtau = M m + n over the ordering
/// (cpp, cpp*, npp, cps, cps*, xps, xps*, css, css*, nss).
struct MomentSystem {
  MomentMatrix matrix;
  MomentVector drive;
};

/// The same system over the 10 real degrees of freedom
/// (Re cpp, Im cpp, npp, Re cps, Im cps, Re xps, Im xps, Re css, Im css, nss).
struct RealMomentSystem {
  RealMomentMatrix matrix;
  RealMomentVector drive;
};

struct PairMoments {
  complex css{};  // <db_s db_s>
  complex xps{};  // <db_p db_s^+>
};

/// Signal quadrature variances for x = a^+ + a and y = i(a^+ - a); the vacuum
/// has (1, 1).
struct QuadratureVariances {
  double vx = 1.0;
  double vy = 1.0;

  double product() const { return vx * vy; }
};

struct PhysicalityReport {
  bool pass = true;
  std::vector<std::string> reasons;
};

StabilityMatrix build_stability_matrix(const MeanField& mf, double kappa);

/// Eigenvalues sorted by real part, largest first.
StabilityEigenvalues stability_eigenvalues(const StabilityMatrix& L);

inline double max_real_part(const StabilityEigenvalues& eigs) {
  return eigs.front().real();
}

MomentSystem build_moment_system(const MeanField& mf,
                                 const NormalizedParams& params);

MomentVector to_moment_vector(const SecondMoments& m);
SecondMoments from_moment_vector(const MomentVector& v);
RealMomentVector to_real_dof(const SecondMoments& m);
SecondMoments from_real_dof(const RealMomentVector& r);

RealMomentSystem to_real_system(const MomentSystem& sys);

/// Steady state of the moment system, M m + n = 0. Throws
/// CriticalPointSingularity when M is numerically singular.
SecondMoments solve_steady_moments(const MomentSystem& sys);

/// |det A| / prod_j ||A e_j||; zero for singular A, one for orthogonal A.
double normalized_determinant(const RealMomentMatrix& a);

/// Closed-form steady-state <db_s^2> and <db_p db_s^+> for given mean fields.
PairMoments closed_form_pair_moments(const MeanField& mf,
                                     const NormalizedParams& params);

/// Steady-state signal quadrature variances from the mean-field intensities.
QuadratureVariances signal_quadrature_variances(double pump_intensity,
                                                double signal_intensity,
                                                double kappa);

/// Variances reconstructed from b-mode moments, converting to a units.
QuadratureVariances variances_from_moments(const SecondMoments& m, double g);

PhysicalityReport physicality_check(const MeanField& mf, const SecondMoments& m,
                                    const QuadratureVariances& v,
                                    const StabilityEigenvalues& eigs);

}  // namespace dopo
