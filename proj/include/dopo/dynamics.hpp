#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dopo/fluctuations.hpp"
#include "dopo/model.hpp"

namespace dopo {

/// Mean fields plus second moments at normalized time tau (units of 1/gamma_s).
struct GaussianState {
  MeanField mean_field;
  SecondMoments moments;
  double tau = 0.0;
};

/// Time derivatives of the Gaussian state.
struct GaussianRates {
  complex beta_p{};
  complex beta_s{};
  SecondMoments moments;
};

/// (Re bp, Im bp, Re bs, Im bs, then the 10 real moment degrees of freedom).
using StateVector = Eigen::Matrix<double, 14, 1>;
using StateJacobian = Eigen::Matrix<double, 14, 14>;

StateVector pack(const GaussianState& s);
GaussianState unpack(const StateVector& y, double tau = 0.0);

GaussianRates evolution_rhs(const GaussianState& s,
                            const NormalizedParams& params);
StateVector evolution_rhs(const StateVector& y, const NormalizedParams& params);

/// Jacobian of the coupled mean-field + moment equations. The right-hand side
/// is quadratic in the state, so central differences are exact up to rounding.
StateJacobian coupled_jacobian(const GaussianState& s,
                               const NormalizedParams& params);

/// Largest real part of the coupled Jacobian's spectrum.
double coupled_max_re_eig(const GaussianState& s,
                          const NormalizedParams& params);

GaussianState vacuum_state();

/// Vacuum with a signal seed that selects the requested basin:
/// +seed for AbovePlus, -seed for AboveMinus, none for Below. Seeds much
/// below ~2g are captured by the symmetric branch, which stays stable above
/// threshold in the self-consistent flow.
GaussianState seeded_state(Branch basin, double seed = 0.1);

QuadratureVariances state_variances(const GaussianState& s, double g);

struct IntegratorOptions {
  double atol = 1e-10;
  double rtol = 1e-8;
  double initial_step = 1e-2;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct ConvergenceReport {
  bool converged = false;
  double tau = 0.0;
  double rhs_norm = 0.0;  // max-norm of the right-hand side at tau
  long steps = 0;
  long rejected_steps = 0;
  // Fixed point of the root solver closest to the final state, if any.
  std::optional<Branch> nearest_branch;
  double distance = std::numeric_limits<double>::infinity();
};

struct IntegrationResult {
  GaussianState state;
  ConvergenceReport report;
};

/// Adaptive Dormand-Prince 5(4) until the max-norm of the right-hand side
/// drops below `tol` or tau reaches `t_max`. Running out of time is reported,
/// not thrown; step-size underflow throws ErrorKind::Stiffness.
IntegrationResult integrate_to_steady_state(const GaussianState& s0,
                                            const NormalizedParams& params,
                                            double t_max, double tol,
                                            const IntegratorOptions& opts = {});

/// States at each of the ascending `sample_times` (the first may equal s0.tau).
std::vector<GaussianState> integrate_trajectory(
    const GaussianState& s0, const NormalizedParams& params,
    std::span<const double> sample_times, const IntegratorOptions& opts = {});

/// CSV: tau, Re/Im beta_p, Re/Im beta_s, the 10 real moment degrees of
/// freedom, Vx, Vy.
void write_trajectory_csv(std::ostream& os,
                          const std::vector<GaussianState>& trajectory,
                          const NormalizedParams& params);

}  // namespace dopo
