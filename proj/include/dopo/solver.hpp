#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dopo/fluctuations.hpp"
#include "dopo/model.hpp"

namespace dopo {

enum class Method { Classical, SelfConsistent };

std::string_view to_string(Method method);

struct SteadyStateSolution {
  Method method = Method::SelfConsistent;
  Branch branch = Branch::Below;
  NormalizedParams params;
  MeanField mean_field;
  SecondMoments moments;
  QuadratureVariances variances;
  double max_re_eig = 0.0;           // of the linear stability matrix
  double max_re_eig_coupled = 0.0;   // of the coupled mean-field + moment flow
  double residual = 0.0;             // max-norm of the mean-field equations
};

struct CubicRoot {
  complex value;
  bool is_real = true;
};

/// Candidates for sqrt(I_p) on the below branch: the roots of
/// x^3 - sigma x^2 - (1 + g^2/4) x + sigma. Complex pairs are flagged.
std::vector<CubicRoot> below_threshold_cubic_roots(double sigma, double kappa,
                                                   double g);

/// Pump equation at I_s = 0 in terms of the signed amplitude x = beta_p.
double below_pump_residual(double x, double sigma, double g);

/// Above-branch signal intensity as a function of the pump intensity, from
/// the nonzero physical root of the stationary signal equation. Throws
/// NoAboveBranch outside 1 < I_p < (1 + kappa)^2.
double above_signal_intensity(double pump_intensity, double kappa, double g);

/// Same, parameterized by d = sqrt(I_p) - 1 > 0 to keep precision near d = 0.
double above_signal_intensity_from_excess(double excess, double kappa, double g);

/// sigma minus the right-hand side of the stationary pump-intensity equation.
double pump_residual(double pump_intensity, double signal_intensity,
                     double sigma, double kappa, double g);

/// Max-norm of the stationary mean-field equations at (mf, m).
double mean_field_residual(const MeanField& mf, const SecondMoments& m,
                           const NormalizedParams& params);

struct Rejection {
  Branch branch = Branch::Below;
  double pump_intensity = 0.0;
  double signal_intensity = 0.0;
  std::string reason;
};

struct BranchReport {
  std::vector<SteadyStateSolution> solutions;
  std::vector<Rejection> rejections;
};

/// Self-consistent steady states with the rejected candidates and reasons.
BranchReport solve_branches_detailed(const NormalizedParams& params);

/// Self-consistent steady states: Below always, then AbovePlus and AboveMinus
/// when the above branch exists.
std::vector<SteadyStateSolution> solve_branches(const NormalizedParams& params);

/// Stable classical branches with their linearized fluctuations. Throws
/// CriticalPointSingularity at sigma = 1.
std::vector<SteadyStateSolution> solve_classical(const NormalizedParams& params);

/// Leading-order variances of the self-consistent solution at sigma = 1.
QuadratureVariances threshold_asymptotics(double g);

/// Smallest sigma (to 1e-6) at which the self-consistent above branch exists.
double onset_sigma(double kappa, double g);

}  // namespace dopo
