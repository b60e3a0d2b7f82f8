#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dopo/solver.hpp"

namespace dopo {

enum class MarginalAxis { XPlus, XMinus };
enum class MarginalSource { Exact, GaussBelow, GaussAboveMixture };

std::string_view to_string(MarginalAxis axis);
MarginalAxis marginal_axis_from_string(std::string_view name);
std::string_view to_string(MarginalSource source);

struct MarginalCurve {
  MarginalAxis axis = MarginalAxis::XPlus;
  MarginalSource source = MarginalSource::Exact;
  std::vector<double> grid;
  std::vector<double> density;
};

struct MarginalComparison {
  double l1_distance = 0.0;
  double variance_ratio = 0.0;  // exact over ansatz
};

/// Unnormalized log of the adiabatic-limit positive-P density over
/// (alpha, alpha+); -inf on and outside the support |alpha|, |alpha+| < rho.
double log_density(double alpha, double alpha_plus, double sigma, double g);

/// Exact steady-state positive-P density, tabulated on a tensor Simpson grid in
/// x+ = alpha + alpha+ and x- = alpha - alpha+. The box is cut to the region
/// within 80 e-folds of the peak.
class PositivePField {
 public:
  PositivePField(double sigma, double g, int intervals = 2048);

  double sigma() const { return sigma_; }
  double g() const { return g_; }
  double support_radius() const { return rho_; }
  double log_normalization() const { return log_norm_; }
  double x_plus_half_width() const { return x_plus_half_; }
  double x_minus_half_width() const { return x_minus_half_; }

  /// Normalized log density over (alpha, alpha+).
  double log_density(double alpha, double alpha_plus) const;

  /// <alpha+^m alpha^n>, the normally ordered moment <a_s^+m a_s^n>.
  double normal_ordered_moment(int m, int n) const;

  /// p(x+) or q(x-) at each grid point, each integrating to 1 over its axis.
  MarginalCurve marginal(MarginalAxis axis, std::span<const double> grid) const;

 private:
  // Peak-relative log density in rotated coordinates.
  double shifted_log(double x_plus, double x_minus) const;
  double axis_integral(MarginalAxis over, double fixed) const;

  double sigma_;
  double g_;
  double rho_;
  double exponent_;  // 2/g^2 - 1
  double log_peak_ = 0.0;
  double log_norm_ = 0.0;
  double x_plus_half_ = 0.0;
  double x_minus_half_ = 0.0;
  int intervals_;
  Eigen::VectorXd x_plus_;
  Eigen::VectorXd x_minus_;
  Eigen::VectorXd w_plus_;   // Simpson weights
  Eigen::VectorXd w_minus_;
  Eigen::MatrixXd weights_;  // exp(shifted_log), rows x+, columns x-
  double mass_ = 0.0;        // integral of weights_ over d x+ d x-
};

MarginalCurve marginal_curves(double sigma, double g, MarginalAxis axis,
                              std::span<const double> grid);

double normal_ordered_moment(double sigma, double g, int m, int n);

/// Gaussian-ansatz marginal from a self-consistent solution, in normal order:
/// x+ has variance Vx - 1 (centred at 0, or an equal mixture at
/// +-2 sqrt(I_s)/g above threshold) and x- has variance 1 - Vy.
MarginalCurve gaussian_marginal_curves(const SteadyStateSolution& sol,
                                       MarginalAxis axis,
                                       std::span<const double> grid);

MarginalComparison compare_marginals(const MarginalCurve& exact,
                                     const MarginalCurve& ansatz);

/// Strict local maxima above 1e-3 of the curve maximum.
int count_modes(const MarginalCurve& curve);

/// Trapezoid integral of the density.
double curve_integral(const MarginalCurve& curve);

/// Symmetric grid of `points` covering |mean| + 6 standard deviations of the
/// widest component of the Gaussian marginal for `sol`.
std::vector<double> default_marginal_grid(const SteadyStateSolution& sol,
                                          MarginalAxis axis, int points = 1025);

std::vector<double> linear_grid(double lo, double hi, int points);

/// CSV: x, exact, gauss_below, gauss_above. Missing overlays are "nan".
void write_marginal_csv(std::ostream& os, const NormalizedParams& params,
                        const MarginalCurve& exact, const MarginalCurve* below,
                        const MarginalCurve* above);

}  // namespace dopo
