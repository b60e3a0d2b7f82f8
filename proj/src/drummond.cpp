#include "dopo/drummond.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dopo/error.hpp"

namespace dopo {
namespace {

// exp(-700) is below 1e-300, so the tail past the cutoff is negligible.
constexpr double kTailDrop = 700.0;
constexpr double kTolerance = 1e-10;

double quadratic_coefficient(double sigma, double g) {
  return (sigma - 1.0) / (std::numbers::sqrt2 * g);
}

void check(double sigma, double g) {
  if (!std::isfinite(sigma) || !(g > 0.0) || !std::isfinite(g)) {
    throw Error(ErrorKind::InvalidParameter, "need finite sigma and g > 0");
  }
}

// Integral over x >= 0 of f(x) exp(exponent - log_peak), split at the peak.
template <class F>
double half_line_integral(const CriticalDensity& d, F f, double* error) {
  using boost::math::quadrature::gauss_kronrod;
  const double a = quadratic_coefficient(d.sigma, d.g);
  const double peak = a > 0.0 ? std::sqrt(8.0 * a) : 0.0;
  // Largest root of a u - u^2/16 = log_peak - kTailDrop in u = x^2.
  const double cutoff =
      std::sqrt(8.0 * (a + std::sqrt(a * a + (kTailDrop - d.log_peak) / 4.0)));
  auto integrand = [&](double x) { return f(x) * std::exp(d.shifted_exponent(x)); };

  // Break points around the peak keep every panel smooth on its own scale.
  const double width = a > 0.0 ? 1.0 / std::sqrt(4.0 * a) : 1.0;
  std::vector<double> cuts{0.0, cutoff};
  for (double k : {-40.0, -10.0, 0.0, 10.0, 40.0}) {
    const double c = peak + k * width;
    if (c > 0.0 && c < cutoff) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double piece_err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1],
                                                  20, 1e-14, &piece_err);
    err += piece_err;
  }
  if (error) *error = err;
  return total;
}

}  // namespace

CriticalDensity CriticalDensity::make(double sigma, double g) {
  check(sigma, g);
  CriticalDensity d;
  d.sigma = sigma;
  d.g = g;
  const double a = quadratic_coefficient(sigma, g);
  d.log_peak = a > 0.0 ? 4.0 * a * a : 0.0;
  double err = 0.0;
  d.normalization = 2.0 * half_line_integral(d, [](double) { return 1.0; }, &err);
  if (!(d.normalization > 0.0) || 2.0 * err > kTolerance * d.normalization) {
    throw Error(ErrorKind::Numerical, "critical density normalization failed");
  }
  return d;
}

double CriticalDensity::exponent(double x) const {
  const double x2 = x * x;
  return quadratic_coefficient(sigma, g) * x2 - x2 * x2 / 16.0;
}

double CriticalDensity::shifted_exponent(double x) const {
  const double a = quadratic_coefficient(sigma, g);
  const double x2 = x * x;
  if (a <= 0.0) return a * x2 - x2 * x2 / 16.0;
  // Completed square; avoids cancelling two large terms near the peak.
  const double u = x2 - 8.0 * a;
  return -u * u / 16.0;
}

double CriticalDensity::operator()(double x) const {
  return std::exp(shifted_exponent(x)) / normalization;
}

double critical_moment(double sigma, double g, int order) {
  if (order < 0) {
    throw Error(ErrorKind::InvalidParameter, "moment order must be >= 0");
  }
  const CriticalDensity d = CriticalDensity::make(sigma, g);
  if (order % 2 == 1) return 0.0;
  if (order == 0) return 1.0;
  double err = 0.0;
  const double value =
      2.0 * half_line_integral(d, [order](double x) { return std::pow(x, order); }, &err) /
      d.normalization;
  if (!std::isfinite(value) || 2.0 * err / d.normalization > kTolerance * std::max(1.0, value)) {
    throw Error(ErrorKind::Numerical, "critical moment quadrature did not converge");
  }
  return value;
}

DrummondPrediction perturbative_predictions(double sigma, double kappa, double g) {
  check(sigma, g);
  if (!(kappa > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "kappa must be > 0");
  }
  const double x2 = critical_moment(sigma, g, 2);
  const double root2 = std::numbers::sqrt2;
  DrummondPrediction p;
  p.pump_mean = sigma - g / (4.0 * root2) * x2;
  p.vx = root2 / g * x2;
  p.vy = (3.0 - sigma) / 4.0 +
         g / (16.0 * root2) * ((2.0 + 3.0 * kappa) / (2.0 + kappa)) * x2;
  p.in_validity_window = std::abs(sigma - 1.0) < g / root2;
  return p;
}

ThresholdRatios threshold_ratios(double kappa) {
  if (!(kappa > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "kappa must be > 0");
  }
  return {2.0 / 3.0, 2.0 / 3.0 * (1.0 + 2.0 * kappa / (2.0 + kappa))};
}

}  // namespace dopo
