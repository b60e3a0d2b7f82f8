#pragma once

#include "dopo/model.hpp"

namespace dopo {

/// Critical-point density D(x) ~ exp[(sigma - 1) x^2 / (sqrt(2) g) - x^4 / 16]
/// of the rescaled signal quadrature.
struct CriticalDensity {
  double sigma = 1.0;
  double g = 0.01;
  double log_peak = 0.0;           // max_x of the exponent
  double normalization = 1.0;      // integral of exp(exponent - log_peak)

  static CriticalDensity make(double sigma, double g);

  double exponent(double x) const;
  /// exponent(x) - log_peak, evaluated without cancellation.
  double shifted_exponent(double x) const;
  /// Normalized density.
  double operator()(double x) const;
};

struct DrummondPrediction {
  double pump_mean = 0.0;  // <b_p>
  double vx = 0.0;
  double vy = 0.0;
  bool in_validity_window = false;
};

struct ThresholdRatios {
  double rx = 0.0;
  double ry = 0.0;
};

/// <x^k> under the critical density; odd orders vanish. Throws Numerical when
/// the adaptive quadrature cannot reach an absolute error of 1e-10.
double critical_moment(double sigma, double g, int order);

DrummondPrediction perturbative_predictions(double sigma, double kappa, double g);

/// Expected Drummond / self-consistent ratios at threshold, for Vx and for
/// the excess Vy - 1/2.
ThresholdRatios threshold_ratios(double kappa);

}  // namespace dopo
