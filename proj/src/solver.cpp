#include "dopo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "dopo/dynamics.hpp"
#include "dopo/error.hpp"

namespace dopo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Scan resolution for the above-branch pump equation.
constexpr int kLogScanPoints = 10000;
constexpr int kUniformScanPoints = 10000;
constexpr int kUpperScanPoints = 2000;
constexpr double kScanEdge = 1e-9;
constexpr double kBisectionRelTol = 1e-12;

constexpr double kSupportedSigmaMax = 5.0;
constexpr double kOnsetTol = 1e-6;

double cubic(double x, double sigma, double g) {
  return ((x - sigma) * x - (1.0 + 0.25 * g * g)) * x + sigma;
}

double cubic_slope(double x, double sigma, double g) {
  return (3.0 * x - 2.0 * sigma) * x - (1.0 + 0.25 * g * g);
}

double polish(double x, double sigma, double g) {
  for (int i = 0; i < 4; ++i) {
    const double slope = cubic_slope(x, sigma, g);
    if (slope == 0.0) break;
    const double next = x - cubic(x, sigma, g) / slope;
    if (!(std::abs(cubic(next, sigma, g)) < std::abs(cubic(x, sigma, g)))) break;
    x = next;
  }
  return x;
}

// Pump equation in terms of d = sqrt(I_p) - 1, with the signal intensity
// given. Differences near the critical point are formed without cancellation.
double pump_residual_excess(double d, double is, double sigma, double kappa,
                            double g) {
  const double x = 1.0 + d;
  const double ip = x * x;
  const double pump_gap = (kappa - d) * (2.0 + kappa + d);  // (1+k)^2 - I_p
  const double signal_gap = (d - is) * (2.0 + d + is);      // I_p - (1+I_s)^2
  const double numerator =
      ip - (1.0 + kappa) * (1.0 + is) * (1.0 + kappa + is);
  return sigma - 0.5 * is -
         x * (1.0 + 0.25 * g * g * numerator / (pump_gap * signal_gap));
}

// Residual of the above-branch pump equation, or nullopt where the signal
// intensity is undefined.
std::optional<double> above_residual(double d, double sigma, double kappa,
                                     double g) {
  try {
    const double is = above_signal_intensity_from_excess(d, kappa, g);
    const double r = pump_residual_excess(d, is, sigma, kappa, g);
    if (!std::isfinite(r)) return std::nullopt;
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<double> above_scan_grid(double kappa, double g) {
  std::vector<double> grid;
  grid.reserve(kLogScanPoints + kUniformScanPoints + kUpperScanPoints);
  const double lo = std::min(kScanEdge, 1e-6 * g * g);
  const double hi = kappa * (1.0 - kScanEdge);
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int i = 0; i < kLogScanPoints; ++i) {
    grid.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (kLogScanPoints - 1)));
  }
  for (int i = 1; i < kUniformScanPoints; ++i) {
    grid.push_back(kappa * i / kUniformScanPoints);
  }
  // Dense near the upper edge I_p -> (1 + kappa)^2.
  const double log_gap_lo = std::log(kappa * kScanEdge);
  const double log_gap_hi = std::log(0.5 * kappa);
  for (int i = 0; i < kUpperScanPoints; ++i) {
    grid.push_back(kappa - std::exp(log_gap_lo + (log_gap_hi - log_gap_lo) * i /
                                                     (kUpperScanPoints - 1)));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> above_pump_roots(double sigma, double kappa, double g) {
  const std::vector<double> grid = above_scan_grid(kappa, g);
  std::vector<std::optional<double>> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = above_residual(grid[i], sigma, kappa, g);
  }

  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!values[i] || !values[i + 1]) continue;
    double fa = *values[i];
    const double fb = *values[i + 1];
    if (fa == 0.0) {
      roots.push_back(grid[i]);
      continue;
    }
    if ((fa < 0.0) == (fb < 0.0) || fb == 0.0) continue;
    double a = grid[i];
    double b = grid[i + 1];
    while (b - a > kBisectionRelTol * b) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const std::optional<double> fm = above_residual(mid, sigma, kappa, g);
      if (!fm) break;
      if ((*fm < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = *fm;
      } else {
        b = mid;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  if (!grid.empty() && values.back() && *values.back() == 0.0) {
    roots.push_back(grid.back());
  }
  return roots;
}

// Builds a candidate solution and applies the physical filters in order.
// Returns the solution or the reason it was rejected.
struct Candidate {
  std::optional<SteadyStateSolution> solution;
  std::string reason;
};

Candidate evaluate_candidate(const NormalizedParams& params, Branch branch,
                             const MeanField& mf) {
  Candidate out;
  SteadyStateSolution sol;
  sol.method = Method::SelfConsistent;
  sol.branch = branch;
  sol.params = params;
  sol.mean_field = mf;

  try {
    sol.moments = solve_steady_moments(build_moment_system(mf, params));
  } catch (const Error& e) {
    out.reason = std::string("moment solve: ") + e.what();
    return out;
  }
  try {
    sol.variances = signal_quadrature_variances(mf.pump_intensity(),
                                                mf.signal_intensity(),
                                                params.kappa);
  } catch (const Error& e) {
    out.reason = std::string("variances: ") + e.what();
    return out;
  }

  const StabilityEigenvalues eigs =
      stability_eigenvalues(build_stability_matrix(mf, params.kappa));
  sol.max_re_eig = max_real_part(eigs);
  const PhysicalityReport check =
      physicality_check(mf, sol.moments, sol.variances, eigs);
  if (!check.pass) {
    out.reason = check.reasons.front();
    return out;
  }

  sol.max_re_eig_coupled =
      coupled_max_re_eig(GaussianState{mf, sol.moments, 0.0}, params);
  if (!(sol.max_re_eig_coupled < 0.0)) {
    out.reason = "unstable under the coupled mean-field + moment dynamics";
    return out;
  }
  sol.residual = mean_field_residual(mf, sol.moments, params);
  out.solution = sol;
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Classical: return "classical";
    case Method::SelfConsistent: return "self-consistent";
  }
  return "unknown";
}

std::vector<CubicRoot> below_threshold_cubic_roots(double sigma, double kappa,
                                                   double g) {
  NormalizedParams{sigma, kappa, g}.validate();
  // Depressed cubic t^3 + p t + q with x = t + sigma/3.
  const double b = -sigma;
  const double c = -(1.0 + 0.25 * g * g);
  const double d = sigma;
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double shift = -b / 3.0;
  const double disc = 0.25 * q * q + p * p * p / 27.0;

  std::vector<CubicRoot> roots;
  if (disc < 0.0) {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg =
        std::clamp(1.5 * q / p * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double t = r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
      roots.push_back({polish(t + shift, sigma, g), true});
    }
  } else {
    const double s = std::sqrt(disc);
    const double u = std::cbrt(-0.5 * q + s);
    const double v = std::cbrt(-0.5 * q - s);
    roots.push_back({polish(u + v + shift, sigma, g), true});
    const double re = -0.5 * (u + v) + shift;
    const double im = 0.5 * std::sqrt(3.0) * (u - v);
    const bool real = im == 0.0;
    roots.push_back({complex(real ? polish(re, sigma, g) : re, im), real});
    roots.push_back({complex(real ? polish(re, sigma, g) : re, -im), real});
  }
  std::sort(roots.begin(), roots.end(), [](const CubicRoot& a, const CubicRoot& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return roots;
}

double below_pump_residual(double x, double sigma, double g) {
  const double gap = x * x - 1.0;
  if (gap == 0.0) {
    throw Error(ErrorKind::SingularDenominator,
                "pump equation singular at I_p = 1");
  }
  return sigma - x * (1.0 - 0.25 * g * g / gap);
}

double above_signal_intensity_from_excess(double excess, double kappa, double g) {
  const double d = excess;
  if (!(d > 0.0) || !(d < kappa)) {
    throw Error(ErrorKind::NoAboveBranch,
                "above branch requires 1 < I_p < (1 + kappa)^2");
  }
  const double g2 = g * g;
  const double ip = (1.0 + d) * (1.0 + d);
  const double pump_gap = (kappa - d) * (2.0 + kappa + d);
  const double lead = 4.0 * d * pump_gap;
  const double shifted = lead + kappa * (1.0 + kappa) * g2;
  const double r = shifted * shifted - kappa * kappa * g2 * g2 * pump_gap;
  if (r < 0.0) {
    throw Error(ErrorKind::NoAboveBranch, "negative discriminant R(I_p)");
  }
  return (std::sqrt(ip * r) + kappa * g2 * ip) / lead - 1.0;
}

double above_signal_intensity(double pump_intensity, double kappa, double g) {
  if (!(pump_intensity > 1.0)) {
    throw Error(ErrorKind::NoAboveBranch, "above branch requires I_p > 1");
  }
  const double excess = (pump_intensity - 1.0) / (std::sqrt(pump_intensity) + 1.0);
  return above_signal_intensity_from_excess(excess, kappa, g);
}

double pump_residual(double pump_intensity, double signal_intensity,
                     double sigma, double kappa, double g) {
  const double ip = pump_intensity;
  const double is = signal_intensity;
  const double pump_gap = (1.0 + kappa) * (1.0 + kappa) - ip;
  const double signal_gap = ip - (1.0 + is) * (1.0 + is);
  const double scale = std::max(1.0, ip);
  if (std::abs(pump_gap) <= 1e-15 * scale || std::abs(signal_gap) <= 1e-15 * scale) {
    throw Error(ErrorKind::SingularDenominator,
                "pump equation has a vanishing denominator");
  }
  const double numerator =
      ip - (1.0 + kappa) * (1.0 + is) * (1.0 + kappa + is);
  return sigma - 0.5 * is -
         std::sqrt(ip) * (1.0 + 0.25 * g * g * numerator / (pump_gap * signal_gap));
}

double mean_field_residual(const MeanField& mf, const SecondMoments& m,
                           const NormalizedParams& params) {
  const complex bp = mf.beta_p;
  const complex bs = mf.beta_s;
  const double pump = std::abs(params.sigma - bp - 0.5 * bs * bs - 0.5 * m.css);
  const double signal = std::abs(-bs + bp * std::conj(bs) + m.xps);
  return std::max(pump, signal);
}

BranchReport solve_branches_detailed(const NormalizedParams& params) {
  params.validate();
  const double sigma = params.sigma;
  const double kappa = params.kappa;
  const double g = params.g;
  BranchReport report;

  // Below: one of the cubic's roots survives.
  std::vector<SteadyStateSolution> below;
  for (const CubicRoot& root : below_threshold_cubic_roots(sigma, kappa, g)) {
    const double x = root.value.real();
    Rejection rej{Branch::Below, std::norm(root.value), 0.0, {}};
    if (!root.is_real) {
      rej.reason = "complex root";
    } else if (x < 0.0) {
      rej.reason = "negative pump amplitude";
    } else {
      Candidate c = evaluate_candidate(params, Branch::Below, MeanField{x, 0.0});
      if (c.solution) {
        below.push_back(*c.solution);
        continue;
      }
      rej.reason = c.reason;
    }
    report.rejections.push_back(rej);
  }
  if (below.empty()) {
    throw Error(ErrorKind::NoSolution, "no physical below-threshold root");
  }
  if (below.size() > 1) {
    throw Error(ErrorKind::BranchCountViolation,
                "more than one physical below-threshold root");
  }
  report.solutions.push_back(below.front());

  // Above: roots of the pump equation with I_s = I_s(I_p).
  std::vector<SteadyStateSolution> above;
  for (double d : above_pump_roots(sigma, kappa, g)) {
    const double ip = (1.0 + d) * (1.0 + d);
    double is = kNaN;
    try {
      is = above_signal_intensity_from_excess(d, kappa, g);
    } catch (const Error& e) {
      report.rejections.push_back({Branch::AbovePlus, ip, kNaN, e.what()});
      continue;
    }
    if (!(is > 0.0)) {
      report.rejections.push_back(
          {Branch::AbovePlus, ip, is, "nonpositive signal intensity"});
      continue;
    }
    Candidate c = evaluate_candidate(params, Branch::AbovePlus,
                                     MeanField{1.0 + d, std::sqrt(is)});
    if (!c.solution) {
      report.rejections.push_back({Branch::AbovePlus, ip, is, c.reason});
      continue;
    }
    above.push_back(*c.solution);
  }
  if (above.size() > 1) {
    throw Error(ErrorKind::BranchCountViolation,
                "more than one physical above-threshold root");
  }
  if (!above.empty()) {
    const SteadyStateSolution& plus = above.front();
    report.solutions.push_back(plus);

    SteadyStateSolution minus = plus;
    minus.branch = Branch::AboveMinus;
    minus.mean_field.beta_s = -plus.mean_field.beta_s;
    minus.moments =
        solve_steady_moments(build_moment_system(minus.mean_field, params));
    minus.max_re_eig = max_real_part(stability_eigenvalues(
        build_stability_matrix(minus.mean_field, kappa)));
    minus.max_re_eig_coupled =
        coupled_max_re_eig(GaussianState{minus.mean_field, minus.moments, 0.0}, params);
    minus.residual = mean_field_residual(minus.mean_field, minus.moments, params);
    report.solutions.push_back(minus);
  }
  return report;
}

std::vector<SteadyStateSolution> solve_branches(const NormalizedParams& params) {
  return solve_branches_detailed(params).solutions;
}

std::vector<SteadyStateSolution> solve_classical(const NormalizedParams& params) {
  params.validate();
  std::vector<SteadyStateSolution> out;
  for (const ClassicalSolution& cl : classical_steady_state(params.sigma)) {
    if (!cl.stable) continue;
    SteadyStateSolution sol;
    sol.method = Method::Classical;
    sol.branch = cl.branch;
    sol.params = params;
    sol.mean_field = cl.mean_field;
    sol.moments = solve_steady_moments(build_moment_system(cl.mean_field, params));
    sol.variances = signal_quadrature_variances(cl.mean_field.pump_intensity(),
                                                cl.mean_field.signal_intensity(),
                                                params.kappa);
    sol.max_re_eig = max_real_part(
        stability_eigenvalues(build_stability_matrix(cl.mean_field, params.kappa)));
    sol.max_re_eig_coupled = kNaN;
    const complex bp = cl.mean_field.beta_p;
    const complex bs = cl.mean_field.beta_s;
    sol.residual = std::max(std::abs(params.sigma - bp - 0.5 * bs * bs),
                            std::abs(-bs + bp * std::conj(bs)));
    out.push_back(sol);
  }
  return out;
}

QuadratureVariances threshold_asymptotics(double g) {
  if (!(g > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "g must be > 0");
  }
  const double root2 = std::numbers::sqrt2;
  return {2.0 * root2 / g, 0.5 + g / (8.0 * root2)};
}

double onset_sigma(double kappa, double g) {
  NormalizedParams{1.0, kappa, g}.validate();
  auto has_above = [&](double sigma) {
    for (const SteadyStateSolution& s : solve_branches({sigma, kappa, g})) {
      if (s.branch != Branch::Below) return true;
    }
    return false;
  };

  double lo = 1.0;
  double hi = 1.0 + std::max(4.0 * g, 1e-5);
  while (!has_above(hi)) {
    lo = hi;
    hi = 1.0 + 2.0 * (hi - 1.0);
    if (hi > kSupportedSigmaMax) {
      throw Error(ErrorKind::NoOnsetFound,
                  "no above branch found for sigma <= 5");
    }
  }
  while (hi - lo > kOnsetTol) {
    const double mid = 0.5 * (lo + hi);
    if (has_above(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace dopo
