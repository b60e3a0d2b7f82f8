#include "dopo/positive_p.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "dopo/error.hpp"
#include "dopo/io.hpp"

namespace dopo {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kWindowDrop = 80.0;
constexpr int kPairwiseBlock = 8;

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= kPairwiseBlock) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

Eigen::VectorXd simpson_weights(double half_width, int intervals) {
  const double h = 2.0 * half_width / intervals;
  Eigen::VectorXd w(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    w(i) = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  }
  return w * (h / 3.0);
}

Eigen::VectorXd symmetric_nodes(double half_width, int intervals) {
  Eigen::VectorXd x(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    // Mirror the upper half so the grid is exactly symmetric.
    x(i) = half_width * (2.0 * i - intervals) / intervals;
  }
  for (int i = 0; i < intervals / 2; ++i) x(intervals - i) = -x(i);
  x(intervals / 2) = 0.0;
  return x;
}

// Largest t in [lo, hi) with f(t) >= level, given f(lo) >= level and f
// decreasing to -inf at hi.
template <class F>
double edge(F f, double lo, double hi, double level) {
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> parts(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    parts[i] = 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  }
  return pairwise_sum(parts);
}

struct CurveMoments {
  double mean = 0.0;
  double variance = 0.0;
};

CurveMoments curve_moments(const MarginalCurve& c) {
  const double mass = trapezoid(c.grid, c.density);
  std::vector<double> f(c.grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = c.grid[i] * c.density[i];
  const double mean = trapezoid(c.grid, f) / mass;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = c.grid[i] - mean;
    f[i] = z * z * c.density[i];
  }
  return {mean, trapezoid(c.grid, f) / mass};
}

void check_params(double sigma, double g) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !(g > 0.0) || !std::isfinite(g)) {
    throw Error(ErrorKind::InvalidParameter, "positive-P needs sigma > 0 and g > 0");
  }
}

}  // namespace

std::string_view to_string(MarginalAxis axis) {
  return axis == MarginalAxis::XPlus ? "x_plus" : "x_minus";
}

MarginalAxis marginal_axis_from_string(std::string_view name) {
  if (name == "x_plus") return MarginalAxis::XPlus;
  if (name == "x_minus") return MarginalAxis::XMinus;
  throw Error(ErrorKind::InvalidParameter,
              "unknown axis '" + std::string(name) + "' (x_plus, x_minus)");
}

std::string_view to_string(MarginalSource source) {
  switch (source) {
    case MarginalSource::Exact: return "exact";
    case MarginalSource::GaussBelow: return "gauss_below";
    case MarginalSource::GaussAboveMixture: return "gauss_above";
  }
  return "unknown";
}

double log_density(double alpha, double alpha_plus, double sigma, double g) {
  check_params(sigma, g);
  const double rho2 = 2.0 * sigma / (g * g);
  const double u = rho2 - alpha * alpha;
  const double v = rho2 - alpha_plus * alpha_plus;
  if (!(u > 0.0) || !(v > 0.0)) return kNegInf;
  return (2.0 / (g * g) - 1.0) * (std::log(u) + std::log(v)) + 2.0 * alpha * alpha_plus;
}

PositivePField::PositivePField(double sigma, double g, int intervals)
    : sigma_(sigma), g_(g), intervals_(intervals) {
  check_params(sigma, g);
  if (intervals < 2 || intervals % 2 != 0) {
    throw Error(ErrorKind::InvalidParameter, "Simpson grid needs an even interval count");
  }
  rho_ = std::sqrt(2.0 * sigma) / g;
  exponent_ = 2.0 / (g * g) - 1.0;
  const double rho2 = rho_ * rho_;

  // Along x- = 0 the log density is 2c log(1 - x^2/(4 rho^2)) + x^2/2, which
  // peaks at x^2 = 4(rho^2 - c) when that is positive.
  const double peak = 2.0 * std::sqrt(std::max(0.0, rho2 - exponent_));
  log_peak_ = 0.0;
  log_peak_ = shifted_log(peak, 0.0);
  const double level = -kWindowDrop;

  auto along_plus = [&](double xp) { return shifted_log(xp, 0.0); };
  x_plus_half_ = edge(along_plus, peak, 2.0 * rho_, level);

  // The x- profile is widest somewhere on the ridge; sample a few rows.
  x_minus_half_ = 0.0;
  for (double xp : {0.0, 0.5 * peak, peak, 0.5 * (peak + x_plus_half_)}) {
    if (shifted_log(xp, 0.0) < level) continue;
    auto across = [&](double xm) { return shifted_log(xp, xm); };
    x_minus_half_ = std::max(x_minus_half_, edge(across, 0.0, 2.0 * rho_ - xp, level));
  }
  if (!(x_plus_half_ > 0.0) || !(x_minus_half_ > 0.0)) {
    throw Error(ErrorKind::EmptySupport, "positive-P window collapsed");
  }

  x_plus_ = symmetric_nodes(x_plus_half_, intervals);
  x_minus_ = symmetric_nodes(x_minus_half_, intervals);
  w_plus_ = simpson_weights(x_plus_half_, intervals);
  w_minus_ = simpson_weights(x_minus_half_, intervals);

  const int n = intervals + 1;
  weights_.resize(n, n);
  std::vector<double> rows(n);
  std::vector<double> row(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      weights_(i, j) = std::exp(shifted_log(x_plus_(i), x_minus_(j)));
      row[j] = w_minus_(j) * weights_(i, j);
    }
    rows[i] = w_plus_(i) * pairwise_sum(row);
  }
  mass_ = pairwise_sum(rows);
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) {
    throw Error(ErrorKind::EmptySupport, "positive-P density vanishes on the grid");
  }
  // d alpha d alpha+ = d x+ d x- / 2.
  log_norm_ = 2.0 * exponent_ * std::log(rho2) + log_peak_ + std::log(0.5 * mass_);
}

double PositivePField::shifted_log(double x_plus, double x_minus) const {
  const double a = 0.5 * (x_plus + x_minus);
  const double ap = 0.5 * (x_plus - x_minus);
  const double rho2 = rho_ * rho_;
  const double u = a * a / rho2;
  const double v = ap * ap / rho2;
  if (!(u < 1.0) || !(v < 1.0)) return kNegInf;
  return exponent_ * (std::log1p(-u) + std::log1p(-v)) + 2.0 * a * ap - log_peak_;
}

double PositivePField::log_density(double alpha, double alpha_plus) const {
  return dopo::log_density(alpha, alpha_plus, sigma_, g_) - log_norm_;
}

double PositivePField::normal_ordered_moment(int m, int n) const {
  if (m < 0 || n < 0) {
    throw Error(ErrorKind::InvalidParameter, "moment orders must be >= 0");
  }
  const int size = intervals_ + 1;
  std::vector<double> rows(size);
  std::vector<double> row(size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double a = 0.5 * (x_plus_(i) + x_minus_(j));
      const double ap = 0.5 * (x_plus_(i) - x_minus_(j));
      row[j] = w_minus_(j) * weights_(i, j) * std::pow(ap, m) * std::pow(a, n);
    }
    rows[i] = w_plus_(i) * pairwise_sum(row);
  }
  const double value = pairwise_sum(rows) / mass_;
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::Numerical, "positive-P moment is not finite");
  }
  return value;
}

double PositivePField::axis_integral(MarginalAxis over, double fixed) const {
  const bool minus = over == MarginalAxis::XMinus;
  const Eigen::VectorXd& nodes = minus ? x_minus_ : x_plus_;
  const Eigen::VectorXd& w = minus ? w_minus_ : w_plus_;
  std::vector<double> terms(nodes.size());
  for (Eigen::Index k = 0; k < nodes.size(); ++k) {
    const double value =
        minus ? shifted_log(fixed, nodes(k)) : shifted_log(nodes(k), fixed);
    terms[k] = w(k) * std::exp(value);
  }
  return pairwise_sum(terms);
}

MarginalCurve PositivePField::marginal(MarginalAxis axis,
                                       std::span<const double> grid) const {
  MarginalCurve c;
  c.axis = axis;
  c.source = MarginalSource::Exact;
  c.grid.assign(grid.begin(), grid.end());
  c.density.resize(grid.size());
  const MarginalAxis over =
      axis == MarginalAxis::XPlus ? MarginalAxis::XMinus : MarginalAxis::XPlus;
  bool any = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    c.density[i] = axis_integral(over, grid[i]) / mass_;
    any = any || c.density[i] > 0.0;
  }
  if (!any) {
    throw Error(ErrorKind::EmptySupport, "exact marginal is zero on the whole grid");
  }
  return c;
}

MarginalCurve marginal_curves(double sigma, double g, MarginalAxis axis,
                              std::span<const double> grid) {
  return PositivePField(sigma, g).marginal(axis, grid);
}

double normal_ordered_moment(double sigma, double g, int m, int n) {
  return PositivePField(sigma, g).normal_ordered_moment(m, n);
}

MarginalCurve gaussian_marginal_curves(const SteadyStateSolution& sol,
                                       MarginalAxis axis,
                                       std::span<const double> grid) {
  MarginalCurve c;
  c.axis = axis;
  c.grid.assign(grid.begin(), grid.end());
  c.density.resize(grid.size());
  const double g = sol.params.g;
  if (axis == MarginalAxis::XPlus) {
    const double variance = sol.variances.vx - 1.0;
    if (!(variance > 0.0)) {
      throw Error(ErrorKind::DegenerateMarginal, "Vx <= 1: x+ marginal is delta-like");
    }
    if (sol.branch == Branch::Below) {
      c.source = MarginalSource::GaussBelow;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        c.density[i] = normal_pdf(grid[i], 0.0, variance);
      }
    } else {
      c.source = MarginalSource::GaussAboveMixture;
      const double mean = 2.0 * std::sqrt(sol.mean_field.signal_intensity()) / g;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        c.density[i] = 0.5 * (normal_pdf(grid[i], mean, variance) +
                              normal_pdf(grid[i], -mean, variance));
      }
    }
  } else {
    const double variance = 1.0 - sol.variances.vy;
    if (!(variance > 0.0)) {
      throw Error(ErrorKind::DegenerateMarginal, "Vy >= 1: x- marginal is delta-like");
    }
    c.source = sol.branch == Branch::Below ? MarginalSource::GaussBelow
                                           : MarginalSource::GaussAboveMixture;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      c.density[i] = normal_pdf(grid[i], 0.0, variance);
    }
  }
  return c;
}

MarginalComparison compare_marginals(const MarginalCurve& exact,
                                     const MarginalCurve& ansatz) {
  if (exact.grid != ansatz.grid || exact.grid.size() < 2 ||
      exact.density.size() != exact.grid.size() ||
      ansatz.density.size() != ansatz.grid.size()) {
    throw Error(ErrorKind::GridMismatch, "marginals are on different grids");
  }
  std::vector<double> diff(exact.grid.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = std::abs(exact.density[i] - ansatz.density[i]);
  }
  MarginalComparison out;
  out.l1_distance = trapezoid(exact.grid, diff);
  out.variance_ratio = curve_moments(exact).variance / curve_moments(ansatz).variance;
  return out;
}

int count_modes(const MarginalCurve& curve) {
  const std::vector<double>& d = curve.density;
  if (d.size() < 3) return 0;
  const double floor = 1e-3 * *std::max_element(d.begin(), d.end());
  int modes = 0;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (d[i] > d[i - 1] && d[i] > d[i + 1] && d[i] > floor) ++modes;
  }
  return modes;
}

double curve_integral(const MarginalCurve& curve) {
  return trapezoid(curve.grid, curve.density);
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) {
    throw Error(ErrorKind::InvalidParameter, "grid needs >= 2 points and hi > lo");
  }
  std::vector<double> x(points);
  for (int i = 0; i < points; ++i) {
    x[i] = lo + (hi - lo) * i / (points - 1);
  }
  return x;
}

std::vector<double> default_marginal_grid(const SteadyStateSolution& sol,
                                          MarginalAxis axis, int points) {
  double half = 0.0;
  if (axis == MarginalAxis::XPlus) {
    const double sd = std::sqrt(std::max(sol.variances.vx - 1.0, 0.0));
    const double mean = sol.branch == Branch::Below
                            ? 0.0
                            : 2.0 * std::sqrt(sol.mean_field.signal_intensity()) / sol.params.g;
    half = mean + 6.0 * sd;
  } else {
    half = 6.0 * std::sqrt(std::max(1.0 - sol.variances.vy, 0.0));
  }
  if (!(half > 0.0)) {
    throw Error(ErrorKind::DegenerateMarginal, "overlay has zero width");
  }
  std::vector<double> x = linear_grid(-half, half, points);
  for (int i = 0; i < points / 2; ++i) x[points - 1 - i] = -x[i];
  if (points % 2 == 1) x[points / 2] = 0.0;
  return x;
}

void write_marginal_csv(std::ostream& os, const NormalizedParams& params,
                        const MarginalCurve& exact, const MarginalCurve* below,
                        const MarginalCurve* above) {
  for (const MarginalCurve* c : {below, above}) {
    if (c && c->grid != exact.grid) {
      throw Error(ErrorKind::GridMismatch, "overlay grid differs from exact grid");
    }
  }
  write_params_header(os, "positive-p", params,
                      "axis=" + std::string(to_string(exact.axis)));
  os << "x,exact,gauss_below,gauss_above\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < exact.grid.size(); ++i) {
    os << format_number(exact.grid[i]) << ',' << format_number(exact.density[i]) << ','
       << format_number(below ? below->density[i] : nan) << ','
       << format_number(above ? above->density[i] : nan) << '\n';
  }
}

}  // namespace dopo
