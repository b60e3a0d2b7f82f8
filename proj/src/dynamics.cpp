#include "dopo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dopo/error.hpp"
#include "dopo/io.hpp"
#include "dopo/solver.hpp"

namespace dopo {
namespace {

constexpr double kStiffKappa = 50.0;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

class DormandPrince {
 public:
  DormandPrince(const GaussianState& s0, const NormalizedParams& params,
                const IntegratorOptions& opts)
      : params_(params), opts_(opts), y_(pack(s0)), t_(s0.tau) {
    h_ = opts.initial_step;
    max_step_ = opts.max_step;
    if (params.kappa >= kStiffKappa) {
      h_ *= 0.5;
      max_step_ = std::min(max_step_, 0.1 / params.kappa);
    }
    h_ = std::min(h_, max_step_);
    k1_ = evolution_rhs(y_, params_);
  }

  double tau() const { return t_; }
  const StateVector& y() const { return y_; }
  const StateVector& rate() const { return k1_; }
  long steps() const { return steps_; }
  long rejected() const { return rejected_; }

  // One accepted step, never passing t_end.
  void step(double t_end) {
    for (;;) {
      bool clipped = false;
      double h = std::min(h_, max_step_);
      if (t_ + h >= t_end) {
        h = t_end - t_;
        clipped = true;
      }
      if (h <= 1e-14 * std::max(1.0, std::abs(t_))) {
        throw Error(ErrorKind::Stiffness, "step size underflow at tau=" +
                                              format_number(t_));
      }
      if (steps_ + rejected_ >= opts_.max_steps) {
        throw Error(ErrorKind::Numerical, "integrator step budget exhausted");
      }

      const StateVector k2 = f(y_ + h * a21 * k1_);
      const StateVector k3 = f(y_ + h * (a31 * k1_ + a32 * k2));
      const StateVector k4 = f(y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3));
      const StateVector k5 =
          f(y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
      const StateVector k6 =
          f(y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const StateVector y_new =
          y_ + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const StateVector k7 = f(y_new);
      const StateVector err =
          h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double sum = 0.0;
      for (int i = 0; i < err.size(); ++i) {
        const double scale = opts_.atol + opts_.rtol * std::max(std::abs(y_(i)),
                                                                std::abs(y_new(i)));
        const double r = err(i) / scale;
        sum += r * r;
      }
      const double norm = std::sqrt(sum / err.size());
      if (!std::isfinite(norm)) {
        throw Error(ErrorKind::Numerical, "non-finite integrator error estimate");
      }

      const double factor =
          norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      if (norm <= 1.0) {
        t_ = clipped ? t_end : t_ + h;
        y_ = y_new;
        k1_ = k7;
        ++steps_;
        // A clipped step says nothing about the natural step size.
        if (!clipped || factor < 1.0) h_ = h * factor;
        return;
      }
      ++rejected_;
      h_ = h * std::min(factor, 1.0);
    }
  }

 private:
  StateVector f(const StateVector& y) const { return evolution_rhs(y, params_); }

  NormalizedParams params_;
  IntegratorOptions opts_;
  StateVector y_;
  StateVector k1_;
  double t_ = 0.0;
  double h_ = 0.0;
  double max_step_ = 0.0;
  long steps_ = 0;
  long rejected_ = 0;
};

}  // namespace

StateVector pack(const GaussianState& s) {
  StateVector y;
  y(0) = s.mean_field.beta_p.real();
  y(1) = s.mean_field.beta_p.imag();
  y(2) = s.mean_field.beta_s.real();
  y(3) = s.mean_field.beta_s.imag();
  y.tail<10>() = to_real_dof(s.moments);
  return y;
}

GaussianState unpack(const StateVector& y, double tau) {
  GaussianState s;
  s.mean_field.beta_p = {y(0), y(1)};
  s.mean_field.beta_s = {y(2), y(3)};
  s.moments = from_real_dof(y.tail<10>());
  s.tau = tau;
  return s;
}

GaussianRates evolution_rhs(const GaussianState& s,
                            const NormalizedParams& params) {
  const double k = params.kappa;
  const double g2 = params.g * params.g;
  const complex bp = s.mean_field.beta_p;
  const complex bs = s.mean_field.beta_s;
  const complex bpc = std::conj(bp);
  const complex bsc = std::conj(bs);
  const SecondMoments& m = s.moments;

  GaussianRates r;
  r.beta_p = k * (params.sigma - bp - 0.5 * bs * bs - 0.5 * m.css);
  r.beta_s = -bs + bp * bsc + m.xps;

  // Independent rows of M m + n.
  r.moments.cpp = -2.0 * k * m.cpp - 2.0 * k * bs * m.cps;
  r.moments.npp = -2.0 * k * m.npp - 2.0 * k * (bsc * m.xps).real();
  r.moments.cps = bsc * m.cpp - (1.0 + k) * m.cps + bp * m.xps - k * bs * m.css;
  r.moments.xps = bs * m.npp + bpc * m.cps - (1.0 + k) * m.xps - k * bs * m.nss;
  r.moments.css = 2.0 * bsc * m.cps - 2.0 * m.css + 2.0 * bp * m.nss + g2 * bp;
  r.moments.nss =
      2.0 * (bsc * m.xps).real() + 2.0 * (bpc * m.css).real() - 2.0 * m.nss;
  return r;
}

StateVector evolution_rhs(const StateVector& y, const NormalizedParams& params) {
  const GaussianRates r = evolution_rhs(unpack(y), params);
  StateVector out;
  out(0) = r.beta_p.real();
  out(1) = r.beta_p.imag();
  out(2) = r.beta_s.real();
  out(3) = r.beta_s.imag();
  out.tail<10>() = to_real_dof(r.moments);
  return out;
}

StateJacobian coupled_jacobian(const GaussianState& s,
                               const NormalizedParams& params) {
  const StateVector y = pack(s);
  StateJacobian J;
  for (int i = 0; i < 14; ++i) {
    const double h = 1e-3 * std::max(1.0, std::abs(y(i)));
    StateVector up = y;
    StateVector down = y;
    up(i) += h;
    down(i) -= h;
    J.col(i) = (evolution_rhs(up, params) - evolution_rhs(down, params)) / (2 * h);
  }
  return J;
}

double coupled_max_re_eig(const GaussianState& s,
                          const NormalizedParams& params) {
  Eigen::EigenSolver<StateJacobian> solver(coupled_jacobian(s, params), false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "eigenvalue solver failed on Jacobian");
  }
  return solver.eigenvalues().real().maxCoeff();
}

GaussianState vacuum_state() { return GaussianState{}; }

GaussianState seeded_state(Branch basin, double seed) {
  GaussianState s;
  if (basin == Branch::AbovePlus) s.mean_field.beta_s = seed;
  if (basin == Branch::AboveMinus) s.mean_field.beta_s = -seed;
  return s;
}

QuadratureVariances state_variances(const GaussianState& s, double g) {
  return variances_from_moments(s.moments, g);
}

IntegrationResult integrate_to_steady_state(const GaussianState& s0,
                                            const NormalizedParams& params,
                                            double t_max, double tol,
                                            const IntegratorOptions& opts) {
  params.validate();
  if (!(t_max > 0.0) || !(tol > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "t_max and tol must be > 0");
  }
  DormandPrince stepper(s0, params, opts);
  const double t_end = s0.tau + t_max;
  ConvergenceReport report;
  for (;;) {
    report.rhs_norm = stepper.rate().lpNorm<Eigen::Infinity>();
    if (report.rhs_norm < tol) {
      report.converged = true;
      break;
    }
    if (stepper.tau() >= t_end) break;
    stepper.step(t_end);
  }
  report.tau = stepper.tau();
  report.steps = stepper.steps();
  report.rejected_steps = stepper.rejected();

  IntegrationResult result{unpack(stepper.y(), stepper.tau()), report};
  try {
    for (const SteadyStateSolution& sol : solve_branches(params)) {
      GaussianState fixed{sol.mean_field, sol.moments, 0.0};
      const double d = (pack(fixed) - stepper.y()).lpNorm<Eigen::Infinity>();
      if (d < result.report.distance) {
        result.report.distance = d;
        result.report.nearest_branch = sol.branch;
      }
    }
  } catch (const Error&) {
    // No reference fixed point; the report just stays without one.
  }
  return result;
}

std::vector<GaussianState> integrate_trajectory(
    const GaussianState& s0, const NormalizedParams& params,
    std::span<const double> sample_times, const IntegratorOptions& opts) {
  params.validate();
  if (!std::is_sorted(sample_times.begin(), sample_times.end()) ||
      (!sample_times.empty() && sample_times.front() < s0.tau)) {
    throw Error(ErrorKind::InvalidParameter,
                "sample times must be ascending and start at or after tau0");
  }
  DormandPrince stepper(s0, params, opts);
  std::vector<GaussianState> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    while (stepper.tau() < t) stepper.step(t);
    out.push_back(unpack(stepper.y(), stepper.tau()));
  }
  return out;
}

void write_trajectory_csv(std::ostream& os,
                          const std::vector<GaussianState>& trajectory,
                          const NormalizedParams& params) {
  write_params_header(os, "gaussian-dynamics", params);
  os << "tau,re_beta_p,im_beta_p,re_beta_s,im_beta_s,re_cpp,im_cpp,npp,re_cps,"
        "im_cps,re_xps,im_xps,re_css,im_css,nss,Vx,Vy\n";
  for (const GaussianState& s : trajectory) {
    const StateVector y = pack(s);
    const QuadratureVariances v = state_variances(s, params.g);
    os << format_number(s.tau);
    for (int i = 0; i < y.size(); ++i) os << ',' << format_number(y(i));
    os << ',' << format_number(v.vx) << ',' << format_number(v.vy) << '\n';
  }
}

}  // namespace dopo
