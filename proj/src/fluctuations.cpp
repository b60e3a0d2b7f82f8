#include "dopo/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dopo/error.hpp"

namespace dopo {
namespace {

constexpr double kSingularDeterminant = 1e-12;
constexpr double kUncertaintySlack = 1e-9;
constexpr double kNegativeMomentSlack = 1e-14;

// Complex slot k of the moment vector and the real degrees of freedom that
// make it up: (real index, imaginary index or -1, conjugated).
struct Slot {
  int re;
  int im;
  bool conjugate;
};

constexpr std::array<Slot, 10> kSlots{{
    {0, 1, false},   // cpp
    {0, 1, true},    // cpp*
    {2, -1, false},  // npp
    {3, 4, false},   // cps
    {3, 4, true},    // cps*
    {5, 6, false},   // xps
    {5, 6, true},    // xps*
    {7, 8, false},   // css
    {7, 8, true},    // css*
    {9, -1, false},  // nss
}};

// Rows of the complex system that carry independent real equations.
constexpr std::array<int, 6> kIndependentRows{0, 2, 3, 5, 7, 9};

bool near_zero(double value, double scale) {
  return std::abs(value) <= 1e-14 * std::max(1.0, std::abs(scale));
}

}  // namespace

StabilityMatrix build_stability_matrix(const MeanField& mf, double kappa) {
  const complex bp = mf.beta_p;
  const complex bs = mf.beta_s;
  StabilityMatrix L = StabilityMatrix::Zero();
  L(0, 0) = -kappa;
  L(0, 2) = -kappa * bs;
  L(1, 1) = -kappa;
  L(1, 3) = -kappa * std::conj(bs);
  L(2, 0) = std::conj(bs);
  L(2, 2) = -1.0;
  L(2, 3) = bp;
  L(3, 1) = bs;
  L(3, 2) = std::conj(bp);
  L(3, 3) = -1.0;
  return L;
}

StabilityEigenvalues stability_eigenvalues(const StabilityMatrix& L) {
  Eigen::ComplexEigenSolver<StabilityMatrix> solver(L, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "eigenvalue solver failed on L");
  }
  StabilityEigenvalues out;
  for (int i = 0; i < 4; ++i) out[i] = solver.eigenvalues()(i);
  std::sort(out.begin(), out.end(), [](const complex& a, const complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

MomentSystem build_moment_system(const MeanField& mf,
                                 const NormalizedParams& params) {
  const double k = params.kappa;
  const complex bp = mf.beta_p;
  const complex bs = mf.beta_s;
  const complex bpc = std::conj(bp);
  const complex bsc = std::conj(bs);

  MomentSystem sys;
  MomentMatrix& M = sys.matrix;
  M.setZero();
  M(0, 0) = -2.0 * k;
  M(0, 3) = -2.0 * k * bs;

  M(1, 1) = -2.0 * k;
  M(1, 4) = -2.0 * k * bsc;

  M(2, 2) = -2.0 * k;
  M(2, 5) = -k * bsc;
  M(2, 6) = -k * bs;

  M(3, 0) = bsc;
  M(3, 3) = -(1.0 + k);
  M(3, 5) = bp;
  M(3, 7) = -k * bs;

  M(4, 1) = bs;
  M(4, 4) = -(1.0 + k);
  M(4, 6) = bpc;
  M(4, 8) = -k * bsc;

  // Conjugate partner of row 6, so (5, 3) carries bp* and not bp.
  M(5, 2) = bs;
  M(5, 3) = bpc;
  M(5, 5) = -(1.0 + k);
  M(5, 9) = -k * bs;

  M(6, 2) = bsc;
  M(6, 4) = bp;
  M(6, 6) = -(1.0 + k);
  M(6, 9) = -k * bsc;

  M(7, 3) = 2.0 * bsc;
  M(7, 7) = -2.0;
  M(7, 9) = 2.0 * bp;

  // Conjugate partner of row 7, so (8, 4) carries bs and not bs*.
  M(8, 4) = 2.0 * bs;
  M(8, 8) = -2.0;
  M(8, 9) = 2.0 * bpc;

  M(9, 5) = bsc;
  M(9, 6) = bs;
  M(9, 7) = bpc;
  M(9, 8) = bp;
  M(9, 9) = -2.0;

  const double g2 = params.g * params.g;
  sys.drive.setZero();
  sys.drive(7) = g2 * bp;
  sys.drive(8) = g2 * bpc;
  return sys;
}

MomentVector to_moment_vector(const SecondMoments& m) {
  MomentVector v;
  v << m.cpp, std::conj(m.cpp), m.npp, m.cps, std::conj(m.cps), m.xps,
      std::conj(m.xps), m.css, std::conj(m.css), m.nss;
  return v;
}

SecondMoments from_moment_vector(const MomentVector& v) {
  SecondMoments m;
  m.cpp = v(0);
  m.npp = v(2).real();
  m.cps = v(3);
  m.xps = v(5);
  m.css = v(7);
  m.nss = v(9).real();
  return m;
}

RealMomentVector to_real_dof(const SecondMoments& m) {
  RealMomentVector r;
  r << m.cpp.real(), m.cpp.imag(), m.npp, m.cps.real(), m.cps.imag(),
      m.xps.real(), m.xps.imag(), m.css.real(), m.css.imag(), m.nss;
  return r;
}

SecondMoments from_real_dof(const RealMomentVector& r) {
  SecondMoments m;
  m.cpp = {r(0), r(1)};
  m.npp = r(2);
  m.cps = {r(3), r(4)};
  m.xps = {r(5), r(6)};
  m.css = {r(7), r(8)};
  m.nss = r(9);
  return m;
}

RealMomentSystem to_real_system(const MomentSystem& sys) {
  // T maps the real degrees of freedom onto the complex moment vector.
  MomentMatrix T = MomentMatrix::Zero();
  for (int k = 0; k < 10; ++k) {
    const Slot& s = kSlots[k];
    T(k, s.re) = 1.0;
    if (s.im >= 0) T(k, s.im) = s.conjugate ? complex(0, -1) : complex(0, 1);
  }
  const MomentMatrix MT = sys.matrix * T;

  RealMomentSystem out;
  int row = 0;
  for (int k : kIndependentRows) {
    out.matrix.row(row) = MT.row(k).real();
    out.drive(row) = sys.drive(k).real();
    ++row;
    if (kSlots[k].im >= 0) {
      out.matrix.row(row) = MT.row(k).imag();
      out.drive(row) = sys.drive(k).imag();
      ++row;
    }
  }
  return out;
}

double normalized_determinant(const RealMomentMatrix& a) {
  double column_product = 1.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double norm = a.col(j).norm();
    if (norm == 0.0) return 0.0;
    column_product *= norm;
  }
  return std::abs(a.partialPivLu().determinant()) / column_product;
}

SecondMoments solve_steady_moments(const MomentSystem& sys) {
  const RealMomentSystem real = to_real_system(sys);
  if (normalized_determinant(real.matrix) < kSingularDeterminant) {
    throw Error(ErrorKind::CriticalPointSingularity,
                "moment matrix is singular at critical point");
  }
  const RealMomentVector r = real.matrix.fullPivLu().solve(-real.drive);
  if (!r.allFinite()) {
    throw Error(ErrorKind::Numerical, "non-finite moment solution");
  }
  return from_real_dof(r);
}

PairMoments closed_form_pair_moments(const MeanField& mf,
                                     const NormalizedParams& params) {
  const double k = params.kappa;
  const double g2 = params.g * params.g;
  const double ip = mf.pump_intensity();
  const double is = mf.signal_intensity();
  const double pump_gap = ip - (1.0 + k) * (1.0 + k);
  const double signal_gap = ip - (1.0 + is) * (1.0 + is);
  if (near_zero(pump_gap, ip) || near_zero(signal_gap, ip)) {
    throw Error(ErrorKind::CriticalPointSingularity,
                "closed-form moments diverge: vanishing denominator");
  }
  const double denominator = 2.0 * pump_gap * signal_gap;
  PairMoments out;
  out.css = -g2 * mf.beta_p * (ip - (1.0 + k) * (1.0 + is) * (1.0 + k + is)) /
            denominator;
  out.xps = -g2 * k * mf.beta_s * ip * (2.0 + k + is) / denominator;
  return out;
}

QuadratureVariances signal_quadrature_variances(double pump_intensity,
                                                double signal_intensity,
                                                double kappa) {
  if (!(pump_intensity >= 0.0) || !(signal_intensity >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "intensities must be >= 0");
  }
  const double x = std::sqrt(pump_intensity);
  const double u = 1.0 + signal_intensity;
  const double signal_gap = u - x;
  const double pump_gap = 1.0 + kappa - x;
  if (near_zero(signal_gap, u) || near_zero(pump_gap, 1.0 + kappa)) {
    throw Error(ErrorKind::CriticalPointSingularity,
                "quadrature variance diverges at critical point");
  }
  QuadratureVariances v;
  v.vx = ((1.0 + kappa) * u - x) / (signal_gap * pump_gap);
  v.vy = ((1.0 + kappa) * u + x) / ((u + x) * (1.0 + kappa + x));
  return v;
}

QuadratureVariances variances_from_moments(const SecondMoments& m, double g) {
  const double g2 = g * g;
  QuadratureVariances v;
  v.vx = 1.0 + 2.0 * (m.nss + m.css.real()) / g2;
  v.vy = 1.0 + 2.0 * (m.nss - m.css.real()) / g2;
  return v;
}

PhysicalityReport physicality_check(const MeanField& mf, const SecondMoments& m,
                                    const QuadratureVariances& v,
                                    const StabilityEigenvalues& eigs) {
  PhysicalityReport report;
  auto fail = [&report](std::string reason) {
    report.pass = false;
    report.reasons.push_back(std::move(reason));
  };

  const double ip = mf.pump_intensity();
  const double is = mf.signal_intensity();
  if (!std::isfinite(ip) || !std::isfinite(is)) {
    fail("non-finite mean-field intensity");
  }
  if (m.npp < -kNegativeMomentSlack || m.nss < -kNegativeMomentSlack ||
      !std::isfinite(m.npp) || !std::isfinite(m.nss)) {
    fail("negative photon number");
  }
  if (!(v.vx > 0.0) || !(v.vy > 0.0)) {
    fail("non-positive quadrature variance");
  } else if (v.product() < 1.0 - kUncertaintySlack) {
    std::ostringstream os;
    os << "uncertainty violation: Vx*Vy = " << v.product();
    fail(os.str());
  }
  if (!(max_real_part(eigs) < 0.0)) {
    fail("linear stability matrix has eigenvalue with Re >= 0");
  }
  return report;
}

}  // namespace dopo
