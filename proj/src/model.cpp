#include "dopo/model.hpp"

#include <cmath>
#include <string>

#include "dopo/error.hpp"

namespace dopo {

void NormalizedParams::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::InvalidParameter, "sigma must be finite and >= 0");
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorKind::InvalidParameter, "kappa must be finite and > 0");
  }
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw Error(ErrorKind::InvalidParameter, "g must be finite and > 0");
  }
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Below: return "below";
    case Branch::AbovePlus: return "above-plus";
    case Branch::AboveMinus: return "above-minus";
  }
  return "unknown";
}

Branch branch_from_string(std::string_view name) {
  if (name == "below") return Branch::Below;
  if (name == "above-plus") return Branch::AbovePlus;
  if (name == "above-minus") return Branch::AboveMinus;
  throw Error(ErrorKind::InvalidParameter,
              "unknown branch '" + std::string(name) + "'");
}

NormalizedParams normalize_params(const PhysicalParams& p) {
  if (!(p.pump_decay > 0.0) || !(p.signal_decay > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "decay rates must be > 0");
  }
  if (!(p.nonlinearity > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "nonlinearity must be > 0");
  }
  if (!(p.pump_injection >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "pump injection must be >= 0");
  }
  const double rate_product = p.pump_decay * p.signal_decay;
  NormalizedParams out;
  out.sigma = p.pump_injection * p.nonlinearity / rate_product;
  out.kappa = p.pump_decay / p.signal_decay;
  out.g = p.nonlinearity / std::sqrt(rate_product);
  return out;
}

std::vector<ClassicalSolution> classical_steady_state(double sigma) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "sigma must be >= 0");
  }
  std::vector<ClassicalSolution> out;
  ClassicalSolution below;
  below.branch = Branch::Below;
  below.mean_field.beta_p = sigma;
  below.stable = sigma <= 1.0;
  below.critical = sigma == 1.0;
  out.push_back(below);

  if (sigma > 1.0) {
    const double amplitude = std::sqrt(2.0 * (sigma - 1.0));
    for (Branch b : {Branch::AbovePlus, Branch::AboveMinus}) {
      ClassicalSolution above;
      above.branch = b;
      above.mean_field.beta_p = 1.0;
      above.mean_field.beta_s = b == Branch::AbovePlus ? amplitude : -amplitude;
      above.stable = true;
      out.push_back(above);
    }
  }
  return out;
}

PhotonNumbers to_photon_numbers(const MeanField& mf, const SecondMoments& m,
                                const NormalizedParams& params) {
  params.validate();
  const double g2 = params.g * params.g;
  PhotonNumbers out;
  out.signal_normalized = mf.signal_intensity() + m.nss;
  out.signal = out.signal_normalized / g2;
  out.pump = (mf.pump_intensity() + m.npp) / (params.kappa * g2);
  if (out.signal < 0.0 || out.pump < 0.0) {
    throw Error(ErrorKind::UnphysicalSolution, "negative photon number");
  }
  return out;
}

}  // namespace dopo
