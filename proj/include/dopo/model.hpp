#pragma once

#include <complex>
#include <string_view>
#include <vector>

namespace dopo {

using complex = std::complex<double>;

/// Cavity parameters in physical units. The injection phase is the
/// reference phase, so the injection amplitude is real.
struct PhysicalParams {
  double pump_injection = 0.0;  // E_p
  double nonlinearity = 0.0;    // chi
  double pump_decay = 0.0;      // gamma_p, 1/time
  double signal_decay = 0.0;    // gamma_s, 1/time
};

/// Dimensionless parameters. Time is measured in units of 1/gamma_s.
struct NormalizedParams {
  double sigma = 0.0;  // injection, threshold at 1
  double kappa = 1.0;  // gamma_p / gamma_s
  double g = 0.01;     // chi / sqrt(gamma_p gamma_s)

  /// Throws ErrorKind::InvalidParameter unless sigma >= 0, kappa > 0, g > 0.
  void validate() const;
};

/// Mean-field amplitudes of the normalized modes b_p = sqrt(kappa) g a_p and
/// b_s = g a_s.
struct MeanField {
  complex beta_p{0.0, 0.0};
  complex beta_s{0.0, 0.0};

  double pump_intensity() const { return std::norm(beta_p); }
  double signal_intensity() const { return std::norm(beta_s); }
  double pump_phase() const { return std::arg(beta_p); }
  double signal_phase() const { return std::arg(beta_s); }
};

enum class Branch { Below, AbovePlus, AboveMinus };

std::string_view to_string(Branch branch);
Branch branch_from_string(std::string_view name);

struct ClassicalSolution {
  Branch branch = Branch::Below;
  MeanField mean_field;
  bool stable = true;
  // True only at sigma == 1, where the three branches coincide.
  bool critical = false;
};

/// Normalized second moments of the fluctuations, in b units. The complex
/// conjugates that complete the 10-component moment vector are implied.
struct SecondMoments {
  complex cpp{};   // <db_p db_p>
  double npp = 0;  // <db_p^+ db_p>
  complex cps{};   // <db_p db_s>
  complex xps{};   // <db_p db_s^+>
  complex css{};   // <db_s db_s>
  double nss = 0;  // <db_s^+ db_s>
};

struct PhotonNumbers {
  double signal = 0.0;             // <a_s^+ a_s>
  double pump = 0.0;               // <a_p^+ a_p>
  double signal_normalized = 0.0;  // g^2 <a_s^+ a_s>
};

NormalizedParams normalize_params(const PhysicalParams& p);

/// Classical (coherent mean-field) steady states. Always contains the Below
/// branch; for sigma > 1 also AbovePlus and AboveMinus.
std::vector<ClassicalSolution> classical_steady_state(double sigma);

PhotonNumbers to_photon_numbers(const MeanField& mf, const SecondMoments& m,
                                const NormalizedParams& params);

}  // namespace dopo
