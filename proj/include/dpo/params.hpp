// Parameter sets for the electromechanical degenerate parametric oscillator.
//
// All rates (kappa, gamma_m, g, drive, omega_lc) are angular frequencies in
// one common unit; nothing in the library inserts factors of 2*pi.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace dpo {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Unscaled rates of the photon (LC) mode and the phonon (mechanical) mode.
struct PhysicalParams {
  double kappa = 1.0;    ///< photonic decay rate
  double gamma_m = 1.0;  ///< phononic decay rate
  double g = 0.1;        ///< single-photon coupling rate
  double drive = 0.0;    ///< mechanical drive amplitude E
  double nbar_b = 0.0;   ///< thermal phonon occupation

  /// Throws ParameterError when an invariant is violated.
  void validate() const;
};

/// Geometry of the LC circuit with a vibrating capacitor plate.
struct CircuitGeometry {
  double omega_lc = 1.0;
  double x_zpf = 0.0;
  double d0 = 1.0;

  void validate() const;
  /// True when x_zpf/d0 is large enough that C(x) = C0 d0/(d0+x) is a poor model.
  bool large_displacement() const { return x_zpf / d0 > 0.1; }
};

/// Dimensionless parameterization. Only three of the four entries are
/// independent: x = 2 * gamma_ratio * y.
struct ScaledParams {
  double x = 1.0;            ///< kappa*Gamma/(8 g^2)
  double y = 1.0;            ///< kappa^2/(16 g^2)
  double gamma_ratio = 1.0;  ///< Gamma/kappa
  double eps = 0.0;          ///< E/E_c

  void validate() const;
};

/// g = omega_lc * x_zpf / (4 d0).
double coupling_from_circuit(const CircuitGeometry& geom);

/// Threshold drive E_c = kappa*Gamma/(8 g).
double critical_drive(const PhysicalParams& p);

ScaledParams scale(const PhysicalParams& p);

/// Inverse of scale() anchored at the photonic decay rate kappa. nbar_b is
/// not part of the scaled set and is passed through.
PhysicalParams unscale(const ScaledParams& s, double kappa, double nbar_b = 0.0);

/// Field amplitudes: a = sqrt(x) * a_scaled, b = sqrt(y) * b_scaled.
inline std::complex<double> unscale_photon(std::complex<double> scaled, const ScaledParams& s) {
  return std::sqrt(s.x) * scaled;
}
inline std::complex<double> scale_photon(std::complex<double> a, const ScaledParams& s) {
  return a / std::sqrt(s.x);
}
inline std::complex<double> unscale_phonon(std::complex<double> scaled, const ScaledParams& s) {
  return std::sqrt(s.y) * scaled;
}
inline std::complex<double> scale_phonon(std::complex<double> b, const ScaledParams& s) {
  return b / std::sqrt(s.y);
}

/// Normally ordered second moments <a^dag a>, <a^2> scale by x.
inline double unscale_second_moment(double scaled, const ScaledParams& s) { return s.x * scaled; }
inline double scale_second_moment(double unscaled, const ScaledParams& s) { return unscaled / s.x; }

}  // namespace dpo
