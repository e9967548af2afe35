// Self-consistently linearized steady state.
//
// The phonon amplitude is pinned by
//   beta = eps - beta / (2 x (1 - beta^2)),
// and the linearized photon field then gives
//   <a^dag a> = beta <a^2> = beta^2 / (2 x (1 - beta^2))   (scaled units).

#pragma once

#include <optional>
#include <stdexcept>

namespace dpo {

struct SelfConsistentSolution {
  double beta_ss = 0.0;  ///< scaled phonon amplitude, in [0, 1)
  double n_phot = 0.0;   ///< scaled <a^dag a>
  double a_sq = 0.0;     ///< scaled <a^2>
  double var_x = 1.0;    ///< unscaled <X^2>, X = a^dag + a
  double var_y = 1.0;    ///< unscaled <Y^2>, Y = i(a^dag - a)
  double var_x_scaled = 0.0;  ///< var_x / x, i.e. the variance of a~^dag + a~
  double var_y_scaled = 0.0;
};

struct RootNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Residual beta - eps + beta/(2x(1-beta^2)) of the self-consistency relation.
double selfconsistency_residual(double beta, double eps, double x);

/// Unique root of the self-consistency relation in [0, 1), by bisection.
double solve_beta(double eps, double x);

/// The printed radical (Cardano) expression. Returns nullopt when the
/// principal-branch evaluation leaves a non-negligible imaginary part.
std::optional<double> beta_radical(double eps, double x);

struct LinearizedMoments {
  double n_phot = 0.0;
  double a_sq = 0.0;
};

/// Throws std::domain_error unless 0 <= beta < 1.
LinearizedMoments moments(double beta, double x);

struct QuadratureVariances {
  double var_x = 1.0;
  double var_y = 1.0;
};

/// Unscaled quadrature variances for zero mean field.
QuadratureVariances quadrature_variances(double beta, double x);

SelfConsistentSolution solve_selfconsistent(double eps, double x);

}  // namespace dpo
