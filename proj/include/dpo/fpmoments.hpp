// Steady-state photonic moments from the complex-P Fokker-Planck solution
//
//   P_ss ~ [(eps - a1^2)(eps - a2^2)]^(x-1) exp(2 x a1 a2),
//
// expanded as
//
//   S(n,m) = sum_k (2x)^k / k! * eps^(k + (n+m)/2) * F(-(k+m)) F(-(k+n)),
//   <a~^dag^n a~^m> = S(n,m) / S(0,0),
//
// with F(-j) = 2F1(-j, x; 2x; 2). Only terms with k = m (mod 2) survive, so
// for even n+m every eps exponent is an integer. Odd n+m moments vanish by
// the a -> -a symmetry of P_ss.

#pragma once

#include <memory>
#include <stdexcept>

#include "dpo/specialfns.hpp"

namespace dpo {

inline constexpr double kDefaultSeriesTol = 1e-12;

struct SeriesNotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MomentResult {
  double value = 0.0;      ///< normalized moment
  int k_used = 0;          ///< last series index summed
  double trunc_err = 0.0;  ///< relative tail estimate of the numerator series
};

struct MomentSet {
  double n_phot = 0.0;   ///< scaled <a~^dag a~>
  double a_sq = 0.0;     ///< scaled <a~^2>
  double beta_ss = 0.0;  ///< eps - <a~^2>
  double var_x = 1.0;    ///< unscaled <X^2>
  double var_y = 1.0;    ///< unscaled <Y^2>
  double var_x_scaled = 0.0;
  double var_y_scaled = 0.0;
  double norm = 1.0;       ///< S(0,0), the normalization used
  double log_norm = 0.0;   ///< log S(0,0); S(0,0) itself may overflow a double
  int k_used = 0;
  double trunc_err = 0.0;
};

struct SeriesOptions {
  double tol = kDefaultSeriesTol;
  int k_max = kDefaultHypKMax;
  int stop_run = 5;  ///< consecutive small surviving terms before stopping
};

/// Series sum S(n,m) in log form (log|S|, sign) with convergence data.
struct SeriesSum {
  long double log_abs = 0.0L;
  int sign = 0;
  int k_used = 0;
  double trunc_err = 0.0;
};

SeriesSum moment_series(const HypTable& table, int n, int m, double eps, const SeriesOptions& opt = {});

/// Normalized <a~^dag^n a~^m>, using a caller-supplied table.
MomentResult moment(const HypTable& table, int n, int m, double eps, const SeriesOptions& opt = {});

/// Normalized <a~^dag^n a~^m>; the hypergeometric table comes from the shared cache.
MomentResult moment(int n, int m, double eps, double x, double tol = kDefaultSeriesTol);

MomentSet observables(double eps, double x, const SeriesOptions& opt = {});

}  // namespace dpo
