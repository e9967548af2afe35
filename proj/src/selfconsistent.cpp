#include "dpo/selfconsistent.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "dpo/params.hpp"

namespace dpo {

namespace {

void check_inputs(double eps, double x) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be finite and >= 0");
  if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("x must be finite and > 0");
}

}  // namespace

double selfconsistency_residual(double beta, double eps, double x) {
  const double one_minus_sq = (1.0 - beta) * (1.0 + beta);
  return beta - eps + beta / (2.0 * x * one_minus_sq);
}

double solve_beta(double eps, double x) {
  check_inputs(eps, x);
  if (eps == 0.0) return 0.0;

  // The residual is strictly increasing on [0, 1): -eps at 0, +inf at 1.
  double lo = 0.0;
  double hi = std::nextafter(1.0, 0.0);
  if (!(selfconsistency_residual(hi, eps, x) > 0.0)) {
    std::ostringstream msg;
    msg << "no self-consistent root in [0,1) for eps=" << eps << ", x=" << x;
    throw RootNotFound(msg.str());
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (selfconsistency_residual(mid, eps, x) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  const double beta =
      std::abs(selfconsistency_residual(lo, eps, x)) <= std::abs(selfconsistency_residual(hi, eps, x)) ? lo : hi;
  if (!(beta >= 0.0 && beta < 1.0)) throw RootNotFound("bisection left [0,1)");
  return beta;
}

std::optional<double> beta_radical(double eps, double x) {
  check_inputs(eps, x);
  using cd = std::complex<double>;
  const double aleph = eps * eps + 3.0 / (2.0 * x) + 3.0;
  const double beth = eps * eps + 9.0 / (4.0 * x) - 9.0;
  const cd disc = std::sqrt(cd(aleph * aleph * aleph - eps * eps * beth * beth, 0.0));
  const cd root = std::pow(cd(eps * beth, 0.0) + cd(0.0, 1.0) * disc, 1.0 / 3.0);
  if (std::abs(root) == 0.0) return std::nullopt;
  const cd sqrt3i(0.0, std::sqrt(3.0));
  const cd beta = eps / 3.0 - (1.0 - sqrt3i) * aleph / (6.0 * root) - (1.0 + sqrt3i) * root / 6.0;
  if (std::abs(beta.imag()) > 1e-9 * std::max(1.0, std::abs(beta))) return std::nullopt;
  return beta.real();
}

LinearizedMoments moments(double beta, double x) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("moments: beta must lie in [0, 1)");
  if (!(x > 0.0)) throw ParameterError("x must be > 0");
  const double denom = 2.0 * x * (1.0 - beta) * (1.0 + beta);
  const double a_sq = beta / denom;
  return {beta * a_sq, a_sq};
}

QuadratureVariances quadrature_variances(double beta, double x) {
  const auto m = moments(beta, x);
  const double n = x * m.n_phot;
  const double a2 = x * m.a_sq;
  return {1.0 + 2.0 * n + 2.0 * a2, 1.0 + 2.0 * n - 2.0 * a2};
}

SelfConsistentSolution solve_selfconsistent(double eps, double x) {
  SelfConsistentSolution s;
  s.beta_ss = solve_beta(eps, x);
  const auto m = moments(s.beta_ss, x);
  s.n_phot = m.n_phot;
  s.a_sq = m.a_sq;
  const auto v = quadrature_variances(s.beta_ss, x);
  s.var_x = v.var_x;
  s.var_y = v.var_y;
  s.var_x_scaled = v.var_x / x;
  s.var_y_scaled = v.var_y / x;
  return s;
}

}  // namespace dpo
