#include "dpo/fpmoments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpo/params.hpp"

namespace dpo {

namespace {

void check_indices(int n, int m) {
  if (n < 0 || m < 0) throw ParameterError("moment indices must be >= 0");
}

void check_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be finite and >= 0");
}

}  // namespace

SeriesSum moment_series(const HypTable& table, int n, int m, double eps, const SeriesOptions& opt) {
  check_indices(n, m);
  check_eps(eps);
  if (!(opt.tol > 0.0)) throw ParameterError("series tolerance must be > 0");

  SeriesSum out;
  out.log_abs = -std::numeric_limits<long double>::infinity();
  if ((n + m) % 2 != 0) return out;

  const int half = (n + m) / 2;
  if (eps == 0.0) {
    // Only k = 0 with n = m = 0 carries eps^0.
    if (n == 0 && m == 0) {
      out.log_abs = 0.0L;
      out.sign = 1;
    }
    return out;
  }

  const int k_limit = std::min(opt.k_max, table.k_max() - std::max(n, m));
  if (k_limit < 0) throw HypOverflow("moment_series: hypergeometric table too short");

  const long double log_2x = std::log(2.0L * table.x());
  const long double log_eps = std::log(static_cast<long double>(eps));

  // Sum sign * exp(log_t - scale) with a running scale; every surviving
  // term is also checked against the partial sum for the stopping rule.
  long double scale = -std::numeric_limits<long double>::infinity();
  long double acc = 0.0L;
  long double prev_log_t = 0.0L;
  long double last_log_t = -std::numeric_limits<long double>::infinity();
  int small_run = 0;
  bool converged = false;
  int k = m % 2;
  int last_k = k;
  for (; k <= k_limit; k += 2) {
    const HypValue& fm = table[k + m];
    const HypValue& fn = table[k + n];
    last_k = k;
    const int sign = fm.sign * fn.sign;
    if (sign == 0) {
      if (++small_run >= opt.stop_run && acc != 0.0L) {
        converged = true;
        break;
      }
      continue;
    }
    const long double log_t = k * log_2x - std::lgamma(static_cast<long double>(k) + 1.0L) +
                              (k + half) * log_eps + fm.log_abs + fn.log_abs;
    if (log_t > scale) {
      acc *= std::exp(scale - log_t);
      scale = log_t;
    }
    acc += sign * std::exp(log_t - scale);
    prev_log_t = last_log_t;
    last_log_t = log_t;

    const long double rel = std::exp(log_t - scale) / std::abs(acc);
    small_run = rel < opt.tol ? small_run + 1 : 0;
    if (small_run >= opt.stop_run) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "moment series (n=" << n << ", m=" << m << ") did not converge within k_max=" << k_limit
        << " at eps=" << eps << ", x=" << table.x();
    throw SeriesNotConverged(msg.str());
  }

  out.sign = acc > 0 ? 1 : (acc < 0 ? -1 : 0);
  out.log_abs = scale + std::log(std::abs(acc));
  out.k_used = last_k;
  // Geometric tail from the ratio of the last two surviving terms.
  const long double last_rel = std::exp(last_log_t - out.log_abs);
  const long double ratio = std::exp(last_log_t - prev_log_t);
  out.trunc_err = static_cast<double>(ratio < 1.0L ? last_rel * ratio / (1.0L - ratio) : last_rel);
  return out;
}

MomentResult moment(const HypTable& table, int n, int m, double eps, const SeriesOptions& opt) {
  check_indices(n, m);
  check_eps(eps);
  MomentResult r;
  if ((n + m) % 2 != 0) return r;  // exact zero by parity
  const SeriesSum num = moment_series(table, n, m, eps, opt);
  const SeriesSum den = moment_series(table, 0, 0, eps, opt);
  if (den.sign <= 0) throw SeriesNotConverged("moment: normalization S(0,0) is not positive");
  r.value = num.sign == 0 ? 0.0 : num.sign * static_cast<double>(std::exp(num.log_abs - den.log_abs));
  r.k_used = std::max(num.k_used, den.k_used);
  r.trunc_err = std::max(num.trunc_err, den.trunc_err);
  return r;
}

MomentResult moment(int n, int m, double eps, double x, double tol) {
  check_indices(n, m);
  SeriesOptions opt;
  opt.tol = tol;
  const auto table = shared_hyp_table(x, opt.k_max + std::max(n, m));
  return moment(*table, n, m, eps, opt);
}

MomentSet observables(double eps, double x, const SeriesOptions& opt) {
  check_eps(eps);
  if (!(x > 0.0)) throw ParameterError("x must be > 0");
  const auto table = shared_hyp_table(x, opt.k_max + 2);

  const SeriesSum den = moment_series(*table, 0, 0, eps, opt);
  const MomentResult n11 = moment(*table, 1, 1, eps, opt);
  const MomentResult n02 = moment(*table, 0, 2, eps, opt);

  MomentSet s;
  s.n_phot = n11.value;
  s.a_sq = n02.value;
  s.beta_ss = eps - s.a_sq;
  const double n_unscaled = x * s.n_phot;
  const double a2_unscaled = x * s.a_sq;
  s.var_x = 1.0 + 2.0 * n_unscaled + 2.0 * a2_unscaled;
  s.var_y = 1.0 + 2.0 * n_unscaled - 2.0 * a2_unscaled;
  s.var_x_scaled = s.var_x / x;
  s.var_y_scaled = s.var_y / x;
  s.log_norm = static_cast<double>(den.log_abs);
  s.norm = std::exp(s.log_norm);
  s.k_used = std::max(n11.k_used, n02.k_used);
  s.trunc_err = std::max(n11.trunc_err, n02.trunc_err);
  return s;
}

}  // namespace dpo
