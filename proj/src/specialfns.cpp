#include "dpo/specialfns.hpp"

#include <mpfr.h>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>

#include "dpo/params.hpp"

namespace dpo {

namespace {

class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

struct SeriesResult {
  long exp_sum = 0;      // binary exponent of the signed sum
  long exp_abs = 0;      // binary exponent of the sum of |terms|
  bool zero = false;
  double value = 0.0;
  long double log_abs = 0.0L;
  int sign = 0;
};

SeriesResult sum_series(int k, double x, mpfr_prec_t prec) {
  Mpfr sum(prec), abs_sum(prec), term(prec), tmp(prec), a(prec), c(prec);
  mpfr_set_ui(sum.get(), 0, MPFR_RNDN);
  mpfr_set_ui(abs_sum.get(), 0, MPFR_RNDN);
  mpfr_set_ui(term.get(), 1, MPFR_RNDN);

  for (int j = 0; j <= k; ++j) {
    mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
    mpfr_abs(tmp.get(), term.get(), MPFR_RNDN);
    mpfr_add(abs_sum.get(), abs_sum.get(), tmp.get(), MPFR_RNDN);
    if (j == k) break;
    // term *= 2 (j - k)(x + j) / ((2x + j)(j + 1))
    mpfr_set_d(a.get(), x, MPFR_RNDN);
    mpfr_add_si(a.get(), a.get(), j, MPFR_RNDN);
    mpfr_mul(term.get(), term.get(), a.get(), MPFR_RNDN);
    mpfr_mul_si(term.get(), term.get(), 2L * (j - k), MPFR_RNDN);
    mpfr_set_d(c.get(), 2.0 * x, MPFR_RNDN);
    mpfr_add_si(c.get(), c.get(), j, MPFR_RNDN);
    mpfr_mul_si(c.get(), c.get(), j + 1, MPFR_RNDN);
    mpfr_div(term.get(), term.get(), c.get(), MPFR_RNDN);
  }

  SeriesResult r;
  r.exp_abs = mpfr_get_exp(abs_sum.get());
  if (mpfr_zero_p(sum.get())) {
    r.zero = true;
    r.log_abs = -std::numeric_limits<long double>::infinity();
    return r;
  }
  r.exp_sum = mpfr_get_exp(sum.get());
  r.value = mpfr_get_d(sum.get(), MPFR_RNDN);
  r.sign = mpfr_sgn(sum.get()) > 0 ? 1 : -1;
  mpfr_abs(tmp.get(), sum.get(), MPFR_RNDN);
  mpfr_log(tmp.get(), tmp.get(), MPFR_RNDN);
  r.log_abs = mpfr_get_ld(tmp.get(), MPFR_RNDN);
  return r;
}

constexpr mpfr_prec_t kGuardBits = 64;
constexpr mpfr_prec_t kMaxPrecision = 1 << 16;
constexpr int kMaxPasses = 4;

}  // namespace

HypValue hyp2f1_terminating_full(int k, double x, int k_max) {
  if (k < 0) throw ParameterError("hyp2f1_terminating: k must be >= 0");
  if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("hyp2f1_terminating: x must be > 0");
  if (k > k_max) {
    std::ostringstream msg;
    msg << "hyp2f1_terminating: k=" << k << " exceeds configured k_max=" << k_max;
    throw HypOverflow(msg.str());
  }

  // Partial sums are bounded by 3^k; start with enough bits to absorb that.
  const auto log2_k = static_cast<mpfr_prec_t>(std::ceil(std::log2(k + 1.0)));
  mpfr_prec_t prec = 2 * kGuardBits + static_cast<mpfr_prec_t>(std::ceil(k * std::log2(3.0)));
  SeriesResult r;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    r = sum_series(k, x, prec);
    if (r.zero) break;
    // Bits lost to cancellation; the result is good when the remaining
    // precision still covers kGuardBits.
    const mpfr_prec_t lost = std::max<long>(0, r.exp_abs - r.exp_sum);
    const mpfr_prec_t needed = lost + kGuardBits + log2_k;
    if (needed <= prec) break;
    prec = std::min(kMaxPrecision, needed + kGuardBits);
  }

  HypValue out;
  out.value = r.zero ? 0.0 : r.value;
  out.log_abs = r.log_abs;
  out.sign = r.zero ? 0 : r.sign;
  out.precision_bits = static_cast<int>(prec);
  return out;
}

HypTable::HypTable(double x, int k_max) : x_(x) {
  if (k_max < 0) throw ParameterError("HypTable: k_max must be >= 0");
  entries_.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) entries_.push_back(hyp2f1_terminating_full(k, x, k_max));
}

std::shared_ptr<const HypTable> shared_hyp_table(double x, int k_max) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const HypTable>> cache;
  const auto key = std::make_pair(x, k_max);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<const HypTable>(x, k_max);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(table)).first->second;
}

}  // namespace dpo
