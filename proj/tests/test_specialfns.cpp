#include <doctest.h>
#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpo/specialfns.hpp"

using namespace dpo;

namespace {

// Exact rational value of the terminating sum for rational x.
mpq_class exact_hyp(int k, const mpq_class& x) {
  mpq_class term = 1, sum = 1;
  for (int j = 0; j < k; ++j) {
    term *= mpq_class(j - k) * (x + j) * 2;
    term /= (2 * x + j) * (j + 1);
    sum += term;
  }
  return sum;
}

double rel_err(double got, const mpq_class& want) {
  const double w = want.get_d();
  if (w == 0.0) return std::abs(got);
  return std::abs(got - w) / std::abs(w);
}

const double kXs[] = {0.125, 12.5, 50.0};

mpq_class as_rational(double x) {
  mpq_class q(x);  // exact for these binary fractions
  q.canonicalize();
  return q;
}

}  // namespace

TEST_CASE("small k") {
  for (double x : kXs) {
    CHECK(hyp2f1_terminating(0, x) == 1.0);
    CHECK(std::abs(hyp2f1_terminating(1, x)) <= 1e-12);
    CHECK(hyp2f1_terminating(2, x) == doctest::Approx(1.0 / (2.0 * x + 1.0)).epsilon(1e-12));
  }
  CHECK(hyp2f1_terminating(2, 12.5) == doctest::Approx(1.0 / 26.0).epsilon(1e-12));
}

TEST_CASE("agreement with the exact rational sum for k <= 60") {
  for (double x : kXs) {
    const mpq_class q = as_rational(x);
    for (int k = 0; k <= 60; ++k) {
      const mpq_class want = exact_hyp(k, q);
      const double got = hyp2f1_terminating(k, x);
      INFO("x=" << x << " k=" << k);
      if (k % 2)
        CHECK(want == 0);
      CHECK(rel_err(got, want) <= 1e-10);
    }
  }
}

TEST_CASE("odd k vanish up to 99") {
  for (double x : kXs) {
    const HypTable t(x, 100);
    for (int k = 1; k <= 99; k += 2) {
      const double scale = std::max({std::abs(t.value(k - 1)), std::abs(t.value(k + 1)), 1.0});
      CHECK(std::abs(t.value(k)) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("even k match the Pochhammer ratio (1/2)_m / (x + 1/2)_m") {
  for (double x : kXs) {
    const HypTable t(x, 400);
    long double log_ratio = 0.0L;
    for (int m = 0; 2 * m <= 400; ++m) {
      if (m > 0) log_ratio += std::log((m - 0.5L) / (x + m - 0.5L));
      const auto& h = t[2 * m];
      CHECK(h.sign == 1);
      CHECK(std::abs(h.log_abs - log_ratio) <= 1e-12L * std::max(1.0L, std::abs(log_ratio)));
    }
  }
}

TEST_CASE("table and cache") {
  const HypTable t(12.5, 20);
  CHECK(t.k_max() == 20);
  CHECK(t.value(0) == 1.0);
  CHECK_THROWS(t[21]);
  const auto a = shared_hyp_table(12.5, 20);
  const auto b = shared_hyp_table(12.5, 20);
  CHECK(a.get() == b.get());
  CHECK(a->value(2) == t.value(2));
  CHECK_THROWS_AS(hyp2f1_terminating(501, 12.5), HypOverflow);
  CHECK_NOTHROW(hyp2f1_terminating(501, 12.5, 600));
}
