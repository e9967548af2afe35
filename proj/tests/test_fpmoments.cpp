#include <doctest.h>
#include <gmpxx.h>

#include <cmath>
#include <vector>

#include "dpo/fpmoments.hpp"
#include "dpo/selfconsistent.hpp"

using namespace dpo;
using doctest::Approx;

namespace {

// Exact S(n, m) for rational x and eps (n + m even), summed until the terms
// are negligible. F(-j) uses the even/odd closed form checked against the
// plain sum in the hypergeometric tests.
struct ExactSeries {
  mpq_class x, eps;
  std::vector<mpq_class> f;

  ExactSeries(const mpq_class& x_, const mpq_class& eps_, int k_max) : x(x_), eps(eps_), f(k_max + 3) {
    mpq_class even = 1;
    for (int j = 0; j < static_cast<int>(f.size()); ++j) {
      if (j % 2) {
        f[j] = 0;
      } else {
        if (j > 0) even *= mpq_class(2 * (j / 2) - 1, 2) / (x + mpq_class(2 * (j / 2) - 1, 2));
        f[j] = even;
      }
    }
  }

  mpq_class sum(int n, int m) const {
    mpq_class total = 0, weight = 1, eps_pow = 1;
    for (int i = 0; i < (n + m) / 2; ++i) eps_pow *= eps;
    const int k_max = static_cast<int>(f.size()) - 3;
    for (int k = 0; k <= k_max; ++k) {
      if (k > 0) {
        weight *= 2 * x / k;
        eps_pow *= eps;
      }
      if ((k + m) % 2) continue;
      total += weight * eps_pow * f[k + m] * f[k + n];
    }
    return total;
  }
};

mpq_class rat(double v) {
  mpq_class q(v);
  q.canonicalize();
  return q;
}

}  // namespace

TEST_CASE("moments agree with the exact rational series") {
  struct Case {
    double x, eps;
    int k_max;
  };
  const Case cases[] = {{0.125, 0.5, 80}, {0.125, 2.0, 80}, {12.5, 0.5, 120}, {12.5, 1.0, 160},
                        {12.5, 1.5, 200}, {12.5, 2.0, 220}, {12.5, 3.0, 260}, {50.0, 2.0, 420}};
  for (const auto& c : cases) {
    INFO("x=" << c.x << " eps=" << c.eps);
    const ExactSeries s(rat(c.x), rat(c.eps), c.k_max);
    const mpq_class s00 = s.sum(0, 0);
    const double n_exact = mpq_class(s.sum(1, 1) / s00).get_d();
    const double a_exact = mpq_class(s.sum(0, 2) / s00).get_d();
    const MomentSet m = observables(c.eps, c.x);
    CHECK(m.n_phot == Approx(n_exact).epsilon(1e-10));
    CHECK(m.a_sq == Approx(a_exact).epsilon(1e-10));
    CHECK(m.trunc_err < 1e-8);
    CHECK(moment(2, 2, c.eps, c.x).value ==
          Approx(mpq_class(s.sum(2, 2) / s00).get_d()).epsilon(1e-9));
  }
}

TEST_CASE("trivial and parity values") {
  CHECK(moment(1, 1, 0.0, 12.5).value == 0.0);
  CHECK(moment(0, 0, 1.3, 12.5).value == 1.0);
  for (double eps : {0.0, 0.5, 2.0}) {
    CHECK(moment(0, 1, eps, 12.5).value == 0.0);
    CHECK(moment(1, 0, eps, 12.5).value == 0.0);
    CHECK(moment(2, 1, eps, 12.5).value == 0.0);
  }
  const MomentSet z = observables(0.0, 12.5);
  CHECK(z.n_phot == 0.0);
  CHECK(z.beta_ss == 0.0);
  CHECK(z.var_x == 1.0);
  CHECK(z.var_y == 1.0);
}

TEST_CASE("Hermiticity of the moment table") {
  for (double eps : {0.3, 1.0, 2.2})
    for (int n = 0; n <= 3; ++n)
      for (int m = 0; m <= 3; ++m) CHECK(moment(n, m, eps, 12.5).value == moment(m, n, eps, 12.5).value);
}

TEST_CASE("derived quantities") {
  for (double eps : {0.25, 0.9, 1.3, 2.75}) {
    const MomentSet s = observables(eps, 12.5);
    CHECK(s.n_phot >= 0.0);
    CHECK(s.beta_ss == eps - s.a_sq);
    CHECK(s.var_x == Approx(1.0 + 25.0 * (s.n_phot + s.a_sq)).epsilon(1e-14));
    CHECK(s.var_y == Approx(1.0 + 25.0 * (s.n_phot - s.a_sq)).epsilon(1e-14));
    CHECK(s.var_x > 0.0);
    CHECK(s.var_y > 0.0);
  }
}

TEST_CASE("large-x limit approaches the semiclassical photon number") {
  CHECK(std::abs(observables(0.25, 50.0).n_phot) <= 0.05);
  CHECK(std::abs(observables(2.5, 50.0).n_phot - 1.5) <= 0.05);
  CHECK(moment(1, 1, 2.0, 50.0).value == Approx(1.0).epsilon(0.05));
}

TEST_CASE("agreement with the linearized solution away from threshold") {
  for (double eps : {0.25, 2.75}) {
    const double fp = observables(eps, 12.5).n_phot;
    const double sc = solve_selfconsistent(eps, 12.5).n_phot;
    CHECK(std::abs(fp - sc) <= 0.02 * std::abs(sc));
  }
}

TEST_CASE("undershoot and overshoot just above threshold") {
  bool under = false, over = false;
  for (int i = 1; i <= 100; ++i) {
    const double eps = 1.0 + 0.01 * i;
    const MomentSet s = observables(eps, 12.5);
    under = under || s.n_phot < eps - 1.0;
    over = over || s.beta_ss > 1.0;
  }
  CHECK(under);
  CHECK(over);
}

TEST_CASE("series errors") {
  SeriesOptions opt;
  opt.k_max = 10;
  CHECK_THROWS_AS(observables(3.0, 50.0, opt), SeriesNotConverged);
  CHECK_THROWS(observables(-0.5, 12.5));
  CHECK_THROWS(observables(0.5, 0.0));
}
