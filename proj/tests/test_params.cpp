#include <doctest.h>

#include <cmath>

#include "dpo/params.hpp"

using namespace dpo;
using doctest::Approx;

TEST_CASE("coupling from circuit geometry") {
  CHECK(coupling_from_circuit({1.0, 0.0, 1.0}) == 0.0);
  CHECK(coupling_from_circuit({1.0, 4.0, 1.0}) == Approx(1.0).epsilon(1e-15));
  CHECK(coupling_from_circuit({2.0, 1.0, 2.0}) == Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(coupling_from_circuit({1.0, 1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(coupling_from_circuit({1.0, -1.0, 1.0}), ParameterError);
}

TEST_CASE("large displacement is flagged, not rejected") {
  const CircuitGeometry big{1.0, 0.5, 1.0};
  CHECK_NOTHROW(big.validate());
  CHECK(big.large_displacement());
  CHECK_FALSE(CircuitGeometry{1.0, 0.05, 1.0}.large_displacement());
}

TEST_CASE("critical drive") {
  CHECK(critical_drive({1.0, 1.0, 0.1, 0.0, 0.0}) == Approx(1.25).epsilon(1e-15));
  CHECK(critical_drive({8.0, 1.0, 1.0, 0.0, 0.0}) == Approx(1.0).epsilon(1e-15));
  CHECK(critical_drive({1.0, 0.01, 0.1, 0.0, 0.0}) == Approx(0.0125).epsilon(1e-14));
}

TEST_CASE("scaling at the reference parameters") {
  const ScaledParams s = scale({1.0, 1.0, 0.1, 1.25, 0.0});
  CHECK(s.x == Approx(12.5).epsilon(1e-14));
  CHECK(s.y == Approx(6.25).epsilon(1e-14));
  CHECK(s.gamma_ratio == Approx(1.0).epsilon(1e-15));
  CHECK(s.eps == Approx(1.0).epsilon(1e-14));

  const ScaledParams z = scale({1.0, 1.0, 0.1, 0.0, 0.0});
  CHECK(z.eps == 0.0);
  CHECK(z.x == Approx(12.5).epsilon(1e-14));

  const ScaledParams d = scale({100.0, 1.0, 1.0, 3.0, 0.0});
  CHECK(d.x == Approx(12.5).epsilon(1e-14));
  CHECK(d.y == Approx(625.0).epsilon(1e-14));
  CHECK(d.gamma_ratio == Approx(0.01).epsilon(1e-14));
}

TEST_CASE("round trip physical -> scaled -> physical") {
  const PhysicalParams cases[] = {
      {1.0, 1.0, 0.1, 1.25, 0.0},
      {100.0, 1.0, 1.0, 0.7, 2.0},
      {3.0, 0.02, 0.004, 11.0, 0.5},
  };
  for (const auto& p : cases) {
    const PhysicalParams q = unscale(scale(p), p.kappa, p.nbar_b);
    CHECK(std::abs(q.kappa - p.kappa) <= 1e-12 * p.kappa);
    CHECK(std::abs(q.gamma_m - p.gamma_m) <= 1e-12 * p.gamma_m);
    CHECK(std::abs(q.g - p.g) <= 1e-12 * p.g);
    CHECK(std::abs(q.drive - p.drive) <= 1e-12 * p.drive);
    CHECK(q.nbar_b == p.nbar_b);
  }
}

TEST_CASE("scale o unscale is the identity on consistent scaled sets") {
  const ScaledParams s{12.5, 6.25, 1.0, 1.7};
  const ScaledParams t = scale(unscale(s, 2.0));
  CHECK(std::abs(t.x - s.x) <= 1e-12 * s.x);
  CHECK(std::abs(t.y - s.y) <= 1e-12 * s.y);
  CHECK(std::abs(t.gamma_ratio - s.gamma_ratio) <= 1e-12);
  CHECK(std::abs(t.eps - s.eps) <= 1e-12 * s.eps);
}

TEST_CASE("unscale rejects sets that violate x = 2 gamma y") {
  CHECK_THROWS_AS(unscale({12.5, 6.0, 1.0, 1.0}, 1.0), ParameterError);
  CHECK_THROWS_AS(unscale({12.5, 6.25, 1.0, 1.0}, 0.0), ParameterError);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(PhysicalParams({0.0, 1.0, 0.1, 0.0, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS(PhysicalParams({1.0, -1.0, 0.1, 0.0, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS(PhysicalParams({1.0, 1.0, 0.0, 0.0, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS(PhysicalParams({1.0, 1.0, 0.1, -1.0, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS(PhysicalParams({1.0, 1.0, 0.1, 0.0, -0.1}).validate(), ParameterError);
  CHECK_THROWS_AS(PhysicalParams({1.0, 1.0, NAN, 0.0, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS(ScaledParams({12.5, 6.25, 1.0, -0.5}).validate(), ParameterError);
  CHECK_THROWS_AS(ScaledParams({0.0, 6.25, 1.0, 0.5}).validate(), ParameterError);
}

TEST_CASE("amplitude and moment conversions are inverse") {
  const ScaledParams s{12.5, 6.25, 1.0, 2.0};
  const std::complex<double> a(0.3, -1.1);
  CHECK(std::abs(scale_photon(unscale_photon(a, s), s) - a) <= 1e-15);
  CHECK(std::abs(unscale_photon(a, s) - std::sqrt(12.5) * a) <= 1e-14);
  CHECK(std::abs(unscale_phonon(a, s) - 2.5 * a) <= 1e-14);
  CHECK(std::abs(scale_phonon(unscale_phonon(a, s), s) - a) <= 1e-15);
  CHECK(scale_second_moment(unscale_second_moment(0.977, s), s) == Approx(0.977).epsilon(1e-15));
  CHECK(unscale_second_moment(0.5, s) == Approx(6.25).epsilon(1e-15));
}
