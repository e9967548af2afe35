#include "dpo/params.hpp"

#include <cmath>
#include <sstream>

namespace dpo {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(what);
}

bool finite_all(std::initializer_list<double> v) {
  for (double d : v)
    if (!std::isfinite(d)) return false;
  return true;
}

}  // namespace

void PhysicalParams::validate() const {
  require(finite_all({kappa, gamma_m, g, drive, nbar_b}), "physical parameters must be finite");
  require(kappa > 0.0, "kappa must be > 0");
  require(gamma_m > 0.0, "gamma must be > 0");
  require(g > 0.0, "g must be > 0");
  require(drive >= 0.0, "drive must be >= 0");
  require(nbar_b >= 0.0, "nbar_b must be >= 0");
}

void CircuitGeometry::validate() const {
  require(finite_all({omega_lc, x_zpf, d0}), "circuit geometry must be finite");
  require(omega_lc > 0.0, "omega_lc must be > 0");
  require(x_zpf >= 0.0, "x_zpf must be >= 0");
  require(d0 > 0.0, "d0 must be > 0");
}

void ScaledParams::validate() const {
  require(finite_all({x, y, gamma_ratio, eps}), "scaled parameters must be finite");
  require(x > 0.0, "x must be > 0");
  require(y > 0.0, "y must be > 0");
  require(gamma_ratio > 0.0, "gamma_ratio must be > 0");
  require(eps >= 0.0, "eps must be >= 0");
}

double coupling_from_circuit(const CircuitGeometry& geom) {
  geom.validate();
  return geom.omega_lc * geom.x_zpf / (4.0 * geom.d0);
}

double critical_drive(const PhysicalParams& p) {
  p.validate();
  return p.kappa * p.gamma_m / (8.0 * p.g);
}

ScaledParams scale(const PhysicalParams& p) {
  p.validate();
  ScaledParams s;
  s.x = p.kappa * p.gamma_m / (8.0 * p.g * p.g);
  s.y = p.kappa * p.kappa / (16.0 * p.g * p.g);
  s.gamma_ratio = p.gamma_m / p.kappa;
  s.eps = p.drive / critical_drive(p);
  return s;
}

PhysicalParams unscale(const ScaledParams& s, double kappa, double nbar_b) {
  s.validate();
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ParameterError("anchor kappa must be > 0");
  const double implied_x = 2.0 * s.gamma_ratio * s.y;
  if (std::abs(implied_x - s.x) > 1e-10 * s.x) {
    std::ostringstream msg;
    msg << "inconsistent scaled parameters: x=" << s.x << " but 2*gamma_ratio*y=" << implied_x;
    throw ParameterError(msg.str());
  }
  PhysicalParams p;
  p.kappa = kappa;
  p.gamma_m = s.gamma_ratio * kappa;
  p.g = kappa / (4.0 * std::sqrt(s.y));
  p.drive = s.eps * p.kappa * p.gamma_m / (8.0 * p.g);
  p.nbar_b = nbar_b;
  p.validate();
  return p;
}

}  // namespace dpo
