#include "dpo/semiclassical.hpp"

#include <cmath>

namespace dpo {

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::BelowThreshold: return "below";
    case Branch::AboveThresholdPlus: return "above+";
    case Branch::AboveThresholdMinus: return "above-";
  }
  return "?";
}

std::vector<MeanFieldState> fixed_points(double eps) {
  if (!(eps >= 0.0)) throw ParameterError("eps must be >= 0");
  std::vector<MeanFieldState> out;
  out.push_back({0.0, eps, Branch::BelowThreshold});
  // At eps == 1 the bifurcating pair coincides with the trivial solution.
  if (eps > 1.0) {
    const double amp = std::sqrt(eps - 1.0);
    out.push_back({amp, 1.0, Branch::AboveThresholdPlus});
    out.push_back({-amp, 1.0, Branch::AboveThresholdMinus});
  }
  return out;
}

double qle_residual(const MeanFieldState& state, double eps) {
  const auto a = state.alpha;
  const auto b = state.beta;
  const auto da = -a + std::conj(a) * b;
  const auto db = -b - a * a + eps;
  return std::sqrt(std::norm(da) + std::norm(db));
}

MeanFieldState physical_branch(double eps) {
  const auto points = fixed_points(eps);
  return points.size() > 1 ? points[1] : points[0];
}

MeanFieldState to_unscaled(const MeanFieldState& state, const ScaledParams& s) {
  return {unscale_photon(state.alpha, s), unscale_phonon(state.beta, s), state.branch};
}

}  // namespace dpo
