// Mean-field (noiseless) steady states of the scaled Langevin equations
//   0 = -a + conj(a) b,   0 = -b - a^2 + eps.

#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include "dpo/params.hpp"

namespace dpo {

enum class Branch { BelowThreshold, AboveThresholdPlus, AboveThresholdMinus };

std::string_view to_string(Branch b);

struct MeanFieldState {
  std::complex<double> alpha;  ///< scaled photon amplitude
  std::complex<double> beta;   ///< scaled phonon amplitude
  Branch branch = Branch::BelowThreshold;
};

/// (0, eps) always; (+-sqrt(eps-1), 1) in addition when eps > 1.
std::vector<MeanFieldState> fixed_points(double eps);

/// Euclidean norm of the deterministic right-hand side at `state`.
double qle_residual(const MeanFieldState& state, double eps);

/// The branch the system settles on: below threshold for eps <= 1,
/// otherwise the positive above-threshold branch (its mirror is equivalent).
MeanFieldState physical_branch(double eps);

/// Unscaled amplitudes (alpha, beta) for a scaled state.
MeanFieldState to_unscaled(const MeanFieldState& state, const ScaledParams& s);

}  // namespace dpo
