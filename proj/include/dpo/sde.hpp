// Ito integration of the complex-P stochastic equations.
//
// Full mode integrates (a1, a2, b1, b2) in the phonon time tau = Gamma t / 2:
//
//   da_1 = (a_2 b_1 - a_1)/gamma dtau + sqrt(b_1/(gamma x)) dW_1
//   db_1 = (eps - a_1^2 - b_1) dtau   + [sqrt(D_B) dW_B]_1,
//   D_B  = [[0, 2 nbar/y], [2 nbar/y, 0]],
//
// and symmetrically for index 2. Reduced mode substitutes b_i = eps - a_i^2
// and runs in the photon time s = tau/gamma, which makes it independent of
// gamma. Diffusion coefficients are those of the Fokker-Planck equation
// whose stationary solution the moment series expands; complex square roots
// use the principal branch.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpo/params.hpp"

namespace dpo {

enum class SdeMode { Full, Reduced };

struct SdeConfig {
  SdeMode mode = SdeMode::Reduced;
  ScaledParams scaled;  ///< x, y, gamma_ratio, eps
  double nbar_b = 0.0;
  double dt = 1e-3;     ///< step; photon time for Reduced, phonon time for Full
  double t_burn = 20.0;
  double t_total = 120.0;
  int n_traj = 1000;
  std::uint64_t seed = 0x5eedULL;
  double divergence_radius = 50.0;

  /// Throws ParameterError. Full mode requires dt <= gamma_ratio/50.
  void validate() const;
};

struct SdeState {
  std::complex<double> a1, a2, b1, b2;
};

/// One Euler-Maruyama step of the full equations; `z` holds four
/// independent standard normals (photon 1, photon 2, phonon 1, phonon 2).
SdeState step_full(const SdeState& s, const SdeConfig& cfg, std::span<const double, 4> z);

/// One Euler-Maruyama step of the reduced equations (two normals). The
/// returned b_i are the substituted eps - a_i^2.
SdeState step_reduced(const SdeState& s, const SdeConfig& cfg, std::span<const double, 2> z);

bool is_diverged(const SdeState& s, const SdeConfig& cfg);

/// Principal square root of [[0, c], [c, 0]].
std::array<std::complex<double>, 4> phonon_noise_matrix(double nbar_b, double y);

struct Estimate {
  std::complex<double> mean;
  double se_re = 0.0;  ///< standard error of the real part
  double se_im = 0.0;
};

struct TrajectoryEnsemble {
  Estimate alpha;   ///< <a1>          ~ <a>
  Estimate n_phot;  ///< <a2 a1>       ~ <a^dag a>
  Estimate a_sq;    ///< <a1^2>        ~ <a^2>
  Estimate beta;    ///< <b1>          (eps - <a1^2> in Reduced mode)
  int n_traj = 0;
  int n_used = 0;
  int n_diverged = 0;
  long samples_per_traj = 0;
  std::uint64_t seed = 0;
};

struct EnsembleDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-trajectory seed; depends only on (master seed, index).
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

/// Initial state for every trajectory: photons at the origin, phonons at eps.
SdeState initial_state(const SdeConfig& cfg);

using TraceCallback = std::function<void(double t, const SdeState&)>;

struct EnsembleOptions {
  int threads = 1;
  TraceCallback trace;   ///< receives trajectory 0 every trace_stride steps
  long trace_stride = 100;
};

/// Deterministic in (cfg, seed) regardless of `threads`. Throws
/// EnsembleDiverged when more than 20% of trajectories escape.
TrajectoryEnsemble run_ensemble(const SdeConfig& cfg, const EnsembleOptions& opt = {});

}  // namespace dpo
