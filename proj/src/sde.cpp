#include "dpo/sde.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "dpo/parallel.hpp"

namespace dpo {

using cd = std::complex<double>;

namespace {

// Principal square root; same branch as std::sqrt(complex) but without the
// overflow-safe scaling, which the bounded trajectories never need.
inline cd principal_sqrt(cd z) {
  const double re = z.real();
  const double im = z.imag();
  if (re == 0.0 && im == 0.0) return {0.0, im};
  const double t = std::sqrt(0.5 * (std::sqrt(re * re + im * im) + std::abs(re)));
  if (re >= 0.0) return {t, im / (2.0 * t)};
  return {std::abs(im) / (2.0 * t), std::copysign(t, im)};
}

}  // namespace

void SdeConfig::validate() const {
  scaled.validate();
  if (!(nbar_b >= 0.0)) throw ParameterError("sde: nbar_b must be >= 0");
  if (!(dt > 0.0)) throw ParameterError("sde: dt must be > 0");
  if (!(t_burn >= 0.0) || !(t_burn < t_total)) throw ParameterError("sde: need 0 <= t_burn < t_total");
  if (n_traj < 1) throw ParameterError("sde: n_traj must be >= 1");
  if (!(divergence_radius > 0.0)) throw ParameterError("sde: divergence_radius must be > 0");
  if (mode == SdeMode::Full && dt > scaled.gamma_ratio / 50.0) {
    std::ostringstream msg;
    msg << "sde: full mode requires dt <= gamma_ratio/50 = " << scaled.gamma_ratio / 50.0;
    throw ParameterError(msg.str());
  }
}

std::array<cd, 4> phonon_noise_matrix(double nbar_b, double y) {
  // sqrt([[0,c],[c,0]]) = sqrt(c)/2 [[1+i, 1-i], [1-i, 1+i]] on the principal branch.
  const double c = 2.0 * nbar_b / y;
  const double h = 0.5 * std::sqrt(c);
  const cd p(h, h), m(h, -h);
  return {p, m, m, p};
}

SdeState step_full(const SdeState& s, const SdeConfig& cfg, std::span<const double, 4> z) {
  const double dt = cfg.dt;
  const double sdt = std::sqrt(dt);
  const double g = cfg.scaled.gamma_ratio;
  const double x = cfg.scaled.x;
  const double eps = cfg.scaled.eps;
  const auto B = phonon_noise_matrix(cfg.nbar_b, cfg.scaled.y);

  SdeState n;
  n.a1 = s.a1 + (s.a2 * s.b1 - s.a1) * (dt / g) + principal_sqrt(s.b1 / (g * x)) * (sdt * z[0]);
  n.a2 = s.a2 + (s.a1 * s.b2 - s.a2) * (dt / g) + principal_sqrt(s.b2 / (g * x)) * (sdt * z[1]);
  n.b1 = s.b1 + (eps - s.a1 * s.a1 - s.b1) * dt + sdt * (B[0] * z[2] + B[1] * z[3]);
  n.b2 = s.b2 + (eps - s.a2 * s.a2 - s.b2) * dt + sdt * (B[2] * z[2] + B[3] * z[3]);
  return n;
}

SdeState step_reduced(const SdeState& s, const SdeConfig& cfg, std::span<const double, 2> z) {
  const double dt = cfg.dt;
  const double sdt = std::sqrt(dt);
  const double x = cfg.scaled.x;
  const double eps = cfg.scaled.eps;
  const cd b1 = eps - s.a1 * s.a1;
  const cd b2 = eps - s.a2 * s.a2;

  SdeState n;
  n.a1 = s.a1 + (s.a2 * b1 - s.a1) * dt + principal_sqrt(b1 / x) * (sdt * z[0]);
  n.a2 = s.a2 + (s.a1 * b2 - s.a2) * dt + principal_sqrt(b2 / x) * (sdt * z[1]);
  n.b1 = eps - n.a1 * n.a1;
  n.b2 = eps - n.a2 * n.a2;
  return n;
}

bool is_diverged(const SdeState& s, const SdeConfig& cfg) {
  const double r2 = cfg.divergence_radius * cfg.divergence_radius;
  auto out = [r2](cd v) { return !(std::norm(v) <= r2); };
  return out(s.a1) || out(s.a2) || out(s.b1) || out(s.b2);
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SdeState initial_state(const SdeConfig& cfg) {
  const double eps = cfg.scaled.eps;
  return {0.0, 0.0, eps, eps};
}

namespace {

struct TrajectoryMeans {
  cd alpha, n_phot, a_sq, beta;
  bool diverged = false;
};

TrajectoryMeans run_trajectory(const SdeConfig& cfg, std::uint64_t index, long n_steps, long n_burn,
                               const EnsembleOptions& opt) {
  boost::random::mt19937_64 rng(trajectory_seed(cfg.seed, index));
  boost::random::normal_distribution<double> normal;
  const bool full = cfg.mode == SdeMode::Full;
  const bool tracing = index == 0 && opt.trace;

  SdeState s = initial_state(cfg);
  TrajectoryMeans acc;
  for (long step = 0; step < n_steps; ++step) {
    if (full) {
      const std::array<double, 4> z{normal(rng), normal(rng), normal(rng), normal(rng)};
      s = step_full(s, cfg, z);
    } else {
      const std::array<double, 2> z{normal(rng), normal(rng)};
      s = step_reduced(s, cfg, z);
    }
    if (is_diverged(s, cfg)) {
      acc.diverged = true;
      return acc;
    }
    if (tracing && (step + 1) % opt.trace_stride == 0) opt.trace((step + 1) * cfg.dt, s);
    if (step >= n_burn) {
      acc.alpha += s.a1;
      acc.n_phot += s.a2 * s.a1;
      acc.a_sq += s.a1 * s.a1;
      acc.beta += s.b1;
    }
  }
  const double inv = 1.0 / static_cast<double>(n_steps - n_burn);
  acc.alpha *= inv;
  acc.n_phot *= inv;
  acc.a_sq *= inv;
  acc.beta *= inv;
  return acc;
}

// Reduced-mode trajectories advanced kWidth at a time in structure-of-arrays
// form so the step vectorizes. Each lane keeps its own generator and draws in
// the same order as run_trajectory, so lanes are independent of each other.
constexpr int kWidth = 8;

void run_reduced_block(const SdeConfig& cfg, std::uint64_t first, int count, long n_steps, long n_burn,
                       const EnsembleOptions& opt, TrajectoryMeans* out) {
  std::array<boost::random::mt19937_64, kWidth> rng;
  boost::random::normal_distribution<double> normal;
  for (int l = 0; l < count; ++l) rng[l].seed(trajectory_seed(cfg.seed, first + l));
  const bool tracing = first == 0 && opt.trace;

  const double dt = cfg.dt, sdt = std::sqrt(dt), inv_x = 1.0 / cfg.scaled.x, eps = cfg.scaled.eps;
  const double r2 = cfg.divergence_radius * cfg.divergence_radius;
  alignas(64) double x1[kWidth] = {}, y1[kWidth] = {}, x2[kWidth] = {}, y2[kWidth] = {};
  alignas(64) double z1[kWidth] = {}, z2[kWidth] = {};
  alignas(64) int out_of_range[kWidth] = {};
  alignas(64) double s_a[2][kWidth] = {}, s_n[2][kWidth] = {}, s_q[2][kWidth] = {};
  bool alive[kWidth] = {};
  int n_alive = count;
  for (int l = 0; l < count; ++l) alive[l] = true;

  for (long step = 0; step < n_steps && n_alive > 0; ++step) {
    for (int l = 0; l < count; ++l) {
      z1[l] = normal(rng[l]);
      z2[l] = normal(rng[l]);
    }
    const double sample = step >= n_burn ? 1.0 : 0.0;
#pragma omp simd
    for (int l = 0; l < kWidth; ++l) {
      // b_i = eps - a_i^2
      const double br1 = eps - (x1[l] * x1[l] - y1[l] * y1[l]), bi1 = -2.0 * x1[l] * y1[l];
      const double br2 = eps - (x2[l] * x2[l] - y2[l] * y2[l]), bi2 = -2.0 * x2[l] * y2[l];
      // principal sqrt(b_i / x)
      const double ur1 = br1 * inv_x, ui1 = bi1 * inv_x, ur2 = br2 * inv_x, ui2 = bi2 * inv_x;
      const double t1 = std::sqrt(0.5 * (std::sqrt(ur1 * ur1 + ui1 * ui1) + std::abs(ur1)));
      const double t2 = std::sqrt(0.5 * (std::sqrt(ur2 * ur2 + ui2 * ui2) + std::abs(ur2)));
      // t vanishes only together with u, so the clamp never changes a result.
      const double h1 = 0.5 / std::max(t1, 1e-300), h2 = 0.5 / std::max(t2, 1e-300);
      const double qr1 = ur1 >= 0.0 ? t1 : std::abs(ui1) * h1;
      const double qi1 = ur1 >= 0.0 ? ui1 * h1 : std::copysign(t1, ui1);
      const double qr2 = ur2 >= 0.0 ? t2 : std::abs(ui2) * h2;
      const double qi2 = ur2 >= 0.0 ? ui2 * h2 : std::copysign(t2, ui2);
      const double w1 = sdt * z1[l], w2 = sdt * z2[l];
      // a1 += (a2 b1 - a1) dt + q1 w1, and symmetrically
      const double nx1 = x1[l] + ((x2[l] * br1 - y2[l] * bi1) - x1[l]) * dt + qr1 * w1;
      const double ny1 = y1[l] + ((x2[l] * bi1 + y2[l] * br1) - y1[l]) * dt + qi1 * w1;
      const double nx2 = x2[l] + ((x1[l] * br2 - y1[l] * bi2) - x2[l]) * dt + qr2 * w2;
      const double ny2 = y2[l] + ((x1[l] * bi2 + y1[l] * br2) - y2[l]) * dt + qi2 * w2;
      x1[l] = nx1;
      y1[l] = ny1;
      x2[l] = nx2;
      y2[l] = ny2;
      const double m1 = nx1 * nx1 + ny1 * ny1, m2 = nx2 * nx2 + ny2 * ny2;
      const double cr1 = eps - (nx1 * nx1 - ny1 * ny1), ci1 = 2.0 * nx1 * ny1;
      const double cr2 = eps - (nx2 * nx2 - ny2 * ny2), ci2 = 2.0 * nx2 * ny2;
      out_of_range[l] = !(m1 <= r2) | !(m2 <= r2) | !(cr1 * cr1 + ci1 * ci1 <= r2) | !(cr2 * cr2 + ci2 * ci2 <= r2);
      s_a[0][l] += sample * nx1;
      s_a[1][l] += sample * ny1;
      s_n[0][l] += sample * (nx2 * nx1 - ny2 * ny1);
      s_n[1][l] += sample * (nx2 * ny1 + ny2 * nx1);
      s_q[0][l] += sample * (nx1 * nx1 - ny1 * ny1);
      s_q[1][l] += sample * (2.0 * nx1 * ny1);
    }
    for (int l = 0; l < count; ++l) {
      if (!alive[l] || !out_of_range[l]) continue;
      alive[l] = false;
      out[l].diverged = true;
      --n_alive;
      // Park the lane at the origin so it stays finite.
      x1[l] = y1[l] = x2[l] = y2[l] = 0.0;
    }
    if (tracing && alive[0] && (step + 1) % opt.trace_stride == 0) {
      const cd a1(x1[0], y1[0]), a2(x2[0], y2[0]);
      opt.trace((step + 1) * dt, SdeState{a1, a2, eps - a1 * a1, eps - a2 * a2});
    }
  }
  const double inv = 1.0 / static_cast<double>(n_steps - n_burn);
  for (int l = 0; l < count; ++l) {
    if (out[l].diverged) continue;
    out[l].alpha = cd(s_a[0][l], s_a[1][l]) * inv;
    out[l].n_phot = cd(s_n[0][l], s_n[1][l]) * inv;
    out[l].a_sq = cd(s_q[0][l], s_q[1][l]) * inv;
    out[l].beta = eps - out[l].a_sq;
  }
}

Estimate summarize(const std::vector<TrajectoryMeans>& trajs, cd TrajectoryMeans::*field) {
  Estimate e;
  long n = 0;
  cd sum;
  for (const auto& t : trajs) {
    if (t.diverged) continue;
    sum += t.*field;
    ++n;
  }
  if (n == 0) return e;
  e.mean = sum / static_cast<double>(n);
  if (n < 2) return e;
  double var_re = 0.0, var_im = 0.0;
  for (const auto& t : trajs) {
    if (t.diverged) continue;
    const cd d = t.*field - e.mean;
    var_re += d.real() * d.real();
    var_im += d.imag() * d.imag();
  }
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n);
  e.se_re = std::sqrt(var_re / denom);
  e.se_im = std::sqrt(var_im / denom);
  return e;
}

}  // namespace

TrajectoryEnsemble run_ensemble(const SdeConfig& cfg, const EnsembleOptions& opt) {
  cfg.validate();
  const long n_steps = std::lround(cfg.t_total / cfg.dt);
  const long n_burn = std::lround(cfg.t_burn / cfg.dt);
  if (n_steps <= n_burn) throw ParameterError("sde: no samples after burn-in");

  std::vector<TrajectoryMeans> trajs(static_cast<std::size_t>(cfg.n_traj));
  if (cfg.mode == SdeMode::Reduced) {
    const std::size_t blocks = (trajs.size() + kWidth - 1) / kWidth;
    parallel_for(blocks, opt.threads, [&](std::size_t b) {
      const std::size_t first = b * kWidth;
      const int count = static_cast<int>(std::min<std::size_t>(kWidth, trajs.size() - first));
      run_reduced_block(cfg, first, count, n_steps, n_burn, opt, trajs.data() + first);
    });
  } else {
    parallel_for(trajs.size(), opt.threads,
                 [&](std::size_t i) { trajs[i] = run_trajectory(cfg, i, n_steps, n_burn, opt); });
  }

  TrajectoryEnsemble ens;
  ens.n_traj = cfg.n_traj;
  ens.seed = cfg.seed;
  ens.samples_per_traj = n_steps - n_burn;
  for (const auto& t : trajs) ens.n_diverged += t.diverged ? 1 : 0;
  ens.n_used = ens.n_traj - ens.n_diverged;
  if (ens.n_diverged * 5 > ens.n_traj) {
    std::ostringstream msg;
    msg << "sde: " << ens.n_diverged << " of " << ens.n_traj
        << " trajectories diverged (limit 20%); reduce dt or eps";
    throw EnsembleDiverged(msg.str());
  }
  ens.alpha = summarize(trajs, &TrajectoryMeans::alpha);
  ens.n_phot = summarize(trajs, &TrajectoryMeans::n_phot);
  ens.a_sq = summarize(trajs, &TrajectoryMeans::a_sq);
  ens.beta = summarize(trajs, &TrajectoryMeans::beta);
  return ens;
}

}  // namespace dpo
