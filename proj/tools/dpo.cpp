// dpo: steady-state solvers for the degenerate parametric oscillator.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure. Errors
// are reported on stderr as a single JSON object.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dpo/cli.hpp"

namespace {

using namespace dpo;
using namespace dpo::cli;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> gnuplot;

  std::optional<double> eps, eps_start, eps_stop, eps_step, drive;
  std::optional<double> x, gamma_ratio, kappa, gamma_m, g, nbar_b;

  std::optional<double> fp_tol;
  std::optional<int> k_max;

  std::optional<std::string> sde_mode, trace;
  std::optional<double> dt, t_burn, t_total, radius;
  std::optional<int> n_traj;
  std::optional<long> trace_stride;

  std::optional<int> nphot_dim, nphon_dim, restart;
  std::vector<int> shanks;
  std::optional<std::string> solver;
  std::optional<double> lind_tol;

  std::optional<double> re_min, re_max, im_min, im_max;
  std::optional<int> n_re, n_im;

  std::vector<std::string> methods;
};

void add_grid(CLI::App* app, Flags& f) {
  app->add_option("--eps", f.eps, "Single scaled drive eps = E/E_c");
  app->add_option("--eps-start", f.eps_start, "First eps of the sweep");
  app->add_option("--eps-stop", f.eps_stop, "Last eps of the sweep (inclusive)");
  app->add_option("--eps-step", f.eps_step, "Sweep step");
}

void add_model(CLI::App* app, Flags& f) {
  app->add_option("--x", f.x, "Scaled parameter x = kappa*Gamma/(8 g^2)");
  app->add_option("--gamma-ratio", f.gamma_ratio, "Gamma/kappa (default 1)");
  app->add_option("--kappa", f.kappa, "Photonic decay rate (angular units)");
  app->add_option("--gamma", f.gamma_m, "Phononic decay rate Gamma");
  app->add_option("--g", f.g, "Single-photon coupling rate");
  app->add_option("--nbar-b", f.nbar_b, "Thermal phonon occupation");
  app->add_option("--drive", f.drive, "Physical drive E (single point; overrides the eps grid)");
}

void add_fp(CLI::App* app, Flags& f) {
  app->add_option("--fp-tol", f.fp_tol, "Relative stopping tolerance of the moment series");
  app->add_option("--k-max", f.k_max, "Series length limit");
}

void add_sde(CLI::App* app, Flags& f) {
  app->add_option("--mode", f.sde_mode, "reduced or full");
  app->add_option("--dt", f.dt, "Time step");
  app->add_option("--t-burn", f.t_burn, "Burn-in time");
  app->add_option("--t-total", f.t_total, "Total integration time");
  app->add_option("--n-traj", f.n_traj, "Number of trajectories");
  app->add_option("--divergence-radius", f.radius, "Escape radius for divergence detection");
  app->add_option("--trace", f.trace, "Write trajectory 0 to this CSV file");
  app->add_option("--trace-stride", f.trace_stride, "Steps between trace samples");
}

void add_lindblad(CLI::App* app, Flags& f) {
  app->add_option("--nphot-dim", f.nphot_dim, "Photon levels (2N)");
  app->add_option("--nphon-dim", f.nphon_dim, "Phonon levels (N)");
  app->add_option("--shanks", f.shanks, "Truncation sizes N for Shanks extrapolation (2N x N each)")->delimiter(',');
  app->add_option("--solver", f.solver, "auto, direct or iterative");
  app->add_option("--tol", f.lind_tol, "Residual target ||L rho||/||rho||");
  app->add_option("--restart", f.restart, "Krylov subspace size");
}

void add_qgrid(CLI::App* app, Flags& f) {
  app->add_option("--re-min", f.re_min);
  app->add_option("--re-max", f.re_max);
  app->add_option("--im-min", f.im_min);
  app->add_option("--im-max", f.im_max);
  app->add_option("--n-re", f.n_re, "Grid points along Re(alpha)");
  app->add_option("--n-im", f.n_im, "Grid points along Im(alpha)");
}

template <typename T>
void apply(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

SweepSpec build_spec(const Flags& f, Method method) {
  SweepSpec spec;
  spec.method = method;
  std::optional<int> config_threads;
  if (f.config) {
    spec = load_config(*f.config, spec);
    spec.method = method;
    config_threads = spec.threads;
  }
  apply(f.seed, spec.seed);

  ModelParams& m = spec.model;
  if (f.x) m.x = f.x;
  if (f.gamma_ratio) m.gamma_ratio = f.gamma_ratio;
  if (f.kappa) m.kappa = f.kappa;
  if (f.gamma_m) m.gamma_m = f.gamma_m;
  if (f.g) m.g = f.g;
  apply(f.nbar_b, m.nbar_b);
  // Lindblad-based commands default to the reference rates kappa = Gamma = 1, g = 0.1.
  if ((method == Method::Lindblad) && !m.x && !m.kappa && !m.gamma_m && !m.g) {
    m.kappa = 1.0;
    m.gamma_m = 1.0;
    m.g = 0.1;
  }

  apply(f.eps_start, spec.grid.start);
  apply(f.eps_stop, spec.grid.stop);
  apply(f.eps_step, spec.grid.step);
  if (f.eps) spec.grid.start = spec.grid.stop = *f.eps;
  if (f.drive) {
    m.validate();
    const PhysicalParams p = m.physical(0.0);
    const double eps = *f.drive / critical_drive(p);
    spec.grid.start = spec.grid.stop = eps;
  }

  apply(f.fp_tol, spec.fp.tol);
  apply(f.k_max, spec.fp.k_max);

  if (f.sde_mode) {
    if (*f.sde_mode == "reduced") spec.sde.mode = SdeMode::Reduced;
    else if (*f.sde_mode == "full") spec.sde.mode = SdeMode::Full;
    else throw ConfigError("--mode must be reduced or full");
  }
  apply(f.dt, spec.sde.dt);
  apply(f.t_burn, spec.sde.t_burn);
  apply(f.t_total, spec.sde.t_total);
  apply(f.n_traj, spec.sde.n_traj);
  apply(f.radius, spec.sde.divergence_radius);
  apply(f.trace, spec.sde.trace_path);
  apply(f.trace_stride, spec.sde.trace_stride);

  apply(f.nphot_dim, spec.lindblad.n_phot_dim);
  apply(f.nphon_dim, spec.lindblad.n_phon_dim);
  if (!f.shanks.empty()) spec.lindblad.shanks = f.shanks;
  if (f.solver) {
    if (*f.solver == "auto") spec.lindblad.solver.solver = SolverKind::Auto;
    else if (*f.solver == "direct") spec.lindblad.solver.solver = SolverKind::Direct;
    else if (*f.solver == "iterative") spec.lindblad.solver.solver = SolverKind::Iterative;
    else throw ConfigError("--solver must be auto, direct or iterative");
  }
  apply(f.lind_tol, spec.lindblad.solver.tol);
  apply(f.restart, spec.lindblad.solver.restart);

  GridSpec& q = spec.qfunc.grid;
  apply(f.re_min, q.re_min);
  apply(f.re_max, q.re_max);
  apply(f.im_min, q.im_min);
  apply(f.im_max, q.im_max);
  apply(f.n_re, q.n_re);
  apply(f.n_im, q.n_im);

  if (!f.methods.empty()) {
    spec.compare_methods.clear();
    for (const auto& name : f.methods) spec.compare_methods.push_back(method_from_string(name));
  }

  spec.threads = resolve_threads(f.threads, std::getenv("DPO_THREADS"), config_threads);
  spec.validate();
  return spec;
}

// Writes to --out (or stdout) and the optional gnuplot hint next to it.
template <typename WriteFn>
void emit(const Flags& f, WriteFn&& write) {
  if (f.out) {
    std::ofstream file(*f.out);
    if (!file) throw ConfigError("cannot open output file '" + *f.out + "'");
    write(file);
  } else {
    write(std::cout);
  }
}

void emit_hint(const Flags& f, const Table& t, Format fmt) {
  if (!f.gnuplot) return;
  std::ofstream hint(*f.gnuplot);
  if (!hint) throw ConfigError("cannot open gnuplot hint file '" + *f.gnuplot + "'");
  hint << gnuplot_hint(t, f.out.value_or("data.csv"), fmt);
}

int fail(const nlohmann::json& err, int code) {
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady states of the degenerate parametric oscillator"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file (flags override it)");
  app.add_option("--out", f.out, "Output file (default stdout)");
  app.add_option("--format", f.format, "csv (default) or json");
  app.add_option("--seed", f.seed, "Master seed for the SDE ensembles");
  app.add_option("--threads", f.threads, "Worker threads (default: DPO_THREADS, then config, then 1)");
  app.add_option("--gnuplot-hint", f.gnuplot, "Also write a gnuplot script for the output");

  auto* semi = app.add_subcommand("semiclassical", "Mean-field fixed points on the physical branch");
  add_grid(semi, f);

  auto* sc = app.add_subcommand("self-consistent", "Self-consistent linearization");
  add_grid(sc, f);
  add_model(sc, f);

  auto* fp = app.add_subcommand("fp-moments", "Exact moments of the Fokker-Planck steady state");
  add_grid(fp, f);
  add_model(fp, f);
  add_fp(fp, f);

  auto* sde = app.add_subcommand("sde", "Complex-P stochastic ensembles");
  add_grid(sde, f);
  add_model(sde, f);
  add_sde(sde, f);

  auto* lind = app.add_subcommand("lindblad-ss", "Truncated master-equation steady state");
  add_grid(lind, f);
  add_model(lind, f);
  add_lindblad(lind, f);

  auto* qf = app.add_subcommand("qfunc", "Photon-mode Q-function of the master-equation steady state");
  add_grid(qf, f);
  add_model(qf, f);
  add_lindblad(qf, f);
  add_qgrid(qf, f);

  auto* cmp = app.add_subcommand("compare", "Aligned cross-method table with deviations and flags");
  add_grid(cmp, f);
  add_model(cmp, f);
  add_fp(cmp, f);
  add_sde(cmp, f);
  add_lindblad(cmp, f);
  cmp->add_option("--methods", f.methods, "Comma-separated methods, e.g. fp-moments,self-consistent")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail({{"error", "config"}, {"message", e.what()}}, 2);
  }

  try {
    const Format fmt = format_from_string(f.format.value_or("csv"));
    if (*semi || *sc || *fp || *sde || *lind) {
      const Method m = *semi ? Method::Semiclassical
                       : *sc ? Method::SelfConsistent
                       : *fp ? Method::FpMoments
                       : *sde ? Method::Sde
                              : Method::Lindblad;
      const SweepSpec spec = build_spec(f, m);
      const Table t = run_sweep(spec);
      emit(f, [&](std::ostream& out) { write_table(out, t, fmt); });
      emit_hint(f, t, fmt);
    } else if (*qf) {
      const SweepSpec spec = build_spec(f, Method::Lindblad);
      if (spec.grid.start != spec.grid.stop) throw ConfigError("qfunc takes a single drive (--drive or --eps)");
      const QfuncResult r = run_qfunc(spec, spec.grid.start);
      emit(f, [&](std::ostream& out) {
        if (fmt == Format::Csv) {
          write_qgrid_csv(out, r.q);
        } else {
          out << to_json(r.q).dump(2) << '\n';
        }
      });
      nlohmann::json summary{{"eps", r.eps},
                             {"drive", r.drive},
                             {"nphot_dim", r.hilbert.n_phot},
                             {"nphon_dim", r.hilbert.n_phon},
                             {"n_phot", r.n_phot},
                             {"residual", r.residual},
                             {"truncation_warning", r.q.truncation_warning}};
      nlohmann::json peaks = nlohmann::json::array();
      for (const auto& p : r.peaks) peaks.push_back({{"re", p.alpha.real()}, {"im", p.alpha.imag()}, {"q", p.value}});
      summary["peaks"] = peaks;
      if (r.q.truncation_warning)
        std::cerr << "warning: |alpha|^2 reaches " << r.q.max_abs_alpha_sq
                  << ", more than half the photon dimension; Q is unreliable there\n";
      std::cerr << summary.dump() << '\n';
    } else if (*cmp) {
      const SweepSpec spec = build_spec(f, Method::FpMoments);
      const ComparisonReport rep = compare(spec.compare_methods, spec);
      emit(f, [&](std::ostream& out) {
        if (fmt == Format::Csv) {
          write_csv(out, rep.table);
        } else {
          out << to_json(rep).dump(2) << '\n';
        }
      });
      emit_hint(f, rep.table, fmt);
      if (fmt == Format::Csv) {
        nlohmann::json summary = to_json(rep);
        summary.erase("rows");
        summary.erase("columns");
        std::cerr << summary.dump() << '\n';
      }
    }
  } catch (const ConfigError& e) {
    return fail({{"error", "config"}, {"message", e.what()}}, 2);
  } catch (const NumericalError& e) {
    return fail({{"error", "numerical"}, {"method", to_string(e.method)}, {"eps", e.eps}, {"message", e.detail}}, 3);
  } catch (const std::exception& e) {
    return fail({{"error", "numerical"}, {"message", e.what()}}, 3);
  }
  return 0;
}
