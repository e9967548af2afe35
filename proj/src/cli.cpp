#include "dpo/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "dpo/parallel.hpp"
#include "dpo/selfconsistent.hpp"
#include "dpo/semiclassical.hpp"
#include "dpo/shanks.hpp"

namespace dpo::cli {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MethodName {
  Method method;
  std::string_view name;
};
constexpr MethodName kMethodNames[] = {
    {Method::Semiclassical, "semiclassical"},
    {Method::SelfConsistent, "self-consistent"},
    {Method::FpMoments, "fp-moments"},
    {Method::Sde, "sde"},
    {Method::Lindblad, "lindblad-ss"},
};
}  // namespace

std::string_view to_string(Method m) {
  for (const auto& e : kMethodNames)
    if (e.method == m) return e.name;
  return "unknown";
}

Method method_from_string(std::string_view s) {
  for (const auto& e : kMethodNames)
    if (e.name == s) return e.method;
  if (s == "lindblad") return Method::Lindblad;
  if (s == "fp") return Method::FpMoments;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

Format format_from_string(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("unknown format '" + std::string(s) + "' (csv or json)");
}

NumericalError::NumericalError(Method m, double e, const std::string& what)
    : std::runtime_error(std::string(to_string(m)) + " failed at eps=" + format_number(e) + ": " + what),
      method(m),
      eps(e),
      detail(what) {}

std::vector<double> EpsGrid::values() const {
  validate();
  std::vector<double> v;
  // Index-based so the grid does not drift with accumulated rounding.
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-6));
  v.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) v.push_back(start + static_cast<double>(i) * step);
  return v;
}

void EpsGrid::validate() const {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step))
    throw ConfigError("eps grid must be finite");
  if (start < 0.0) throw ConfigError("eps grid start must be >= 0");
  if (!(stop >= start)) throw ConfigError("eps grid stop must be >= start");
  if (!(step > 0.0)) throw ConfigError("eps grid step must be > 0");
  if ((stop - start) / step > 1e7) throw ConfigError("eps grid has too many points");
}

void ModelParams::validate() const {
  const bool any_physical = kappa || gamma_m || g;
  if (any_physical && !has_physical())
    throw ConfigError("physical parameters need all of kappa, gamma and g");
  if (!has_physical() && !x) throw ConfigError("need either x or (kappa, gamma, g)");
  if (!(nbar_b >= 0.0)) throw ConfigError("nbar_b must be >= 0");
  try {
    const ScaledParams s = scaled(0.0);
    s.validate();
    if (has_physical()) physical(0.0).validate();
    if (has_physical() && x && std::abs(*x - s.x) > 1e-10 * s.x)
      throw ConfigError("x is inconsistent with kappa, gamma and g");
    if (has_physical() && gamma_ratio && std::abs(*gamma_ratio - s.gamma_ratio) > 1e-10 * s.gamma_ratio)
      throw ConfigError("gamma_ratio is inconsistent with kappa and gamma");
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

ScaledParams ModelParams::scaled(double eps) const {
  if (has_physical()) {
    PhysicalParams p{*kappa, *gamma_m, *g, 0.0, nbar_b};
    p.drive = eps * critical_drive(p);
    ScaledParams s = scale(p);
    s.eps = eps;
    return s;
  }
  if (!x) throw ConfigError("need either x or (kappa, gamma, g)");
  const double gr = gamma_ratio.value_or(1.0);
  return {*x, *x / (2.0 * gr), gr, eps};
}

PhysicalParams ModelParams::physical(double eps) const {
  if (has_physical()) {
    PhysicalParams p{*kappa, *gamma_m, *g, 0.0, nbar_b};
    p.drive = eps * critical_drive(p);
    return p;
  }
  return unscale(scaled(eps), kappa.value_or(1.0), nbar_b);
}

void SweepSpec::validate() const {
  grid.validate();
  if (method != Method::Semiclassical || !compare_methods.empty()) model.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (method == Method::Sde || std::count(compare_methods.begin(), compare_methods.end(), Method::Sde)) {
    if (!(sde.dt > 0.0) || !(sde.t_total > sde.t_burn) || sde.t_burn < 0.0 || sde.n_traj < 1 ||
        !(sde.divergence_radius > 0.0) || sde.trace_stride < 1)
      throw ConfigError("invalid sde settings");
  }
  if (lindblad.n_phot_dim < 2 || lindblad.n_phon_dim < 2) throw ConfigError("lindblad dimensions must be >= 2");
  if (!lindblad.shanks.empty()) {
    if (lindblad.shanks.size() < 3) throw ConfigError("shanks needs at least three truncation sizes");
    for (int n : lindblad.shanks)
      if (n < 2) throw ConfigError("shanks truncation sizes must be >= 2");
  }
  if (!(fp.tol > 0.0) || fp.k_max < 1) throw ConfigError("invalid fp-moments settings");
  try {
    qfunc.grid.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key)) return;
  T v{};
  read(obj, key, v);
  out = v;
}

SdeMode sde_mode_from_string(std::string_view s) {
  if (s == "reduced") return SdeMode::Reduced;
  if (s == "full") return SdeMode::Full;
  throw ConfigError("unknown sde mode '" + std::string(s) + "' (reduced or full)");
}

SolverKind solver_from_string(std::string_view s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "direct") return SolverKind::Direct;
  if (s == "iterative") return SolverKind::Iterative;
  throw ConfigError("unknown lindblad solver '" + std::string(s) + "'");
}

}  // namespace

SweepSpec spec_from_json(const json& j, SweepSpec spec) {
  check_keys(j, "config", {"method", "eps", "scaled", "physical", "nbar_b", "seed", "threads", "fp", "sde",
                           "lindblad", "qfunc", "compare"});
  if (j.contains("method")) {
    std::string m;
    read(j, "method", m);
    spec.method = method_from_string(m);
  }
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (e.is_number()) {
      spec.grid.start = spec.grid.stop = e.get<double>();
    } else {
      check_keys(e, "eps", {"start", "stop", "step"});
      read(e, "start", spec.grid.start);
      read(e, "stop", spec.grid.stop);
      read(e, "step", spec.grid.step);
    }
  }
  if (j.contains("scaled")) {
    const json& s = j.at("scaled");
    check_keys(s, "scaled", {"x", "gamma_ratio"});
    read(s, "x", spec.model.x);
    read(s, "gamma_ratio", spec.model.gamma_ratio);
  }
  if (j.contains("physical")) {
    const json& p = j.at("physical");
    check_keys(p, "physical", {"kappa", "gamma", "g"});
    read(p, "kappa", spec.model.kappa);
    read(p, "gamma", spec.model.gamma_m);
    read(p, "g", spec.model.g);
  }
  read(j, "nbar_b", spec.model.nbar_b);
  read(j, "seed", spec.seed);
  read(j, "threads", spec.threads);
  if (j.contains("fp")) {
    const json& f = j.at("fp");
    check_keys(f, "fp", {"tol", "k_max"});
    read(f, "tol", spec.fp.tol);
    read(f, "k_max", spec.fp.k_max);
  }
  if (j.contains("sde")) {
    const json& s = j.at("sde");
    check_keys(s, "sde", {"mode", "dt", "t_burn", "t_total", "n_traj", "divergence_radius", "trace", "trace_stride"});
    if (s.contains("mode")) {
      std::string m;
      read(s, "mode", m);
      spec.sde.mode = sde_mode_from_string(m);
    }
    read(s, "dt", spec.sde.dt);
    read(s, "t_burn", spec.sde.t_burn);
    read(s, "t_total", spec.sde.t_total);
    read(s, "n_traj", spec.sde.n_traj);
    read(s, "divergence_radius", spec.sde.divergence_radius);
    read(s, "trace", spec.sde.trace_path);
    read(s, "trace_stride", spec.sde.trace_stride);
  }
  if (j.contains("lindblad")) {
    const json& l = j.at("lindblad");
    check_keys(l, "lindblad", {"nphot_dim", "nphon_dim", "shanks", "solver", "tol", "restart", "max_iterations"});
    read(l, "nphot_dim", spec.lindblad.n_phot_dim);
    read(l, "nphon_dim", spec.lindblad.n_phon_dim);
    read(l, "shanks", spec.lindblad.shanks);
    if (l.contains("solver")) {
      std::string s;
      read(l, "solver", s);
      spec.lindblad.solver.solver = solver_from_string(s);
    }
    read(l, "tol", spec.lindblad.solver.tol);
    read(l, "restart", spec.lindblad.solver.restart);
    read(l, "max_iterations", spec.lindblad.solver.max_iterations);
  }
  if (j.contains("qfunc")) {
    const json& q = j.at("qfunc");
    check_keys(q, "qfunc", {"re_min", "re_max", "im_min", "im_max", "n_re", "n_im"});
    GridSpec& g = spec.qfunc.grid;
    read(q, "re_min", g.re_min);
    read(q, "re_max", g.re_max);
    read(q, "im_min", g.im_min);
    read(q, "im_max", g.im_max);
    read(q, "n_re", g.n_re);
    read(q, "n_im", g.n_im);
  }
  if (j.contains("compare")) {
    const json& c = j.at("compare");
    check_keys(c, "compare", {"methods"});
    std::vector<std::string> names;
    read(c, "methods", names);
    spec.compare_methods.clear();
    for (const auto& n : names) spec.compare_methods.push_back(method_from_string(n));
  }
  return spec;
}

SweepSpec load_config(const std::string& path, SweepSpec base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return spec_from_json(j, std::move(base));
}

int resolve_threads(std::optional<int> flag, const char* env_value, std::optional<int> config) {
  auto check = [](int n, const char* what) {
    if (n < 1) throw ConfigError(std::string(what) + " thread count must be >= 1");
    return n;
  };
  if (flag) return check(*flag, "--threads");
  if (env_value && *env_value) {
    int n = 0;
    const std::string_view s(env_value);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("DPO_THREADS is not an integer");
    return check(n, "DPO_THREADS");
  }
  if (config) return check(*config, "config");
  return 1;
}

// ---------------------------------------------------------------- sweeps

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("no column '" + std::string(name) + "'");
}

std::vector<std::string> sweep_columns(Method m) {
  switch (m) {
    case Method::Semiclassical:
      return {"eps", "alpha_sq", "beta"};
    case Method::SelfConsistent:
      return {"eps", "beta", "n_phot", "var_x", "var_y"};
    case Method::FpMoments:
      return {"eps", "n_phot", "a_sq", "beta_ss", "var_x", "var_y", "trunc_err"};
    case Method::Sde:
      return {"eps", "n_phot", "n_phot_se", "a_sq", "a_sq_se", "beta", "beta_se", "n_used", "n_diverged"};
    case Method::Lindblad:
      return {"eps",          "drive",       "n_phot",        "a_sq",        "beta",
              "alpha_abs",    "var_x",       "var_y",         "n_phot_scaled", "beta_scaled",
              "n_phot_shanks_scaled", "residual", "min_eigenvalue", "hermiticity_defect", "clipped_weight",
              "iterations"};
  }
  return {};
}

namespace {

std::vector<double> semiclassical_row(double eps) {
  const MeanFieldState s = physical_branch(eps);
  return {eps, std::norm(s.alpha), s.beta.real()};
}

std::vector<double> selfconsistent_row(const SweepSpec& spec, double eps) {
  const auto s = solve_selfconsistent(eps, spec.model.scaled(eps).x);
  return {eps, s.beta_ss, s.n_phot, s.var_x, s.var_y};
}

std::vector<double> fp_row(const SweepSpec& spec, double eps) {
  const auto m = observables(eps, spec.model.scaled(eps).x, spec.fp);
  return {eps, m.n_phot, m.a_sq, m.beta_ss, m.var_x, m.var_y, m.trunc_err};
}

SdeConfig sde_config(const SweepSpec& spec, double eps, std::size_t index) {
  SdeConfig cfg;
  cfg.mode = spec.sde.mode;
  cfg.scaled = spec.model.scaled(eps);
  cfg.nbar_b = spec.model.nbar_b;
  cfg.dt = spec.sde.dt;
  cfg.t_burn = spec.sde.t_burn;
  cfg.t_total = spec.sde.t_total;
  cfg.n_traj = spec.sde.n_traj;
  cfg.divergence_radius = spec.sde.divergence_radius;
  cfg.seed = trajectory_seed(spec.seed, index);
  return cfg;
}

struct LindbladPoint {
  Observables obs;
  DensityMatrix dm;
  HilbertConfig h;
  double n_shanks = kNaN;  ///< unscaled
};

LindbladPoint lindblad_point(const SweepSpec& spec, double eps) {
  const PhysicalParams p = spec.model.physical(eps);
  LindbladPoint pt;
  if (spec.lindblad.shanks.empty()) {
    pt.h = {spec.lindblad.n_phot_dim, spec.lindblad.n_phon_dim};
    const Liouvillian L(p, pt.h);
    pt.dm = steady_state(L, spec.lindblad.solver);
    pt.obs = observables(pt.dm, L.ops());
    return pt;
  }
  std::vector<int> sizes = spec.lindblad.shanks;
  std::sort(sizes.begin(), sizes.end());
  auto scan = truncation_scan(p, sizes, spec.lindblad.solver);
  std::vector<double> seq;
  for (const auto& o : scan.obs) seq.push_back(o.n_phot);
  pt.n_shanks = shanks(seq).value;
  pt.obs = scan.obs.back();
  pt.dm = std::move(scan.states.back());
  pt.h = HilbertConfig::from_n(sizes.back());
  return pt;
}

std::vector<double> lindblad_row(const SweepSpec& spec, double eps) {
  const ScaledParams s = spec.model.scaled(eps);
  const PhysicalParams p = spec.model.physical(eps);
  const LindbladPoint pt = lindblad_point(spec, eps);
  const Observables& o = pt.obs;
  return {eps,
          p.drive,
          o.n_phot,
          o.a_sq.real(),
          o.beta.real(),
          std::abs(o.alpha),
          o.var_x,
          o.var_y,
          o.n_phot / s.x,
          o.beta.real() / std::sqrt(s.y),
          pt.n_shanks / s.x,
          pt.dm.residual,
          pt.dm.min_eigenvalue,
          pt.dm.hermiticity_defect,
          pt.dm.clipped_weight,
          static_cast<double>(pt.dm.iterations)};
}

template <typename Fn>
auto guarded(Method m, double eps, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(std::string(to_string(m)) + " at eps=" + format_number(eps) + ": " + e.what());
  } catch (const std::exception& e) {
    throw NumericalError(m, eps, e.what());
  }
}

// Trajectory-0 dump shared across the grid points of one SDE sweep.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("cannot open trace file '" + path + "'");
    out_ << "eps,t,a1_re,a1_im,a2_re,a2_im,b1_re,b1_im,b2_re,b2_im\n";
  }
  void write(double eps, double t, const SdeState& s) {
    const std::lock_guard lock(mutex_);
    const double v[] = {eps,          t,           s.a1.real(), s.a1.imag(), s.a2.real(),
                        s.a2.imag(), s.b1.real(), s.b1.imag(), s.b2.real(), s.b2.imag()};
    for (std::size_t i = 0; i < std::size(v); ++i) out_ << (i ? "," : "") << format_number(v[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace

Table run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::vector<double> eps = spec.grid.values();
  Table t;
  t.columns = sweep_columns(spec.method);
  t.rows.resize(eps.size());

  if (spec.method == Method::Sde) {
    // Parallelism lives inside each ensemble; grid points run in order.
    std::unique_ptr<TraceWriter> trace;
    if (!spec.sde.trace_path.empty()) trace = std::make_unique<TraceWriter>(spec.sde.trace_path);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double e = eps[i];
      t.rows[i] = guarded(Method::Sde, e, [&] {
        EnsembleOptions opt;
        opt.threads = spec.threads;
        if (trace) {
          opt.trace = [&trace, e](double time, const SdeState& s) { trace->write(e, time, s); };
          opt.trace_stride = spec.sde.trace_stride;
        }
        const auto ens = run_ensemble(sde_config(spec, e, i), opt);
        return std::vector<double>{e,
                                   ens.n_phot.mean.real(),
                                   ens.n_phot.se_re,
                                   ens.a_sq.mean.real(),
                                   ens.a_sq.se_re,
                                   ens.beta.mean.real(),
                                   ens.beta.se_re,
                                   static_cast<double>(ens.n_used),
                                   static_cast<double>(ens.n_diverged)};
      });
    }
    return t;
  }

  parallel_for(eps.size(), spec.threads, [&](std::size_t i) {
    const double e = eps[i];
    t.rows[i] = guarded(spec.method, e, [&] {
      switch (spec.method) {
        case Method::Semiclassical:
          return semiclassical_row(e);
        case Method::SelfConsistent:
          return selfconsistent_row(spec, e);
        case Method::FpMoments:
          return fp_row(spec, e);
        case Method::Lindblad:
          return lindblad_row(spec, e);
        case Method::Sde:
          break;
      }
      return std::vector<double>{};
    });
  });
  return t;
}

QfuncResult run_qfunc(const SweepSpec& spec, double eps) {
  SweepSpec s = spec;
  s.grid = {eps, eps, 1.0};
  s.validate();
  return guarded(Method::Lindblad, eps, [&] {
    const LindbladPoint pt = lindblad_point(s, eps);
    QfuncResult r;
    r.eps = eps;
    r.drive = s.model.physical(eps).drive;
    r.hilbert = pt.h;
    r.q = q_function(partial_trace_photon(pt.dm.rho, pt.h), s.qfunc.grid);
    r.peaks = q_peaks(r.q);
    r.n_phot = pt.obs.n_phot;
    r.residual = pt.dm.residual;
    r.iterations = pt.dm.iterations;
    return r;
  });
}

// ---------------------------------------------------------------- compare

namespace {

constexpr const char* kCompared[] = {"n_phot", "beta", "var_x", "var_y"};

// (n_phot, beta) scaled, (var_x, var_y) unscaled; NaN where a method has no value.
std::array<double, 4> compared_values(Method m, const Table& t, std::size_t row, const SweepSpec& spec) {
  const auto& r = t.rows[row];
  auto col = [&](const char* name) { return r[t.column(name)]; };
  switch (m) {
    case Method::Semiclassical:
      return {col("alpha_sq"), col("beta"), kNaN, kNaN};
    case Method::SelfConsistent:
      return {col("n_phot"), col("beta"), col("var_x"), col("var_y")};
    case Method::FpMoments:
      return {col("n_phot"), col("beta_ss"), col("var_x"), col("var_y")};
    case Method::Sde: {
      const double x = spec.model.scaled(col("eps")).x;
      // <X^2> = 1 + 2x(n + Re a^2) for the parity-symmetric state (<a> = 0).
      return {col("n_phot"), col("beta"), 1.0 + 2.0 * x * (col("n_phot") + col("a_sq")),
              1.0 + 2.0 * x * (col("n_phot") - col("a_sq"))};
    }
    case Method::Lindblad: {
      const double shanks = col("n_phot_shanks_scaled");
      return {std::isfinite(shanks) ? shanks : col("n_phot_scaled"), col("beta_scaled"), col("var_x"), col("var_y")};
    }
  }
  return {kNaN, kNaN, kNaN, kNaN};
}

}  // namespace

ComparisonReport compare(const std::vector<Method>& methods, const SweepSpec& spec) {
  std::vector<Method> unique;
  for (Method m : methods)
    if (std::find(unique.begin(), unique.end(), m) == unique.end()) unique.push_back(m);
  if (unique.size() < 2) throw ConfigError("compare needs at least two distinct methods");
  spec.validate();

  ComparisonReport rep;
  rep.methods = unique;
  const std::vector<double> eps = spec.grid.values();
  rep.table.columns.push_back("eps");
  for (Method m : unique)
    for (const char* q : kCompared) rep.table.columns.push_back(std::string(to_string(m)) + "_" + q);
  rep.table.rows.assign(eps.size(), {});
  for (std::size_t i = 0; i < eps.size(); ++i) rep.table.rows[i].push_back(eps[i]);

  std::vector<std::vector<std::array<double, 4>>> values(unique.size());
  for (std::size_t k = 0; k < unique.size(); ++k) {
    SweepSpec s = spec;
    s.method = unique[k];
    const Table t = run_sweep(s);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const auto v = compared_values(unique[k], t, i, s);
      values[k].push_back(v);
      rep.table.rows[i].insert(rep.table.rows[i].end(), v.begin(), v.end());
    }
    if (unique[k] == Method::FpMoments) {
      rep.undershoot = false;
      rep.overshoot = false;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 1.0)) continue;
        if (values[k][i][0] < eps[i] - 1.0) rep.undershoot = true;
        if (values[k][i][1] > 1.0) rep.overshoot = true;
      }
    }
  }

  for (std::size_t a = 0; a < unique.size(); ++a) {
    for (std::size_t b = a + 1; b < unique.size(); ++b) {
      for (std::size_t q = 0; q < std::size(kCompared); ++q) {
        Deviation d{unique[a], unique[b], kCompared[q], kNaN, kNaN};
        for (std::size_t i = 0; i < eps.size(); ++i) {
          const double diff = std::abs(values[a][i][q] - values[b][i][q]);
          if (!std::isfinite(diff)) continue;
          if (!(diff <= d.max_abs)) {
            d.max_abs = diff;
            d.at_eps = eps[i];
          }
        }
        if (std::isfinite(d.max_abs)) rep.deviations.push_back(d);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------- output

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

namespace {
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace

json to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json rec = json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) rec[t.columns[i]] = number_or_null(row[i]);
    rows.push_back(std::move(rec));
  }
  return json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

void write_table(std::ostream& out, const Table& t, Format f) {
  if (f == Format::Csv) {
    write_csv(out, t);
  } else {
    out << to_json(t).dump(2) << '\n';
  }
}

json to_json(const ComparisonReport& r) {
  json j = to_json(r.table);
  json methods = json::array();
  for (Method m : r.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  json dev = json::array();
  for (const auto& d : r.deviations)
    dev.push_back({{"a", to_string(d.a)},
                   {"b", to_string(d.b)},
                   {"quantity", d.quantity},
                   {"max_abs", number_or_null(d.max_abs)},
                   {"at_eps", number_or_null(d.at_eps)}});
  j["deviations"] = dev;
  j["undershoot"] = r.undershoot ? json(*r.undershoot) : json(nullptr);
  j["overshoot"] = r.overshoot ? json(*r.overshoot) : json(nullptr);
  return j;
}

void write_qgrid_csv(std::ostream& out, const QGrid& q) {
  out << "im\\re";
  for (int i = 0; i < q.grid.n_re; ++i) out << ',' << format_number(q.grid.re_at(i));
  out << '\n';
  for (int j = 0; j < q.grid.n_im; ++j) {
    out << format_number(q.grid.im_at(j));
    for (int i = 0; i < q.grid.n_re; ++i) out << ',' << format_number(q.at(i, j));
    out << '\n';
  }
}

json to_json(const QGrid& q) {
  const GridSpec& g = q.grid;
  return json{{"grid",
               {{"re_min", g.re_min},
                {"re_max", g.re_max},
                {"n_re", g.n_re},
                {"im_min", g.im_min},
                {"im_max", g.im_max},
                {"n_im", g.n_im}}},
              {"layout", "values[j * n_re + i] at (re_min + i*re_step, im_min + j*im_step)"},
              {"values", q.values},
              {"truncation_warning", q.truncation_warning},
              {"max_abs_alpha_sq", q.max_abs_alpha_sq}};
}

std::string gnuplot_hint(const Table& t, const std::string& data_path, Format f) {
  std::ostringstream s;
  s << "# gnuplot layout for " << data_path << "\n";
  if (f == Format::Json) s << "# the data file is JSON; regenerate it with --format csv for gnuplot\n";
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel '" << (t.columns.empty() ? "" : t.columns.front()) << "'\n"
    << "plot for [i=2:" << t.columns.size() << "] '" << data_path << "' using 1:i with linespoints\n";
  return s.str();
}

}  // namespace dpo::cli
