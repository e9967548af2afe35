// Sweep orchestration behind the `dpo` command-line tool: configuration
// ingestion, per-method eps sweeps, cross-method comparison and the CSV/JSON
// writers. Kept out of the tool itself so tests can drive it directly.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpo/fpmoments.hpp"
#include "dpo/lindblad.hpp"
#include "dpo/params.hpp"
#include "dpo/sde.hpp"

namespace dpo::cli {

enum class Method { Semiclassical, SelfConsistent, FpMoments, Sde, Lindblad };
std::string_view to_string(Method m);
/// Accepts the subcommand spellings (`fp-moments`, `lindblad-ss`, ...).
Method method_from_string(std::string_view s);

enum class Format { Csv, Json };
Format format_from_string(std::string_view s);

/// Bad input: malformed config, missing or invalid parameters. Exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A module failed at one grid point. Exit code 3.
struct NumericalError : std::runtime_error {
  NumericalError(Method m, double eps, const std::string& what);
  Method method;
  double eps;
  std::string detail;
};

struct EpsGrid {
  double start = 0.0;
  double stop = 3.0;
  double step = 0.01;

  /// start, start + step, ... up to stop (inclusive within step/1e6).
  std::vector<double> values() const;
  void validate() const;
};

/// Model parameters given either in scaled form (x, gamma_ratio) or in
/// physical rates (kappa, gamma_m, g). Unscaling anchors kappa (default 1).
struct ModelParams {
  std::optional<double> x;
  std::optional<double> gamma_ratio;
  std::optional<double> kappa;
  std::optional<double> gamma_m;
  std::optional<double> g;
  double nbar_b = 0.0;

  bool has_physical() const { return kappa && gamma_m && g; }
  ScaledParams scaled(double eps) const;
  PhysicalParams physical(double eps) const;
  void validate() const;
};

struct SdeSettings {
  SdeMode mode = SdeMode::Reduced;
  double dt = 1e-3;
  double t_burn = 20.0;
  double t_total = 120.0;
  int n_traj = 1000;
  double divergence_radius = 50.0;
  std::string trace_path;  ///< trajectory-0 dump (CSV) when non-empty
  long trace_stride = 100;
};

struct LindbladSettings {
  int n_phot_dim = 30;
  int n_phon_dim = 15;
  std::vector<int> shanks;  ///< truncation sizes N (2N x N) for extrapolation
  SteadyStateOptions solver;
};

struct QfuncSettings {
  GridSpec grid{-6.0, 6.0, -6.0, 6.0, 49, 49};
};

struct SweepSpec {
  Method method = Method::FpMoments;
  EpsGrid grid;
  ModelParams model;
  SeriesOptions fp;
  SdeSettings sde;
  LindbladSettings lindblad;
  QfuncSettings qfunc;
  std::vector<Method> compare_methods;
  std::uint64_t seed = 0x5eedULL;
  int threads = 1;

  void validate() const;
};

/// Parses the documented JSON configuration; unknown keys are errors.
SweepSpec spec_from_json(const nlohmann::json& j, SweepSpec base = {});
SweepSpec load_config(const std::string& path, SweepSpec base = {});

/// flag > environment > config > 1.
int resolve_threads(std::optional<int> flag, const char* env_value, std::optional<int> config);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

/// Column layout of each method's sweep (fixed; part of the output format).
std::vector<std::string> sweep_columns(Method m);

/// One row per grid value, in grid order regardless of `threads`.
Table run_sweep(const SweepSpec& spec);

struct QfuncResult {
  double eps = 0.0;
  double drive = 0.0;
  HilbertConfig hilbert;
  QGrid q;
  std::vector<QPeak> peaks;
  double n_phot = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Photon-mode Q-function of the steady state at one drive value.
QfuncResult run_qfunc(const SweepSpec& spec, double eps);

struct Deviation {
  Method a;
  Method b;
  std::string quantity;
  double max_abs = 0.0;
  double at_eps = 0.0;
};

struct ComparisonReport {
  std::vector<Method> methods;
  Table table;  ///< eps then <method>_n_phot, _beta, _var_x, _var_y per method
  std::vector<Deviation> deviations;
  std::optional<bool> undershoot;  ///< some eps > 1 with FP n_phot < eps - 1
  std::optional<bool> overshoot;   ///< some eps > 1 with FP beta_ss > 1
};

/// Needs at least two distinct methods. All quantities are scaled photon
/// numbers / phonon amplitudes and unscaled quadrature variances.
ComparisonReport compare(const std::vector<Method>& methods, const SweepSpec& spec);

/// Shortest round-trip formatting, independent of the global locale.
std::string format_number(double v);

void write_csv(std::ostream& out, const Table& t);
nlohmann::json to_json(const Table& t);
void write_table(std::ostream& out, const Table& t, Format f);
nlohmann::json to_json(const ComparisonReport& r);

/// Matrix layout: header `im\re,<re_0>,...`, then one row per imaginary value.
void write_qgrid_csv(std::ostream& out, const QGrid& q);
nlohmann::json to_json(const QGrid& q);

/// Gnuplot script plotting every column against the first.
std::string gnuplot_hint(const Table& t, const std::string& data_path, Format f);

}  // namespace dpo::cli
