// Truncated Fock-space master equation for the parametric oscillator
//
//   d rho/dt = -i[H, rho] + kappa D(a) rho + Gamma nbar D(b^dag) rho
//              + Gamma (nbar + 1) D(b) rho,
//   H = i g (a^dag a^dag b - a a b^dag) + i E (b^dag - b),
//   D(O) rho = O rho O^dag - (O^dag O rho + rho O^dag O)/2.
//
// Basis ordering: |n_photon, n_phonon> -> n_photon * n_phon + n_phonon
// (photon factor first in every Kronecker product).
//
// Vectorization is column stacking, vec(A rho B) = (B^T (x) A) vec(rho), so
// -i[H, rho] -> -i (1 (x) H - H^T (x) 1) and
// D(O) -> conj(O) (x) O - (1 (x) O^dag O + (O^dag O)^T (x) 1)/2.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpo/params.hpp"
#include "dpo/shanks.hpp"

namespace dpo {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

struct HilbertConfig {
  int n_phot = 30;  ///< photon levels |0>..|n_phot-1>
  int n_phon = 15;  ///< phonon levels

  /// The usual 2N photons x N phonons truncation.
  static HilbertConfig from_n(int n) { return {2 * n, n}; }
  int total() const { return n_phot * n_phon; }
  void validate() const;
};

/// Single-mode annihilation operator with sqrt(n) on the superdiagonal.
SparseMatrix annihilation(int dim);

struct LadderOperators {
  HilbertConfig h;
  SparseMatrix a;  ///< a (x) 1
  SparseMatrix b;  ///< 1 (x) b
};

LadderOperators build_operators(const HilbertConfig& h);

/// Operator form of the generator plus its sparse superoperator.
class Liouvillian {
 public:
  Liouvillian(const PhysicalParams& p, const HilbertConfig& h);

  const HilbertConfig& hilbert() const { return h_; }
  const PhysicalParams& params() const { return p_; }
  const LadderOperators& ops() const { return ops_; }
  const SparseMatrix& hamiltonian() const { return hamiltonian_; }
  /// Jump operators with rates absorbed, sqrt(rate) * O.
  const std::vector<SparseMatrix>& jumps() const { return jumps_; }
  /// Non-Hermitian part -iH - (1/2) sum O^dag O.
  const SparseMatrix& effective() const { return effective_; }

  /// L(rho) without forming the superoperator.
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

  /// The D^2 x D^2 column-stacked superoperator (built on first use).
  const SparseMatrix& matrix() const;

 private:
  PhysicalParams p_;
  HilbertConfig h_;
  LadderOperators ops_;
  SparseMatrix hamiltonian_;
  std::vector<SparseMatrix> jumps_;
  SparseMatrix effective_;
  mutable std::optional<SparseMatrix> super_;
};

Liouvillian build_liouvillian(const PhysicalParams& p, const HilbertConfig& h);

/// Vectorized trace functional t with t^T vec(rho) = Tr(rho).
Eigen::VectorXcd trace_functional(int dim);

enum class SolverKind { Auto, Direct, Iterative };

struct SteadyStateOptions {
  SolverKind solver = SolverKind::Auto;
  int direct_max_dim = 80;        ///< Auto uses sparse LU up to this Hilbert dimension
  double tol = 1e-10;             ///< target ||L rho||_F / ||rho||_F
  int restart = 300;              ///< GMRES Krylov size, capped by krylov_memory_mb
  double krylov_memory_mb = 1536;
  int max_iterations = 4000;
  const Eigen::MatrixXcd* initial_guess = nullptr;  ///< iterative warm start (same dimension)
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DensityMatrix {
  HilbertConfig h;
  Eigen::MatrixXcd rho;          ///< Hermitized, unit trace, negative eigenvalues clipped
  Complex trace_raw;             ///< trace returned by the solver before normalization
  double hermiticity_defect = 0; ///< max |rho - rho^dag| before Hermitization
  double min_eigenvalue = 0;     ///< before clipping
  double clipped_weight = 0;     ///< sum of clipped negative eigenvalues (absolute)
  double residual = 0;           ///< ||L rho||_F / ||rho||_F of the raw solution
  int iterations = 0;            ///< Krylov iterations (0 for the direct solver)
  SolverKind solver = SolverKind::Direct;
  int replaced_row = -1;         ///< row swapped for the trace constraint (direct solver)
};

DensityMatrix steady_state(const Liouvillian& L, const SteadyStateOptions& opt = {});

/// Zero-pads a state of a smaller truncation into a larger one.
Eigen::MatrixXcd embed_state(const Eigen::MatrixXcd& rho, const HilbertConfig& from, const HilbertConfig& to);

struct Observables {
  double n_phot = 0;   ///< <a^dag a>
  Complex alpha;       ///< <a>
  Complex a_sq;        ///< <a^2>
  Complex beta;        ///< <b>
  double n_phon = 0;   ///< <b^dag b>
  double var_x = 1;    ///< <X^2> - <X>^2, X = a^dag + a
  double var_y = 1;    ///< <Y^2> - <Y>^2, Y = i(a^dag - a)
};

/// Tr(O rho) for a sparse operator.
Complex expect(const SparseMatrix& op, const Eigen::MatrixXcd& rho);

/// Quadratures use the normally ordered forms
/// <X^2> = 1 + 2<a^dag a> + 2 Re<a^2>, <Y^2> = 1 + 2<a^dag a> - 2 Re<a^2>.
Observables observables(const DensityMatrix& rho, const LadderOperators& ops);

/// Traces out the phonon factor.
Eigen::MatrixXcd partial_trace_photon(const Eigen::MatrixXcd& rho, const HilbertConfig& h);

struct GridSpec {
  double re_min = -6, re_max = 6;
  double im_min = -6, im_max = 6;
  int n_re = 49, n_im = 49;

  double re_at(int i) const;
  double im_at(int j) const;
  double re_step() const;
  double im_step() const;
  void validate() const;
};

struct QGrid {
  GridSpec grid;
  std::vector<double> values;  ///< row-major: values[j * n_re + i] at (re_at(i), im_at(j))
  bool truncation_warning = false;  ///< some |alpha|^2 exceeded half the photon dimension
  double max_abs_alpha_sq = 0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n_re + i]; }
};

/// Truncated, renormalized coherent state |alpha> in a dim-level space.
Eigen::VectorXcd coherent_state(Complex alpha, int dim);

/// Q(alpha) = <alpha|rho|alpha>/pi for a single-mode rho.
QGrid q_function(const Eigen::MatrixXcd& rho_photon, const GridSpec& grid);

struct QPeak {
  int i = 0, j = 0;
  Complex alpha;
  double value = 0;
};

/// Strict local maxima (8-neighbourhood) above `min_fraction` of the global
/// maximum, sorted by decreasing value.
std::vector<QPeak> q_peaks(const QGrid& q, double min_fraction = 0.1);

/// Steady-state observables over a list of truncations N (2N x N), with
/// warm starts between consecutive sizes.
struct TruncationScan {
  std::vector<int> sizes;
  std::vector<Observables> obs;
  std::vector<DensityMatrix> states;  ///< only the last one is kept unless keep_states
};

TruncationScan truncation_scan(const PhysicalParams& p, std::span<const int> sizes,
                               const SteadyStateOptions& opt = {}, bool keep_states = false);

}  // namespace dpo
