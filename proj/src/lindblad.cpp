#include "dpo/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dpo {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Triplet = Eigen::Triplet<Complex>;

void HilbertConfig::validate() const {
  if (n_phot < 2 || n_phon < 2) throw ParameterError("lindblad: need at least two levels per mode");
  // D^2 must fit the int indices of the sparse superoperator.
  if (static_cast<long long>(total()) * total() > 2000000000LL)
    throw ParameterError("lindblad: Hilbert space too large");
}

SparseMatrix annihilation(int dim) {
  SparseMatrix a(dim, dim);
  std::vector<Triplet> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

namespace {

SparseMatrix identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix kron(const SparseMatrix& A, const SparseMatrix& B) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros()) * B.nonZeros());
  for (int ja = 0; ja < A.outerSize(); ++ja)
    for (SparseMatrix::InnerIterator ia(A, ja); ia; ++ia)
      for (int jb = 0; jb < B.outerSize(); ++jb)
        for (SparseMatrix::InnerIterator ib(B, jb); ib; ++ib)
          t.emplace_back(ia.row() * B.rows() + ib.row(), ja * B.cols() + jb, ia.value() * ib.value());
  SparseMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// Same as PhysicalParams::validate except that g = 0 (uncoupled modes) is
// allowed, since nothing here needs the scaled variables.
void validate_physical(const PhysicalParams& p) {
  for (double v : {p.kappa, p.gamma_m, p.g, p.drive, p.nbar_b})
    if (!std::isfinite(v)) throw ParameterError("lindblad: physical parameters must be finite");
  if (!(p.kappa > 0.0) || !(p.gamma_m > 0.0))
    throw ParameterError("lindblad: kappa and gamma_m must be > 0 for a unique steady state");
  if (p.g < 0.0 || p.drive < 0.0 || p.nbar_b < 0.0)
    throw ParameterError("lindblad: g, drive and nbar_b must be >= 0");
}

}  // namespace

LadderOperators build_operators(const HilbertConfig& h) {
  h.validate();
  return {h, kron(annihilation(h.n_phot), identity(h.n_phon)), kron(identity(h.n_phot), annihilation(h.n_phon))};
}

Liouvillian::Liouvillian(const PhysicalParams& p, const HilbertConfig& h) : p_(p), h_(h), ops_(build_operators(h)) {
  validate_physical(p);
  const Complex I(0.0, 1.0);
  const SparseMatrix& a = ops_.a;
  const SparseMatrix& b = ops_.b;
  const SparseMatrix ad = a.adjoint();
  const SparseMatrix bd = b.adjoint();

  const SparseMatrix pump = ad * ad * b;
  const SparseMatrix drive = bd - b;
  hamiltonian_ = (I * p.g) * (pump - SparseMatrix(pump.adjoint())) + (I * p.drive) * drive;

  jumps_.push_back(std::sqrt(p.kappa) * a);
  jumps_.push_back(std::sqrt(p.gamma_m * (p.nbar_b + 1.0)) * b);
  if (p.nbar_b > 0.0) jumps_.push_back(std::sqrt(p.gamma_m * p.nbar_b) * bd);

  SparseMatrix decay(h.total(), h.total());
  for (const auto& j : jumps_) decay += SparseMatrix(j.adjoint()) * j;
  effective_ = -I * hamiltonian_ - 0.5 * decay;
}

MatrixXcd Liouvillian::apply(const MatrixXcd& rho) const {
  MatrixXcd out = effective_ * rho;
  MatrixXcd tmp = effective_ * rho.adjoint();
  out += tmp.adjoint();
  for (const auto& j : jumps_) {
    tmp = j * rho;
    out += tmp * j.adjoint();
  }
  return out;
}

const SparseMatrix& Liouvillian::matrix() const {
  if (!super_) {
    const int d = h_.total();
    const SparseMatrix id = identity(d);
    SparseMatrix L = kron(id, effective_) + kron(SparseMatrix(effective_.conjugate()), id);
    for (const auto& j : jumps_) L += kron(SparseMatrix(j.conjugate()), j);
    L.makeCompressed();
    super_ = std::move(L);
  }
  return *super_;
}

Liouvillian build_liouvillian(const PhysicalParams& p, const HilbertConfig& h) { return Liouvillian(p, h); }

VectorXcd trace_functional(int dim) {
  VectorXcd t = VectorXcd::Zero(static_cast<Eigen::Index>(dim) * dim);
  for (int k = 0; k < dim; ++k) t(static_cast<Eigen::Index>(k) * dim + k) = 1.0;
  return t;
}

namespace {

using MatrixRef = Eigen::Ref<MatrixXcd>;
using ConstMatrixRef = Eigen::Ref<const MatrixXcd>;

// A X + X B^dag = C for upper triangular A, B; X overwrites C. Recursive
// halving keeps most of the work in matrix products.
void triangular_sylvester(const ConstMatrixRef& A, const ConstMatrixRef& B, MatrixRef X) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = B.rows();
  if (std::max(m, n) <= 48) {
    // Column j couples only to columns k >= j through B^dag.
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      const Complex shift = std::conj(B(j, j));
      auto x = X.col(j);
      for (Eigen::Index i = m - 1; i >= 0; --i) {
        x(i) /= A(i, i) + shift;
        if (i > 0) x.head(i) -= A.col(i).head(i) * x(i);
      }
      if (j > 0) X.leftCols(j).noalias() -= x * B.col(j).head(j).adjoint();
    }
    return;
  }
  if (m >= n) {
    const Eigen::Index h = m / 2;
    triangular_sylvester(A.bottomRightCorner(m - h, m - h), B, X.bottomRows(m - h));
    X.topRows(h).noalias() -= A.topRightCorner(h, m - h) * X.bottomRows(m - h);
    triangular_sylvester(A.topLeftCorner(h, h), B, X.topRows(h));
  } else {
    const Eigen::Index h = n / 2;
    triangular_sylvester(A, B.bottomRightCorner(n - h, n - h), X.rightCols(n - h));
    X.leftCols(h).noalias() -= X.rightCols(n - h) * B.topRightCorner(h, n - h).adjoint();
    triangular_sylvester(A, B.topLeftCorner(h, h), X.leftCols(h));
  }
}

// Solves (K - s/2) X + X (K - s/2)^dag = C through the complex Schur form
// K = Q T Q^dag. Without drive the vacuum is a zero eigenvalue of K, which
// makes the unshifted equation singular; the small shift s keeps it solvable.
class LyapunovSolver {
 public:
  LyapunovSolver(const SparseMatrix& K, double shift) {
    Eigen::ComplexSchur<MatrixXcd> schur(MatrixXcd(K), true);
    if (schur.info() != Eigen::Success) throw SolverFailure("lindblad: Schur decomposition failed");
    T_ = schur.matrixT();
    Q_ = schur.matrixU();
    T_.diagonal().array() -= 0.5 * shift;
  }

  MatrixXcd solve(const MatrixXcd& C) const {
    MatrixXcd tmp;
    tmp.noalias() = Q_.adjoint() * C;
    MatrixXcd Y;
    Y.noalias() = tmp * Q_;
    triangular_sylvester(T_, T_, Y);
    tmp.noalias() = Q_ * Y;
    Y.noalias() = tmp * Q_.adjoint();
    return Y;
  }

 private:
  MatrixXcd T_, Q_;
};

Complex inner(const MatrixXcd& u, const MatrixXcd& v) { return (u.conjugate().cwiseProduct(v)).sum(); }

struct KrylovResult {
  MatrixXcd x;
  int iterations = 0;
};

// Restarted GMRES with right preconditioning for
//   M(rho) = L(rho) + Tr(rho) 1/D = 1/D,
// whose unique solution is the unit-trace steady state (L preserves the trace).
KrylovResult gmres_steady_state(const Liouvillian& L, const SteadyStateOptions& opt) {
  const int d = L.hilbert().total();
  const LyapunovSolver precond(L.effective(), 1e-6 * (L.params().kappa + L.params().gamma_m));
  const MatrixXcd rhs = MatrixXcd::Identity(d, d) / static_cast<double>(d);
  auto op = [&](const MatrixXcd& v) {
    MatrixXcd out = L.apply(v);
    out.diagonal().array() += v.trace() / static_cast<double>(d);
    return out;
  };

  KrylovResult res;
  res.x = opt.initial_guess ? *opt.initial_guess : rhs;
  if (res.x.rows() != d || res.x.cols() != d) throw ParameterError("lindblad: initial guess has the wrong dimension");

  const double bytes_per_vector = 16.0 * d * d;
  const int m = std::max(2, std::min(opt.restart, static_cast<int>(opt.krylov_memory_mb * 1048576.0 / bytes_per_vector) - 1));
  std::vector<MatrixXcd> V(static_cast<std::size_t>(m) + 1);
  MatrixXcd H = MatrixXcd::Zero(m + 1, m);
  VectorXcd g(m + 1);
  std::vector<double> cs(m);
  std::vector<Complex> sn(m);

  while (true) {
    MatrixXcd r = rhs - op(res.x);
    const double beta = r.norm();
    const double target = opt.tol * std::max(res.x.norm(), 1.0 / std::sqrt(static_cast<double>(d)));
    if (beta <= target) return res;
    if (res.iterations >= opt.max_iterations) {
      std::ostringstream msg;
      msg << "lindblad: GMRES did not converge in " << opt.max_iterations << " iterations (residual "
          << beta / res.x.norm() << ")";
      throw SolverFailure(msg.str());
    }

    V[0] = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();
    int k = 0;
    for (; k < m && res.iterations < opt.max_iterations; ++k) {
      MatrixXcd w = op(precond.solve(V[k]));
      for (int i = 0; i <= k; ++i) {
        H(i, k) = inner(V[i], w);
        w -= H(i, k) * V[i];
      }
      H(k + 1, k) = w.norm();
      ++res.iterations;
      for (int i = 0; i < k; ++i) {
        const Complex t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -std::conj(sn[i]) * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double hk = std::abs(H(k, k));
      const double hk1 = std::abs(H(k + 1, k));
      const double nu = std::hypot(hk, hk1);
      if (nu == 0.0) break;
      cs[k] = hk / nu;
      sn[k] = hk == 0.0 ? Complex(1.0) : (H(k, k) / hk) * std::conj(H(k + 1, k)) / nu;
      H(k, k) = cs[k] * H(k, k) + sn[k] * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g(k + 1) = -std::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      const bool done = std::abs(g(k + 1)) <= target;
      if (hk1 == 0.0 || done) {
        ++k;
        break;
      }
      V[k + 1] = w / hk1;
    }
    const VectorXcd y =
        H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    MatrixXcd update = MatrixXcd::Zero(d, d);
    for (int i = 0; i < k; ++i) update += y(i) * V[i];
    res.x += precond.solve(update);
  }
}

DensityMatrix direct_steady_state(const Liouvillian& L) {
  const int d = L.hilbert().total();
  const SparseMatrix& S = L.matrix();

  // The population rows sum to zero (trace preservation), so one of them can
  // carry the trace constraint instead.
  int row = 0;
  double best = -1.0;
  for (int k = 0; k < d; ++k) {
    const int i = k * d + k;
    const double v = std::abs(S.coeff(i, i));
    if (v > best) {
      best = v;
      row = i;
    }
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(S.nonZeros()) + d);
  for (int j = 0; j < S.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(S, j); it; ++it)
      if (it.row() != row) t.emplace_back(it.row(), j, it.value());
  for (int k = 0; k < d; ++k) t.emplace_back(row, k * d + k, 1.0);
  SparseMatrix A(S.rows(), S.cols());
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverFailure("lindblad: sparse LU factorization failed: " + lu.lastErrorMessage());
  VectorXcd e = VectorXcd::Zero(S.rows());
  e(row) = 1.0;
  const VectorXcd v = lu.solve(e);
  if (lu.info() != Eigen::Success) throw SolverFailure("lindblad: sparse LU solve failed");

  DensityMatrix out;
  out.rho = Eigen::Map<const MatrixXcd>(v.data(), d, d);
  out.solver = SolverKind::Direct;
  out.replaced_row = row;
  return out;
}

void finalize(DensityMatrix& dm, const Liouvillian& L) {
  dm.h = L.hilbert();
  dm.trace_raw = dm.rho.trace();
  if (!(std::abs(dm.trace_raw) > 0.0) || !std::isfinite(std::abs(dm.trace_raw)))
    throw SolverFailure("lindblad: steady state has zero or non-finite trace");
  dm.rho /= dm.trace_raw;
  dm.residual = L.apply(dm.rho).norm() / dm.rho.norm();
  dm.hermiticity_defect = (dm.rho - dm.rho.adjoint()).cwiseAbs().maxCoeff();

  MatrixXcd herm = 0.5 * (dm.rho + dm.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(herm);
  if (eig.info() != Eigen::Success) throw SolverFailure("lindblad: eigen-decomposition of rho failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  dm.min_eigenvalue = lambda.minCoeff();
  if (dm.min_eigenvalue < 0.0) {
    dm.clipped_weight = -lambda.cwiseMin(0.0).sum();
    lambda = lambda.cwiseMax(0.0);
    herm = eig.eigenvectors() * lambda.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
    herm /= herm.trace().real();
  }
  dm.rho = std::move(herm);
}

}  // namespace

DensityMatrix steady_state(const Liouvillian& L, const SteadyStateOptions& opt) {
  const bool direct = opt.solver == SolverKind::Direct ||
                      (opt.solver == SolverKind::Auto && L.hilbert().total() <= opt.direct_max_dim);
  DensityMatrix dm;
  if (direct) {
    dm = direct_steady_state(L);
  } else {
    auto res = gmres_steady_state(L, opt);
    dm.rho = std::move(res.x);
    dm.iterations = res.iterations;
    dm.solver = SolverKind::Iterative;
  }
  finalize(dm, L);
  return dm;
}

MatrixXcd embed_state(const MatrixXcd& rho, const HilbertConfig& from, const HilbertConfig& to) {
  if (rho.rows() != from.total() || rho.cols() != from.total())
    throw ParameterError("lindblad: state does not match its Hilbert configuration");
  if (to.n_phot < from.n_phot || to.n_phon < from.n_phon)
    throw ParameterError("lindblad: can only embed into a larger truncation");
  std::vector<int> map(static_cast<std::size_t>(from.total()));
  for (int na = 0; na < from.n_phot; ++na)
    for (int nb = 0; nb < from.n_phon; ++nb) map[na * from.n_phon + nb] = na * to.n_phon + nb;
  MatrixXcd out = MatrixXcd::Zero(to.total(), to.total());
  for (int j = 0; j < from.total(); ++j)
    for (int i = 0; i < from.total(); ++i) out(map[i], map[j]) = rho(i, j);
  return out;
}

Complex expect(const SparseMatrix& op, const MatrixXcd& rho) {
  Complex sum = 0.0;
  for (int j = 0; j < op.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(op, j); it; ++it) sum += it.value() * rho(j, it.row());
  return sum;
}

Observables observables(const DensityMatrix& dm, const LadderOperators& ops) {
  const MatrixXcd& rho = dm.rho;
  Observables o;
  const SparseMatrix ad = ops.a.adjoint();
  const SparseMatrix bd = ops.b.adjoint();
  o.n_phot = expect(SparseMatrix(ad * ops.a), rho).real();
  o.alpha = expect(ops.a, rho);
  o.a_sq = expect(SparseMatrix(ops.a * ops.a), rho);
  o.beta = expect(ops.b, rho);
  o.n_phon = expect(SparseMatrix(bd * ops.b), rho).real();
  const double mx = 2.0 * o.alpha.real();
  const double my = 2.0 * o.alpha.imag();
  o.var_x = 1.0 + 2.0 * o.n_phot + 2.0 * o.a_sq.real() - mx * mx;
  o.var_y = 1.0 + 2.0 * o.n_phot - 2.0 * o.a_sq.real() - my * my;
  return o;
}

MatrixXcd partial_trace_photon(const MatrixXcd& rho, const HilbertConfig& h) {
  if (rho.rows() != h.total() || rho.cols() != h.total())
    throw ParameterError("lindblad: state does not match its Hilbert configuration");
  MatrixXcd out = MatrixXcd::Zero(h.n_phot, h.n_phot);
  for (int j = 0; j < h.n_phot; ++j)
    for (int i = 0; i < h.n_phot; ++i)
      for (int k = 0; k < h.n_phon; ++k) out(i, j) += rho(i * h.n_phon + k, j * h.n_phon + k);
  return out;
}

double GridSpec::re_step() const { return n_re > 1 ? (re_max - re_min) / (n_re - 1) : 0.0; }
double GridSpec::im_step() const { return n_im > 1 ? (im_max - im_min) / (n_im - 1) : 0.0; }
double GridSpec::re_at(int i) const { return re_min + i * re_step(); }
double GridSpec::im_at(int j) const { return im_min + j * im_step(); }

void GridSpec::validate() const {
  if (n_re < 1 || n_im < 1) throw ParameterError("qfunc: grid needs at least one point per axis");
  if (!(re_max >= re_min) || !(im_max >= im_min)) throw ParameterError("qfunc: grid bounds are reversed");
}

VectorXcd coherent_state(Complex alpha, int dim) {
  VectorXcd c(dim);
  c(0) = 1.0;
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c / c.norm();
}

QGrid q_function(const MatrixXcd& rho_photon, const GridSpec& grid) {
  grid.validate();
  const int dim = static_cast<int>(rho_photon.rows());
  QGrid q;
  q.grid = grid;
  q.values.resize(static_cast<std::size_t>(grid.n_re) * grid.n_im);
  for (int j = 0; j < grid.n_im; ++j) {
    for (int i = 0; i < grid.n_re; ++i) {
      const Complex alpha(grid.re_at(i), grid.im_at(j));
      q.max_abs_alpha_sq = std::max(q.max_abs_alpha_sq, std::norm(alpha));
      const VectorXcd c = coherent_state(alpha, dim);
      q.values[static_cast<std::size_t>(j) * grid.n_re + i] =
          (c.adjoint() * rho_photon * c).value().real() / std::numbers::pi;
    }
  }
  q.truncation_warning = q.max_abs_alpha_sq > 0.5 * dim;
  return q;
}

std::vector<QPeak> q_peaks(const QGrid& q, double min_fraction) {
  std::vector<QPeak> peaks;
  if (q.values.empty()) return peaks;
  const double top = *std::max_element(q.values.begin(), q.values.end());
  const int nr = q.grid.n_re;
  const int ni = q.grid.n_im;
  for (int j = 0; j < ni; ++j) {
    for (int i = 0; i < nr; ++i) {
      const double v = q.at(i, j);
      if (v < min_fraction * top) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || i + di < 0 || i + di >= nr || j + dj < 0 || j + dj >= ni) continue;
          if (q.at(i + di, j + dj) >= v) {
            is_max = false;
            break;
          }
        }
      if (is_max) peaks.push_back({i, j, {q.grid.re_at(i), q.grid.im_at(j)}, v});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const QPeak& a, const QPeak& b) { return a.value > b.value; });
  return peaks;
}

TruncationScan truncation_scan(const PhysicalParams& p, std::span<const int> sizes, const SteadyStateOptions& opt,
                               bool keep_states) {
  TruncationScan scan;
  std::optional<DensityMatrix> prev;
  for (int n : sizes) {
    const HilbertConfig h = HilbertConfig::from_n(n);
    const Liouvillian L(p, h);
    SteadyStateOptions o = opt;
    MatrixXcd guess;
    if (prev && prev->h.n_phot <= h.n_phot && prev->h.n_phon <= h.n_phon && !opt.initial_guess) {
      guess = embed_state(prev->rho, prev->h, h);
      o.initial_guess = &guess;
    } else if (opt.initial_guess && opt.initial_guess->rows() != h.total()) {
      o.initial_guess = nullptr;
    }
    DensityMatrix dm = steady_state(L, o);
    scan.sizes.push_back(n);
    scan.obs.push_back(observables(dm, L.ops()));
    if (keep_states) scan.states.push_back(dm);
    prev = std::move(dm);
  }
  if (!keep_states && prev) scan.states.push_back(std::move(*prev));
  return scan;
}

}  // namespace dpo
