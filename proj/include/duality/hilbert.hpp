#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Dense complex linear algebra for small Hilbert spaces (a few hundred
// dimensions at most): tensor products, partial traces, Gram-matrix
// embeddings, spectral decompositions and density-matrix validity gates.

namespace duality {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Eigenvalue gate used when deciding whether an operator is PSD.
inline constexpr double kPsdTol = 1e-9;
/// Budget for factorization / reconstruction round trips.
inline constexpr double kRoundTripTol = 1e-10;

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BadValue : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NotPSD : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotDensityMatrix : std::domain_error {
  using std::domain_error::domain_error;
};
struct ZeroProbability : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IncompleteChannel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Inner products follow the physics convention <a|b> = a.dot(b); Eigen
// conjugates the left factor.

inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector tensor(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

inline Eigen::VectorXd hermitian_eigenvalues(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()),
                                                  Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Traces out every tensor factor not listed in `keep`. Factors are numbered
/// left to right; kept factors retain their relative order. The flat index
/// convention is factor-major, i.e. flat = ((i0*d1 + i1)*d2 + i2)*...
inline ComplexMatrix partial_trace(const ComplexMatrix& rho,
                                   const std::vector<int>& dims,
                                   const std::vector<int>& keep) {
  const Eigen::Index total =
      std::accumulate(dims.begin(), dims.end(), Eigen::Index{1},
                      [](Eigen::Index acc, int d) { return acc * d; });
  if (rho.rows() != rho.cols())
    throw DimensionMismatch("partial_trace: matrix must be square");
  if (rho.rows() != total)
    throw DimensionMismatch("partial_trace: product of dims != matrix size");
  for (int d : dims)
    if (d <= 0) throw DimensionMismatch("partial_trace: nonpositive dim");

  const int nsys = static_cast<int>(dims.size());
  std::vector<bool> kept(nsys, false);
  for (int k : keep) {
    if (k < 0 || k >= nsys)
      throw DimensionMismatch("partial_trace: keep index out of range");
    kept[k] = true;
  }

  std::vector<Eigen::Index> stride(nsys, 1);
  for (int s = nsys - 2; s >= 0; --s) stride[s] = stride[s + 1] * dims[s + 1];

  std::vector<int> kept_sys, traced_sys;
  for (int s = 0; s < nsys; ++s) (kept[s] ? kept_sys : traced_sys).push_back(s);

  Eigen::Index kdim = 1, tdim = 1;
  for (int s : kept_sys) kdim *= dims[s];
  for (int s : traced_sys) tdim *= dims[s];

  // Flat offset of a multi-index restricted to the given subsystem list.
  auto offset = [&](const std::vector<int>& sys, Eigen::Index flat) {
    Eigen::Index off = 0;
    for (auto it = sys.rbegin(); it != sys.rend(); ++it) {
      const int s = *it;
      off += (flat % dims[s]) * stride[s];
      flat /= dims[s];
    }
    return off;
  };

  ComplexMatrix out = ComplexMatrix::Zero(kdim, kdim);
  for (Eigen::Index r = 0; r < kdim; ++r) {
    const Eigen::Index roff = offset(kept_sys, r);
    for (Eigen::Index c = 0; c < kdim; ++c) {
      const Eigen::Index coff = offset(kept_sys, c);
      Complex acc = 0.0;
      for (Eigen::Index t = 0; t < tdim; ++t) {
        const Eigen::Index toff = offset(traced_sys, t);
        acc += rho(roff + toff, coff + toff);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

/// Result of the density-matrix validity gate; `failure` names every check
/// that did not hold.
struct DensityCheck {
  bool ok = false;
  bool hermitian = false;
  bool unit_trace = false;
  bool positive = false;
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  std::string failure;
  explicit operator bool() const { return ok; }
};

inline DensityCheck is_density_matrix(const ComplexMatrix& rho,
                                      double tol = kPsdTol) {
  DensityCheck c;
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    c.failure = "not square";
    return c;
  }
  c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.hermitian = c.hermiticity_error <= tol;
  c.trace_error = std::abs(rho.trace() - Complex(1.0));
  c.unit_trace = c.trace_error <= tol;
  c.min_eigenvalue = hermitian_eigenvalues(rho).minCoeff();
  c.positive = c.min_eigenvalue >= -tol;
  c.ok = c.hermitian && c.unit_trace && c.positive;
  if (!c.ok) {
    std::vector<std::string> parts;
    if (!c.hermitian) parts.push_back("not Hermitian");
    if (!c.unit_trace) parts.push_back("trace != 1");
    if (!c.positive) parts.push_back("negative eigenvalue");
    for (std::size_t i = 0; i < parts.size(); ++i)
      c.failure += (i ? "; " : "") + parts[i];
  }
  return c;
}

/// Matrix of pairwise inner products <d_i|d_j>. Hermitian, unit diagonal,
/// PSD within tolerance; these are enforced at construction.
class GramMatrix {
 public:
  explicit GramMatrix(ComplexMatrix overlaps, double tol = kPsdTol)
      : m_(std::move(overlaps)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
      throw DimensionMismatch("GramMatrix: must be square and nonempty");
    const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) throw BadValue("GramMatrix: not Hermitian");
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
      if (std::abs(m_(i, i) - Complex(1.0)) > tol)
        throw BadValue("GramMatrix: diagonal entries must be 1");
    if (hermitian_eigenvalues(m_).minCoeff() < -tol)
      throw NotPSD("GramMatrix: smallest eigenvalue below -tol");
  }

  static GramMatrix identity(int size) {
    return GramMatrix(ComplexMatrix::Identity(size, size));
  }

  const ComplexMatrix& overlaps() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  int size() const { return static_cast<int>(m_.rows()); }

 private:
  ComplexMatrix m_;
};

/// Manufactures explicit vectors v_i with <v_i|v_j> = g(i,j), by pivoted
/// Cholesky factorization. Rank-deficient Gram matrices embed into the
/// minimal subspace; every vector is zero-padded to dimension g.size() so
/// callers see a fixed ambient space.
inline std::vector<ComplexVector> gram_embed(const GramMatrix& g) {
  const int m = g.size();
  ComplexMatrix a = g.overlaps();
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);

  // Pivots below this are treated as exhausted rank; the truncation error in
  // the reconstructed overlaps is bounded by the largest discarded pivot.
  const double rank_tol = 1e-11;
  int rank = 0;
  for (int k = 0; k < m; ++k) {
    int pivot = k;
    for (int j = k + 1; j < m; ++j)
      if (a(j, j).real() > a(pivot, pivot).real()) pivot = j;
    const double d = a(pivot, pivot).real();
    if (d < -kPsdTol) throw NotPSD("gram_embed: negative pivot");
    if (d <= rank_tol) break;
    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      a.col(k).swap(a.col(pivot));
      std::swap(perm[k], perm[pivot]);
    }
    const double l = std::sqrt(d);
    a(k, k) = l;
    for (int i = k + 1; i < m; ++i) a(i, k) /= l;
    // Update the whole active square, not just its lower triangle: pivot
    // swaps exchange full rows/columns, so stale upper-triangle entries
    // would otherwise migrate into positions later reads rely on.
    for (int j = k + 1; j < m; ++j)
      for (int i = k + 1; i < m; ++i) a(i, j) -= a(i, k) * std::conj(a(j, k));
    ++rank;
  }

  // P g P^T = L L^dagger; the conjugated rows of L realize the overlaps.
  std::vector<ComplexVector> out(m, ComplexVector::Zero(m));
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < rank && c <= i; ++c)
      out[perm[i]](c) = std::conj(a(i, c));
  return out;
}

struct Eigenpair {
  double weight = 0.0;
  ComplexVector state;
};

/// Spectral decomposition of a density matrix into weighted orthonormal
/// projectors, heaviest first. Weights below 1e-12 are dropped. Eigenvector
/// phases are canonicalized (largest-modulus component real positive) so the
/// decomposition is deterministic.
inline std::vector<Eigenpair> spectral_decompose(const ComplexMatrix& rho,
                                                 double tol = kPsdTol) {
  const DensityCheck check = is_density_matrix(rho, tol);
  if (!check.ok) throw NotDensityMatrix("spectral_decompose: " + check.failure);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()));
  std::vector<Eigenpair> out;
  for (Eigen::Index k = rho.rows() - 1; k >= 0; --k) {
    const double w = es.eigenvalues()(k);
    if (w <= 1e-12) continue;
    ComplexVector v = es.eigenvectors().col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    const Complex top = v(arg);
    if (std::abs(top) > 0) v *= std::conj(top) / std::abs(top);
    out.push_back({w, std::move(v)});
  }
  return out;
}

}  // namespace duality
