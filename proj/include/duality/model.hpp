#pragma once

#include "duality/hilbert.hpp"

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

// Quanton-detector state builders. The quanton runs over n paths; the path
// detector has internal states d_0 (ready), d_1..d_n (marked) specified by
// their Gram matrix, and a location qubit spanned by |Y> (present) and |N>
// (absent) with amplitudes c1, c2.
//
// Joint-space flat index convention: (path, internal, location) with the
// location fastest, i.e. flat = (path*m + internal)*2 + loc, loc 0 = Y,
// 1 = N, m = number of internal states.

namespace duality {

struct QuantonConfig {
  Eigen::VectorXd p;
  std::optional<ComplexMatrix> rho_in;

  int paths() const { return static_cast<int>(p.size()); }
  bool pure() const { return !rho_in.has_value(); }

  static QuantonConfig uniform(int n) {
    if (n < 1) throw BadValue("QuantonConfig: need at least one path");
    QuantonConfig q;
    q.p = Eigen::VectorXd::Constant(n, 1.0 / n);
    return q;
  }

  static QuantonConfig with_probabilities(Eigen::VectorXd p) {
    QuantonConfig q;
    q.p = std::move(p);
    q.validate();
    return q;
  }

  static QuantonConfig with_density(ComplexMatrix rho) {
    QuantonConfig q;
    q.p = rho.diagonal().real();
    q.rho_in = std::move(rho);
    q.validate();
    return q;
  }

  /// Effective quanton density matrix: rho_in when given, else the pure
  /// superposition sum_i sqrt(p_i) |i> as a projector.
  ComplexMatrix rho() const {
    if (rho_in) return *rho_in;
    const Eigen::VectorXd amp = p.cwiseMax(0.0).cwiseSqrt();
    return (amp * amp.transpose()).cast<Complex>();
  }

  void validate() const {
    const int n = paths();
    if (n < 1) throw BadValue("QuantonConfig: need at least one path");
    for (int i = 0; i < n; ++i)
      if (!(p(i) >= -1e-12))
        throw BadValue("QuantonConfig: negative path probability");
    if (std::abs(p.sum() - 1.0) > 1e-9)
      throw BadValue("QuantonConfig: probabilities must sum to 1");
    if (rho_in) {
      if (rho_in->rows() != n || rho_in->cols() != n)
        throw DimensionMismatch("QuantonConfig: rho_in must be n x n");
      const DensityCheck check = is_density_matrix(*rho_in);
      if (!check)
        throw NotDensityMatrix("QuantonConfig: rho_in " + check.failure);
      for (int i = 0; i < n; ++i)
        if (std::abs((*rho_in)(i, i) - Complex(p(i))) > 1e-9)
          throw BadValue("QuantonConfig: rho_in diagonal must equal p");
    }
  }
};

struct DetectorModel {
  GramMatrix gram;  // over {d_0, d_1, ..., d_n}
  double c1 = 1.0;
  double c2 = 0.0;

  DetectorModel(GramMatrix g, double c1_, double c2_)
      : gram(std::move(g)), c1(c1_), c2(c2_) {
    if (!std::isfinite(c1) || !std::isfinite(c2) ||
        std::abs(c1 * c1 + c2 * c2 - 1.0) > 1e-9)
      throw BadValue("DetectorModel: c1^2 + c2^2 must equal 1");
    if (gram.size() < 2)
      throw BadValue("DetectorModel: gram must cover d_0 and at least one d_i");
  }

  DetectorModel(GramMatrix g, double c1_) : gram(std::move(g)), c1(c1_) {
    if (!(c1 >= 0.0 && c1 <= 1.0))
      throw BadValue("DetectorModel: c1 outside [0,1]");
    c2 = std::sqrt(1.0 - c1 * c1);
    if (gram.size() < 2)
      throw BadValue("DetectorModel: gram must cover d_0 and at least one d_i");
  }

  int paths() const { return gram.size() - 1; }

  static DetectorModel orthogonal(int n, double c1) {
    return DetectorModel(GramMatrix::identity(n + 1), c1);
  }
};

struct LocationProjection {
  double alpha = 0.0;  // radians; 0 selects |Y>, pi/2 selects |N>
};

struct KrausChannel {
  std::vector<ComplexMatrix> kraus;

  int dim() const {
    return kraus.empty() ? 0 : static_cast<int>(kraus.front().rows());
  }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& k : kraus) out += k * rho * k.adjoint();
    return out;
  }

  double completeness_error() const {
    if (kraus.empty()) return 1.0;
    const int d = dim();
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (const auto& k : kraus) {
      if (k.rows() != d || k.cols() != d)
        throw DimensionMismatch("KrausChannel: operators must share one shape");
      sum += k.adjoint() * k;
    }
    return (sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

  void require_complete(double tol = 1e-10) const {
    const double err = completeness_error();
    if (err > tol)
      throw IncompleteChannel("KrausChannel: sum K^dagger K deviates from I by " +
                              std::to_string(err));
  }

  static KrausChannel identity(int dim) {
    return {{ComplexMatrix::Identity(dim, dim)}};
  }

  /// Damps off-diagonal internal coherence: with probability lambda the
  /// internal state is measured in the computational basis.
  static KrausChannel dephasing(double lambda, int dim) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw BadValue("dephasing: lambda outside [0,1]");
    KrausChannel ch;
    ch.kraus.push_back(std::sqrt(1.0 - lambda) *
                       ComplexMatrix::Identity(dim, dim));
    for (int i = 0; i < dim; ++i) {
      ComplexMatrix k = ComplexMatrix::Zero(dim, dim);
      k(i, i) = std::sqrt(lambda);
      ch.kraus.push_back(std::move(k));
    }
    return ch;
  }

  /// With probability lambda the internal state is replaced by I/dim,
  /// realized through the discrete Weyl (shift/clock) operators.
  static KrausChannel depolarizing(double lambda, int dim) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw BadValue("depolarizing: lambda outside [0,1]");
    KrausChannel ch;
    ch.kraus.push_back(std::sqrt(1.0 - lambda) *
                       ComplexMatrix::Identity(dim, dim));
    const double twopi = 6.283185307179586477;
    ComplexMatrix shift = ComplexMatrix::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) shift((j + 1) % dim, j) = 1.0;
    ComplexVector clock(dim);
    for (int j = 0; j < dim; ++j)
      clock(j) = std::polar(1.0, twopi * j / dim);
    const double scale = std::sqrt(lambda) / dim;
    ComplexMatrix xa = ComplexMatrix::Identity(dim, dim);
    for (int a = 0; a < dim; ++a) {
      ComplexMatrix w = xa;
      for (int b = 0; b < dim; ++b) {
        ch.kraus.push_back(scale * w);
        for (int col = 0; col < dim; ++col) w.col(col) *= clock(col);
      }
      xa = shift * xa;
    }
    return ch;
  }
};

namespace detail {

/// Householder reflection sending x to mu*e1 (H Hermitian, H^2 = I). The
/// pivot u = x + phase*e1*|x| keeps ||u|| away from zero for every x.
inline std::pair<ComplexMatrix, Complex> reflect_to_e1(const ComplexVector& x) {
  const Eigen::Index m = x.size();
  const double norm = x.norm();
  Complex phase(1.0, 0.0);
  if (std::abs(x(0)) > 0.0) phase = x(0) / std::abs(x(0));
  ComplexVector u = x;
  u(0) += phase * norm;
  const double usq = u.squaredNorm();
  ComplexMatrix h = ComplexMatrix::Identity(m, m);
  if (usq > 0.0) h -= (2.0 / usq) * (u * u.adjoint());
  return {std::move(h), -phase * norm};
}

}  // namespace detail

/// Explicit detector vectors realizing a DetectorModel's Gram matrix, living
/// in the (paths+1)-dimensional internal space.
struct DetectorEmbedding {
  std::vector<ComplexVector> d;  // d[0] = ready state, d[i] = path i mark
  double c1 = 1.0;
  double c2 = 0.0;

  int paths() const { return static_cast<int>(d.size()) - 1; }
  int dim() const { return static_cast<int>(d.front().size()); }

  /// Conditioned detector vector d_i' = c1 cos(a) d_i + c2 sin(a) d_0,
  /// deliberately left unnormalized.
  ComplexVector conditioned(int i, double alpha) const {
    return c1 * std::cos(alpha) * d[i] + c2 * std::sin(alpha) * d[0];
  }

  /// Unitary V_i with V_i d_0 = d_i, completed deterministically by two
  /// Householder reflections joined through a single phase. The completion
  /// on the orthogonal complement is a convention; only the image of d_0 is
  /// physically prescribed.
  ComplexMatrix path_unitary(int i) const {
    if (i < 1 || i > paths())
      throw DimensionMismatch("path_unitary: index out of range");
    auto [h1, mu] = detail::reflect_to_e1(d[0]);
    auto [h2, nu] = detail::reflect_to_e1(d[i]);
    const Complex ratio = nu / mu;
    ComplexVector diag = ComplexVector::Ones(dim());
    diag(0) = ratio / std::abs(ratio);
    return h2 * diag.asDiagonal() * h1;
  }
};

inline DetectorEmbedding embed(const DetectorModel& det) {
  return {gram_embed(det.gram), det.c1, det.c2};
}

namespace detail {

/// Detector (+location) branch vector xi_i = c1 d_i (x) |Y> + c2 d_0 (x) |N>.
inline ComplexVector branch_vector(const DetectorEmbedding& emb, int i) {
  ComplexVector y = ComplexVector::Zero(2), n = ComplexVector::Zero(2);
  y(0) = 1.0;
  n(1) = 1.0;
  return emb.c1 * tensor(emb.d[i], y) + emb.c2 * tensor(emb.d[0], n);
}

inline void require_matching_paths(const QuantonConfig& q,
                                   const DetectorModel& det) {
  q.validate();
  if (q.paths() != det.paths())
    throw DimensionMismatch("quanton and detector disagree on path count");
}

}  // namespace detail

/// Joint pure state c1 sum_i sqrt(p_i)|i>|d_i>|Y> + c2 sum_i sqrt(p_i)|i>|d_0>|N>.
inline ComplexVector build_joint_pure(const QuantonConfig& q,
                                      const DetectorModel& det) {
  detail::require_matching_paths(q, det);
  if (!q.pure()) throw BadValue("build_joint_pure: quanton must be pure");
  const DetectorEmbedding emb = embed(det);
  const int n = q.paths();
  const int m = emb.dim();
  ComplexVector psi = ComplexVector::Zero(static_cast<Eigen::Index>(n) * m * 2);
  for (int i = 0; i < n; ++i)
    psi.segment(static_cast<Eigen::Index>(i) * m * 2, m * 2) =
        std::sqrt(std::max(0.0, q.p(i))) * detail::branch_vector(emb, i + 1);
  return psi;
}

/// The same state assembled directly as a density operator, block by block:
/// rho = sum_ij sqrt(p_i p_j) |i><j| (x) xi_i xi_j^dagger.
inline ComplexMatrix build_joint_density(const QuantonConfig& q,
                                         const DetectorModel& det) {
  detail::require_matching_paths(q, det);
  if (!q.pure()) throw BadValue("build_joint_density: quanton must be pure");
  const DetectorEmbedding emb = embed(det);
  const int n = q.paths();
  const Eigen::Index block = static_cast<Eigen::Index>(emb.dim()) * 2;
  std::vector<ComplexVector> xi;
  xi.reserve(n);
  for (int i = 0; i < n; ++i) xi.push_back(detail::branch_vector(emb, i + 1));
  ComplexMatrix rho = ComplexMatrix::Zero(n * block, n * block);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rho.block(i * block, j * block, block, block) =
          std::sqrt(std::max(0.0, q.p(i)) * std::max(0.0, q.p(j))) *
          (xi[i] * xi[j].adjoint());
  return rho;
}

struct ConditionedState {
  double probability = 0.0;       // post-selection probability
  ComplexMatrix rho;              // renormalized quanton (x) detector state
  std::vector<ComplexVector> dprime;  // unnormalized d_i', i = 1..n
};

/// Projects the detector location onto cos(a)|Y> + sin(a)|N> and renormalizes.
inline ConditionedState condition_on_location(const QuantonConfig& q,
                                              const DetectorModel& det,
                                              const LocationProjection& loc) {
  detail::require_matching_paths(q, det);
  if (!q.pure())
    throw BadValue("condition_on_location: quanton must be pure");
  const DetectorEmbedding emb = embed(det);
  const int n = q.paths();
  const int m = emb.dim();

  ConditionedState out;
  out.dprime.reserve(n);
  for (int i = 1; i <= n; ++i) out.dprime.push_back(emb.conditioned(i, loc.alpha));

  double prob = 0.0;
  for (int i = 0; i < n; ++i) prob += q.p(i) * out.dprime[i].squaredNorm();
  if (prob < 1e-14)
    throw ZeroProbability("condition_on_location: projection probability ~ 0");
  out.probability = prob;

  out.rho = ComplexMatrix::Zero(static_cast<Eigen::Index>(n) * m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.rho.block(static_cast<Eigen::Index>(i) * m, j * m, m, m) =
          (std::sqrt(std::max(0.0, q.p(i)) * std::max(0.0, q.p(j))) / prob) *
          (out.dprime[i] * out.dprime[j].adjoint());
  return out;
}

struct DetectorBranch {
  double weight = 0.0;       // r_k
  DetectorEmbedding states;  // d[0] = branch ready state, d[i] = V_i d[0]
};

/// Sends the ready state through the channel and splits the result into
/// spectral branches. Each branch behaves like a noiseless detector whose
/// ready state is the branch eigenvector; path states follow from the same
/// path unitaries V_i that realize the noiseless d_i.
inline std::vector<DetectorBranch> apply_channel(const DetectorModel& det,
                                                 const KrausChannel& ch) {
  ch.require_complete();
  const DetectorEmbedding emb = embed(det);
  const int n = emb.paths();
  const int m = emb.dim();
  if (ch.dim() != m)
    throw DimensionMismatch("apply_channel: channel dim must match internal dim");

  const ComplexMatrix sigma = ch.apply(projector(emb.d[0]));
  std::vector<ComplexMatrix> v;
  v.reserve(n);
  for (int i = 1; i <= n; ++i) v.push_back(emb.path_unitary(i));

  std::vector<DetectorBranch> out;
  for (const Eigenpair& pair : spectral_decompose(sigma)) {
    DetectorBranch b;
    b.weight = pair.weight;
    b.states.c1 = emb.c1;
    b.states.c2 = emb.c2;
    b.states.d.push_back(pair.state);
    for (int i = 0; i < n; ++i) b.states.d.push_back(v[i] * pair.state);
    out.push_back(std::move(b));
  }
  return out;
}

/// Location-conditioned quanton-detector operator for a (possibly mixed)
/// quanton and noisy detector: sum_ij rho_ij |i><j| (x) sum_k r_k d_ki' d_kj'^dagger.
/// Returned unnormalized; its trace is the post-selection probability.
inline ComplexMatrix build_mixed_joint(const QuantonConfig& q,
                                       const DetectorModel& det,
                                       const LocationProjection& loc,
                                       const KrausChannel& ch) {
  detail::require_matching_paths(q, det);
  const ComplexMatrix rho_q = q.rho();
  const std::vector<DetectorBranch> branches = apply_channel(det, ch);
  const int n = q.paths();
  const int m = branches.front().states.dim();

  std::vector<std::vector<ComplexVector>> dp(branches.size());
  for (std::size_t k = 0; k < branches.size(); ++k)
    for (int i = 1; i <= n; ++i)
      dp[k].push_back(branches[k].states.conditioned(i, loc.alpha));

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(n) * m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ComplexMatrix block = ComplexMatrix::Zero(m, m);
      for (std::size_t k = 0; k < branches.size(); ++k)
        block += branches[k].weight * (dp[k][i] * dp[k][j].adjoint());
      out.block(static_cast<Eigen::Index>(i) * m, j * m, m, m) =
          rho_q(i, j) * block;
    }
  return out;
}

}  // namespace duality
