#pragma once

#include "duality/model.hpp"

#include <cmath>
#include <optional>
#include <vector>

// Wave-particle duality quantifiers. Distinguishability D is the optimal
// unambiguous-discrimination success probability for telling the detector
// branch states apart; coherence C is the normalized l1 sum of quanton
// off-diagonals. For pure quantons D + C = 1 holds exactly; with detector
// noise and a mixed quanton it relaxes to D + C <= 1.
//
// Each quantity is computed twice over by design: once from closed forms in
// the Gram entries and once from explicit embedded vectors. Tests lean on the
// two routes agreeing.

namespace duality {

enum class Regime { Unconditioned, Conditioned, Mixed, Naive };

struct DualityReport {
  double distinguishability = 0.0;
  double coherence = 0.0;
  double sum = 0.0;
  double residual = 0.0;  // |sum-1| for identity regimes, max(0, sum-1) mixed
  Regime regime = Regime::Unconditioned;
  bool out_of_range = false;  // D or C left [0,1] by more than 1e-9
};

namespace detail {

inline DualityReport make_report(double d, double c, Regime regime) {
  DualityReport r;
  r.distinguishability = d;
  r.coherence = c;
  r.sum = d + c;
  r.residual = (regime == Regime::Mixed) ? std::max(0.0, r.sum - 1.0)
                                         : std::abs(r.sum - 1.0);
  r.regime = regime;
  const auto outside = [](double x) { return x < -1e-9 || x > 1.0 + 1e-9; };
  r.out_of_range = outside(d) || outside(c);
  return r;
}

inline void require_multipath(const QuantonConfig& q) {
  if (q.paths() < 2) throw BadValue("duality metrics need at least two paths");
}

inline void require_pure(const QuantonConfig& q) {
  if (!q.pure()) throw BadValue("this metric expects a pure quanton");
}

}  // namespace detail

/// l1 coherence (1/(n-1)) sum_{i != j} |rho_ij|.
inline double coherence(const ComplexMatrix& rho_q) {
  const Eigen::Index n = rho_q.rows();
  if (rho_q.cols() != n) throw DimensionMismatch("coherence: matrix not square");
  if (n < 2) throw BadValue("coherence: need at least a 2x2 state");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) sum += std::abs(rho_q(i, j));
  return sum / static_cast<double>(n - 1);
}

/// Unambiguous-discrimination distinguishability of the detector branch
/// states U_i|phi_0> = c1|d_i>|Y> + c2|d_0>|N>, whose pairwise overlap is
/// c1^2 <d_j|d_i> + c2^2. The modulus wraps the whole overlap; splitting it
/// into c1^2|<d_j|d_i>| + c2^2 is equivalent only for overlaps with no phase.
inline double distinguishability_uqsd(const QuantonConfig& q,
                                      const DetectorModel& det) {
  detail::require_matching_paths(q, det);
  detail::require_multipath(q);
  detail::require_pure(q);
  const int n = q.paths();
  const double c1sq = det.c1 * det.c1, c2sq = det.c2 * det.c2;
  double acc = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j)
        acc += std::sqrt(q.p(i - 1) * q.p(j - 1)) *
               std::abs(c1sq * det.gram(j, i) + c2sq);
  return 1.0 - acc / (n - 1);
}

/// Duality report for the unconditioned state. D comes from the Gram closed
/// form; C takes the long way around (full joint density, partial trace)
/// so the two sides of the identity are computed independently.
inline DualityReport unconditioned_metrics(const QuantonConfig& q,
                                           const DetectorModel& det) {
  detail::require_multipath(q);
  const double d = distinguishability_uqsd(q, det);
  const int n = q.paths();
  const int m = n + 1;
  const ComplexMatrix joint = build_joint_density(q, det);
  const ComplexMatrix rho_q = partial_trace(joint, {n, m, 2}, {0});
  return detail::make_report(d, coherence(rho_q), Regime::Unconditioned);
}

namespace detail {

/// <d_j'|d_i'> expanded over Gram entries; i, j are path indices >= 1.
inline Complex conditioned_bracket(const DetectorModel& det, double alpha,
                                   int i, int j) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  return det.c1 * det.c1 * ca * ca * det.gram(j, i) +
         det.c2 * det.c2 * sa * sa +
         det.c1 * det.c2 * ca * sa * (det.gram(j, 0) + det.gram(0, i));
}

}  // namespace detail

struct ConditionedMetrics {
  DualityReport report;
  double probability = 0.0;  // post-selection probability
  double coherence_renormalized = 0.0;  // l1 coherence of the state after
                                        // dividing out the probability
};

/// Metrics after projecting the detector location onto
/// cos(a)|Y> + sin(a)|N>. Both D and C are evaluated on the unnormalized
/// conditioned vectors d_i', under which D + C = 1 persists; D uses the
/// Gram-entry expansion, C the embedded vectors.
inline ConditionedMetrics conditioned_metrics(const QuantonConfig& q,
                                              const DetectorModel& det,
                                              const LocationProjection& loc) {
  detail::require_matching_paths(q, det);
  detail::require_multipath(q);
  detail::require_pure(q);
  const int n = q.paths();

  const DetectorEmbedding emb = embed(det);
  std::vector<ComplexVector> dp;
  dp.reserve(n);
  for (int i = 1; i <= n; ++i) dp.push_back(emb.conditioned(i, loc.alpha));

  double prob = 0.0;
  for (int i = 0; i < n; ++i) prob += q.p(i) * dp[i].squaredNorm();
  if (prob < 1e-14)
    throw ZeroProbability("conditioned_metrics: projection probability ~ 0");

  double d_acc = 0.0, c_acc = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const double w = std::sqrt(q.p(i - 1) * q.p(j - 1));
      d_acc += w * std::abs(detail::conditioned_bracket(det, loc.alpha, i, j));
      c_acc += w * std::abs(dp[j - 1].dot(dp[i - 1]));
    }

  ConditionedMetrics out;
  out.report = detail::make_report(1.0 - d_acc / (n - 1), c_acc / (n - 1),
                                   Regime::Conditioned);
  out.probability = prob;
  out.coherence_renormalized = out.report.coherence / prob;
  return out;
}

/// The tempting but wrong conditioned distinguishability: discriminate the
/// bare marked states d_i scaled by the conditioned amplitudes, dropping the
/// d_0 cross term. Paired with the conditioned coherence its sum can exceed
/// 1, which is the whole point of computing it.
inline double naive_distinguishability(const QuantonConfig& q,
                                       const DetectorModel& det,
                                       const LocationProjection& loc) {
  detail::require_matching_paths(q, det);
  detail::require_multipath(q);
  detail::require_pure(q);
  const int n = q.paths();
  const double ca = std::cos(loc.alpha), sa = std::sin(loc.alpha);
  const double c1sq = det.c1 * det.c1 * ca * ca;
  const double c2sq = det.c2 * det.c2 * sa * sa;
  double acc = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j)
        acc += std::sqrt(q.p(i - 1) * q.p(j - 1)) *
               std::abs(c1sq * det.gram(j, i) + c2sq);
  return 1.0 - acc / (n - 1);
}

struct MixedMetrics {
  DualityReport report;
  double slack = 0.0;  // weight the quanton's mixedness removes from the sum
  double identity_residual = 0.0;  // |D + C + slack - 1|
  double coherence_reduced = 0.0;  // l1 sum over the branch-averaged
                                   // overlaps, modulus outside the average
};

/// Duality quantities for a noisy detector (Kraus channel on the internal
/// space) and an optionally mixed quanton. The channel splits the detector
/// into spectral branches k with weight r_k and conditioned vectors d_ki';
/// per-pair overlaps are modulus-summed inside the branch average. D uses
/// bracket expansions over branch Gram entries, C and the slack term use the
/// explicit conditioned vectors.
inline MixedMetrics mixed_metrics(const QuantonConfig& q,
                                  const DetectorModel& det,
                                  const LocationProjection& loc,
                                  const KrausChannel& ch) {
  detail::require_matching_paths(q, det);
  detail::require_multipath(q);
  const int n = q.paths();
  const ComplexMatrix rho_q = q.rho();
  const std::vector<DetectorBranch> branches = apply_channel(det, ch);

  const double ca = std::cos(loc.alpha), sa = std::sin(loc.alpha);
  double d_acc = 0.0, c_acc = 0.0, slack = 0.0;
  ComplexMatrix averaged = ComplexMatrix::Zero(n, n);
  for (const DetectorBranch& b : branches) {
    const double c1 = b.states.c1, c2 = b.states.c2;
    std::vector<ComplexVector> dp;
    dp.reserve(n);
    for (int i = 1; i <= n; ++i) dp.push_back(b.states.conditioned(i, loc.alpha));
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        if (i == j) continue;
        const double pii = rho_q(i - 1, i - 1).real();
        const double pjj = rho_q(j - 1, j - 1).real();
        const double offd = std::abs(rho_q(i - 1, j - 1));
        const double geo = std::sqrt(std::max(0.0, pii * pjj));
        const Complex bracket =
            c1 * c1 * ca * ca * b.states.d[j].dot(b.states.d[i]) +
            c2 * c2 * sa * sa +
            c1 * c2 * ca * sa *
                (b.states.d[j].dot(b.states.d[0]) +
                 b.states.d[0].dot(b.states.d[i]));
        const Complex overlap = dp[j - 1].dot(dp[i - 1]);
        d_acc += b.weight * geo * std::abs(bracket);
        c_acc += b.weight * offd * std::abs(overlap);
        slack += b.weight * (geo - offd) * std::abs(overlap);
        averaged(i - 1, j - 1) += b.weight * overlap;
      }
  }

  MixedMetrics out;
  out.report = detail::make_report(1.0 - d_acc / (n - 1), c_acc / (n - 1),
                                   Regime::Mixed);
  out.slack = slack / (n - 1);
  out.identity_residual =
      std::abs(out.report.distinguishability + out.report.coherence +
               out.slack - 1.0);
  double reduced = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) reduced += std::abs(rho_q(i, j)) * std::abs(averaged(i, j));
  out.coherence_reduced = reduced / (n - 1);
  return out;
}

/// Recomputes distinguishability with no closed forms at all: embed the
/// detector states, build each branch vector explicitly, take numerical
/// pairwise overlaps. Serves as the independent cross-check for the
/// closed-form routes above.
inline double distinguishability_oracle(
    const QuantonConfig& q, const DetectorModel& det,
    const std::optional<LocationProjection>& loc = std::nullopt) {
  detail::require_matching_paths(q, det);
  detail::require_multipath(q);
  detail::require_pure(q);
  const int n = q.paths();
  const DetectorEmbedding emb = embed(det);

  std::vector<ComplexVector> branch;
  branch.reserve(n);
  for (int i = 1; i <= n; ++i)
    branch.push_back(loc ? emb.conditioned(i, loc->alpha)
                         : detail::branch_vector(emb, i));

  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        acc += std::sqrt(q.p(i) * q.p(j)) * std::abs(branch[j].dot(branch[i]));
  return 1.0 - acc / (n - 1);
}

}  // namespace duality
