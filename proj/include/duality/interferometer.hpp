#pragma once

#include "duality/metrics.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

// Mach-Zehnder scenarios with the second beam-splitter either a quantum
// object in superposition of present/absent (QBS), a classical biased
// beam-splitter (BBS), or absent. Input state throughout:
// (e^{i theta}|psi_1> + |psi_2>)/sqrt(2).
//
// Conventions, fixed once: BS2-present action psi_1 -> (D1+D2)/sqrt(2),
// psi_2 -> (D1-D2)/sqrt(2); BS2-absent action psi_1 -> D2, psi_2 -> D1.

namespace duality {

struct QuantumBs {
  double c1 = 0.70710678118654752;  // amplitude of BS2 present
  double c2 = 0.70710678118654752;  // amplitude of BS2 absent
};

struct BiasedBs {
  double r = 0.70710678118654752;  // reflection amplitude
  double t = 0.70710678118654752;  // transmission amplitude
};

struct Bs2Absent {};

struct MziConfig {
  double theta = 0.0;
  std::variant<QuantumBs, BiasedBs, Bs2Absent> bs2 = QuantumBs{};
  std::optional<double> alpha;  // conditioning angle on the QBS location
};

struct DetectionStats {
  double p1 = 0.0;    // probability of detector D1
  double p2 = 0.0;    // probability of detector D2
  double norm = 1.0;  // post-selection probability (1 when unconditioned)
};

namespace detail {

inline const QuantumBs& require_quantum(const MziConfig& cfg) {
  const auto* q = std::get_if<QuantumBs>(&cfg.bs2);
  if (!q) throw BadValue("expected a quantum BS2");
  if (std::abs(q->c1 * q->c1 + q->c2 * q->c2 - 1.0) > 1e-9)
    throw BadValue("QuantumBs: c1^2 + c2^2 must equal 1");
  return *q;
}

inline const BiasedBs& require_biased(const MziConfig& cfg) {
  const auto* b = std::get_if<BiasedBs>(&cfg.bs2);
  if (!b) throw BadValue("expected a biased BS2");
  if (!(b->r >= 0.0) || !(b->t >= 0.0))
    throw BadValue("BiasedBs: r and t must be nonnegative");
  if (std::abs(b->r * b->r + b->t * b->t - 1.0) > 1e-9)
    throw BadValue("BiasedBs: r^2 + t^2 must equal 1");
  return *b;
}

/// Output amplitudes per (detector, location) for the QBS run:
/// a[0]=D1,Y a[1]=D1,N a[2]=D2,Y a[3]=D2,N.
inline std::array<Complex, 4> qbs_amplitudes(double theta, double c1,
                                             double c2) {
  const Complex eith = std::polar(1.0, theta);
  const double inv_sqrt2 = 0.70710678118654752;
  return {c1 * (eith + 1.0) / 2.0, c2 * inv_sqrt2,
          c1 * (eith - 1.0) / 2.0, c2 * eith * inv_sqrt2};
}

}  // namespace detail

/// BS2 present/absent unitary on (path x location), location index fastest
/// with 0 = present, 1 = absent. Acts as the present action on the |Y>
/// sector and the absent action on the |N> sector.
inline ComplexMatrix qbs_unitary() {
  const double s = 0.70710678118654752;
  ComplexMatrix u = ComplexMatrix::Zero(4, 4);
  u(0, 0) = s;   // psi1,Y -> D1,Y
  u(2, 0) = s;   // psi1,Y -> D2,Y
  u(0, 2) = s;   // psi2,Y -> D1,Y
  u(2, 2) = -s;  // psi2,Y -> D2,Y
  u(3, 1) = 1.0; // psi1,N -> D2,N
  u(1, 3) = 1.0; // psi2,N -> D1,N
  return u;
}

/// Biased beam-splitter unitary on the path space alone.
inline ComplexMatrix bbs_unitary(double r, double t) {
  ComplexMatrix u(2, 2);
  u(0, 0) = r;
  u(1, 0) = t;
  u(0, 1) = t;
  u(1, 1) = -r;
  return u;
}

/// Quantum BS2 in superposition c1|present> + c2|absent>; detection
/// probabilities marginalize over the location.
inline DetectionStats run_qbs(const MziConfig& cfg) {
  const QuantumBs& q = detail::require_quantum(cfg);
  const auto a = detail::qbs_amplitudes(cfg.theta, q.c1, q.c2);
  DetectionStats s;
  s.p1 = std::norm(a[0]) + std::norm(a[1]);
  s.p2 = std::norm(a[2]) + std::norm(a[3]);
  return s;
}

/// Classical biased beam-splitter with real amplitudes r, t.
inline DetectionStats run_bbs(const MziConfig& cfg) {
  const BiasedBs& b = detail::require_biased(cfg);
  const Complex eith = std::polar(1.0, cfg.theta);
  const double inv_sqrt2 = 0.70710678118654752;
  const Complex a1 = (eith * b.r + b.t) * inv_sqrt2;
  const Complex a2 = (eith * b.t - b.r) * inv_sqrt2;
  DetectionStats s;
  s.p1 = std::norm(a1);
  s.p2 = std::norm(a2);
  return s;
}

/// No second beam-splitter: the paths are swapped onto the detectors and
/// the phase never interferes.
inline DetectionStats run_absent(const MziConfig&) { return {0.5, 0.5, 1.0}; }

/// Quantum BS2 with the location postselected onto
/// cos(a)|present> + sin(a)|absent>. Probabilities are renormalized; the
/// postselection probability is reported in `norm`.
inline DetectionStats run_qbs_conditioned(const MziConfig& cfg) {
  const QuantumBs& q = detail::require_quantum(cfg);
  if (!cfg.alpha) throw BadValue("run_qbs_conditioned: alpha not set");
  const double ca = std::cos(*cfg.alpha), sa = std::sin(*cfg.alpha);
  const auto a = detail::qbs_amplitudes(cfg.theta, q.c1, q.c2);
  const Complex a1 = ca * a[0] + sa * a[1];
  const Complex a2 = ca * a[2] + sa * a[3];
  const double norm = std::norm(a1) + std::norm(a2);
  if (norm < 1e-14)
    throw ZeroProbability("run_qbs_conditioned: postselection probability ~ 0");
  return {std::norm(a1) / norm, std::norm(a2) / norm, norm};
}

/// Dispatch on the configured BS2 kind (conditioned when alpha is set).
inline DetectionStats run(const MziConfig& cfg) {
  if (std::holds_alternative<Bs2Absent>(cfg.bs2)) return run_absent(cfg);
  if (std::holds_alternative<BiasedBs>(cfg.bs2)) return run_bbs(cfg);
  return cfg.alpha ? run_qbs_conditioned(cfg) : run_qbs(cfg);
}

/// Bias (r, t) for which the BBS amplitude into each detector is exactly
/// 2*sqrt(2)*r times the conditioned-QBS amplitude at alpha = pi/4: the
/// solution of (t - r)/(sqrt(2) r) = 1 with r^2 + t^2 = 1.
inline BiasedBs bbs_mimic_params() {
  const double r = 1.0 / std::sqrt(4.0 + 2.0 * std::sqrt(2.0));
  return {r, (1.0 + std::sqrt(2.0)) * r};
}

/// Side-by-side statistics of the mimicking BBS against the conditioned QBS
/// over a phase grid. The D2 ratio is constant by construction; the D1 ratio
/// is reported but nothing in the comparison relies on it.
struct MimicRow {
  double theta = 0.0;
  double p2_bbs = 0.0;
  double p2_qbs_unnormalized = 0.0;
  double ratio2 = 0.0;
  double p1_bbs = 0.0;
  double p1_qbs_unnormalized = 0.0;
  double ratio1 = 0.0;
};

inline std::vector<MimicRow> mimic_report(const std::vector<double>& thetas) {
  const BiasedBs mimic = bbs_mimic_params();
  std::vector<MimicRow> rows;
  rows.reserve(thetas.size());
  for (double theta : thetas) {
    MziConfig bbs_cfg{theta, mimic, std::nullopt};
    MziConfig qbs_cfg{theta, QuantumBs{}, 0.78539816339744831};
    const DetectionStats b = run_bbs(bbs_cfg);
    const DetectionStats q = run_qbs_conditioned(qbs_cfg);
    MimicRow row;
    row.theta = theta;
    row.p2_bbs = b.p2;
    row.p2_qbs_unnormalized = q.p2 * q.norm;
    row.ratio2 = row.p2_qbs_unnormalized > 0.0
                     ? row.p2_bbs / row.p2_qbs_unnormalized
                     : 0.0;
    row.p1_bbs = b.p1;
    row.p1_qbs_unnormalized = q.p1 * q.norm;
    row.ratio1 = row.p1_qbs_unnormalized > 0.0
                     ? row.p1_bbs / row.p1_qbs_unnormalized
                     : 0.0;
    rows.push_back(row);
  }
  return rows;
}

/// Two non-orthogonal detector states written in an orthonormal three-state
/// basis: d1 = gamma q1 + beta q3, d2 = gamma q2 + beta phase q3, with
/// beta^2 = |<d1|d2>| and the overlap phase attached to d2's q3 component.
struct ExpandedStates {
  double gamma = 0.0;
  double beta = 0.0;
  Complex phase{1.0, 0.0};
  ComplexVector d1, d2;  // coordinates in the (q1, q2, q3) basis
};

inline ExpandedStates expand_detector_states(Complex overlap) {
  const double mag = std::abs(overlap);
  if (mag > 1.0 + 1e-12)
    throw BadValue("expand_detector_states: |overlap| exceeds 1");
  ExpandedStates e;
  e.beta = std::sqrt(std::min(mag, 1.0));
  e.gamma = std::sqrt(std::max(0.0, 1.0 - mag));
  if (mag > 0.0) e.phase = overlap / mag;
  e.d1 = ComplexVector::Zero(3);
  e.d2 = ComplexVector::Zero(3);
  e.d1(0) = e.gamma;
  e.d1(2) = e.beta;
  e.d2(1) = e.gamma;
  e.d2(2) = e.beta * e.phase;
  return e;
}

/// Decomposition of (|psi_1>|d1> + |psi_2>|d2>)/sqrt(2) over the expanded
/// basis: quantons found with q3 interfere fully, those found with q1 or q2
/// are fully path-resolved.
struct WaveParticleReport {
  double weight_q1 = 0.0;
  double weight_q2 = 0.0;
  double weight_q3 = 0.0;
  double coherence_q1 = 0.0;
  double coherence_q2 = 0.0;
  double coherence_q3 = 0.0;
  double total_probability = 0.0;
  double coherence_direct = 0.0;    // reduced-state coherence, traced route
  double coherence_expanded = 0.0;  // same quantity via the branch sum
};

inline WaveParticleReport wave_particle_decomposition(Complex overlap) {
  const ExpandedStates e = expand_detector_states(overlap);
  const double inv_sqrt2 = 0.70710678118654752;

  // Quanton amplitudes conditioned on each q-branch.
  std::vector<ComplexVector> chi(3, ComplexVector::Zero(2));
  for (int q = 0; q < 3; ++q) {
    chi[q](0) = inv_sqrt2 * e.d1(q);
    chi[q](1) = inv_sqrt2 * e.d2(q);
  }

  WaveParticleReport r;
  const auto branch = [&](int q, double& weight, double& coh) {
    weight = chi[q].squaredNorm();
    if (weight < 1e-14) {
      coh = 0.0;
      return;
    }
    coh = coherence(projector(chi[q]) / weight);
  };
  branch(0, r.weight_q1, r.coherence_q1);
  branch(1, r.weight_q2, r.coherence_q2);
  branch(2, r.weight_q3, r.coherence_q3);
  r.total_probability = r.weight_q1 + r.weight_q2 + r.weight_q3;

  // Route one: assemble the joint pure state on path (x) detector and trace
  // the detector out.
  ComplexVector psi = inv_sqrt2 * (tensor(ComplexVector::Unit(2, 0), e.d1) +
                                   tensor(ComplexVector::Unit(2, 1), e.d2));
  r.coherence_direct = coherence(partial_trace(projector(psi), {2, 3}, {0}));

  // Route two: sum the unnormalized branch projectors.
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  for (int q = 0; q < 3; ++q) m += projector(chi[q]);
  r.coherence_expanded = coherence(m);
  return r;
}

}  // namespace duality
