#include "duality/interferometer.hpp"
#include "duality/random.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace duality;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvSqrt2 = 0.70710678118654752;

// Detection probabilities obtained by explicitly propagating the two-path
// state through the second beam splitter matrix, independent of the closed
// amplitude expressions used by the run_* functions.
std::array<double, 2> bbs_probs_from_unitary(double r, double t,
                                             double theta) {
  ComplexVector in(2);
  in << std::exp(Complex(0.0, theta)) * kInvSqrt2, kInvSqrt2;
  const ComplexVector out = bbs_unitary(r, t) * in;
  return {std::norm(out(0)), std::norm(out(1))};
}

std::array<double, 4> qbs_amps_from_unitary(double theta, double c1,
                                            double c2) {
  ComplexVector path(2), loc(2);
  path << std::exp(Complex(0.0, theta)) * kInvSqrt2, kInvSqrt2;
  loc << c1, c2;
  const ComplexVector out = qbs_unitary() * tensor(path, loc);
  return {std::norm(out(0)), std::norm(out(1)), std::norm(out(2)),
          std::norm(out(3))};
}

}  // namespace

TEST_CASE("beam splitter matrices are unitary") {
  const ComplexMatrix q = qbs_unitary();
  REQUIRE((q.adjoint() * q - ComplexMatrix::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  const ComplexMatrix b = bbs_unitary(0.6, 0.8);
  REQUIRE((b.adjoint() * b - ComplexMatrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("superposed second splitter at zero phase sends 3/4 to the bright "
          "port") {
  const DetectionStats s = run_qbs({0.0, QuantumBs{}});
  REQUIRE(s.p1 == Approx(0.75).margin(1e-12));
  REQUIRE(s.p2 == Approx(0.25).margin(1e-12));
}

TEST_CASE("superposed second splitter follows the quarter-visibility fringe") {
  for (int k = 0; k < 64; ++k) {
    const double theta = 2.0 * kPi * k / 64.0;
    const DetectionStats s = run_qbs({theta, QuantumBs{}});
    REQUIRE(s.p1 == Approx(0.5 + 0.25 * std::cos(theta)).margin(1e-12));
    REQUIRE(s.p1 + s.p2 == Approx(1.0).margin(1e-12));
  }
  // Balanced phase point: no bias between the ports.
  const DetectionStats mid = run_qbs({kPi / 2.0, QuantumBs{}});
  REQUIRE(mid.p1 == Approx(0.5).margin(1e-12));
}

TEST_CASE("superposed splitter amplitudes match explicit state propagation") {
  auto rng = rng_for(31, 0);
  for (int s = 0; s < 25; ++s) {
    const double theta = uniform01(rng) * 2.0 * kPi;
    const double c1 = random_c1(rng);
    const double c2 = std::sqrt(1.0 - c1 * c1);
    const auto probs = qbs_amps_from_unitary(theta, c1, c2);
    const DetectionStats st = run_qbs({theta, QuantumBs{c1, c2}});
    REQUIRE(st.p1 == Approx(probs[0] + probs[1]).margin(1e-12));
    REQUIRE(st.p2 == Approx(probs[2] + probs[3]).margin(1e-12));
  }
}

TEST_CASE("biased splitter interpolates between full and no fringe") {
  const DetectionStats balanced = run_bbs({0.0, BiasedBs{}});
  REQUIRE(balanced.p1 == Approx(1.0).margin(1e-12));
  REQUIRE(balanced.p2 == Approx(0.0).margin(1e-12));

  auto rng = rng_for(31, 1);
  for (int s = 0; s < 25; ++s) {
    const double r = std::sqrt(0.05 + 0.9 * uniform01(rng));
    const double t = std::sqrt(1.0 - r * r);
    const double theta = uniform01(rng) * 2.0 * kPi;
    const DetectionStats st = run_bbs({theta, BiasedBs{r, t}});
    const auto probs = bbs_probs_from_unitary(r, t, theta);
    REQUIRE(st.p1 == Approx(probs[0]).margin(1e-12));
    REQUIRE(st.p2 == Approx(probs[1]).margin(1e-12));
    REQUIRE(st.p1 == Approx(0.5 + r * t * std::cos(theta)).margin(1e-12));
  }
}

TEST_CASE("biased splitter with rt=1/4 reproduces the superposed marginals") {
  const double r = std::sqrt((2.0 + std::sqrt(3.0)) / 4.0);
  const double t = std::sqrt((2.0 - std::sqrt(3.0)) / 4.0);
  REQUIRE(r * t == Approx(0.25).margin(1e-15));
  for (int k = 0; k <= 32; ++k) {
    const double theta = 2.0 * kPi * k / 32.0;
    const DetectionStats qbs = run_qbs({theta, QuantumBs{}});
    const DetectionStats bbs = run_bbs({theta, BiasedBs{r, t}});
    REQUIRE(bbs.p1 == Approx(qbs.p1).margin(1e-12));
    REQUIRE(bbs.p2 == Approx(qbs.p2).margin(1e-12));
  }
}

TEST_CASE("beam splitter parameter validation") {
  REQUIRE_THROWS_AS(run_bbs({0.0, BiasedBs{-0.6, 0.8}}), BadValue);
  REQUIRE_THROWS_AS(run_bbs({0.0, BiasedBs{0.6, 0.7}}), BadValue);
  REQUIRE_THROWS_AS(run_qbs({0.0, QuantumBs{0.9, 0.9}}), BadValue);
  REQUIRE_THROWS_AS(run_qbs({0.0, BiasedBs{}}), BadValue);
}

TEST_CASE("removed second splitter erases the fringe entirely") {
  for (double theta : {0.0, 0.7, kPi, 5.0}) {
    const DetectionStats s = run({theta, Bs2Absent{}});
    REQUIRE(s.p1 == Approx(0.5).margin(1e-15));
    REQUIRE(s.p2 == Approx(0.5).margin(1e-15));
  }
}

TEST_CASE("run dispatcher routes each variant") {
  const DetectionStats q = run({0.0, QuantumBs{}});
  REQUIRE(q.p1 == Approx(0.75).margin(1e-12));
  const DetectionStats b = run({0.0, BiasedBs{}});
  REQUIRE(b.p1 == Approx(1.0).margin(1e-12));
  const DetectionStats c = run({0.0, QuantumBs{}, kPi / 4.0});
  REQUIRE(c.norm == Approx((2.0 + std::sqrt(2.0)) / 4.0).margin(1e-12));
}

TEST_CASE("conditioning the splitter qubit at alpha=0 restores the full "
          "fringe") {
  for (int k = 0; k < 16; ++k) {
    const double theta = 2.0 * kPi * k / 16.0;
    const DetectionStats s = run_qbs_conditioned({theta, QuantumBs{}, 0.0});
    REQUIRE(s.p1 == Approx(std::cos(theta / 2.0) * std::cos(theta / 2.0))
                        .margin(1e-12));
    REQUIRE(s.p2 == Approx(std::sin(theta / 2.0) * std::sin(theta / 2.0))
                        .margin(1e-12));
  }
}

TEST_CASE("conditioning at alpha=pi/2 removes the fringe") {
  for (double theta : {0.3, 1.1, 2.9}) {
    const DetectionStats s =
        run_qbs_conditioned({theta, QuantumBs{}, kPi / 2.0});
    REQUIRE(s.p1 == Approx(0.5).margin(1e-12));
    REQUIRE(s.p2 == Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("conditioned run with a certain splitter and orthogonal "
          "projection has no support") {
  REQUIRE_THROWS_AS(
      run_qbs_conditioned({0.4, QuantumBs{1.0, 0.0}, kPi / 2.0}),
      ZeroProbability);
}

TEST_CASE("conditioned run without an angle is rejected") {
  REQUIRE_THROWS_AS(run_qbs_conditioned({0.4, QuantumBs{}}), BadValue);
}

TEST_CASE("conditioned run at alpha=pi/4 matches the closed scalars") {
  const double boost = 1.0 + std::sqrt(2.0);
  const double norm = (2.0 + std::sqrt(2.0)) / 4.0;
  for (int k = 0; k <= 16; ++k) {
    const double theta = 2.0 * kPi * k / 16.0;
    const DetectionStats s =
        run_qbs_conditioned({theta, QuantumBs{}, kPi / 4.0});
    const double sh = std::sin(theta / 2.0), ch = std::cos(theta / 2.0);
    REQUIRE(s.norm == Approx(norm).margin(1e-12));
    REQUIRE(s.p2 * s.norm ==
            Approx(0.25 * (0.5 + boost * sh * sh)).margin(1e-12));
    REQUIRE(s.p1 * s.norm ==
            Approx(0.25 * (0.5 + boost * ch * ch)).margin(1e-12));
    REQUIRE(s.p1 + s.p2 == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("conditioned run matches explicit projection of the full state") {
  auto rng = rng_for(31, 2);
  for (int s = 0; s < 20; ++s) {
    const double theta = uniform01(rng) * 2.0 * kPi;
    const double alpha = random_alpha(rng);
    const double c1 = random_c1(rng);
    const double c2 = std::sqrt(1.0 - c1 * c1);

    ComplexVector path(2), loc(2), axis(2);
    path << std::exp(Complex(0.0, theta)) * kInvSqrt2, kInvSqrt2;
    loc << c1, c2;
    axis << std::cos(alpha), std::sin(alpha);
    const ComplexVector out = qbs_unitary() * tensor(path, loc);
    // Project the splitter qubit onto the conditioning axis.
    const Complex a1 =
        std::conj(axis(0)) * out(0) + std::conj(axis(1)) * out(1);
    const Complex a2 =
        std::conj(axis(0)) * out(2) + std::conj(axis(1)) * out(3);
    const double n = std::norm(a1) + std::norm(a2);

    const DetectionStats st =
        run_qbs_conditioned({theta, QuantumBs{c1, c2}, alpha});
    REQUIRE(st.norm == Approx(n).margin(1e-12));
    REQUIRE(st.p1 == Approx(std::norm(a1) / n).margin(1e-12));
    REQUIRE(st.p2 == Approx(std::norm(a2) / n).margin(1e-12));
  }
}

TEST_CASE("mimic parameters put the biased splitter on the conditioned "
          "fringe shape") {
  const auto [r, t] = bbs_mimic_params();
  REQUIRE(r * r + t * t == Approx(1.0).margin(1e-15));
  REQUIRE((t - r) / (std::sqrt(2.0) * r) == Approx(1.0).margin(1e-14));

  std::vector<double> thetas;
  for (int k = 0; k <= 24; ++k) thetas.push_back(2.0 * kPi * k / 24.0);
  const auto rows = mimic_report(thetas);
  REQUIRE(rows.size() == thetas.size());
  const double expected_ratio = 4.0 - 2.0 * std::sqrt(2.0);
  for (const auto& row : rows) {
    REQUIRE(row.ratio2 == Approx(expected_ratio).margin(1e-10));
    REQUIRE(std::isfinite(row.ratio1));
    REQUIRE(row.p2_bbs ==
            Approx(expected_ratio * row.p2_qbs_unnormalized).margin(1e-12));
  }
}

TEST_CASE("expanded mark states reproduce a requested overlap") {
  const ExpandedStates zero = expand_detector_states(Complex(0.0));
  REQUIRE(zero.beta == Approx(0.0).margin(1e-15));
  REQUIRE(std::abs(zero.d1.dot(zero.d2)) < 1e-15);

  const ExpandedStates one = expand_detector_states(Complex(1.0));
  REQUIRE(one.gamma == Approx(0.0).margin(1e-15));
  REQUIRE(std::abs(one.d1.dot(one.d2) - Complex(1.0)) < 1e-14);

  const ExpandedStates half = expand_detector_states(Complex(0.5));
  REQUIRE(half.beta * half.beta == Approx(0.5).margin(1e-14));

  const Complex w(0.3, 0.4);
  const ExpandedStates c = expand_detector_states(w);
  REQUIRE(std::abs(c.d1.dot(c.d2) - w) < 1e-14);
  REQUIRE(c.d1.norm() == Approx(1.0).margin(1e-14));
  REQUIRE(c.d2.norm() == Approx(1.0).margin(1e-14));

  REQUIRE_THROWS_AS(expand_detector_states(Complex(1.5)), BadValue);
}

TEST_CASE("wave-particle decomposition splits the state by which basis "
          "vector fired") {
  const WaveParticleReport at_half = wave_particle_decomposition(Complex(0.5));
  REQUIRE(at_half.weight_q3 == Approx(0.5).margin(1e-12));
  REQUIRE(at_half.weight_q1 == Approx(0.25).margin(1e-12));
  REQUIRE(at_half.weight_q2 == Approx(0.25).margin(1e-12));
  REQUIRE(at_half.coherence_q3 == Approx(1.0).margin(1e-12));
  REQUIRE(at_half.coherence_q1 == Approx(0.0).margin(1e-12));
  REQUIRE(at_half.coherence_q2 == Approx(0.0).margin(1e-12));
  REQUIRE(at_half.total_probability == Approx(1.0).margin(1e-12));

  const WaveParticleReport distinct =
      wave_particle_decomposition(Complex(0.0));
  REQUIRE(distinct.weight_q3 == Approx(0.0).margin(1e-12));
  REQUIRE(distinct.weight_q1 == Approx(0.5).margin(1e-12));
  REQUIRE(distinct.weight_q2 == Approx(0.5).margin(1e-12));

  const WaveParticleReport merged = wave_particle_decomposition(Complex(1.0));
  REQUIRE(merged.weight_q3 == Approx(1.0).margin(1e-12));
  REQUIRE(merged.coherence_q3 == Approx(1.0).margin(1e-12));
}

TEST_CASE("expanded-basis coherence agrees with the reduced-state value") {
  auto rng = rng_for(31, 3);
  for (int s = 0; s < 30; ++s) {
    Complex w = complex_normal(rng);
    if (std::abs(w) > 1e-12) w *= uniform01(rng) / std::abs(w);
    const WaveParticleReport rep = wave_particle_decomposition(w);
    REQUIRE(rep.coherence_direct ==
            Approx(rep.coherence_expanded).margin(1e-12));
    REQUIRE(rep.total_probability == Approx(1.0).margin(1e-12));
    REQUIRE(rep.weight_q1 + rep.weight_q2 + rep.weight_q3 ==
            Approx(1.0).margin(1e-12));
  }
}
