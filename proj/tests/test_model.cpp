#include "duality/model.hpp"
#include "duality/random.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace duality;
using Catch::Approx;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752;
constexpr double kPi = 3.14159265358979323846;

// The worked two-path setup: equal split, detector present/absent with equal
// amplitude, ready state aligned with the first mark state.
DetectorModel demo_detector() {
  ComplexMatrix g = ComplexMatrix::Identity(3, 3);
  g(0, 1) = g(1, 0) = 1.0;
  return DetectorModel(GramMatrix(g), kInvSqrt2);
}

DetectorModel random_detector(int n, std::mt19937_64& rng) {
  return DetectorModel(random_gram(n + 1, rng), random_c1(rng));
}

}  // namespace

TEST_CASE("quanton config validates the probability simplex") {
  REQUIRE_THROWS_AS(QuantonConfig::with_probabilities(
                        (Eigen::VectorXd(2) << 0.5, 0.6).finished()),
                    BadValue);
  REQUIRE_THROWS_AS(QuantonConfig::with_probabilities(
                        (Eigen::VectorXd(2) << 1.2, -0.2).finished()),
                    BadValue);
  const auto q = QuantonConfig::uniform(4);
  REQUIRE(q.paths() == 4);
  REQUIRE(q.p.sum() == Approx(1.0));
  REQUIRE(q.pure());
}

TEST_CASE("quanton config vets an attached density matrix") {
  ComplexMatrix rho(2, 2);
  rho << 0.7, 0.1, 0.1, 0.3;
  const auto q = QuantonConfig::with_density(rho);
  REQUIRE(q.p(0) == Approx(0.7));
  REQUIRE_FALSE(q.pure());

  ComplexMatrix negative(2, 2);
  negative << 0.7, 0.6, 0.6, 0.3;  // indefinite
  REQUIRE_THROWS_AS(QuantonConfig::with_density(negative), NotDensityMatrix);

  QuantonConfig mismatched = q;
  mismatched.p(0) = 0.6;
  mismatched.p(1) = 0.4;
  REQUIRE_THROWS_AS(mismatched.validate(), BadValue);
}

TEST_CASE("pure quanton density is the sqrt-p outer product") {
  const auto q = QuantonConfig::with_probabilities(
      (Eigen::VectorXd(2) << 0.25, 0.75).finished());
  const ComplexMatrix rho = q.rho();
  REQUIRE(rho(0, 1).real() == Approx(std::sqrt(0.25 * 0.75)).margin(1e-15));
  REQUIRE(std::abs(rho.trace() - Complex(1.0)) < 1e-15);
}

TEST_CASE("detector model rejects inconsistent amplitudes") {
  REQUIRE_THROWS_AS(DetectorModel(GramMatrix::identity(3), 1.2), BadValue);
  REQUIRE_THROWS_AS(DetectorModel(GramMatrix::identity(3), 0.5, 0.5),
                    BadValue);
  const DetectorModel det = DetectorModel::orthogonal(2, 0.6);
  REQUIRE(det.paths() == 2);
  REQUIRE(det.c2 == Approx(0.8));
}

TEST_CASE("joint pure state is normalized for random configs") {
  auto rng = rng_for(11, 0);
  for (int s = 0; s < 30; ++s) {
    const int n = 2 + s % 5;
    const auto q = QuantonConfig::with_probabilities(random_simplex(n, rng));
    const ComplexVector psi = build_joint_pure(q, random_detector(n, rng));
    REQUIRE(psi.norm() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("always-present detector with orthogonal marks fully entangles") {
  const auto q = QuantonConfig::uniform(2);
  const DetectorModel det = DetectorModel::orthogonal(2, 1.0);
  const ComplexVector psi = build_joint_pure(q, det);
  const ComplexMatrix rho_q = partial_trace(projector(psi), {2, 3, 2}, {0});
  REQUIRE(rho_q.isApprox(0.5 * ComplexMatrix::Identity(2, 2), 1e-12));
}

TEST_CASE("absent detector leaves the quanton in a pure superposition") {
  const auto q = QuantonConfig::with_probabilities(
      (Eigen::VectorXd(3) << 0.2, 0.3, 0.5).finished());
  const DetectorModel det = DetectorModel::orthogonal(3, 0.0);
  const ComplexVector psi = build_joint_pure(q, det);
  const ComplexMatrix rho_q = partial_trace(projector(psi), {3, 4, 2}, {0});
  const Eigen::VectorXd amp = q.p.cwiseSqrt();
  const ComplexMatrix expected = (amp * amp.transpose()).cast<Complex>();
  REQUIRE(rho_q.isApprox(expected, 1e-12));
}

TEST_CASE("joint density equals the outer product of the joint pure state") {
  auto rng = rng_for(11, 1);
  for (int s = 0; s < 20; ++s) {
    const int n = 2 + s % 4;
    const auto q = QuantonConfig::with_probabilities(random_simplex(n, rng));
    const DetectorModel det = random_detector(n, rng);
    const ComplexMatrix direct = build_joint_density(q, det);
    const ComplexMatrix outer = projector(build_joint_pure(q, det));
    REQUIRE((direct - outer).norm() < 1e-12);
    REQUIRE(static_cast<bool>(is_density_matrix(direct)));
  }
}

TEST_CASE("joint density with a pure particle branch stays in one location "
          "sector") {
  const auto q = QuantonConfig::uniform(2);
  const DetectorModel det = DetectorModel::orthogonal(2, 1.0);
  const ComplexMatrix rho = build_joint_density(q, det);
  // Location index is fastest (0 = present); every absent-location row and
  // column must vanish.
  for (Eigen::Index r = 0; r < rho.rows(); ++r)
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
      if (r % 2 == 1 || c % 2 == 1) REQUIRE(std::abs(rho(r, c)) < 1e-15);
  const ComplexMatrix rho_q = partial_trace(rho, {2, 3, 2}, {0});
  REQUIRE(rho_q.isApprox(0.5 * ComplexMatrix::Identity(2, 2), 1e-12));
}

TEST_CASE("joint density with the detector absent is a rank-1 projector") {
  const auto q = QuantonConfig::uniform(2);
  const DetectorModel det = DetectorModel::orthogonal(2, 0.0);
  const ComplexMatrix rho = build_joint_density(q, det);
  REQUIRE((rho * rho - rho).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(std::abs(rho.trace() - Complex(1.0)) < 1e-12);
}

TEST_CASE("joint builders insist on a pure quanton") {
  ComplexMatrix rho = 0.5 * ComplexMatrix::Identity(2, 2);
  const auto q = QuantonConfig::with_density(rho);
  const DetectorModel det = DetectorModel::orthogonal(2, 0.5);
  REQUIRE_THROWS_AS(build_joint_pure(q, det), BadValue);
  REQUIRE_THROWS_AS(build_joint_density(q, det), BadValue);
}

TEST_CASE("path-count mismatch is rejected") {
  REQUIRE_THROWS_AS(
      build_joint_pure(QuantonConfig::uniform(3),
                       DetectorModel::orthogonal(2, 0.5)),
      DimensionMismatch);
}

TEST_CASE("conditioning at alpha=0 keeps the scaled mark states") {
  auto rng = rng_for(11, 2);
  const auto q = QuantonConfig::uniform(3);
  const DetectorModel det = random_detector(3, rng);
  const DetectorEmbedding emb = embed(det);
  const ConditionedState cs = condition_on_location(q, det, {0.0});
  for (int i = 0; i < 3; ++i)
    REQUIRE((cs.dprime[i] - det.c1 * emb.d[i + 1]).norm() < 1e-12);
}

TEST_CASE("conditioning at alpha=pi/2 collapses onto the ready state") {
  auto rng = rng_for(11, 3);
  const auto q = QuantonConfig::uniform(3);
  const DetectorModel det = random_detector(3, rng);
  const DetectorEmbedding emb = embed(det);
  const ConditionedState cs = condition_on_location(q, det, {kPi / 2.0});
  for (int i = 0; i < 3; ++i)
    REQUIRE((cs.dprime[i] - det.c2 * emb.d[0]).norm() < 1e-12);
}

TEST_CASE("worked overlap: conditioned mark states overlap at one half") {
  const auto q = QuantonConfig::uniform(2);
  const ConditionedState cs =
      condition_on_location(q, demo_detector(), {kPi / 4.0});
  REQUIRE(std::abs(cs.dprime[1].dot(cs.dprime[0]) - Complex(0.5)) < 1e-12);
  REQUIRE(cs.probability == Approx(0.75).margin(1e-12));
  REQUIRE(std::abs(cs.rho.trace() - Complex(1.0)) < 1e-12);
  REQUIRE(static_cast<bool>(is_density_matrix(cs.rho)));
}

TEST_CASE("conditioning onto an impossible location throws") {
  const auto q = QuantonConfig::uniform(2);
  const DetectorModel det = DetectorModel::orthogonal(2, 1.0);  // never absent
  REQUIRE_THROWS_AS(condition_on_location(q, det, {kPi / 2.0}),
                    ZeroProbability);
}

TEST_CASE("kraus channels know their completeness defect") {
  REQUIRE(KrausChannel::identity(3).completeness_error() < 1e-15);
  REQUIRE(KrausChannel::dephasing(0.3, 4).completeness_error() < 1e-12);
  REQUIRE(KrausChannel::depolarizing(0.7, 3).completeness_error() < 1e-12);

  KrausChannel broken{{0.5 * ComplexMatrix::Identity(2, 2)}};
  REQUIRE(broken.completeness_error() > 0.7);
  REQUIRE_THROWS_AS(broken.require_complete(), IncompleteChannel);
}

TEST_CASE("dephasing scales off-diagonals, depolarizing mixes in identity") {
  ComplexMatrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  const ComplexMatrix dephased = KrausChannel::dephasing(0.4, 2).apply(plus);
  REQUIRE(dephased(0, 1).real() == Approx(0.3).margin(1e-12));
  REQUIRE(dephased(0, 0).real() == Approx(0.5).margin(1e-12));

  const ComplexMatrix depolarized =
      KrausChannel::depolarizing(1.0, 2).apply(plus);
  REQUIRE(depolarized.isApprox(0.5 * ComplexMatrix::Identity(2, 2), 1e-12));
}

TEST_CASE("path unitaries are unitary and move the ready state") {
  auto rng = rng_for(11, 4);
  for (int s = 0; s < 20; ++s) {
    const int n = 2 + s % 4;
    const DetectorEmbedding emb = embed(random_detector(n, rng));
    for (int i = 1; i <= n; ++i) {
      const ComplexMatrix v = emb.path_unitary(i);
      REQUIRE((v.adjoint() * v - ComplexMatrix::Identity(v.rows(), v.cols()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
      REQUIRE((v * emb.d[0] - emb.d[i]).norm() < 1e-10);
    }
  }
  const DetectorEmbedding demo = embed(demo_detector());
  REQUIRE((demo.path_unitary(1) * demo.d[0] - demo.d[1]).norm() < 1e-10);
  REQUIRE_THROWS_AS(demo.path_unitary(0), DimensionMismatch);
  REQUIRE_THROWS_AS(demo.path_unitary(3), DimensionMismatch);
}

TEST_CASE("identity channel yields a single branch matching the detector") {
  auto rng = rng_for(11, 5);
  const DetectorModel det = random_detector(2, rng);
  const DetectorEmbedding emb = embed(det);
  const auto branches = apply_channel(det, KrausChannel::identity(3));
  REQUIRE(branches.size() == 1);
  REQUIRE(branches[0].weight == Approx(1.0).margin(1e-12));
  // Branch states equal the embedded detector states up to one global phase.
  const Complex phase = emb.d[0].dot(branches[0].states.d[0]);
  REQUIRE(std::abs(std::abs(phase) - 1.0) < 1e-10);
  for (int i = 0; i <= 2; ++i)
    REQUIRE((branches[0].states.d[i] - phase * emb.d[i]).norm() < 1e-10);
}

TEST_CASE("full dephasing in a rotated basis splits the ready state") {
  // Dephasing onto |+>, |-> while the ready state is |0>: two branches with
  // weights equal to the squared amplitudes 1/2, 1/2.
  ComplexVector plus(2), minus(2);
  plus << kInvSqrt2, kInvSqrt2;
  minus << kInvSqrt2, -kInvSqrt2;
  KrausChannel ch{{projector(plus), projector(minus)}};
  REQUIRE(ch.completeness_error() < 1e-12);

  const DetectorModel det(GramMatrix::identity(2), 0.8);
  const auto branches = apply_channel(det, ch);
  REQUIRE(branches.size() == 2);
  REQUIRE(branches[0].weight == Approx(0.5).margin(1e-12));
  REQUIRE(branches[1].weight == Approx(0.5).margin(1e-12));
  for (const auto& b : branches)
    REQUIRE(std::abs(std::abs(b.states.d[0].dot(plus)) - kInvSqrt2) < 1e-10);
}

TEST_CASE("random channels produce a spectral branch decomposition") {
  auto rng = rng_for(11, 6);
  for (int s = 0; s < 15; ++s) {
    const int n = 2 + s % 3;
    const DetectorModel det = random_detector(n, rng);
    KrausChannel ch{random_kraus_channel(n + 1, 2, rng)};
    const auto branches = apply_channel(det, ch);
    double wsum = 0.0;
    for (const auto& b : branches) wsum += b.weight;
    REQUIRE(wsum == Approx(1.0).margin(1e-10));
    for (std::size_t a = 0; a < branches.size(); ++a)
      for (std::size_t b = a + 1; b < branches.size(); ++b)
        REQUIRE(std::abs(branches[a].states.d[0].dot(
                    branches[b].states.d[0])) < 1e-10);
    // Path unitaries preserve branch orthonormality.
    for (int i = 1; i <= n; ++i)
      for (std::size_t a = 0; a < branches.size(); ++a)
        for (std::size_t b = a + 1; b < branches.size(); ++b)
          REQUIRE(std::abs(branches[a].states.d[i].dot(
                      branches[b].states.d[i])) < 1e-10);
  }
}

TEST_CASE("mixed joint with a pure quanton and clean channel reduces to "
          "conditioning") {
  auto rng = rng_for(11, 7);
  const int n = 2;
  const Eigen::VectorXd p = random_simplex(n, rng);
  const Eigen::VectorXd amp = p.cwiseSqrt();
  const auto q_pure = QuantonConfig::with_probabilities(p);
  const auto q_rank1 = QuantonConfig::with_density(
      (amp * amp.transpose()).cast<Complex>());
  const DetectorModel det = random_detector(n, rng);
  const LocationProjection loc{0.6};

  const ConditionedState cs = condition_on_location(q_pure, det, loc);
  const ComplexMatrix mixed =
      build_mixed_joint(q_rank1, det, loc, KrausChannel::identity(n + 1));
  REQUIRE(std::abs(mixed.trace() - Complex(cs.probability)) < 1e-12);
  REQUIRE((mixed / mixed.trace().real() - cs.rho).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("fully dephased quanton kills the off-diagonal blocks") {
  auto rng = rng_for(11, 8);
  const int n = 3;
  const auto q = QuantonConfig::with_density(
      ComplexMatrix(random_simplex(n, rng).cast<Complex>().asDiagonal()));
  const DetectorModel det = random_detector(n, rng);
  const ComplexMatrix mixed =
      build_mixed_joint(q, det, {0.8}, KrausChannel::dephasing(0.5, n + 1));
  const int m = n + 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      REQUIRE(mixed.block(i * m, j * m, m, m).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("mixed joint is positive and its quanton obeys the principal "
          "minor bound") {
  auto rng = rng_for(11, 9);
  for (int s = 0; s < 10; ++s) {
    const int n = 2 + s % 3;
    const auto q = QuantonConfig::with_density(random_density_matrix(n, rng));
    const DetectorModel det = random_detector(n, rng);
    KrausChannel ch{random_kraus_channel(n + 1, 2, rng)};
    const ComplexMatrix mixed = build_mixed_joint(q, det, {0.4}, ch);

    // Geometric-mean bound on every principal 2x2 quanton submatrix.
    const ComplexMatrix& rho = *q.rho_in;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j)
          REQUIRE(std::sqrt(rho(i, i).real() * rho(j, j).real()) -
                      std::abs(rho(i, j)) >= -1e-12);

    REQUIRE((mixed - mixed.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(hermitian_eigenvalues(mixed).minCoeff() > -1e-10);
    const double trace = mixed.trace().real();
    if (trace > 1e-12)
      REQUIRE(static_cast<bool>(is_density_matrix(mixed / trace)));
  }
}
