#pragma once

#include "duality/hilbert.hpp"

#include <cmath>
#include <cstdint>
#include <random>

// Seeded generators for randomized checks. Distributions are hand-rolled on
// top of mt19937_64 raw output so that a given (seed, stream) pair produces
// identical samples on every platform; std::uniform_real_distribution and
// friends make no such guarantee.

namespace duality {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent engine for (seed, stream); distinct streams decorrelate the
/// different check families run under one user-facing seed.
inline std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
  std::seed_seq seq{static_cast<unsigned>(splitmix64(s)),
                    static_cast<unsigned>(splitmix64(s) >> 32),
                    static_cast<unsigned>(splitmix64(s)),
                    static_cast<unsigned>(splitmix64(s) >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform on [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (one sample per call keeps state trivial).
inline double normal01(std::mt19937_64& rng) {
  double u = 0.0;
  while (u == 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
}

inline Complex complex_normal(std::mt19937_64& rng) {
  const double re = normal01(rng);
  const double im = normal01(rng);
  return Complex(re, im);
}

/// Probability vector drawn uniformly from the simplex (normalized
/// exponentials, i.e. a flat Dirichlet).
inline Eigen::VectorXd random_simplex(int n, std::mt19937_64& rng) {
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) {
    double u = 0.0;
    while (u == 0.0) u = uniform01(rng);
    p(i) = -std::log(u);
  }
  return p / p.sum();
}

inline ComplexVector random_unit_vector(int dim, std::mt19937_64& rng) {
  ComplexVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = complex_normal(rng);
  return v / v.norm();
}

/// Gram matrix of n random unit vectors: Hermitian, unit diagonal, PSD by
/// construction, generically complex off the diagonal.
inline GramMatrix random_gram(int n, std::mt19937_64& rng) {
  ComplexMatrix v(n, n);
  for (int j = 0; j < n; ++j) v.col(j) = random_unit_vector(n, rng);
  ComplexMatrix g = v.adjoint() * v;
  g.diagonal().setOnes();
  g = 0.5 * (g + ComplexMatrix(g.adjoint()));
  return GramMatrix(g);
}

/// Gram matrix with real nonnegative overlaps (vectors with nonnegative real
/// entries), the regime where detector overlaps act like classical weights.
inline GramMatrix random_gram_nonneg(int n, std::mt19937_64& rng) {
  ComplexMatrix v(n, n);
  for (int j = 0; j < n; ++j) {
    ComplexVector col(n);
    for (int i = 0; i < n; ++i) col(i) = std::abs(normal01(rng));
    v.col(j) = col / col.norm();
  }
  ComplexMatrix g = v.adjoint() * v;
  g.diagonal().setOnes();
  g = 0.5 * (g + ComplexMatrix(g.adjoint()));
  return GramMatrix(g);
}

/// Marking amplitude with c1^2 uniform on (lo, hi); keeps both branches
/// bounded away from zero when the caller needs conditioning to make sense.
inline double random_c1(std::mt19937_64& rng, double lo = 0.05,
                        double hi = 0.95) {
  return std::sqrt(lo + (hi - lo) * uniform01(rng));
}

inline double random_alpha(std::mt19937_64& rng) {
  return 1.5707963267948966192 * uniform01(rng);
}

/// Haar-random unitary: QR of a Ginibre matrix with the R diagonal phases
/// absorbed into Q.
inline ComplexMatrix random_unitary(int dim, std::mt19937_64& rng) {
  ComplexMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = complex_normal(rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : Complex(1.0);
  }
  return q;
}

/// Random density matrix of the given rank: GG^dagger / tr with G of shape
/// dim x rank.
inline ComplexMatrix random_density_matrix(int dim, std::mt19937_64& rng,
                                           int rank = 0) {
  if (rank <= 0 || rank > dim) rank = dim;
  ComplexMatrix g(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = complex_normal(rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + ComplexMatrix(rho.adjoint()));
}

/// Random CPTP channel with `count` Kraus operators, cut out of the first
/// block column of a Haar unitary on dim*count dimensions (Stinespring).
inline std::vector<ComplexMatrix> random_kraus_channel(int dim, int count,
                                                       std::mt19937_64& rng) {
  const ComplexMatrix u = random_unitary(dim * count, rng);
  std::vector<ComplexMatrix> ks;
  ks.reserve(count);
  for (int m = 0; m < count; ++m)
    ks.push_back(u.block(m * dim, 0, dim, dim));
  return ks;
}

}  // namespace duality
