#pragma once

#include "duality/interferometer.hpp"
#include "duality/random.hpp"
#include "duality/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

// Experiment front end: parses key=value configs, dispatches parameter
// sweeps over the physics modules, runs the self-verification suite, and
// serializes results as CSV or JSON with bit-stable formatting.

namespace duality {

struct UnknownKey : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind {
  Duality,         // unconditioned D/C report, sweep over c1
  Conditioned,     // location-conditioned report, sweep over alpha
  Mixed,           // noisy-detector report, sweep over channel strength
  Qbs,             // quantum second beam-splitter, sweep over theta
  Bbs,             // biased second beam-splitter, sweep over theta
  QbsConditioned,  // QBS postselected on a location superposition
  Expand,          // expanded-basis wave/particle decomposition
  Verify,          // numerical self-checks, seeded
};

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Duality: return "duality";
    case ExperimentKind::Conditioned: return "conditioned";
    case ExperimentKind::Mixed: return "mixed";
    case ExperimentKind::Qbs: return "qbs";
    case ExperimentKind::Bbs: return "bbs";
    case ExperimentKind::QbsConditioned: return "qbs-conditioned";
    case ExperimentKind::Expand: return "expand";
    case ExperimentKind::Verify: return "verify";
  }
  return "?";
}

/// Inclusive linspace; count 1 degenerates to {start}, count 0 to nothing.
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;

  std::vector<double> values() const {
    std::vector<double> v;
    if (count <= 0) return v;
    v.reserve(count);
    if (count == 1) {
      v.push_back(start);
      return v;
    }
    for (int i = 0; i < count; ++i)
      v.push_back(start + (stop - start) * i / (count - 1));
    return v;
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Duality;
  int n = 2;
  Eigen::VectorXd p;        // path probabilities, size n
  double c1 = 0.70710678118654752;
  double alpha = 0.78539816339744831;
  ComplexMatrix gram;       // (n+1) x (n+1) detector overlaps, validated
  std::string channel;      // empty = kind-dependent default
  double lambda = 0.5;
  double quanton_offdiag = 0.5;  // 0 = fully dephased quanton, 1 = pure
  double overlap = 0.5;
  double r = 0.70710678118654752;
  double t = 0.70710678118654752;
  Grid theta_grid{0.0, 6.283185307179586477, 64};
  std::optional<Grid> c1_grid, alpha_grid, lambda_grid, overlap_grid;
  std::optional<std::uint64_t> seed;
  int samples = 1000;
  std::vector<std::string> echo;  // normalized input lines, in order

  std::string channel_or_default() const {
    if (!channel.empty()) return channel;
    return kind == ExperimentKind::Mixed ? "dephasing" : "identity";
  }
};

using Cell = std::variant<double, std::string>;

struct SweepResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> spec_echo;
  std::optional<std::uint64_t> seed;
  std::string version = kVersion;
  std::vector<std::string> failed_checks;  // populated by verify runs
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v))
      throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw BadValue(where + ": '" + s + "' is not a finite number");
  }
}

inline long long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw BadValue(where + ": '" + s + "' is not an integer");
  }
}

inline std::uint64_t parse_uint(const std::string& s,
                                const std::string& where) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || (!s.empty() && s[0] == '-'))
      throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw BadValue(where + ": '" + s + "' is not a nonnegative integer");
  }
}

/// Complex literals: "0.5", "0.3+0.4i", "-0.2i", "i". A trailing 'i' or 'j'
/// marks the imaginary part; a sign splits the parts unless it belongs to an
/// exponent.
inline Complex parse_complex(std::string s, const std::string& where) {
  s = trim(s);
  if (s.empty()) throw BadValue(where + ": empty value");
  const char tail = s.back();
  if (tail != 'i' && tail != 'j') return {parse_double(s, where), 0.0};
  std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' &&
        body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  std::string re = "0", im = body;
  if (split != std::string::npos) {
    re = body.substr(0, split);
    im = body.substr(split);
  }
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {parse_double(re, where), parse_double(im, where)};
}

inline Grid parse_grid(const std::string& s, const std::string& where) {
  const std::size_t a = s.find(':');
  if (a == std::string::npos) {
    const double x = parse_double(s, where);
    return {x, x, 1};
  }
  const std::size_t b = s.find(':', a + 1);
  if (b == std::string::npos || s.find(':', b + 1) != std::string::npos)
    throw BadValue(where + ": grids are start:stop:count");
  Grid g;
  g.start = parse_double(s.substr(0, a), where);
  g.stop = parse_double(s.substr(a + 1, b - a - 1), where);
  const long long count = parse_int(s.substr(b + 1), where);
  if (count < 0 || count > 10'000'000)
    throw BadValue(where + ": grid count out of range");
  g.count = static_cast<int>(count);
  return g;
}

struct ConfigEntry {
  std::string key, value, where;
};

inline std::vector<ConfigEntry> tokenize_config(
    const std::string& text, const std::vector<std::string>& overrides) {
  std::vector<ConfigEntry> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw BadValue(where + ": expected key=value");
    entries.push_back(
        {trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where});
  }
  for (const std::string& o : overrides) {
    const std::string where = "override '" + o + "'";
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos)
      throw BadValue(where + ": expected key=value");
    entries.push_back({trim(o.substr(0, eq)), trim(o.substr(eq + 1)), where});
  }
  return entries;
}

inline ExperimentKind parse_kind(const std::string& s,
                                 const std::string& where) {
  for (ExperimentKind k :
       {ExperimentKind::Duality, ExperimentKind::Conditioned,
        ExperimentKind::Mixed, ExperimentKind::Qbs, ExperimentKind::Bbs,
        ExperimentKind::QbsConditioned, ExperimentKind::Expand,
        ExperimentKind::Verify})
    if (s == kind_name(k)) return k;
  throw BadValue(where + ": unknown experiment kind '" + s + "'");
}

}  // namespace detail

inline ExperimentSpec parse_config(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  const auto entries = detail::tokenize_config(text, overrides);

  ExperimentSpec spec;
  bool have_kind = false, have_n = false, have_p = false, have_channel = false;
  std::string n_where = "n", p_where = "p";
  struct GramEntry {
    int i, j;
    Complex v;
    std::string where;
  };
  std::vector<GramEntry> gram_entries;

  for (const auto& e : entries) {
    spec.echo.push_back(e.key + "=" + e.value);
    const std::string& w = e.where;
    if (e.key == "kind") {
      spec.kind = detail::parse_kind(e.value, w);
      have_kind = true;
    } else if (e.key == "n") {
      const long long n = detail::parse_int(e.value, w);
      if (n < 1 || n > 64) throw BadValue(w + ": n must be in [1, 64]");
      spec.n = static_cast<int>(n);
      have_n = true;
      n_where = w;
    } else if (e.key == "p") {
      std::vector<double> vals;
      std::string item;
      std::istringstream items(e.value);
      while (std::getline(items, item, ','))
        vals.push_back(detail::parse_double(detail::trim(item), w));
      if (vals.empty()) throw BadValue(w + ": p needs at least one entry");
      double sum = 0.0;
      for (double v : vals) {
        if (v < 0.0) throw BadValue(w + ": probabilities must be nonnegative");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw BadValue(w + ": probabilities must sum to 1");
      spec.p = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
      have_p = true;
      p_where = w;
    } else if (e.key == "c1") {
      spec.c1 = detail::parse_double(e.value, w);
      if (spec.c1 < 0.0 || spec.c1 > 1.0)
        throw BadValue(w + ": c1 must lie in [0,1]");
    } else if (e.key == "alpha") {
      spec.alpha = detail::parse_double(e.value, w);
    } else if (e.key == "theta") {
      const double th = detail::parse_double(e.value, w);
      spec.theta_grid = {th, th, 1};
    } else if (e.key == "theta_grid") {
      spec.theta_grid = detail::parse_grid(e.value, w);
    } else if (e.key == "c1_grid") {
      spec.c1_grid = detail::parse_grid(e.value, w);
    } else if (e.key == "alpha_grid") {
      spec.alpha_grid = detail::parse_grid(e.value, w);
    } else if (e.key == "lambda_grid") {
      spec.lambda_grid = detail::parse_grid(e.value, w);
    } else if (e.key == "overlap_grid") {
      spec.overlap_grid = detail::parse_grid(e.value, w);
    } else if (e.key == "channel") {
      if (e.value != "identity" && e.value != "dephasing" &&
          e.value != "depolarizing")
        throw BadValue(w + ": channel must be identity, dephasing or "
                           "depolarizing");
      spec.channel = e.value;
      have_channel = true;
    } else if (e.key == "lambda") {
      spec.lambda = detail::parse_double(e.value, w);
      if (spec.lambda < 0.0 || spec.lambda > 1.0)
        throw BadValue(w + ": lambda must lie in [0,1]");
    } else if (e.key == "quanton_offdiag") {
      spec.quanton_offdiag = detail::parse_double(e.value, w);
      if (spec.quanton_offdiag < 0.0 || spec.quanton_offdiag > 1.0)
        throw BadValue(w + ": quanton_offdiag must lie in [0,1]");
    } else if (e.key == "overlap") {
      spec.overlap = detail::parse_double(e.value, w);
      if (spec.overlap < 0.0 || spec.overlap > 1.0)
        throw BadValue(w + ": overlap must lie in [0,1]");
    } else if (e.key == "r") {
      spec.r = detail::parse_double(e.value, w);
    } else if (e.key == "t") {
      spec.t = detail::parse_double(e.value, w);
    } else if (e.key == "seed") {
      spec.seed = detail::parse_uint(e.value, w);
    } else if (e.key == "samples") {
      const long long s = detail::parse_int(e.value, w);
      if (s < 1 || s > 10'000'000)
        throw BadValue(w + ": samples must be in [1, 1e7]");
      spec.samples = static_cast<int>(s);
    } else if (e.key.size() > 1 && e.key[0] == 'g' &&
               e.key.find('_') != std::string::npos) {
      const std::size_t us = e.key.find('_');
      const long long i = detail::parse_int(e.key.substr(1, us - 1), w);
      const long long j = detail::parse_int(e.key.substr(us + 1), w);
      gram_entries.push_back({static_cast<int>(i), static_cast<int>(j),
                              detail::parse_complex(e.value, w), w});
    } else {
      throw UnknownKey(e.where + ": unknown key '" + e.key + "'");
    }
  }

  if (!have_kind) throw BadValue("kind is required");
  if (have_p) {
    if (have_n && spec.p.size() != spec.n)
      throw BadValue(p_where + ": p has " + std::to_string(spec.p.size()) +
                     " entries but n=" + std::to_string(spec.n));
    spec.n = static_cast<int>(spec.p.size());
  } else {
    spec.p = Eigen::VectorXd::Constant(spec.n, 1.0 / spec.n);
  }
  (void)n_where;
  (void)have_channel;

  ComplexMatrix gram = ComplexMatrix::Identity(spec.n + 1, spec.n + 1);
  for (const auto& ge : gram_entries) {
    if (ge.i < 0 || ge.j < 0 || ge.i > spec.n || ge.j > spec.n || ge.i == ge.j)
      throw BadValue(ge.where + ": gram indices must be distinct and in [0," +
                     std::to_string(spec.n) + "]");
    gram(ge.i, ge.j) = ge.v;
    gram(ge.j, ge.i) = std::conj(ge.v);
  }
  spec.gram = std::move(gram);
  static_cast<void>(GramMatrix(spec.gram));  // Hermitian, unit diagonal, PSD

  if (spec.kind == ExperimentKind::Verify && !spec.seed)
    throw BadValue("verify requires a seed");
  return spec;
}

inline ExperimentSpec parse_config(const std::string& text) {
  return parse_config(text, {});
}

// ---------------------------------------------------------------------------
// Verification suite

struct VerifyCheck {
  std::string name;
  int samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass() const {
    return std::isfinite(max_residual) && max_residual < tolerance;
  }
};

namespace detail {

template <typename F>
double with_conditioning_retry(F&& draw) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    try {
      return draw();
    } catch (const ZeroProbability&) {
    }
  }
  throw ZeroProbability("verify: conditioning failed on 100 straight draws");
}

inline GramMatrix random_gram_rank_deficient(int size, std::mt19937_64& rng) {
  const int rank = std::max(1, size - 1);
  ComplexMatrix v(rank, size);
  for (int j = 0; j < size; ++j)
    v.col(j) = random_unit_vector(rank, rng);
  ComplexMatrix g = v.adjoint() * v;
  g.diagonal().setOnes();
  g = 0.5 * (g + ComplexMatrix(g.adjoint()));
  return GramMatrix(g);
}

}  // namespace detail

/// Numerical self-checks, each reporting its worst residual against a pinned
/// tolerance. Randomized checks burn `samples` draws from independent
/// streams of the given seed; closed-form checks ignore both.
inline std::vector<VerifyCheck> run_verify(std::uint64_t seed, int samples) {
  std::vector<VerifyCheck> checks;
  const double pi = 3.14159265358979323846;

  {  // D + C = 1 for pure unconditioned configs, complex detector overlaps.
    auto rng = rng_for(seed, 1);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int n = 2 + s % 7;
      const auto q = QuantonConfig::with_probabilities(random_simplex(n, rng));
      const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
      worst = std::max(worst, unconditioned_metrics(q, det).residual);
    }
    checks.push_back({"unconditioned_identity", samples, worst, 1e-9});
  }

  {  // D + C = 1 after conditioning on a location superposition.
    auto rng = rng_for(seed, 2);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      worst = std::max(worst, detail::with_conditioning_retry([&] {
        const int n = 2 + s % 7;
        const auto q =
            QuantonConfig::with_probabilities(random_simplex(n, rng));
        const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
        const LocationProjection loc{random_alpha(rng)};
        return conditioned_metrics(q, det, loc).report.residual;
      }));
    }
    checks.push_back({"conditioned_identity", samples, worst, 1e-9});
  }

  {  // Noisy detector: D + C + slack = 1 and D + C <= 1.
    auto rng = rng_for(seed, 3);
    double worst_identity = 0.0, worst_excess = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int n = 2 + s % 4;
      const auto q = QuantonConfig::with_density(random_density_matrix(n, rng));
      const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
      const LocationProjection loc{random_alpha(rng)};
      KrausChannel ch{random_kraus_channel(n + 1, 2, rng)};
      const MixedMetrics mm = mixed_metrics(q, det, loc, ch);
      worst_identity = std::max(worst_identity, mm.identity_residual);
      worst_excess = std::max(worst_excess, mm.report.residual);
    }
    checks.push_back({"mixed_three_term_identity", samples, worst_identity, 1e-9});
    checks.push_back({"mixed_inequality", samples, worst_excess, 1e-9});
  }

  {  // The inequality saturates for rank-1 quanton states.
    auto rng = rng_for(seed, 4);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int n = 2 + s % 4;
      const auto q =
          QuantonConfig::with_density(random_density_matrix(n, rng, 1));
      const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
      const LocationProjection loc{random_alpha(rng)};
      KrausChannel ch{random_kraus_channel(n + 1, 2, rng)};
      const MixedMetrics mm = mixed_metrics(q, det, loc, ch);
      worst = std::max(worst, std::abs(mm.report.sum - 1.0));
    }
    checks.push_back({"mixed_saturation_rank1", samples, worst, 1e-9});
  }

  {  // Closed forms vs the explicit-vector recomputation.
    auto rng = rng_for(seed, 5);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int n = 2 + s % 7;
      const auto q = QuantonConfig::with_probabilities(random_simplex(n, rng));
      const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
      worst = std::max(worst, std::abs(distinguishability_uqsd(q, det) -
                                       distinguishability_oracle(q, det)));
    }
    checks.push_back({"oracle_unconditioned", samples, worst, 1e-10});
  }

  {
    auto rng = rng_for(seed, 6);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      worst = std::max(worst, detail::with_conditioning_retry([&] {
        const int n = 2 + s % 7;
        const auto q =
            QuantonConfig::with_probabilities(random_simplex(n, rng));
        const DetectorModel det(random_gram(n + 1, rng), random_c1(rng));
        const LocationProjection loc{random_alpha(rng)};
        return std::abs(conditioned_metrics(q, det, loc)
                            .report.distinguishability -
                        distinguishability_oracle(q, det, loc));
      }));
    }
    checks.push_back({"oracle_conditioned", samples, worst, 1e-10});
  }

  {  // Embedded vectors reproduce their Gram matrix, full and deficient rank.
    auto rng = rng_for(seed, 7);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int size = 2 + s % 8;
      const GramMatrix g = (s % 5 == 0)
                               ? detail::random_gram_rank_deficient(size, rng)
                               : random_gram(size, rng);
      const auto vecs = gram_embed(g);
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
          worst = std::max(worst, std::abs(vecs[i].dot(vecs[j]) - g(i, j)));
    }
    checks.push_back({"gram_roundtrip", samples, worst, 1e-10});
  }

  {  // Spectral decomposition: reconstruction, weights, orthonormality.
    auto rng = rng_for(seed, 8);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int dim = 2 + s % 5;
      const int rank = 1 + s % dim;
      const ComplexMatrix rho = random_density_matrix(dim, rng, rank);
      const auto pairs = spectral_decompose(rho);
      ComplexMatrix recon = ComplexMatrix::Zero(dim, dim);
      double wsum = 0.0;
      for (const auto& pr : pairs) {
        recon += pr.weight * projector(pr.state);
        wsum += pr.weight;
      }
      worst = std::max(worst, (recon - rho).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(wsum - 1.0));
      for (std::size_t a = 0; a < pairs.size(); ++a)
        for (std::size_t b = a + 1; b < pairs.size(); ++b)
          worst = std::max(worst,
                           std::abs(pairs[a].state.dot(pairs[b].state)));
    }
    checks.push_back({"spectral_roundtrip", samples, worst, 1e-10});
  }

  {  // Two-path closed forms D = c1^2(1-|g|), C = 1 - c1^2 + c1^2|g|.
    double worst = 0.0;
    int used = 0;
    for (double c1sq : {0.0, 0.25, 0.5, 0.75, 1.0})
      for (double g : {0.0, 0.5, 1.0}) {
        ComplexMatrix gram = ComplexMatrix::Identity(3, 3);
        gram(1, 2) = gram(2, 1) = g;
        const DetectorModel det(GramMatrix(gram), std::sqrt(c1sq));
        const DualityReport rep =
            unconditioned_metrics(QuantonConfig::uniform(2), det);
        worst = std::max(worst, std::abs(rep.distinguishability -
                                         c1sq * (1.0 - g)));
        worst = std::max(worst,
                         std::abs(rep.coherence - (1.0 - c1sq + c1sq * g)));
        ++used;
      }
    checks.push_back({"two_path_closed_forms", used, worst, 1e-12});
  }

  {  // Quantum beam-splitter fringe: p1 = 1/2 + cos(theta)/4.
    double worst = 0.0;
    const auto thetas = Grid{0.0, 2.0 * pi, 64}.values();
    for (double th : thetas) {
      const DetectionStats st = run_qbs({th, QuantumBs{}, std::nullopt});
      worst = std::max(worst, std::abs(st.p1 - (0.5 + 0.25 * std::cos(th))));
      worst = std::max(worst, std::abs(st.p1 + st.p2 - 1.0));
    }
    const DetectionStats zero = run_qbs({0.0, QuantumBs{}, std::nullopt});
    worst = std::max(worst, std::abs(zero.p1 - 0.75));
    worst = std::max(worst, std::abs(zero.p2 - 0.25));
    checks.push_back({"qbs_formula", static_cast<int>(thetas.size()), worst,
                      1e-12});
  }

  {  // A biased splitter with rt = 1/4 is indistinguishable from the QBS.
    double worst = 0.0;
    const double r = std::sqrt((2.0 + std::sqrt(3.0)) / 4.0);
    const double t = std::sqrt((2.0 - std::sqrt(3.0)) / 4.0);
    const auto thetas = Grid{0.0, 2.0 * pi, 64}.values();
    for (double th : thetas) {
      const DetectionStats qs = run_qbs({th, QuantumBs{}, std::nullopt});
      const DetectionStats bs = run_bbs({th, BiasedBs{r, t}, std::nullopt});
      worst = std::max(worst, std::abs(qs.p1 - bs.p1));
      worst = std::max(worst, std::abs(qs.p2 - bs.p2));
    }
    checks.push_back({"bbs_qbs_marginals", static_cast<int>(thetas.size()),
                      worst, 1e-12});
  }

  {  // Mimicking bias: D2 probability ratio constant at 4 - 2*sqrt(2).
    double worst = 0.0;
    const double expected = 4.0 - 2.0 * std::sqrt(2.0);
    const auto rows = mimic_report(Grid{0.0, 2.0 * pi, 64}.values());
    for (const MimicRow& row : rows)
      worst = std::max(worst, std::abs(row.ratio2 - expected));
    checks.push_back({"bbs_mimic_ratio", static_cast<int>(rows.size()), worst,
                      1e-10});
  }

  {  // Expanded three-state basis reproduces overlaps and branch structure.
    auto rng = rng_for(seed, 9);
    double worst = 0.0;
    std::vector<Complex> overlaps = {0.0, 1.0, 0.5, 0.3,
                                     Complex(0.25, 0.4), -0.5,
                                     Complex(0.0, 0.7)};
    for (int s = 0; s < samples; ++s)
      overlaps.push_back(std::sqrt(uniform01(rng)) *
                         std::polar(1.0, 2.0 * pi * uniform01(rng)));
    for (const Complex w : overlaps) {
      const ExpandedStates e = expand_detector_states(w);
      worst = std::max(worst, std::abs(e.d1.dot(e.d2) - w));
      worst = std::max(worst, std::abs(e.d1.norm() - 1.0));
      worst = std::max(worst, std::abs(e.d2.norm() - 1.0));
      const WaveParticleReport rep = wave_particle_decomposition(w);
      worst = std::max(worst, std::abs(rep.total_probability - 1.0));
      worst = std::max(worst,
                       std::abs(rep.coherence_direct - rep.coherence_expanded));
    }
    const WaveParticleReport half = wave_particle_decomposition(0.5);
    worst = std::max({worst, std::abs(half.weight_q3 - 0.5),
                      std::abs(half.weight_q1 - 0.25),
                      std::abs(half.weight_q2 - 0.25),
                      std::abs(half.coherence_q3 - 1.0),
                      std::abs(half.coherence_q1),
                      std::abs(half.coherence_q2)});
    checks.push_back({"expand_roundtrip",
                      static_cast<int>(overlaps.size()), worst, 1e-12});
  }

  {  // The shipped demo: naive D + C = 1.25 while the correct sum stays 1.
    ComplexMatrix gram = ComplexMatrix::Identity(3, 3);
    gram(0, 1) = gram(1, 0) = 1.0;
    const DetectorModel det(GramMatrix(gram), 0.70710678118654752);
    const auto q = QuantonConfig::uniform(2);
    const LocationProjection loc{pi / 4.0};
    const ConditionedMetrics cm = conditioned_metrics(q, det, loc);
    const double naive = naive_distinguishability(q, det, loc);
    double worst = std::abs(naive - 0.75);
    worst = std::max(worst, std::abs(naive + cm.report.coherence - 1.25));
    worst = std::max(worst, std::abs(cm.report.sum - 1.0));
    checks.push_back({"naive_violation_demo", 1, worst, 1e-12});
  }

  return checks;
}

// ---------------------------------------------------------------------------
// Experiment dispatch

namespace detail {

inline KrausChannel named_channel(const std::string& name, double lambda,
                                  int dim) {
  if (name == "identity") return KrausChannel::identity(dim);
  if (name == "dephasing") return KrausChannel::dephasing(lambda, dim);
  if (name == "depolarizing") return KrausChannel::depolarizing(lambda, dim);
  throw BadValue("unknown channel '" + name + "'");
}

/// Quanton density interpolating between fully dephased (s=0) and the pure
/// superposition (s=1) at fixed path probabilities.
inline QuantonConfig interpolated_quanton(const Eigen::VectorXd& p, double s) {
  const Eigen::VectorXd amp = p.cwiseMax(0.0).cwiseSqrt();
  ComplexMatrix rho =
      (s * (amp * amp.transpose()) +
       (1.0 - s) * Eigen::MatrixXd(p.asDiagonal()))
          .cast<Complex>();
  return QuantonConfig::with_density(std::move(rho));
}

}  // namespace detail

inline SweepResult run_experiment(const ExperimentSpec& spec) {
  SweepResult result;
  result.spec_echo = spec.echo;
  result.seed = spec.seed;

  const auto num = [](double v) { return Cell{v}; };

  switch (spec.kind) {
    case ExperimentKind::Duality: {
      result.columns = {"c1", "D", "C", "sum", "residual"};
      const auto q = QuantonConfig::with_probabilities(spec.p);
      const Grid grid = spec.c1_grid.value_or(Grid{spec.c1, spec.c1, 1});
      for (double c1 : grid.values()) {
        const DetectorModel det(GramMatrix(spec.gram), c1);
        const DualityReport rep = unconditioned_metrics(q, det);
        result.rows.push_back({num(c1), num(rep.distinguishability),
                               num(rep.coherence), num(rep.sum),
                               num(rep.residual)});
      }
      break;
    }
    case ExperimentKind::Conditioned: {
      result.columns = {"alpha", "D", "C", "sum", "residual",
                        "naive_D", "naive_sum", "probability"};
      const auto q = QuantonConfig::with_probabilities(spec.p);
      const DetectorModel det(GramMatrix(spec.gram), spec.c1);
      const Grid grid =
          spec.alpha_grid.value_or(Grid{spec.alpha, spec.alpha, 1});
      for (double alpha : grid.values()) {
        const LocationProjection loc{alpha};
        const ConditionedMetrics cm = conditioned_metrics(q, det, loc);
        const double naive = naive_distinguishability(q, det, loc);
        result.rows.push_back(
            {num(alpha), num(cm.report.distinguishability),
             num(cm.report.coherence), num(cm.report.sum),
             num(cm.report.residual), num(naive),
             num(naive + cm.report.coherence), num(cm.probability)});
      }
      break;
    }
    case ExperimentKind::Mixed: {
      result.columns = {"lambda", "D", "C", "sum", "residual", "slack",
                        "identity_residual"};
      const auto q =
          detail::interpolated_quanton(spec.p, spec.quanton_offdiag);
      const DetectorModel det(GramMatrix(spec.gram), spec.c1);
      const LocationProjection loc{spec.alpha};
      const Grid grid =
          spec.lambda_grid.value_or(Grid{spec.lambda, spec.lambda, 1});
      for (double lambda : grid.values()) {
        const KrausChannel ch =
            detail::named_channel(spec.channel_or_default(), lambda,
                                  spec.n + 1);
        const MixedMetrics mm = mixed_metrics(q, det, loc, ch);
        result.rows.push_back(
            {num(lambda), num(mm.report.distinguishability),
             num(mm.report.coherence), num(mm.report.sum),
             num(mm.report.residual), num(mm.slack),
             num(mm.identity_residual)});
      }
      break;
    }
    case ExperimentKind::Qbs: {
      result.columns = {"theta", "p1", "p2"};
      const double c2 = std::sqrt(std::max(0.0, 1.0 - spec.c1 * spec.c1));
      for (double th : spec.theta_grid.values()) {
        const DetectionStats st =
            run_qbs({th, QuantumBs{spec.c1, c2}, std::nullopt});
        result.rows.push_back({num(th), num(st.p1), num(st.p2)});
      }
      break;
    }
    case ExperimentKind::Bbs: {
      result.columns = {"theta", "p1", "p2"};
      for (double th : spec.theta_grid.values()) {
        const DetectionStats st =
            run_bbs({th, BiasedBs{spec.r, spec.t}, std::nullopt});
        result.rows.push_back({num(th), num(st.p1), num(st.p2)});
      }
      break;
    }
    case ExperimentKind::QbsConditioned: {
      result.columns = {"theta", "p1", "p2", "norm"};
      const double c2 = std::sqrt(std::max(0.0, 1.0 - spec.c1 * spec.c1));
      for (double th : spec.theta_grid.values()) {
        const DetectionStats st =
            run_qbs_conditioned({th, QuantumBs{spec.c1, c2}, spec.alpha});
        result.rows.push_back(
            {num(th), num(st.p1), num(st.p2), num(st.norm)});
      }
      break;
    }
    case ExperimentKind::Expand: {
      result.columns = {"overlap", "gamma", "beta",
                        "weight_q1", "weight_q2", "weight_q3",
                        "coherence_q1", "coherence_q2", "coherence_q3"};
      const Grid grid =
          spec.overlap_grid.value_or(Grid{spec.overlap, spec.overlap, 1});
      for (double w : grid.values()) {
        const ExpandedStates e = expand_detector_states(w);
        const WaveParticleReport rep = wave_particle_decomposition(w);
        result.rows.push_back(
            {num(w), num(e.gamma), num(e.beta), num(rep.weight_q1),
             num(rep.weight_q2), num(rep.weight_q3), num(rep.coherence_q1),
             num(rep.coherence_q2), num(rep.coherence_q3)});
      }
      break;
    }
    case ExperimentKind::Verify: {
      result.columns = {"check", "samples", "max_residual", "tolerance",
                        "pass"};
      for (const VerifyCheck& c : run_verify(*spec.seed, spec.samples)) {
        result.rows.push_back({Cell{c.name},
                               num(static_cast<double>(c.samples)),
                               num(c.max_residual), num(c.tolerance),
                               num(c.pass() ? 1.0 : 0.0)});
        if (!c.pass()) result.failed_checks.push_back(c.name);
      }
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with a header row; floats carry 17 significant digits so parsing
/// them back reproduces the exact doubles. Newlines are LF regardless of
/// platform.
inline void emit_csv(const SweepResult& result, std::ostream& os) {
  for (std::size_t c = 0; c < result.columns.size(); ++c)
    os << (c ? "," : "") << result.columns[c];
  os << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      if (const double* d = std::get_if<double>(&row[c]))
        os << detail::format_double(*d);
      else
        os << std::get<std::string>(row[c]);
    }
    os << '\n';
  }
}

inline nlohmann::ordered_json to_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["version"] = result.version;
  j["seed"] = nullptr;
  if (result.seed) j["seed"] = *result.seed;
  j["spec_echo"] = result.spec_echo;
  j["columns"] = result.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json jr = nlohmann::ordered_json::array();
    for (const auto& cell : row) {
      if (const double* d = std::get_if<double>(&cell))
        jr.push_back(*d);
      else
        jr.push_back(std::get<std::string>(cell));
    }
    j["rows"].push_back(std::move(jr));
  }
  j["failed_checks"] = result.failed_checks;
  return j;
}

}  // namespace duality
