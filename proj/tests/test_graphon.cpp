#include <gtest/gtest.h>

#include <cmath>

#include "kriggraph/graphon.hpp"
#include "kriggraph/random.hpp"

using namespace kriggraph;

namespace {

Matrix random_symmetric(std::size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = lo + (hi - lo) * uniform01(rng);
  return m;
}

// Straight triple loop over vertex images, written independently of the
// odometer enumeration.
double triangle_density_naive(const Matrix& w) {
  const std::size_t n = w.rows();
  double s = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) s += w(a, b) * w(b, c) * w(c, a);
  return s / double(n * n * n);
}

// Full double enumeration over (S, T).
double cut_norm_double_enumeration(const Matrix& w) {
  const std::size_t n = w.rows();
  double best = 0.0;
  for (unsigned s = 0; s < (1u << n); ++s)
    for (unsigned t = 0; t < (1u << n); ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if ((s >> i & 1u) && (t >> j & 1u)) sum += w(i, j);
      best = std::max(best, std::fabs(sum));
    }
  return best / double(n * n);
}

}  // namespace

TEST(HomomorphismDensity, EdgeOnConstantGraphon) {
  EXPECT_DOUBLE_EQ(homomorphism_density(Motif::edge(), Matrix(5, 5, 1.0)), 1.0);
  EXPECT_NEAR(homomorphism_density(Motif::edge(), Matrix(4, 4, 0.37)), 0.37, 1e-15);
}

TEST(HomomorphismDensity, TriangleMatchesNaiveTripleLoop) {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    auto w = random_symmetric(4, rng);
    EXPECT_NEAR(homomorphism_density(Motif::triangle(), w), triangle_density_naive(w), 1e-15);
  }
}

TEST(HomomorphismDensity, CapacityLimits) {
  Motif big{6, {{0, 1}}};
  EXPECT_THROW(homomorphism_density(big, Matrix(3, 3, 1.0)), CapacityError);
  EXPECT_THROW(homomorphism_density(Motif::edge(), Matrix(13, 13, 1.0)), CapacityError);
}

TEST(CutNorm, ZeroAndOnes) {
  EXPECT_EQ(cut_norm(Matrix(5, 5)), 0.0);
  EXPECT_DOUBLE_EQ(cut_norm(Matrix(6, 6, 1.0)), 1.0);
  EXPECT_THROW(cut_norm(Matrix(13, 13)), CapacityError);
}

TEST(CutNorm, MatchesDoubleEnumerationAndDominatesHeuristics) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    auto w = random_symmetric(6, rng, -1.0, 1.0);
    const double exact = cut_norm(w);
    EXPECT_NEAR(exact, cut_norm_double_enumeration(w), 1e-14);
    for (int h = 0; h < 20; ++h) {
      const unsigned s = unsigned(rng() % 64), t = unsigned(rng() % 64);
      double sum = 0.0;
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
          if ((s >> i & 1u) && (t >> j & 1u)) sum += w(i, j);
      EXPECT_GE(exact + 1e-15, std::fabs(sum) / 36.0);
    }
  }
}

TEST(MixupBound, NoDropGivesZeroBothSides) {
  Rng rng(3);
  auto r = verify_mixup_bound({Motif::triangle(), random_symmetric(5, rng), Matrix(5, 5)});
  EXPECT_EQ(r.lambda, 1.0);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(MixupBound, ConstantDropScalesDensityByPowerOfEdges) {
  Rng rng(4);
  for (const auto& f : {Motif::edge(), Motif::path2(), Motif::triangle(), Motif::square()}) {
    auto w = random_symmetric(5, rng);
    const double c = 0.3;
    auto r = verify_mixup_bound({f, w, Matrix(5, 5, c)});
    EXPECT_NEAR(r.t_dropped, std::pow(1.0 - c, double(f.n_edges())) * r.t_base, 1e-12);
    EXPECT_TRUE(r.holds);
  }
}

TEST(MixupBound, ReportsBothLambdaConventions) {
  Matrix phi(3, 3);
  phi(0, 1) = phi(1, 0) = 0.5;
  auto r = verify_mixup_bound({Motif::edge(), Matrix(3, 3, 1.0), phi});
  EXPECT_DOUBLE_EQ(r.lambda, 0.25);       // both ordered entries
  EXPECT_DOUBLE_EQ(r.lambda_pairs, 0.5);  // the pair once
  EXPECT_GE(r.rhs, r.rhs_pairs);
}

TEST(MixupBound, RandomCasesHold) {
  Rng rng(99);
  const Motif motifs[] = {Motif::edge(), Motif::path2(), Motif::triangle(), Motif::square()};
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 5;
    auto w = random_symmetric(n, rng);
    Matrix phi(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        if (uniform01(rng) < 0.3) phi(i, j) = phi(j, i) = uniform01(rng);
    auto r = verify_mixup_bound({motifs[rep % 4], w, phi});
    EXPECT_TRUE(r.holds) << "rep " << rep << " lhs " << r.lhs << " rhs " << r.rhs;
    EXPECT_TRUE(r.holds_pairs);
  }
}
