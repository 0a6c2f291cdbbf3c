#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "softrank/bridge.hpp"

using namespace softrank;

namespace {

// Iterative boundary-bounce oracle for the reflection operator.
double bounce_reflect(double x) {
  while (x < 0.0 || x > 1.0) {
    if (x < 0.0) x = -x;
    if (x > 1.0) x = 2.0 - x;
  }
  return x;
}

double sample_mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_var(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST(Bridge, LiftToGrid) {
  const auto z3 = lift_to_grid(Permutation::identity(3));
  EXPECT_DOUBLE_EQ(z3[0], 0.0);
  EXPECT_DOUBLE_EQ(z3[1], 0.5);
  EXPECT_DOUBLE_EQ(z3[2], 1.0);

  const auto z = lift_to_grid(Permutation({3, 1, 2}));
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 0.0);
  EXPECT_DOUBLE_EQ(z[2], 0.5);

  const auto z5 = lift_to_grid(Permutation::identity(5));
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_DOUBLE_EQ(z5[i], 0.25 * static_cast<double>(i));
}

TEST(Bridge, LiftIsInjectiveAndRoundTrips) {
  for (std::size_t n = 2; n <= 6; ++n) {
    std::set<std::vector<double>> images;
    for (const auto& sigma : enumerate_all(n)) {
      const auto z = lift_to_grid(sigma);
      images.insert(z.values);
      EXPECT_EQ(rank_of_coordinates(z.values), sigma);
    }
    std::size_t fact = 1;
    for (std::size_t i = 2; i <= n; ++i) fact *= i;
    EXPECT_EQ(images.size(), fact);
  }
}

TEST(Bridge, ReflectExamples) {
  EXPECT_DOUBLE_EQ(reflect(0.7), 0.7);
  EXPECT_DOUBLE_EQ(reflect(-0.2), 0.2);
  EXPECT_DOUBLE_EQ(reflect(1.3), 0.7);
  EXPECT_DOUBLE_EQ(reflect(2.5), 0.5);
  EXPECT_THROW(reflect(std::numeric_limits<double>::infinity()),
               std::domain_error);
  EXPECT_THROW(reflect(std::numeric_limits<double>::quiet_NaN()),
               std::domain_error);
}

TEST(Bridge, ReflectMatchesBounceOracle) {
  Rng rng = make_rng(101);
  for (int i = 0; i < 10000; ++i) {
    const double x = -10.0 + 20.0 * uniform01(rng);
    const double r = reflect(x);
    EXPECT_NEAR(r, bounce_reflect(x), 1e-12);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_DOUBLE_EQ(reflect(r), r);                 // idempotent
    EXPECT_NEAR(reflect(-x), r, 1e-12);              // even around 0
    EXPECT_NEAR(reflect(2.0 - x), r, 1e-12);         // even around 1
  }
}

TEST(Bridge, SampleReferenceSupport) {
  Rng rng = make_rng(5);
  const auto cube = BridgeParams::uniform(0.3, 10, Reference::UniformUnitCube);
  for (int i = 0; i < 100; ++i) {
    const auto z = sample_reference(cube, 3, rng);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_GE(z[j], 0.0);
      EXPECT_LE(z[j], 1.0);
    }
  }
  const auto grid = BridgeParams::uniform(0.3, 10, Reference::GridOfRandomPermutation);
  for (int i = 0; i < 100; ++i) {
    const auto z = sample_reference(grid, 3, rng);
    std::multiset<double> entries(z.values.begin(), z.values.end());
    EXPECT_EQ(entries, (std::multiset<double>{0.0, 0.5, 1.0}));
  }
}

TEST(Bridge, SampleReferenceMoments) {
  Rng rng = make_rng(7);
  const auto cube = BridgeParams::uniform(0.3, 10);
  std::vector<double> coord0;
  coord0.reserve(100000);
  for (int i = 0; i < 100000; ++i) coord0.push_back(sample_reference(cube, 3, rng)[0]);
  EXPECT_NEAR(sample_mean(coord0), 0.5, 0.01);
}

TEST(Bridge, BridgeParamsValidation) {
  EXPECT_THROW(BridgeParams(0.0, {0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(BridgeParams(0.5, {0.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(BridgeParams(0.5, {0.0, 0.7, 0.3, 1.0}), std::invalid_argument);
  EXPECT_EQ(BridgeParams::uniform(0.5, 20).steps(), 20u);
}

TEST(Bridge, ForwardPathZeroNoiseIsLine) {
  Rng rng = make_rng(13);
  const SoftRankVector z0({0.1, 0.9, 0.4});
  const SoftRankVector z1({0.8, 0.2, 0.6});
  const auto params = BridgeParams::uniform(1e-8, 100);
  const auto path = simulate_forward_path(z0, z1, params, rng);
  ASSERT_EQ(path.size(), 101u);
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double t = params.time_grid[k];
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR(path[k][i], (1.0 - t) * z0[i] + t * z1[i], 1e-3);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(path.back()[i], z1[i]);
}

TEST(Bridge, ForwardPathStaysInDomain) {
  const auto params = BridgeParams::uniform(1.0, 50);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_stream(99, seed);
    const auto z0 = lift_to_grid(random_permutation(6, rng));
    const auto z1 = sample_reference(params, 6, rng);
    for (const auto& state : simulate_forward_path(z0, z1, params, rng))
      for (std::size_t i = 0; i < state.size(); ++i) {
        EXPECT_GE(state[i], 0.0);
        EXPECT_LE(state[i], 1.0);
      }
  }
}

TEST(Bridge, ForwardPathMidpointVariance) {
  // Var(z_t | z0, z1) = eta^2 t (1 - t); at t = 0.5 with eta = 0.1 this is
  // 0.0025. Endpoints at 0.5 keep reflection inactive.
  Rng rng = make_rng(17);
  const SoftRankVector z0({0.5, 0.5});
  const SoftRankVector z1({0.5, 0.5});
  const auto params = BridgeParams::uniform(0.1, 200);
  std::vector<double> mid;
  mid.reserve(10000);
  for (int p = 0; p < 10000; ++p)
    mid.push_back(simulate_forward_path(z0, z1, params, rng)[100][0]);
  EXPECT_NEAR(sample_var(mid), 0.0025, 0.00025);
}

TEST(Bridge, ForwardPathCovariance) {
  // Cov(z_s, z_t | z0, z1) = eta^2 s (1 - t) for s < t.
  Rng rng = make_rng(19);
  const SoftRankVector z0({0.5, 0.5});
  const SoftRankVector z1({0.5, 0.5});
  const auto params = BridgeParams::uniform(0.1, 100);
  const std::size_t ks = 30, kt = 70;  // t = 0.3 and 0.7
  std::vector<double> xs, xt;
  const int paths = 100000;
  xs.reserve(paths);
  xt.reserve(paths);
  for (int p = 0; p < paths; ++p) {
    const auto path = simulate_forward_path(z0, z1, params, rng);
    xs.push_back(path[ks][0]);
    xt.push_back(path[kt][0]);
  }
  const double ms = sample_mean(xs), mt = sample_mean(xt);
  double cov = 0;
  for (int p = 0; p < paths; ++p) cov += (xs[p] - ms) * (xt[p] - mt);
  cov /= paths - 1;
  const double expected = 0.01 * 0.3 * (1.0 - 0.7);
  EXPECT_NEAR(cov, expected, 0.1 * expected);
}

TEST(Bridge, MarginalEndpointsAndVariance) {
  Rng rng = make_rng(23);
  const SoftRankVector z0({0.1, 0.9});
  const SoftRankVector z1({0.7, 0.3});
  EXPECT_THROW(sample_forward_marginal(z0, z1, 0.0, 0.1, rng), std::domain_error);
  EXPECT_THROW(sample_forward_marginal(z0, z1, 1.0, 0.1, rng), std::domain_error);

  const double t_low = 1e-12;
  const auto near0 = sample_forward_marginal(z0, z1, t_low, 0.1, rng);
  EXPECT_NEAR(near0[0], z0[0], 1e-4);
  const double t_high = 1.0 - 1e-12;
  const auto near1 = sample_forward_marginal(z0, z1, t_high, 0.1, rng);
  EXPECT_NEAR(near1[1], z1[1], 1e-4);

  const SoftRankVector mid({0.5, 0.5});
  std::vector<double> draws;
  draws.reserve(100000);
  for (int i = 0; i < 100000; ++i)
    draws.push_back(sample_forward_marginal(mid, mid, 0.5, 0.1, rng)[0]);
  EXPECT_NEAR(sample_var(draws), 0.0025, 0.00025);
  EXPECT_NEAR(sample_mean(draws), 0.5, 3.0 * 0.05 / std::sqrt(100000.0));
}

TEST(Bridge, RiffleDegenerateCutsAreIdentity) {
  Rng rng = make_rng(29);
  const std::vector<int> deck{3, 1, 4, 2, 5};
  EXPECT_EQ(detail::gsr_interleave(deck, 0, rng), deck);
  EXPECT_EQ(detail::gsr_interleave(deck, deck.size(), rng), deck);
}

TEST(Bridge, RiffleSwapProbabilityN2) {
  // Enumerating GSR outcomes for n = 2: cut sizes {0,1,2} have probability
  // {1/4, 1/2, 1/4}; only cut = 1 can swap and does so with probability 1/2,
  // so P(swap) = 1/4.
  Rng rng = make_rng(31);
  const Permutation id2 = Permutation::identity(2);
  int swaps = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i)
    if (riffle_shuffle_step(id2, rng) != id2) ++swaps;
  const double p = swaps / static_cast<double>(trials);
  EXPECT_NEAR(p, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / trials));
}

TEST(Bridge, RiffleMixesToUniform) {
  Rng rng = make_rng(37);
  std::vector<int> counts(24, 0);
  const int chains = 100000;
  for (int c = 0; c < chains; ++c) {
    Permutation sigma = Permutation::identity(4);
    for (int s = 0; s < 10; ++s) sigma = riffle_shuffle_step(sigma, rng);
    counts[lexicographic_index(sigma)]++;
  }
  double tv = 0;
  for (int cnt : counts)
    tv += std::abs(cnt / static_cast<double>(chains) - 1.0 / 24.0);
  tv *= 0.5;
  EXPECT_LT(tv, 0.02);
}
