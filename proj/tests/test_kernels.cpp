#include <gtest/gtest.h>

#include <cmath>

#include "softrank/kernels.hpp"

using namespace softrank;

namespace {

SoftRankVector scalar2(double a) { return SoftRankVector({a, a}); }

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

TEST(Kernels, QueryValidation) {
  EXPECT_THROW(ReverseKernelQuery(0.5, 0.5, 1.0, scalar2(0.5), scalar2(0.5),
                                  scalar2(0.5)),
               std::domain_error);
  EXPECT_THROW(ReverseKernelQuery(0.2, 1.1, 1.0, scalar2(0.5), scalar2(0.5),
                                  scalar2(0.5)),
               std::domain_error);
  EXPECT_THROW(ReverseKernelQuery(0.2, 0.5, 0.0, scalar2(0.5), scalar2(0.5),
                                  scalar2(0.5)),
               std::domain_error);
  // s = 0 and t = 1 are both legal.
  EXPECT_NO_THROW(ReverseKernelQuery(0.0, 1.0, 1.0, scalar2(0.5), scalar2(0.5),
                                     scalar2(0.5)));
}

TEST(Kernels, BridgeMeanVarExamples) {
  // s=0.25, t=0.5, eta=1, z0=0, z1=1, z_t=0.5: mean 0.25, var 0.125.
  const ReverseKernelQuery q(0.25, 0.5, 1.0, scalar2(0.5), scalar2(0.0),
                             scalar2(1.0));
  const auto m = bridge_mean_var(q);
  EXPECT_NEAR(m.mean[0], 0.25, 1e-15);
  EXPECT_NEAR(m.var, 0.125, 1e-15);

  // s -> 0 collapses onto z0_hat.
  const ReverseKernelQuery q0(0.0, 0.5, 1.0, scalar2(0.9), scalar2(0.3),
                              scalar2(1.0));
  const auto m0 = bridge_mean_var(q0);
  EXPECT_DOUBLE_EQ(m0.mean[0], 0.3);
  EXPECT_DOUBLE_EQ(m0.var, 0.0);

  // s -> t collapses onto z_t.
  const double t = 0.6;
  const ReverseKernelQuery qt(t - 1e-13, t, 1.0, scalar2(0.9), scalar2(0.3),
                              scalar2(1.0));
  const auto mt = bridge_mean_var(qt);
  EXPECT_NEAR(mt.mean[0], 0.9, 1e-9);
  EXPECT_NEAR(mt.var, 0.0, 1e-12);
}

TEST(Kernels, JointCovarianceExample) {
  const auto jc = joint_covariance(0.25, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(jc.v_s, 0.1875);
  EXPECT_DOUBLE_EQ(jc.v_t, 0.25);
  EXPECT_DOUBLE_EQ(jc.c_st, 0.125);
  EXPECT_DOUBLE_EQ(jc.det, 0.03125);
  EXPECT_THROW(joint_covariance(0.5, 0.25, 1.0), std::domain_error);
}

TEST(Kernels, CovarianceIdentities) {
  Rng rng = make_rng(41);
  for (int i = 0; i < 1000; ++i) {
    const double t = 0.05 + 0.9 * uniform01(rng);
    const double s = t * (0.05 + 0.9 * uniform01(rng));
    const double eta = 0.1 + 2.0 * uniform01(rng);
    const auto jc = joint_covariance(s, t, eta);
    EXPECT_NEAR(jc.c_st / jc.v_t, s / t, 1e-12);
    EXPECT_NEAR(jc.v_s - jc.c_st * jc.c_st / jc.v_t,
                eta * eta * s * (t - s) / t, 1e-12);
  }
}

TEST(Kernels, MatchesGenericGaussianConditioning) {
  // mean mu_s + (c/v_t)(z_t - mu_t), var v_s - c^2/v_t from the joint
  // covariance must agree with the closed form.
  Rng rng = make_rng(43);
  for (int i = 0; i < 10000; ++i) {
    const double t = 0.05 + 0.9 * uniform01(rng);
    const double s = t * (0.05 + 0.9 * uniform01(rng));
    const double eta = 0.1 + 2.0 * uniform01(rng);
    const SoftRankVector z0({uniform01(rng), uniform01(rng)});
    const SoftRankVector z1({uniform01(rng), uniform01(rng)});
    const SoftRankVector zt({uniform01(rng), uniform01(rng)});
    const ReverseKernelQuery q(s, t, eta, zt, z0, z1);
    const auto m = bridge_mean_var(q);
    const auto jc = joint_covariance(s, t, eta);
    for (std::size_t c = 0; c < 2; ++c) {
      const double mu_s = (1.0 - s) * z0[c] + s * z1[c];
      const double mu_t = (1.0 - t) * z0[c] + t * z1[c];
      const double generic = mu_s + (jc.c_st / jc.v_t) * (zt[c] - mu_t);
      EXPECT_NEAR(m.mean[c], generic, 1e-12);
    }
    EXPECT_NEAR(m.var, jc.v_s - jc.c_st * jc.c_st / jc.v_t, 1e-12);
  }
}

TEST(Kernels, ChapmanKolmogorovMeans) {
  // Conditioning t->s then s->r, propagating the mean, equals t->r.
  Rng rng = make_rng(47);
  for (int i = 0; i < 1000; ++i) {
    const double t = 0.2 + 0.75 * uniform01(rng);
    const double s = t * (0.3 + 0.6 * uniform01(rng));
    const double r = s * (0.1 + 0.8 * uniform01(rng));
    const double eta = 0.1 + uniform01(rng);
    const SoftRankVector z0({uniform01(rng), uniform01(rng)});
    const SoftRankVector z1({uniform01(rng), uniform01(rng)});
    const SoftRankVector zt({uniform01(rng), uniform01(rng)});

    const auto ms = bridge_mean_var(ReverseKernelQuery(s, t, eta, zt, z0, z1));
    const auto mr_two = bridge_mean_var(ReverseKernelQuery(
        r, s, eta, SoftRankVector(ms.mean), z0, z1));
    const auto mr_one = bridge_mean_var(ReverseKernelQuery(r, t, eta, zt, z0, z1));
    for (std::size_t c = 0; c < 2; ++c)
      EXPECT_NEAR(mr_two.mean[c], mr_one.mean[c], 1e-10);
  }
}

TEST(Kernels, ChapmanKolmogorovMonteCarlo) {
  // Two-step sampling t->s->r matches one-step t->r in mean and variance.
  Rng rng = make_rng(53);
  const double t = 0.8, s = 0.5, r = 0.25, eta = 0.1;
  const SoftRankVector z0 = scalar2(0.45);
  const SoftRankVector z1 = scalar2(0.55);
  const SoftRankVector zt = scalar2(0.5);
  const int draws = 100000;

  std::vector<double> one, two;
  one.reserve(draws);
  two.reserve(draws);
  for (int i = 0; i < draws; ++i) {
    one.push_back(
        sample_reverse_step(ReverseKernelQuery(r, t, eta, zt, z0, z1), rng)[0]);
    const auto zs =
        sample_reverse_step(ReverseKernelQuery(s, t, eta, zt, z0, z1), rng);
    two.push_back(
        sample_reverse_step(ReverseKernelQuery(r, s, eta, zs, z0, z1), rng)[0]);
  }
  const double var_th =
      bridge_mean_var(ReverseKernelQuery(r, t, eta, zt, z0, z1)).var;
  const double se_mean = std::sqrt(var_th / draws);
  EXPECT_NEAR(sample_mean(two), sample_mean(one), 3.0 * std::sqrt(2.0) * se_mean);
  const double se_var = var_th * std::sqrt(2.0 / (draws - 1));
  EXPECT_NEAR(sample_var(two), sample_var(one), 3.0 * std::sqrt(2.0) * se_var);
}

TEST(Kernels, ReverseStepMomentsAndSupport) {
  Rng rng = make_rng(59);
  const ReverseKernelQuery q(0.25, 0.5, 0.1, scalar2(0.5), scalar2(0.5),
                             scalar2(0.5));
  std::vector<double> draws;
  draws.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const auto z = sample_reverse_step(q, rng);
    EXPECT_GE(z[0], 0.0);
    EXPECT_LE(z[0], 1.0);
    draws.push_back(z[0]);
  }
  EXPECT_NEAR(sample_mean(draws), 0.5, 0.002);
  const double var_th = 0.01 * 0.125;
  EXPECT_NEAR(sample_var(draws), var_th, 0.1 * var_th);

  // var = 0 queries return the mean exactly.
  const ReverseKernelQuery q0(0.0, 0.5, 0.1, scalar2(0.9), scalar2(0.3),
                              scalar2(0.6));
  const auto z = sample_reverse_step(q0, rng);
  EXPECT_DOUBLE_EQ(z[0], 0.3);
}

TEST(Kernels, ForwardReverseConsistency) {
  // z_t ~ forward marginal at t, then z_s ~ reverse kernel, reproduces the
  // forward marginal at s (reflection inactive at this eta).
  Rng rng = make_rng(61);
  const double t = 0.7, s = 0.4, eta = 0.3;
  const SoftRankVector z0 = scalar2(0.45);
  const SoftRankVector z1 = scalar2(0.55);
  const int draws = 100000;
  std::vector<double> zs_draws;
  zs_draws.reserve(draws);
  for (int i = 0; i < draws; ++i) {
    const auto zt = sample_forward_marginal(z0, z1, t, eta, rng);
    zs_draws.push_back(
        sample_reverse_step(ReverseKernelQuery(s, t, eta, zt, z0, z1), rng)[0]);
  }
  const double mean_th = (1.0 - s) * z0[0] + s * z1[0];
  const double var_th = eta * eta * s * (1.0 - s);
  const double se_mean = std::sqrt(var_th / draws);
  const double se_var = var_th * std::sqrt(2.0 / (draws - 1));
  EXPECT_NEAR(sample_mean(zs_draws), mean_th, 3.0 * se_mean);
  EXPECT_NEAR(sample_var(zs_draws), var_th, 3.0 * se_var);
}
