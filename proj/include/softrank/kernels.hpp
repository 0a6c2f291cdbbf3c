#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "softrank/bridge.hpp"
#include "softrank/rng.hpp"

namespace softrank {

/// Conditioning data for one backward step of the (unreflected) bridge:
/// the law of z_s given (z_t, z0_hat, z1) for 0 <= s < t <= 1. s = 0 is the
/// degenerate final step, which returns z0_hat exactly.
struct ReverseKernelQuery {
  double s;
  double t;
  double eta;
  SoftRankVector z_t;
  SoftRankVector z0_hat;
  SoftRankVector z1;

  ReverseKernelQuery(double s_, double t_, double eta_, SoftRankVector zt,
                     SoftRankVector z0hat, SoftRankVector zone)
      : s(s_), t(t_), eta(eta_), z_t(std::move(zt)), z0_hat(std::move(z0hat)),
        z1(std::move(zone)) {
    if (!(eta > 0.0))
      throw std::domain_error("ReverseKernelQuery: eta must be > 0");
    if (!(s >= 0.0) || !(s < t) || !(t <= 1.0))
      throw std::domain_error("ReverseKernelQuery: need 0 <= s < t <= 1");
    if (z_t.size() != z0_hat.size() || z_t.size() != z1.size())
      throw std::invalid_argument("ReverseKernelQuery: size mismatch");
  }

  std::size_t size() const { return z_t.size(); }
  double mu(double u, std::size_t i) const {
    return (1.0 - u) * z0_hat[i] + u * z1[i];
  }
};

struct BridgeMoments {
  std::vector<double> mean;  // one entry per coordinate
  double var;                // shared across coordinates
};

/// Closed form of the backward conditional:
///   mean_i = mu_i(s) + (s/t) (z_t,i - mu_i(t)),  var = eta^2 s (t - s) / t,
/// with mu(u) = (1-u) z0_hat + u z1. Rounding at s -> t can push the
/// variance a hair below zero; it is clamped, and the clamp is asserted to
/// be within 1e-14 relative.
inline BridgeMoments bridge_mean_var(const ReverseKernelQuery& q) {
  const double ratio = q.t > 0.0 ? q.s / q.t : 0.0;
  BridgeMoments out;
  out.mean.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    out.mean[i] = q.mu(q.s, i) + ratio * (q.z_t[i] - q.mu(q.t, i));
  double var = q.eta * q.eta * q.s * (q.t - q.s) / q.t;
  if (var < 0.0) {
    if (var < -1e-14 * q.eta * q.eta)
      throw std::logic_error("bridge_mean_var: variance clamp beyond rounding");
    var = 0.0;
  }
  out.var = var;
  return out;
}

/// Draw z_s: mean + sqrt(var) * eps per coordinate, then fold into [0,1].
inline SoftRankVector sample_reverse_step(const ReverseKernelQuery& q, Rng& rng) {
  const BridgeMoments m = bridge_mean_var(q);
  const double sd = std::sqrt(m.var);
  std::vector<double> z(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    z[i] = reflect(m.mean[i] + (sd > 0.0 ? sd * standard_normal(rng) : 0.0));
  return SoftRankVector(std::move(z));
}

/// Joint second moments of (z_s, z_t) given the endpoints, for 0 < s < t < 1:
///   v_s = eta^2 s (1-s),  v_t = eta^2 t (1-t),  c = eta^2 s (1-t),
///   det = v_s v_t - c^2.
/// These satisfy c / v_t = s / t and v_s - c^2 / v_t = eta^2 s (t-s) / t.
struct JointCovariance {
  double v_s;
  double v_t;
  double c_st;
  double det;
};

inline JointCovariance joint_covariance(double s, double t, double eta) {
  if (!(eta > 0.0)) throw std::domain_error("joint_covariance: eta must be > 0");
  if (!(s > 0.0 && s < t && t < 1.0))
    throw std::domain_error("joint_covariance: need 0 < s < t < 1");
  const double e2 = eta * eta;
  JointCovariance jc;
  jc.v_s = e2 * s * (1.0 - s);
  jc.v_t = e2 * t * (1.0 - t);
  jc.c_st = e2 * s * (1.0 - t);
  jc.det = jc.v_s * jc.v_t - jc.c_st * jc.c_st;
  return jc;
}

}  // namespace softrank
