#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "softrank/permutation.hpp"
#include "softrank/rng.hpp"

namespace softrank {

/// A point in [0,1]^N: the continuous latent carrying one soft rank per
/// element. Coordinate i belongs to element i for the whole trajectory.
struct SoftRankVector {
  std::vector<double> values;

  explicit SoftRankVector(std::vector<double> v) : values(std::move(v)) {
    if (values.size() < 2)
      throw std::invalid_argument("SoftRankVector: need >= 2 entries");
    for (double x : values)
      if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("SoftRankVector: entry outside [0,1]");
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

enum class Reference { UniformUnitCube, GridOfRandomPermutation };

/// Forward/reverse process configuration: noise scale eta and the shared
/// time grid 0 = t_0 < ... < t_K = 1.
struct BridgeParams {
  double eta;
  std::vector<double> time_grid;
  Reference reference = Reference::UniformUnitCube;

  BridgeParams(double eta_, std::vector<double> grid,
               Reference ref = Reference::UniformUnitCube)
      : eta(eta_), time_grid(std::move(grid)), reference(ref) {
    if (!(eta > 0.0)) throw std::invalid_argument("BridgeParams: eta must be > 0");
    if (time_grid.size() < 2 || time_grid.front() != 0.0 || time_grid.back() != 1.0)
      throw std::invalid_argument("BridgeParams: grid must run exactly from 0 to 1");
    for (std::size_t k = 1; k < time_grid.size(); ++k)
      if (!(time_grid[k] > time_grid[k - 1]))
        throw std::invalid_argument("BridgeParams: grid must be strictly increasing");
  }

  static BridgeParams uniform(double eta, std::size_t n_steps,
                              Reference ref = Reference::UniformUnitCube) {
    if (n_steps < 1) throw std::invalid_argument("BridgeParams: need >= 1 step");
    std::vector<double> grid(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
      grid[k] = static_cast<double>(k) / static_cast<double>(n_steps);
    grid.back() = 1.0;
    return BridgeParams(eta, std::move(grid), ref);
  }

  std::size_t steps() const { return time_grid.size() - 1; }
};

/// Canonical grid point for rank r (1-based) among n: (r-1)/(n-1).
inline double grid_point(int rank, std::size_t n) {
  return static_cast<double>(rank - 1) / static_cast<double>(n - 1);
}

/// Lift a permutation onto the canonical grid: output_i = g_{sigma(i)}.
inline SoftRankVector lift_to_grid(const Permutation& sigma) {
  std::vector<double> v(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i)
    v[i] = grid_point(sigma(i), sigma.size());
  return SoftRankVector(std::move(v));
}

/// Triangle-wave fold of the real line into [0,1]. Fixed on [0,1], even
/// around 0 and around 1, and idempotent.
inline double reflect(double x) {
  if (!std::isfinite(x)) throw std::domain_error("reflect: non-finite input");
  if (x >= 0.0 && x <= 1.0) return x;
  double y = std::fmod(x, 2.0);
  if (y < 0.0) y += 2.0;
  return y <= 1.0 ? y : 2.0 - y;
}

inline SoftRankVector reflect_all(const std::vector<double>& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = reflect(x[i]);
  return SoftRankVector(std::move(v));
}

/// Draw z_1 from the data-independent reference distribution.
inline SoftRankVector sample_reference(const BridgeParams& params, std::size_t n,
                                       Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_reference: n must be >= 2");
  if (params.reference == Reference::UniformUnitCube) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform01(rng);
    return SoftRankVector(std::move(v));
  }
  return lift_to_grid(random_permutation(n, rng));
}

/// One-shot draw from the bridge marginal at time t in (0,1):
/// per coordinate N((1-t) z0 + t z1, eta^2 t (1-t)), folded back into [0,1].
inline SoftRankVector sample_forward_marginal(const SoftRankVector& z0,
                                              const SoftRankVector& z1, double t,
                                              double eta, Rng& rng) {
  if (z0.size() != z1.size())
    throw std::invalid_argument("sample_forward_marginal: size mismatch");
  if (!(t > 0.0 && t < 1.0))
    throw std::domain_error("sample_forward_marginal: t must lie in (0,1)");
  const double sd = eta * std::sqrt(t * (1.0 - t));
  std::vector<double> v(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i)
    v[i] = reflect((1.0 - t) * z0[i] + t * z1[i] + sd * standard_normal(rng));
  return SoftRankVector(std::move(v));
}

/// Conditional draw of z_t given the state z_s at an earlier time s and the
/// endpoint z1 (the bridge restricted to [s, 1]):
/// N(z_s + (t-s)/(1-s) (z1 - z_s), eta^2 (t-s)(1-t)/(1-s)), folded into [0,1].
inline SoftRankVector sample_forward_section(const SoftRankVector& z_s,
                                             const SoftRankVector& z1, double s,
                                             double t, double eta, Rng& rng) {
  if (z_s.size() != z1.size())
    throw std::invalid_argument("sample_forward_section: size mismatch");
  if (!(s >= 0.0 && s < t && t < 1.0))
    throw std::domain_error("sample_forward_section: need 0 <= s < t < 1");
  const double w = (t - s) / (1.0 - s);
  const double sd = eta * std::sqrt((t - s) * (1.0 - t) / (1.0 - s));
  std::vector<double> v(z_s.size());
  for (std::size_t i = 0; i < z_s.size(); ++i)
    v[i] = reflect(z_s[i] + w * (z1[i] - z_s[i]) + sd * standard_normal(rng));
  return SoftRankVector(std::move(v));
}

/// Euler-Maruyama simulation of the reflected bridge
///   dz = (z1 - z) / (1 - t) dt + eta dW + reflection,
/// returning one state per grid time. The final step pins the path to z1
/// instead of evaluating the drift at t = 1.
inline std::vector<SoftRankVector> simulate_forward_path(const SoftRankVector& z0,
                                                         const SoftRankVector& z1,
                                                         const BridgeParams& params,
                                                         Rng& rng) {
  if (z0.size() != z1.size())
    throw std::invalid_argument("simulate_forward_path: size mismatch");
  const std::size_t n = z0.size();
  std::vector<SoftRankVector> path;
  path.reserve(params.time_grid.size());
  path.push_back(z0);
  std::vector<double> z = z0.values;
  for (std::size_t k = 0; k + 1 < params.time_grid.size(); ++k) {
    const double t = params.time_grid[k];
    const double dt = params.time_grid[k + 1] - t;
    if (k + 2 == params.time_grid.size()) {
      path.push_back(z1);
      break;
    }
    const double diffusion = params.eta * std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) {
      const double drift = (z1[i] - z[i]) / (1.0 - t);
      z[i] = reflect(z[i] + dt * drift + diffusion * standard_normal(rng));
    }
    path.emplace_back(z);
  }
  return path;
}

namespace detail {

/// Uniformly random interleaving of deck[0..cut) and deck[cut..n):
/// sequential drops with probability proportional to remaining packet sizes.
inline std::vector<int> gsr_interleave(const std::vector<int>& deck,
                                       std::size_t cut, Rng& rng) {
  const std::size_t n = deck.size();
  std::vector<int> shuffled;
  shuffled.reserve(n);
  std::size_t a = 0, b = cut;  // heads of the two packets
  while (shuffled.size() < n) {
    const std::size_t remaining_a = cut - a;
    const std::size_t remaining_b = n - b;
    const double p_top = static_cast<double>(remaining_a) /
                         static_cast<double>(remaining_a + remaining_b);
    if (uniform01(rng) < p_top)
      shuffled.push_back(deck[a++]);
    else
      shuffled.push_back(deck[b++]);
  }
  return shuffled;
}

}  // namespace detail

/// One Gilbert-Shannon-Reeds riffle: binomial cut, then a uniformly random
/// interleaving of the two packets. Acts on the ordering that sigma induces
/// and returns the shuffled ordering's rank form.
inline Permutation riffle_shuffle_step(const Permutation& sigma, Rng& rng) {
  const std::size_t n = sigma.size();
  // Deck in sequence form: deck[pos] = element occupying that position.
  const Permutation inv = sigma.inverse();
  std::vector<int> deck(n);
  for (std::size_t pos = 0; pos < n; ++pos) deck[pos] = inv(pos);

  std::size_t cut = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (uniform01(rng) < 0.5) ++cut;

  const std::vector<int> shuffled = detail::gsr_interleave(deck, cut, rng);

  std::vector<int> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    ranks[static_cast<std::size_t>(shuffled[pos] - 1)] = static_cast<int>(pos) + 1;
  return Permutation(std::move(ranks));
}

}  // namespace softrank
