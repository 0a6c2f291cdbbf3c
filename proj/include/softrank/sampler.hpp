#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "softrank/denoiser.hpp"

namespace softrank {

struct SamplerConfig {
  BridgeParams bridge = BridgeParams::uniform(0.3, 20);
  bool record_trajectory = false;
};

/// One recorded reverse step: the state after the update to time t, the
/// ranking it induces, and the clean-permutation sample that drove the step.
struct TrajectoryStep {
  std::size_t k;            // grid index the state sits at
  double t;                 // time of the state (grid[k])
  std::vector<double> z;
  Permutation induced;      // rank_of_coordinates(z)
  std::optional<Permutation> sigma0_hat;  // absent on the initial record
};

using Trajectory = std::vector<TrajectoryStep>;

struct ReverseSampleResult {
  Permutation ranking;  // rank form over the instance's elements
  Trajectory trajectory;  // empty unless recording was requested
};

/// Reverse-time generation: draw z1 from the reference and hold it fixed;
/// walk the grid from t_K = 1 down to t_0 = 0, at each step sampling a clean
/// permutation from the model given the current observed ordering, lifting
/// it to the grid, and drawing the next state from the backward bridge
/// conditional (reflected). The final step has s = 0 and is deterministic
/// at the lifted sample, so the last sigma0_hat decides the output.
inline ReverseSampleResult reverse_sample(const DenoiserModel& model,
                                          const ItemMatrix& items,
                                          const SamplerConfig& config, Rng& rng) {
  const std::size_t n = items.n;
  if (n < 2) throw std::invalid_argument("reverse_sample: need >= 2 items");
  if (model.item_count() != n)
    throw std::invalid_argument("reverse_sample: model size mismatch");

  const auto& grid = config.bridge.time_grid;
  const SoftRankVector z1 = sample_reference(config.bridge, n, rng);
  SoftRankVector z = z1;

  ReverseSampleResult result{Permutation::identity(n), {}};
  if (config.record_trajectory)
    result.trajectory.push_back(TrajectoryStep{grid.size() - 1, 1.0, z.values,
                                               rank_of_coordinates(z.values),
                                               std::nullopt});

  for (std::size_t k = grid.size() - 1; k >= 1; --k) {
    const double t = grid[k];
    const double s = grid[k - 1];
    const Permutation sigma_t = rank_of_coordinates(z.values);
    const ObservedItems xt = observe(items, sigma_t);
    const auto [seq, lp] = cgpl_sample(model, xt, t, rng);
    const Permutation sigma0_hat = element_frame_ranks(seq, sigma_t);
    const SoftRankVector z0_hat = lift_to_grid(sigma0_hat);
    const ReverseKernelQuery q(s, t, config.bridge.eta, z, z0_hat, z1);
    z = sample_reverse_step(q, rng);
    if (config.record_trajectory)
      result.trajectory.push_back(TrajectoryStep{k - 1, s, z.values,
                                                 rank_of_coordinates(z.values),
                                                 sigma0_hat});
  }

  result.ranking = rank_of_coordinates(z.values);
  return result;
}

/// Kendall (bubble-sort) distance between consecutive induced permutations
/// of a recorded trajectory; the per-step jump sizes.
inline std::vector<int> trajectory_jumpiness(const Trajectory& traj) {
  if (traj.size() < 2)
    throw std::invalid_argument("trajectory_jumpiness: need >= 2 states");
  std::vector<int> jumps;
  jumps.reserve(traj.size() - 1);
  for (std::size_t i = 1; i < traj.size(); ++i)
    jumps.push_back(kendall_distance(traj[i - 1].induced, traj[i].induced));
  return jumps;
}

/// Jump sizes of a sequence of permutations (for forward chains).
inline std::vector<int> chain_jumpiness(const std::vector<Permutation>& chain) {
  if (chain.size() < 2)
    throw std::invalid_argument("chain_jumpiness: need >= 2 states");
  std::vector<int> jumps;
  jumps.reserve(chain.size() - 1);
  for (std::size_t i = 1; i < chain.size(); ++i)
    jumps.push_back(kendall_distance(chain[i - 1], chain[i]));
  return jumps;
}

}  // namespace softrank
