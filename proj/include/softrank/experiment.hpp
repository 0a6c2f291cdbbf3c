#pragma once

#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "softrank/sampler.hpp"
#include "softrank/tasks.hpp"

namespace softrank {

enum class TaskKind { Sorting, Tsp };

/// Static chunked parallel map; results must be written to per-index slots.
/// Each index derives its own RNG stream, so output is identical for any
/// thread count.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  for (auto& th : pool) th.join();
}

/// Items with evenly spaced scalar features; the fixed instance used by
/// unconditional distribution-learning tasks.
inline ItemMatrix canonical_items(std::size_t n) {
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i)
    vals[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return ItemMatrix(n, 1, std::move(vals));
}

/// Dataset drawing sigma0 from a fixed support with exact proportional
/// counts (largest-remainder rounding), shuffled reproducibly.
inline Dataset distribution_dataset(
    std::size_t n, const std::vector<std::pair<Permutation, double>>& support,
    std::size_t count, std::uint64_t seed) {
  Dataset data;
  data.reserve(count);
  const ItemMatrix items = canonical_items(n);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    std::size_t c = j + 1 == support.size()
                        ? count - assigned
                        : static_cast<std::size_t>(support[j].second *
                                                   static_cast<double>(count));
    assigned += c;
    for (std::size_t i = 0; i < c; ++i)
      data.push_back(TrainingExample{items, support[j].first});
  }
  Rng rng = make_rng(seed);
  std::shuffle(data.begin(), data.end(), rng);
  return data;
}

/// Generation protocol dispatch. SoftRank forwards run the reflected-bridge
/// reverse chain; with the previous-state parametrization the model's sample
/// replaces the kernel update. The riffle forward has no tractable reverse
/// kernel, so the clean-prediction parametrization generates in one shot
/// from the deepest trained corruption level, and the previous-state
/// parametrization walks the grid with direct state predictions.
inline Permutation generate_ranking(const DenoiserModel& model,
                                    const ItemMatrix& items,
                                    const CorruptionSpec& spec, Rng& rng) {
  const auto& grid = spec.bridge.time_grid;
  if (spec.forward == ForwardProcess::SoftRank) {
    if (spec.param == Parametrization::PredictSigma0) {
      SamplerConfig cfg{spec.bridge, false};
      return reverse_sample(model, items, cfg, rng).ranking;
    }
    SoftRankVector z = sample_reference(spec.bridge, items.n, rng);
    Permutation sigma = rank_of_coordinates(z.values);
    for (std::size_t k = grid.size() - 1; k >= 1; --k) {
      const Permutation sigma_t = rank_of_coordinates(z.values);
      const auto [seq, lp] =
          cgpl_sample(model, observe(items, sigma_t), grid[k], rng);
      sigma = element_frame_ranks(seq, sigma_t);
      z = lift_to_grid(sigma);
    }
    return sigma;
  }

  if (spec.param == Parametrization::PredictSigma0) {
    const Permutation sigma_T = random_permutation(items.n, rng);
    const auto [seq, lp] =
        cgpl_sample(model, observe(items, sigma_T), grid.back(), rng);
    return element_frame_ranks(seq, sigma_T);
  }
  Permutation sigma = random_permutation(items.n, rng);
  for (std::size_t k = grid.size() - 1; k >= 1; --k) {
    const auto [seq, lp] =
        cgpl_sample(model, observe(items, sigma), grid[k], rng);
    sigma = element_frame_ranks(seq, sigma);
  }
  return sigma;
}

struct SortingMetrics {
  double kendall_tau = 0.0;
  double accuracy = 0.0;
  double correctness = 0.0;
  std::size_t count = 0;
};

struct TspMetrics {
  double mean_length = 0.0;
  double mean_gap = 0.0;
  std::size_t count = 0;
};

inline SortingMetrics score_sorting(const std::vector<Permutation>& predictions,
                                    const std::vector<SortingInstance>& data) {
  if (predictions.size() != data.size())
    throw std::invalid_argument("score_sorting: size mismatch");
  SortingMetrics m;
  m.count = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    m.kendall_tau += kendall_tau(predictions[i], data[i].ground_truth);
    const auto s = accuracy_and_correctness(predictions[i], data[i].ground_truth);
    m.accuracy += s.exact_match;
    m.correctness += s.correctness;
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  m.kendall_tau *= inv;
  m.accuracy *= inv;
  m.correctness *= inv;
  return m;
}

inline std::vector<Permutation> sample_rankings(
    const DenoiserModel& model, const std::vector<ItemMatrix>& instances,
    const CorruptionSpec& spec, std::uint64_t seed, std::size_t threads = 1) {
  std::vector<Permutation> out(instances.size(), Permutation::identity(2));
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    out[i] = generate_ranking(model, instances[i], spec, rng);
  });
  return out;
}

inline SortingMetrics evaluate_sorting(const DenoiserModel& model,
                                       const std::vector<SortingInstance>& data,
                                       const CorruptionSpec& spec,
                                       std::uint64_t seed,
                                       std::size_t threads = 1) {
  std::vector<ItemMatrix> instances;
  instances.reserve(data.size());
  for (const auto& inst : data) instances.push_back(sorting_items(inst));
  return score_sorting(sample_rankings(model, instances, spec, seed, threads),
                       data);
}

inline TspMetrics evaluate_tsp(const DenoiserModel& model,
                               const std::vector<TspInstance>& data,
                               const CorruptionSpec& spec, std::uint64_t seed,
                               std::size_t threads = 1) {
  std::vector<ItemMatrix> instances;
  instances.reserve(data.size());
  for (const auto& inst : data) instances.push_back(tsp_items(inst));
  const auto rankings = sample_rankings(model, instances, spec, seed, threads);
  TspMetrics m;
  m.count = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double len = tour_length(data[i], rankings[i].inverse());
    m.mean_length += len;
    if (!data[i].optimal_length)
      throw std::invalid_argument("evaluate_tsp: instance lacks an exact label");
    m.mean_gap += optimality_gap(len, *data[i].optimal_length);
  }
  m.mean_length /= static_cast<double>(data.size());
  m.mean_gap /= static_cast<double>(data.size());
  return m;
}

/// Corrupt each instance to level t with the forward marginal, sample one
/// clean prediction, and score it. The denoiser-quality view of a sorting
/// model, independent of the reverse chain.
inline SortingMetrics denoise_sorting_at(const DenoiserModel& model,
                                         const std::vector<SortingInstance>& data,
                                         double t, const BridgeParams& bridge,
                                         std::uint64_t seed,
                                         std::size_t threads = 1) {
  std::vector<Permutation> preds(data.size(), Permutation::identity(2));
  parallel_for(data.size(), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    const ItemMatrix items = sorting_items(data[i]);
    const SoftRankVector z0 = lift_to_grid(data[i].ground_truth);
    const SoftRankVector z1 = sample_reference(bridge, items.n, rng);
    const auto z_t = sample_forward_marginal(z0, z1, t, bridge.eta, rng);
    const Permutation sigma_t = rank_of_coordinates(z_t.values);
    const auto [seq, lp] = cgpl_sample(model, observe(items, sigma_t), t, rng);
    preds[i] = element_frame_ranks(seq, sigma_t);
  });
  return score_sorting(preds, data);
}

struct TrainBudget {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 80;
  std::size_t hidden = 48;
  std::size_t emb = 12;
};

inline DenoiserModel build_model(DenoiserVariant variant, std::size_t n,
                                 std::size_t feat_dim, const TrainBudget& budget,
                                 std::size_t time_buckets, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  switch (variant) {
    case DenoiserVariant::Oracle:
      return DenoiserModel::oracle(n);
    case DenoiserVariant::TabularCgpl:
      return DenoiserModel::tabular(n, time_buckets);
    case DenoiserVariant::MlpCgpl:
      return DenoiserModel::mlp(n, feat_dim, budget.hidden, rng);
    case DenoiserVariant::MlpPointerCgpl:
      return DenoiserModel::mlp_pointer(n, feat_dim, budget.hidden, budget.emb,
                                        rng);
  }
  throw std::logic_error("build_model: unknown variant");
}

struct AblationRow {
  ForwardProcess forward;
  Parametrization param;
  DenoiserVariant model;
  SortingMetrics metrics;
  double final_loss = 0.0;
};

/// Matched-budget comparison on a fixed sorting task: one freshly trained
/// model per grid cell, all sharing datasets, seeds, and the optimizer
/// budget; each evaluated with its own generation protocol.
inline std::vector<AblationRow> run_ablation(
    const std::vector<ForwardProcess>& forwards,
    const std::vector<Parametrization>& params,
    const std::vector<DenoiserVariant>& variants, std::size_t n,
    std::size_t train_count, std::size_t eval_count, const BridgeParams& bridge,
    const TrainBudget& budget, std::uint64_t seed, std::size_t threads = 1) {
  const auto train_insts = generate_sorting_dataset(n, train_count, seed);
  const auto eval_insts = generate_sorting_dataset(n, eval_count, seed + 1);
  Dataset train_data;
  train_data.reserve(train_insts.size());
  for (const auto& inst : train_insts) train_data.push_back(sorting_example(inst));

  std::vector<AblationRow> rows;
  for (const auto fwd : forwards)
    for (const auto par : params)
      for (const auto variant : variants) {
        CorruptionSpec spec{bridge, fwd, par};
        DenoiserModel model =
            build_model(variant, n, 1, budget, bridge.steps(), seed + 2);
        TrainConfig cfg;
        cfg.learning_rate = budget.learning_rate;
        cfg.batch_size = budget.batch_size;
        cfg.epochs = budget.epochs;
        cfg.corruption = spec;
        cfg.seed = seed + 3;
        const auto trace = train(model, train_data, cfg);
        AblationRow row{fwd, par, variant,
                        evaluate_sorting(model, eval_insts, spec, seed + 4,
                                         threads),
                        trace.epoch_loss.back()};
        rows.push_back(row);
      }
  return rows;
}

}  // namespace softrank
