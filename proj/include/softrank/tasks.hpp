#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "softrank/denoiser.hpp"
#include "softrank/items.hpp"
#include "softrank/permutation.hpp"
#include "softrank/rng.hpp"

namespace softrank {

/// Scalar sorting: predict the ranking that orders the values ascending.
struct SortingInstance {
  std::vector<double> values;   // i.i.d. Uniform[0,1], all distinct
  Permutation ground_truth;     // rank_of_coordinates(values)
};

struct TspInstance {
  std::vector<std::array<double, 2>> points;  // i.i.d. uniform on [0,1]^2
  std::optional<Permutation> optimal_tour;    // sequence form, canonical
  std::optional<double> optimal_length;
};

/// Cyclic Euclidean length of a tour given in sequence form (visit order).
inline double tour_length(const TspInstance& inst, const Permutation& order) {
  const std::size_t n = inst.points.size();
  if (order.size() != n) throw std::invalid_argument("tour_length: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = inst.points[static_cast<std::size_t>(order(i) - 1)];
    const auto& b = inst.points[static_cast<std::size_t>(order((i + 1) % n) - 1)];
    total += std::hypot(a[0] - b[0], a[1] - b[1]);
  }
  return total;
}

/// Exhaustive exact solver over the (n-1)!/2 canonical tours: city 1 fixed
/// first, direction fixed by requiring the second city's index to be below
/// the last city's. Refused above n = 9.
inline std::pair<Permutation, double> exact_tsp(const TspInstance& inst) {
  const std::size_t n = inst.points.size();
  if (n < 2) throw std::invalid_argument("exact_tsp: need >= 2 points");
  if (n > 9) throw std::invalid_argument("exact_tsp: refusing n > 9");

  std::vector<int> rest(n - 1);
  std::iota(rest.begin(), rest.end(), 2);
  std::vector<int> best;
  double best_len = std::numeric_limits<double>::infinity();
  do {
    if (n > 2 && rest.front() > rest.back()) continue;  // reversal symmetry
    std::vector<int> seq(n);
    seq[0] = 1;
    std::copy(rest.begin(), rest.end(), seq.begin() + 1);
    const Permutation order{seq};
    const double len = tour_length(inst, order);
    if (len < best_len) {
      best_len = len;
      best = seq;
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  return {Permutation(best), best_len};
}

inline double optimality_gap(double pred_length, double opt_length) {
  if (!(opt_length > 0.0))
    throw std::invalid_argument("optimality_gap: opt_length must be > 0");
  return (pred_length - opt_length) / opt_length;
}

/// Greedy nearest-neighbor tour from city 1; a cheap upper-bound heuristic.
inline Permutation nearest_neighbor_tour(const TspInstance& inst) {
  const std::size_t n = inst.points.size();
  std::vector<bool> used(n, false);
  std::vector<int> seq;
  seq.reserve(n);
  std::size_t current = 0;
  used[0] = true;
  seq.push_back(1);
  for (std::size_t step = 1; step < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = std::hypot(inst.points[current][0] - inst.points[j][0],
                                  inst.points[current][1] - inst.points[j][1]);
      if (d < best) {
        best = d;
        pick = j;
      }
    }
    used[pick] = true;
    seq.push_back(static_cast<int>(pick) + 1);
    current = pick;
  }
  return Permutation(seq);
}

inline std::vector<SortingInstance> generate_sorting_dataset(std::size_t n,
                                                             std::size_t count,
                                                             std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_sorting_dataset: n >= 2");
  std::vector<SortingInstance> out;
  out.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Rng rng = make_stream(seed, idx);
    std::vector<double> vals(n);
    bool distinct = false;
    while (!distinct) {
      for (auto& v : vals) v = uniform01(rng);
      distinct = true;
      for (std::size_t i = 0; i < n && distinct; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (vals[i] == vals[j]) {
            distinct = false;
            break;
          }
    }
    out.push_back(SortingInstance{vals, rank_of_coordinates(vals)});
  }
  return out;
}

inline std::vector<TspInstance> generate_tsp_dataset(std::size_t n,
                                                     std::size_t count,
                                                     std::uint64_t seed,
                                                     bool exact_labels) {
  if (n < 2) throw std::invalid_argument("generate_tsp_dataset: n >= 2");
  if (exact_labels && n > 9)
    throw std::invalid_argument("generate_tsp_dataset: exact labels need n <= 9");
  std::vector<TspInstance> out;
  out.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Rng rng = make_stream(seed, idx);
    TspInstance inst;
    inst.points.resize(n);
    for (auto& p : inst.points) {
      p[0] = uniform01(rng);
      p[1] = uniform01(rng);
    }
    if (exact_labels) {
      auto [tour, len] = exact_tsp(inst);
      inst.optimal_tour = std::move(tour);
      inst.optimal_length = len;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

/// Min-max normalized scalar features; degenerate spans collapse to 0.5.
inline ItemMatrix sorting_items(const SortingInstance& inst) {
  const std::size_t n = inst.values.size();
  double lo = inst.values[0], hi = inst.values[0];
  for (double v : inst.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> feat(n);
  for (std::size_t i = 0; i < n; ++i)
    feat[i] = hi > lo ? (inst.values[i] - lo) / (hi - lo) : 0.5;
  return ItemMatrix(n, 1, std::move(feat));
}

inline ItemMatrix tsp_items(const TspInstance& inst) {
  const std::size_t n = inst.points.size();
  std::vector<double> feat(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    feat[2 * i] = inst.points[i][0];
    feat[2 * i + 1] = inst.points[i][1];
  }
  return ItemMatrix(n, 2, std::move(feat));
}

inline TrainingExample sorting_example(const SortingInstance& inst) {
  return TrainingExample{sorting_items(inst), inst.ground_truth};
}

/// The diffusion target for a labeled TSP instance: ranks are visit
/// positions of the canonical optimal tour.
inline TrainingExample tsp_example(const TspInstance& inst) {
  if (!inst.optimal_tour)
    throw std::invalid_argument("tsp_example: instance lacks an exact label");
  return TrainingExample{tsp_items(inst), inst.optimal_tour->inverse()};
}

}  // namespace softrank
