#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "softrank/permutation.hpp"

namespace softrank {

/// N items with d features each, row-major, in the instance's own
/// (original) indexing. Features are pre-normalized by the task layer.
struct ItemMatrix {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> feat;  // feat[i * dim + j]

  ItemMatrix() = default;
  ItemMatrix(std::size_t n_, std::size_t dim_, std::vector<double> f)
      : n(n_), dim(dim_), feat(std::move(f)) {
    if (feat.size() != n * dim)
      throw std::invalid_argument("ItemMatrix: feature size mismatch");
  }

  double at(std::size_t item, std::size_t j) const { return feat[item * dim + j]; }
};

/// The same items listed in observed order: row p holds the item whose
/// current rank is p+1. Denoisers work entirely in this frame; callers keep
/// track of which original element sits at each observed position.
struct ObservedItems {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> feat;  // feat[p * dim + j]

  double at(std::size_t pos, std::size_t j) const { return feat[pos * dim + j]; }
};

/// Reorder items by the current ranking sigma_t (observed row sigma_t(i)-1
/// holds item i).
inline ObservedItems observe(const ItemMatrix& items, const Permutation& sigma_t) {
  if (items.n != sigma_t.size())
    throw std::invalid_argument("observe: size mismatch");
  ObservedItems out;
  out.n = items.n;
  out.dim = items.dim;
  out.feat.resize(items.feat.size());
  for (std::size_t i = 0; i < items.n; ++i) {
    const auto pos = static_cast<std::size_t>(sigma_t(i) - 1);
    for (std::size_t j = 0; j < items.dim; ++j)
      out.feat[pos * items.dim + j] = items.at(i, j);
  }
  return out;
}

}  // namespace softrank
