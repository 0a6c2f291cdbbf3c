#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "softrank/rng.hpp"

namespace softrank {

/**
 * A permutation of {1,...,N} in rank (one-line) form.
 *
 * ranks()[i] is the destination position of element i in the permuted
 * ordering, 1-based. The inverse view lists, for each position, which
 * element occupies it ("sequence form"); conversion between the two views
 * is inverse().
 *
 * N >= 2 throughout: downstream grid mappings divide by N-1.
 */
class Permutation {
 public:
  explicit Permutation(std::vector<int> ranks) : ranks_(std::move(ranks)) {
    validate();
  }

  static Permutation identity(std::size_t n) {
    if (n < 2) throw std::invalid_argument("Permutation: size must be >= 2");
    std::vector<int> r(n);
    std::iota(r.begin(), r.end(), 1);
    return Permutation(std::move(r));
  }

  std::size_t size() const { return ranks_.size(); }

  /// Rank of element i (i is 0-based, the result is 1-based).
  int operator()(std::size_t i) const { return ranks_[i]; }

  const std::vector<int>& ranks() const { return ranks_; }

  Permutation inverse() const {
    std::vector<int> inv(ranks_.size());
    for (std::size_t i = 0; i < ranks_.size(); ++i)
      inv[static_cast<std::size_t>(ranks_[i] - 1)] = static_cast<int>(i) + 1;
    return Permutation(std::move(inv));
  }

  bool operator==(const Permutation&) const = default;

 private:
  void validate() const {
    const std::size_t n = ranks_.size();
    if (n < 2) throw std::invalid_argument("Permutation: size must be >= 2");
    std::vector<bool> seen(n, false);
    for (int r : ranks_) {
      if (r < 1 || static_cast<std::size_t>(r) > n)
        throw std::invalid_argument("Permutation: rank out of range: " +
                                    std::to_string(r));
      if (seen[static_cast<std::size_t>(r - 1)])
        throw std::invalid_argument("Permutation: duplicate rank " +
                                    std::to_string(r));
      seen[static_cast<std::size_t>(r - 1)] = true;
    }
  }

  std::vector<int> ranks_;
};

/// Ranks of the coordinates of z: ranks[i] = 1 + #{j : z_j < z_i}, ties
/// broken by ascending index so the result is always a valid permutation.
inline Permutation rank_of_coordinates(std::span<const double> z) {
  const std::size_t n = z.size();
  if (n < 2)
    throw std::invalid_argument("rank_of_coordinates: need >= 2 entries");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return z[static_cast<std::size_t>(a)] <
                                              z[static_cast<std::size_t>(b)]; });
  std::vector<int> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    ranks[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
  return Permutation(std::move(ranks));
}

inline Permutation rank_of_coordinates(const std::vector<double>& z) {
  return rank_of_coordinates(std::span<const double>(z));
}

/// Reindex items by sigma: output[sigma(i)] = items[i].
template <typename T>
std::vector<T> apply(const Permutation& sigma, const std::vector<T>& items) {
  if (items.size() != sigma.size())
    throw std::invalid_argument("apply: size mismatch");
  std::vector<T> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    out[static_cast<std::size_t>(sigma(i) - 1)] = items[i];
  return out;
}

/// Composition (a . b)(i) = a(b(i)).
inline Permutation compose(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("compose: size mismatch");
  std::vector<int> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    r[i] = a(static_cast<std::size_t>(b(i) - 1));
  return Permutation(std::move(r));
}

/// The order-reversing relabelling: rank r becomes rank n+1-r.
inline Permutation reversed(const Permutation& p) {
  std::vector<int> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    r[i] = static_cast<int>(p.size()) + 1 - p(i);
  return Permutation(std::move(r));
}

/// Number of discordant pairs between two rankings (bubble-sort distance).
inline int kendall_distance(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kendall_distance: size mismatch");
  int discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int da = a(i) - a(j);
      const int db = b(i) - b(j);
      if ((da < 0 && db > 0) || (da > 0 && db < 0)) ++discordant;
    }
  return discordant;
}

/// Kendall tau-a in [-1, 1]; inputs are exact permutations so no tie terms.
inline double kendall_tau(const Permutation& pred, const Permutation& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("kendall_tau: size mismatch");
  const std::size_t n = pred.size();
  const int pairs = static_cast<int>(n * (n - 1) / 2);
  const int discordant = kendall_distance(pred, truth);
  const int concordant = pairs - discordant;
  return static_cast<double>(concordant - discordant) /
         static_cast<double>(pairs);
}

struct MatchScore {
  int exact_match;     // 1 iff pred == truth
  double correctness;  // fraction of elements at their true rank
};

inline MatchScore accuracy_and_correctness(const Permutation& pred,
                                           const Permutation& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("accuracy_and_correctness: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred(i) == truth(i)) ++hits;
  return MatchScore{pred == truth ? 1 : 0,
                    static_cast<double>(hits) / static_cast<double>(pred.size())};
}

/// All n! permutations in lexicographic order of the rank vector. Guarded
/// at n <= 8 to keep the factorial growth inside test budgets.
inline std::vector<Permutation> enumerate_all(std::size_t n) {
  if (n < 2) throw std::invalid_argument("enumerate_all: n must be >= 2");
  if (n > 8)
    throw std::invalid_argument(
        "enumerate_all: refusing n > 8 (factorial blowup); got n = " +
        std::to_string(n));
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 1);
  std::vector<Permutation> out;
  do {
    out.emplace_back(r);
  } while (std::next_permutation(r.begin(), r.end()));
  return out;
}

/// Position of p within enumerate_all(p.size()), via the Lehmer code.
inline std::size_t lexicographic_index(const Permutation& p) {
  const std::size_t n = p.size();
  std::size_t index = 0;
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= n - 1; ++i) factorial *= i;  // (n-1)!
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller_later = 0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (p(j) < p(i)) ++smaller_later;
    index += smaller_later * factorial;
    if (i + 2 < n) factorial /= (n - 1 - i);
    else factorial = 1;
  }
  return index;
}

inline Permutation random_permutation(std::size_t n, Rng& rng) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 1);
  // Fisher-Yates with our own draws, so results depend only on the stream.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(
        std::uniform_int_distribution<std::size_t>(0, i)(rng));
    std::swap(r[i], r[j]);
  }
  return Permutation(std::move(r));
}

}  // namespace softrank
