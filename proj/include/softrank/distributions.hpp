#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "softrank/items.hpp"
#include "softrank/permutation.hpp"
#include "softrank/rng.hpp"

namespace softrank {

/// Additive stand-in for -inf in feasibility masks. Large enough that the
/// masked softmax weight underflows to exactly zero after max subtraction.
inline constexpr double kMaskedLogit = -1e30;

/// Stagewise scores: at(item, stage) is the logit of picking `item` at
/// `stage` (both 0-based). Stored column-major; stages read whole columns.
class ScoreMatrix {
 public:
  explicit ScoreMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t n() const { return n_; }
  double at(std::size_t item, std::size_t stage) const {
    return data_[stage * n_ + item];
  }
  double& at(std::size_t item, std::size_t stage) {
    return data_[stage * n_ + item];
  }
  std::vector<double> column(std::size_t stage) const {
    return std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(stage * n_),
                               data_.begin() + static_cast<std::ptrdiff_t>((stage + 1) * n_));
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// {0, -inf} additive mask for a realized selection order: column i allows
/// exactly the items not selected before stage i.
class FeasibilityMask {
 public:
  /// Build from a full selection order (sequence form).
  static FeasibilityMask from_sequence(const Permutation& order) {
    const std::size_t n = order.size();
    FeasibilityMask m(n);
    std::vector<bool> taken(n, false);
    for (std::size_t stage = 0; stage < n; ++stage) {
      for (std::size_t k = 0; k < n; ++k)
        m.vals_[stage * n + k] = taken[k] ? kMaskedLogit : 0.0;
      taken[static_cast<std::size_t>(order(stage) - 1)] = true;
    }
    return m;
  }

  double at(std::size_t item, std::size_t stage) const {
    return vals_[stage * n_ + item];
  }
  std::size_t n() const { return n_; }

  std::size_t feasible_in_stage(std::size_t stage) const {
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < n_; ++k)
      if (vals_[stage * n_ + k] == 0.0) ++cnt;
    return cnt;
  }

 private:
  explicit FeasibilityMask(std::size_t n) : n_(n), vals_(n * n, 0.0) {}
  std::size_t n_;
  std::vector<double> vals_;
};

namespace detail {

/// Max-subtracted logsumexp; entries at kMaskedLogit contribute exactly 0.
inline double logsumexp(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  std::vector<double> p(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = std::exp(v[i] - m);
    s += p[i];
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace detail

/// Plackett-Luce log probability of a selection order under one score per
/// item: stage i picks order(i) among the items not yet chosen.
inline double pl_log_prob(const std::vector<double>& item_scores,
                          const Permutation& order) {
  if (item_scores.size() != order.size())
    throw std::invalid_argument("pl_log_prob: size mismatch");
  const std::size_t n = order.size();
  std::vector<bool> taken(n, false);
  double lp = 0.0;
  for (std::size_t stage = 0; stage < n; ++stage) {
    std::vector<double> masked(n);
    for (std::size_t k = 0; k < n; ++k)
      masked[k] = taken[k] ? kMaskedLogit : item_scores[k];
    const auto sel = static_cast<std::size_t>(order(stage) - 1);
    lp += item_scores[sel] - detail::logsumexp(masked);
    taken[sel] = true;
  }
  return lp;
}

/// Log probability of a selection order under stagewise scores with the
/// feasibility mask applied: sum_i [ s~(order(i), i) - logsumexp_k s~(k, i) ].
inline double masked_stagewise_log_prob(const ScoreMatrix& scores,
                                        const Permutation& order) {
  if (scores.n() != order.size())
    throw std::invalid_argument("masked_stagewise_log_prob: size mismatch");
  const std::size_t n = order.size();
  const FeasibilityMask mask = FeasibilityMask::from_sequence(order);
  double lp = 0.0;
  for (std::size_t stage = 0; stage < n; ++stage) {
    std::vector<double> masked(n);
    for (std::size_t k = 0; k < n; ++k)
      masked[k] = scores.at(k, stage) + mask.at(k, stage);
    const auto sel = static_cast<std::size_t>(order(stage) - 1);
    lp += masked[sel] - detail::logsumexp(masked);
  }
  return lp;
}

/// d log p / d scores for masked_stagewise_log_prob: per stage,
/// onehot(selected) - softmax over the feasible set; zero on masked entries.
inline ScoreMatrix masked_stagewise_log_prob_grad(const ScoreMatrix& scores,
                                                  const Permutation& order) {
  if (scores.n() != order.size())
    throw std::invalid_argument("masked_stagewise_log_prob_grad: size mismatch");
  const std::size_t n = order.size();
  const FeasibilityMask mask = FeasibilityMask::from_sequence(order);
  ScoreMatrix grad(n);
  for (std::size_t stage = 0; stage < n; ++stage) {
    std::vector<double> masked(n);
    for (std::size_t k = 0; k < n; ++k)
      masked[k] = scores.at(k, stage) + mask.at(k, stage);
    const auto p = detail::softmax(masked);
    const auto sel = static_cast<std::size_t>(order(stage) - 1);
    for (std::size_t k = 0; k < n; ++k)
      grad.at(k, stage) = (k == sel ? 1.0 : 0.0) - p[k];
  }
  return grad;
}

/// Produces stage logits for the autoregressive sampler. A prefix-agnostic
/// scorer exposes its whole matrix up front (GPL); a contextual one is
/// queried stage by stage with the realized prefix (cGPL).
class StagewiseScorer {
 public:
  virtual ~StagewiseScorer() = default;

  virtual std::size_t item_count() const = 0;
  virtual bool prefix_agnostic() const = 0;

  /// Full matrix for prefix-agnostic scorers. Contextual scorers reject.
  virtual ScoreMatrix full_scores(const ObservedItems& xt, double t) const {
    (void)xt;
    (void)t;
    throw std::logic_error("full_scores: scorer is prefix-conditional");
  }

  /// Logits for stage prefix.size(), conditioned on the selected prefix
  /// (0-based observed positions, in selection order).
  virtual std::vector<double> stage_scores(const ObservedItems& xt,
                                           const std::vector<int>& prefix,
                                           double t) const = 0;
};

/// Autoregressive sampling: at each stage mask the already-selected items,
/// softmax, draw, and append. Returns the selection order (sequence form)
/// and its exact sampling log probability.
inline std::pair<Permutation, double> cgpl_sample(const StagewiseScorer& scorer,
                                                  const ObservedItems& xt,
                                                  double t, Rng& rng) {
  const std::size_t n = scorer.item_count();
  if (xt.n != n) throw std::invalid_argument("cgpl_sample: item count mismatch");

  ScoreMatrix cached(n);
  const bool agnostic = scorer.prefix_agnostic();
  if (agnostic) cached = scorer.full_scores(xt, t);

  std::vector<int> prefix;
  prefix.reserve(n);
  std::vector<bool> taken(n, false);
  std::vector<int> order(n);
  double lp = 0.0;
  for (std::size_t stage = 0; stage < n; ++stage) {
    std::vector<double> logits =
        agnostic ? cached.column(stage) : scorer.stage_scores(xt, prefix, t);
    std::vector<double> masked(n);
    for (std::size_t k = 0; k < n; ++k)
      masked[k] = taken[k] ? logits[k] + kMaskedLogit : logits[k];
    const auto probs = detail::softmax(masked);

    double u = uniform01(rng);
    std::size_t sel = n - 1;
    for (std::size_t k = 0; k < n; ++k) {
      u -= probs[k];
      if (u <= 0.0) {
        sel = k;
        break;
      }
    }
    while (taken[sel]) sel = (sel + 1) % n;  // guard against rounding at u ~ 1

    lp += masked[sel] - detail::logsumexp(masked);
    order[stage] = static_cast<int>(sel) + 1;
    taken[sel] = true;
    prefix.push_back(static_cast<int>(sel));
  }
  return {Permutation(std::move(order)), lp};
}

/// Bi-affine pointer scores between a decoder state and item embeddings:
/// s_k = dec^T W enc_k + u^T dec + v^T enc_k + b. The u^T dec + b terms are
/// constant in k and cancel in the stage softmax.
inline std::vector<double> biaffine_scores(
    const std::vector<std::vector<double>>& enc, const std::vector<double>& dec,
    const std::vector<double>& W, const std::vector<double>& u,
    const std::vector<double>& v, double b) {
  const std::size_t d = dec.size();
  if (u.size() != d || v.size() != d || W.size() != d * d)
    throw std::invalid_argument("biaffine_scores: width mismatch");
  // Wd[j] = sum_i dec[i] * W[i*d + j]
  std::vector<double> Wd(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) Wd[j] += dec[i] * W[i * d + j];
  double ud = b;
  for (std::size_t i = 0; i < d; ++i) ud += u[i] * dec[i];

  std::vector<double> out(enc.size());
  for (std::size_t k = 0; k < enc.size(); ++k) {
    if (enc[k].size() != d)
      throw std::invalid_argument("biaffine_scores: width mismatch");
    double s = ud;
    for (std::size_t j = 0; j < d; ++j) s += (Wd[j] + v[j]) * enc[k][j];
    out[k] = s;
  }
  return out;
}

struct GplFitResult {
  ScoreMatrix scores;
  double tv = 1.0;  // half L1 distance between fitted and target
  std::size_t iterations = 0;
  bool converged = false;
};

/// Fit a stagewise score matrix to a target distribution over selection
/// orders by gradient descent on the cross-entropy. `target` is indexed by
/// lexicographic_index of the sequence-form permutations of enumerate_all(n).
/// Only targets whose stagewise conditionals are realizable by a static
/// matrix can reach tv -> 0; callers pick such targets.
inline GplFitResult fit_gpl_to_target(const std::vector<double>& target,
                                      std::size_t n, double learning_rate = 0.5,
                                      std::size_t max_iters = 10000,
                                      double tol = 1e-3) {
  if (n < 2 || n > 4)
    throw std::invalid_argument("fit_gpl_to_target: supported for 2 <= n <= 4");
  const auto all = enumerate_all(n);
  if (target.size() != all.size())
    throw std::invalid_argument("fit_gpl_to_target: target size mismatch");
  double total = 0.0;
  for (double p : target) {
    if (p < 0.0) throw std::invalid_argument("fit_gpl_to_target: negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("fit_gpl_to_target: target must sum to 1");

  GplFitResult res{ScoreMatrix(n)};
  const auto tv_now = [&](const ScoreMatrix& s) {
    double tv = 0.0;
    for (std::size_t k = 0; k < all.size(); ++k)
      tv += std::abs(std::exp(masked_stagewise_log_prob(s, all[k])) - target[k]);
    return 0.5 * tv;
  };

  for (std::size_t it = 0; it < max_iters; ++it) {
    if (it % 25 == 0) {
      res.tv = tv_now(res.scores);
      res.iterations = it;
      if (res.tv < tol) {
        res.converged = true;
        return res;
      }
    }
    ScoreMatrix grad(n);
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (target[k] == 0.0) continue;
      const ScoreMatrix g = masked_stagewise_log_prob_grad(res.scores, all[k]);
      for (std::size_t j = 0; j < n * n; ++j)
        grad.data()[j] += target[k] * g.data()[j];
    }
    for (std::size_t j = 0; j < n * n; ++j)
      res.scores.data()[j] += learning_rate * grad.data()[j];
  }
  res.tv = tv_now(res.scores);
  res.iterations = max_iters;
  res.converged = res.tv < tol;
  return res;
}

}  // namespace softrank
