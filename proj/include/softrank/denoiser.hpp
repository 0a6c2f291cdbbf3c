#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "softrank/bridge.hpp"
#include "softrank/distributions.hpp"
#include "softrank/items.hpp"
#include "softrank/kernels.hpp"
#include "softrank/permutation.hpp"
#include "softrank/rng.hpp"

namespace softrank {

enum class DenoiserVariant { Oracle, TabularCgpl, MlpCgpl, MlpPointerCgpl };
enum class Parametrization { PredictSigma0, PredictSigmaPrev };
enum class ForwardProcess { SoftRank, RiffleShuffle };

inline constexpr std::size_t kTimeEmbDim = 8;

/// Sinusoidal time features at octave frequencies.
inline void append_time_embedding(double t, std::vector<double>& out) {
  double w = 3.14159265358979323846;
  for (std::size_t j = 0; j < kTimeEmbDim / 2; ++j) {
    out.push_back(std::sin(w * t));
    out.push_back(std::cos(w * t));
    w *= 2.0;
  }
}

/// Target ranks rewritten over observed positions: the selection sequence a
/// denoiser is trained to emit when it sees the items in sigma_t order.
inline Permutation observed_frame_sequence(const Permutation& target,
                                           const Permutation& sigma_t) {
  return compose(sigma_t, target.inverse());
}

/// Ranks over the original elements recovered from a sampled selection
/// sequence in the observed frame.
inline Permutation element_frame_ranks(const Permutation& seq,
                                       const Permutation& sigma_t) {
  return compose(seq.inverse(), sigma_t);
}

struct ModelArch {
  DenoiserVariant variant = DenoiserVariant::Oracle;
  std::size_t n = 0;
  std::size_t feat_dim = 1;
  std::size_t hidden = 32;        // MLP trunk width
  std::size_t emb = 12;           // pointer decoder-state / encoder width
  std::size_t time_buckets = 20;  // tabular time resolution
};

/// Trainable sigma_0 predictors at desk scale. All variants score items in
/// the observed frame: stage logits say which observed position supplies
/// the next output rank. Parameters live in one flat vector so training,
/// checkpointing, and finite-difference checks all see the same layout.
class DenoiserModel final : public StagewiseScorer {
 public:
  struct Gradient {
    double loss = 0.0;
    std::vector<double> grad;  // aligned with params(); empty for Oracle
  };

  static DenoiserModel oracle(std::size_t n) {
    if (n < 2) throw std::invalid_argument("oracle: n must be >= 2");
    ModelArch a;
    a.variant = DenoiserVariant::Oracle;
    a.n = n;
    return DenoiserModel(a, {});
  }

  static DenoiserModel tabular(std::size_t n, std::size_t time_buckets) {
    if (n < 2 || n > 5)
      throw std::invalid_argument("tabular: defined for 2 <= n <= 5");
    if (time_buckets == 0)
      throw std::invalid_argument("tabular: need >= 1 time bucket");
    ModelArch a;
    a.variant = DenoiserVariant::TabularCgpl;
    a.n = n;
    a.time_buckets = time_buckets;
    std::size_t fact = 1;
    for (std::size_t i = 2; i <= n; ++i) fact *= i;
    return DenoiserModel(a, std::vector<double>(time_buckets * fact * n * n, 0.0));
  }

  static DenoiserModel mlp(std::size_t n, std::size_t feat_dim, std::size_t hidden,
                           Rng& rng) {
    ModelArch a;
    a.variant = DenoiserVariant::MlpCgpl;
    a.n = n;
    a.feat_dim = feat_dim;
    a.hidden = hidden;
    DenoiserModel m(a, {});
    m.params_.assign(m.param_count(), 0.0);
    m.init_mlp(rng);
    return m;
  }

  static DenoiserModel mlp_pointer(std::size_t n, std::size_t feat_dim,
                                   std::size_t hidden, std::size_t emb, Rng& rng) {
    ModelArch a;
    a.variant = DenoiserVariant::MlpPointerCgpl;
    a.n = n;
    a.feat_dim = feat_dim;
    a.hidden = hidden;
    a.emb = emb;
    DenoiserModel m(a, {});
    m.params_.assign(m.param_count(), 0.0);
    m.init_mlp(rng);
    return m;
  }

  const ModelArch& arch() const { return arch_; }
  DenoiserVariant variant() const { return arch_.variant; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Rebuild a model from persisted architecture + parameters.
  static DenoiserModel restore(const ModelArch& arch, std::vector<double> params) {
    DenoiserModel m(arch, std::move(params));
    if (m.params_.size() != m.param_count())
      throw std::invalid_argument("restore: parameter count mismatch");
    return m;
  }

  // --- StagewiseScorer ---

  std::size_t item_count() const override { return arch_.n; }

  bool prefix_agnostic() const override {
    return arch_.variant == DenoiserVariant::Oracle ||
           arch_.variant == DenoiserVariant::TabularCgpl;
  }

  ScoreMatrix full_scores(const ObservedItems& xt, double t) const override {
    switch (arch_.variant) {
      case DenoiserVariant::Oracle: {
        ScoreMatrix m(arch_.n);
        const auto asc = ascending_positions(xt);
        for (std::size_t stage = 0; stage < arch_.n; ++stage)
          m.at(asc[stage], stage) = 30.0;
        return m;
      }
      case DenoiserVariant::TabularCgpl: {
        ScoreMatrix m(arch_.n);
        const std::size_t base = table_base(xt, t);
        for (std::size_t stage = 0; stage < arch_.n; ++stage)
          for (std::size_t k = 0; k < arch_.n; ++k)
            m.at(k, stage) = params_[base + stage * arch_.n + k];
        return m;
      }
      default:
        return StagewiseScorer::full_scores(xt, t);
    }
  }

  std::vector<double> stage_scores(const ObservedItems& xt,
                                   const std::vector<int>& prefix,
                                   double t) const override {
    const std::size_t stage = prefix.size();
    if (stage >= arch_.n)
      throw std::invalid_argument("stage_scores: prefix already complete");
    switch (arch_.variant) {
      case DenoiserVariant::Oracle: {
        std::vector<double> logits(arch_.n, 0.0);
        logits[ascending_positions(xt)[stage]] = 30.0;
        return logits;
      }
      case DenoiserVariant::TabularCgpl: {
        const std::size_t off = table_base(xt, t) + stage * arch_.n;
        return std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(off),
                                   params_.begin() + static_cast<std::ptrdiff_t>(off + arch_.n));
      }
      case DenoiserVariant::MlpCgpl: {
        const TrunkCache c = trunk_forward(trunk_input(xt, prefix, t));
        return c.out;
      }
      case DenoiserVariant::MlpPointerCgpl: {
        const auto enc = encode_items(xt);
        const TrunkCache c = trunk_forward(trunk_input(xt, prefix, t));
        return biaffine_scores(enc, c.out, biaffine_w(), biaffine_u(),
                               biaffine_v(), params_[layout_.bb]);
      }
    }
    throw std::logic_error("stage_scores: unknown variant");
  }

  // --- teacher-forced loss and hand-rolled gradient ---

  /// Stagewise NLL of the target selection sequence given one observation,
  /// with the exact gradient through every parameterized layer. Oracle
  /// returns the loss with an empty gradient.
  Gradient observed_loss_and_grad(const ObservedItems& xt,
                                  const Permutation& target_seq, double t) const {
    if (xt.n != arch_.n || target_seq.size() != arch_.n)
      throw std::invalid_argument("observed_loss_and_grad: size mismatch");
    switch (arch_.variant) {
      case DenoiserVariant::Oracle:
        return oracle_loss(xt, target_seq);
      case DenoiserVariant::TabularCgpl:
        return tabular_loss_grad(xt, target_seq, t);
      case DenoiserVariant::MlpCgpl:
        return mlp_loss_grad(xt, target_seq, t);
      case DenoiserVariant::MlpPointerCgpl:
        return pointer_loss_grad(xt, target_seq, t);
    }
    throw std::logic_error("observed_loss_and_grad: unknown variant");
  }

 private:
  DenoiserModel(ModelArch arch, std::vector<double> params)
      : arch_(arch), params_(std::move(params)) {
    if (arch_.variant == DenoiserVariant::MlpCgpl ||
        arch_.variant == DenoiserVariant::MlpPointerCgpl)
      layout_ = make_layout(arch_);
  }

  // Observed positions sorted by ascending first feature, ties by index:
  // the ground-truth selection order for value-sorting tasks.
  std::vector<std::size_t> ascending_positions(const ObservedItems& xt) const {
    std::vector<double> first(arch_.n);
    for (std::size_t p = 0; p < arch_.n; ++p) first[p] = xt.at(p, 0);
    const Permutation ranks = rank_of_coordinates(first);
    std::vector<std::size_t> asc(arch_.n);
    for (std::size_t p = 0; p < arch_.n; ++p)
      asc[static_cast<std::size_t>(ranks(p) - 1)] = p;
    return asc;
  }

  std::size_t time_bucket(double t) const {
    const double scaled = t * static_cast<double>(arch_.time_buckets);
    auto b = static_cast<std::ptrdiff_t>(scaled);
    if (b < 0) b = 0;
    if (b >= static_cast<std::ptrdiff_t>(arch_.time_buckets))
      b = static_cast<std::ptrdiff_t>(arch_.time_buckets) - 1;
    return static_cast<std::size_t>(b);
  }

  /// Offset of the n x n logit block for (time bucket, observed pattern).
  std::size_t table_base(const ObservedItems& xt, double t) const {
    std::vector<double> first(arch_.n);
    for (std::size_t p = 0; p < arch_.n; ++p) first[p] = xt.at(p, 0);
    const std::size_t pattern = lexicographic_index(rank_of_coordinates(first));
    std::size_t fact = 1;
    for (std::size_t i = 2; i <= arch_.n; ++i) fact *= i;
    return (time_bucket(t) * fact + pattern) * arch_.n * arch_.n;
  }

  // --- MLP machinery ---

  struct Layout {
    std::size_t in = 0, hidden = 0, out = 0, enc_in = 0, enc_out = 0;
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;
    std::size_t enc_w = 0, enc_b = 0, bw = 0, bu = 0, bv = 0, bb = 0;
    std::size_t total = 0;
  };

  static Layout make_layout(const ModelArch& a) {
    Layout l;
    l.in = a.n * a.feat_dim + a.feat_dim + 1 + kTimeEmbDim;
    l.hidden = a.hidden;
    const bool pointer = a.variant == DenoiserVariant::MlpPointerCgpl;
    l.out = pointer ? a.emb : a.n;
    std::size_t off = 0;
    l.w1 = off; off += l.hidden * l.in;
    l.b1 = off; off += l.hidden;
    l.w2 = off; off += l.hidden * l.hidden;
    l.b2 = off; off += l.hidden;
    l.w3 = off; off += l.out * l.hidden;
    l.b3 = off; off += l.out;
    if (pointer) {
      l.enc_in = a.feat_dim + 1;
      l.enc_out = a.emb;
      l.enc_w = off; off += l.enc_out * l.enc_in;
      l.enc_b = off; off += l.enc_out;
      l.bw = off; off += a.emb * a.emb;
      l.bu = off; off += a.emb;
      l.bv = off; off += a.emb;
      l.bb = off; off += 1;
    }
    l.total = off;
    return l;
  }

  std::size_t param_count() const {
    switch (arch_.variant) {
      case DenoiserVariant::Oracle:
        return 0;
      case DenoiserVariant::TabularCgpl: {
        std::size_t fact = 1;
        for (std::size_t i = 2; i <= arch_.n; ++i) fact *= i;
        return arch_.time_buckets * fact * arch_.n * arch_.n;
      }
      default:
        return layout_.total;
    }
  }

  void init_mlp(Rng& rng) {
    const auto xavier = [&](std::size_t off, std::size_t rows, std::size_t cols) {
      const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (std::size_t i = 0; i < rows * cols; ++i)
        params_[off + i] = r * (2.0 * uniform01(rng) - 1.0);
    };
    xavier(layout_.w1, layout_.hidden, layout_.in);
    xavier(layout_.w2, layout_.hidden, layout_.hidden);
    if (arch_.variant == DenoiserVariant::MlpPointerCgpl) {
      // Trunk head and encoder start random so decoder states are nonzero;
      // the biaffine block starts at zero, which keeps initial logits zero.
      xavier(layout_.w3, layout_.out, layout_.hidden);
      xavier(layout_.enc_w, layout_.enc_out, layout_.enc_in);
    }
    // Plain variant keeps the logit head at zero: uniform stage
    // distributions at initialization.
  }

  std::vector<double> biaffine_w() const {
    return {params_.begin() + static_cast<std::ptrdiff_t>(layout_.bw),
            params_.begin() + static_cast<std::ptrdiff_t>(layout_.bw + arch_.emb * arch_.emb)};
  }
  std::vector<double> biaffine_u() const {
    return {params_.begin() + static_cast<std::ptrdiff_t>(layout_.bu),
            params_.begin() + static_cast<std::ptrdiff_t>(layout_.bu + arch_.emb)};
  }
  std::vector<double> biaffine_v() const {
    return {params_.begin() + static_cast<std::ptrdiff_t>(layout_.bv),
            params_.begin() + static_cast<std::ptrdiff_t>(layout_.bv + arch_.emb)};
  }

  std::vector<double> trunk_input(const ObservedItems& xt,
                                  const std::vector<int>& prefix, double t) const {
    const std::size_t d = arch_.feat_dim;
    std::vector<double> x;
    x.reserve(layout_.in);
    x.insert(x.end(), xt.feat.begin(), xt.feat.end());
    std::vector<double> psum(d, 0.0);
    for (int p : prefix)
      for (std::size_t j = 0; j < d; ++j)
        psum[j] += xt.at(static_cast<std::size_t>(p), j);
    x.insert(x.end(), psum.begin(), psum.end());
    x.push_back(static_cast<double>(prefix.size()) / static_cast<double>(arch_.n));
    append_time_embedding(t, x);
    return x;
  }

  struct TrunkCache {
    std::vector<double> x, h1, h2, out;
  };

  void affine(std::size_t w_off, std::size_t b_off, std::size_t rows,
              const std::vector<double>& in, std::vector<double>& out) const {
    const std::size_t cols = in.size();
    out.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = params_[b_off + r];
      const std::size_t row_off = w_off + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc += params_[row_off + c] * in[c];
      out[r] = acc;
    }
  }

  TrunkCache trunk_forward(std::vector<double> x) const {
    TrunkCache c;
    c.x = std::move(x);
    affine(layout_.w1, layout_.b1, layout_.hidden, c.x, c.h1);
    for (auto& v : c.h1) v = std::tanh(v);
    affine(layout_.w2, layout_.b2, layout_.hidden, c.h1, c.h2);
    for (auto& v : c.h2) v = std::tanh(v);
    affine(layout_.w3, layout_.b3, layout_.out, c.h2, c.out);
    return c;
  }

  /// Accumulate d loss / d trunk params given d loss / d out.
  void trunk_backward(const TrunkCache& c, const std::vector<double>& dout,
                      std::vector<double>& grad) const {
    std::vector<double> dh2(layout_.hidden, 0.0);
    for (std::size_t r = 0; r < layout_.out; ++r) {
      grad[layout_.b3 + r] += dout[r];
      const std::size_t row = layout_.w3 + r * layout_.hidden;
      for (std::size_t ccol = 0; ccol < layout_.hidden; ++ccol) {
        grad[row + ccol] += dout[r] * c.h2[ccol];
        dh2[ccol] += params_[row + ccol] * dout[r];
      }
    }
    for (std::size_t r = 0; r < layout_.hidden; ++r)
      dh2[r] *= 1.0 - c.h2[r] * c.h2[r];

    std::vector<double> dh1(layout_.hidden, 0.0);
    for (std::size_t r = 0; r < layout_.hidden; ++r) {
      grad[layout_.b2 + r] += dh2[r];
      const std::size_t row = layout_.w2 + r * layout_.hidden;
      for (std::size_t ccol = 0; ccol < layout_.hidden; ++ccol) {
        grad[row + ccol] += dh2[r] * c.h1[ccol];
        dh1[ccol] += params_[row + ccol] * dh2[r];
      }
    }
    for (std::size_t r = 0; r < layout_.hidden; ++r)
      dh1[r] *= 1.0 - c.h1[r] * c.h1[r];

    for (std::size_t r = 0; r < layout_.hidden; ++r) {
      grad[layout_.b1 + r] += dh1[r];
      const std::size_t row = layout_.w1 + r * layout_.in;
      for (std::size_t ccol = 0; ccol < layout_.in; ++ccol)
        grad[row + ccol] += dh1[r] * c.x[ccol];
    }
  }

  std::vector<double> encoder_input(const ObservedItems& xt, std::size_t pos) const {
    std::vector<double> y(layout_.enc_in);
    for (std::size_t j = 0; j < arch_.feat_dim; ++j) y[j] = xt.at(pos, j);
    y[arch_.feat_dim] =
        static_cast<double>(pos) / static_cast<double>(arch_.n - 1);
    return y;
  }

  std::vector<std::vector<double>> encode_items(const ObservedItems& xt) const {
    std::vector<std::vector<double>> enc(arch_.n);
    for (std::size_t p = 0; p < arch_.n; ++p) {
      const auto y = encoder_input(xt, p);
      enc[p].assign(layout_.enc_out, 0.0);
      for (std::size_t r = 0; r < layout_.enc_out; ++r) {
        double acc = params_[layout_.enc_b + r];
        const std::size_t row = layout_.enc_w + r * layout_.enc_in;
        for (std::size_t ccol = 0; ccol < layout_.enc_in; ++ccol)
          acc += params_[row + ccol] * y[ccol];
        enc[p][r] = std::tanh(acc);
      }
    }
    return enc;
  }

  /// NLL of one stage plus d loss / d raw logits (softmax minus onehot on
  /// the feasible set; exactly zero on masked entries).
  static std::pair<double, std::vector<double>> stage_nll(
      const std::vector<double>& logits, const std::vector<bool>& taken,
      std::size_t sel) {
    const std::size_t n = logits.size();
    std::vector<double> masked(n);
    for (std::size_t k = 0; k < n; ++k)
      masked[k] = taken[k] ? logits[k] + kMaskedLogit : logits[k];
    const double lse = detail::logsumexp(masked);
    auto dlogits = detail::softmax(masked);
    const double nll = lse - masked[sel];
    dlogits[sel] -= 1.0;
    return {nll, std::move(dlogits)};
  }

  Gradient oracle_loss(const ObservedItems& xt, const Permutation& seq) const {
    Gradient g;
    std::vector<bool> taken(arch_.n, false);
    const auto asc = ascending_positions(xt);
    for (std::size_t stage = 0; stage < arch_.n; ++stage) {
      std::vector<double> logits(arch_.n, 0.0);
      logits[asc[stage]] = 30.0;
      const auto sel = static_cast<std::size_t>(seq(stage) - 1);
      g.loss += stage_nll(logits, taken, sel).first;
      taken[sel] = true;
    }
    return g;
  }

  Gradient tabular_loss_grad(const ObservedItems& xt, const Permutation& seq,
                             double t) const {
    Gradient g;
    g.grad.assign(params_.size(), 0.0);
    const std::size_t base = table_base(xt, t);
    std::vector<bool> taken(arch_.n, false);
    for (std::size_t stage = 0; stage < arch_.n; ++stage) {
      const std::size_t off = base + stage * arch_.n;
      std::vector<double> logits(params_.begin() + static_cast<std::ptrdiff_t>(off),
                                 params_.begin() + static_cast<std::ptrdiff_t>(off + arch_.n));
      const auto sel = static_cast<std::size_t>(seq(stage) - 1);
      auto [nll, dlogits] = stage_nll(logits, taken, sel);
      g.loss += nll;
      for (std::size_t k = 0; k < arch_.n; ++k) g.grad[off + k] += dlogits[k];
      taken[sel] = true;
    }
    return g;
  }

  Gradient mlp_loss_grad(const ObservedItems& xt, const Permutation& seq,
                         double t) const {
    Gradient g;
    g.grad.assign(params_.size(), 0.0);
    std::vector<int> prefix;
    std::vector<bool> taken(arch_.n, false);
    for (std::size_t stage = 0; stage < arch_.n; ++stage) {
      const TrunkCache c = trunk_forward(trunk_input(xt, prefix, t));
      const auto sel = static_cast<std::size_t>(seq(stage) - 1);
      auto [nll, dlogits] = stage_nll(c.out, taken, sel);
      g.loss += nll;
      trunk_backward(c, dlogits, g.grad);
      taken[sel] = true;
      prefix.push_back(static_cast<int>(sel));
    }
    return g;
  }

  Gradient pointer_loss_grad(const ObservedItems& xt, const Permutation& seq,
                             double t) const {
    Gradient g;
    g.grad.assign(params_.size(), 0.0);
    const auto enc = encode_items(xt);
    const auto W = biaffine_w();
    const auto u = biaffine_u();
    const auto v = biaffine_v();
    const double b = params_[layout_.bb];
    const std::size_t m = arch_.emb;

    std::vector<std::vector<double>> denc(arch_.n,
                                          std::vector<double>(m, 0.0));
    std::vector<int> prefix;
    std::vector<bool> taken(arch_.n, false);
    for (std::size_t stage = 0; stage < arch_.n; ++stage) {
      const TrunkCache c = trunk_forward(trunk_input(xt, prefix, t));
      const std::vector<double>& dec = c.out;
      const auto logits = biaffine_scores(enc, dec, W, u, v, b);
      const auto sel = static_cast<std::size_t>(seq(stage) - 1);
      auto [nll, dlogits] = stage_nll(logits, taken, sel);
      g.loss += nll;

      double dsum = 0.0;
      for (double dl : dlogits) dsum += dl;
      // d loss / d biaffine parameters.
      for (std::size_t k = 0; k < arch_.n; ++k) {
        if (dlogits[k] == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) {
          const double di = dec[i] * dlogits[k];
          for (std::size_t j = 0; j < m; ++j)
            g.grad[layout_.bw + i * m + j] += di * enc[k][j];
        }
        for (std::size_t j = 0; j < m; ++j)
          g.grad[layout_.bv + j] += dlogits[k] * enc[k][j];
      }
      for (std::size_t i = 0; i < m; ++i)
        g.grad[layout_.bu + i] += dsum * dec[i];
      g.grad[layout_.bb] += dsum;

      // Flow into the decoder state, then the trunk.
      std::vector<double> ddec(m, 0.0);
      for (std::size_t k = 0; k < arch_.n; ++k) {
        if (dlogits[k] == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) {
          double We = 0.0;
          for (std::size_t j = 0; j < m; ++j) We += W[i * m + j] * enc[k][j];
          ddec[i] += dlogits[k] * We;
        }
      }
      for (std::size_t i = 0; i < m; ++i) ddec[i] += dsum * u[i];
      trunk_backward(c, ddec, g.grad);

      // Accumulate flow into the shared item embeddings.
      for (std::size_t k = 0; k < arch_.n; ++k) {
        if (dlogits[k] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
          double Wd = 0.0;
          for (std::size_t i = 0; i < m; ++i) Wd += dec[i] * W[i * m + j];
          denc[k][j] += dlogits[k] * (Wd + v[j]);
        }
      }

      taken[sel] = true;
      prefix.push_back(static_cast<int>(sel));
    }

    // Encoder backward, once per item.
    for (std::size_t p = 0; p < arch_.n; ++p) {
      const auto y = encoder_input(xt, p);
      for (std::size_t r = 0; r < m; ++r) {
        const double dz = denc[p][r] * (1.0 - enc[p][r] * enc[p][r]);
        g.grad[layout_.enc_b + r] += dz;
        const std::size_t row = layout_.enc_w + r * layout_.enc_in;
        for (std::size_t ccol = 0; ccol < layout_.enc_in; ++ccol)
          g.grad[row + ccol] += dz * y[ccol];
      }
    }
    return g;
  }

  ModelArch arch_;
  std::vector<double> params_;
  Layout layout_;
};

// --- corruption pipeline and training loop ---

struct TrainingExample {
  ItemMatrix items;
  Permutation sigma0;  // rank form over the instance's elements
};
using Dataset = std::vector<TrainingExample>;

struct CorruptionSpec {
  BridgeParams bridge = BridgeParams::uniform(0.3, 20);
  ForwardProcess forward = ForwardProcess::SoftRank;
  Parametrization param = Parametrization::PredictSigma0;
  std::size_t riffle_kmax = 7;
};

/// One corrupted observation: the observed items, the time it was drawn at,
/// and the selection sequence (observed frame) the model should emit.
struct CorruptedObservation {
  ObservedItems xt;
  Permutation target_seq;
  double t;
};

inline CorruptedObservation corrupt_example(const TrainingExample& ex,
                                            const CorruptionSpec& spec, Rng& rng) {
  const auto& grid = spec.bridge.time_grid;
  if (grid.size() < 3)
    throw std::invalid_argument("corrupt_example: grid interior is empty");
  const std::size_t k = std::uniform_int_distribution<std::size_t>(
      1, grid.size() - 2)(rng);
  const double t = grid[k];
  const double s = grid[k - 1];

  Permutation sigma_t = Permutation::identity(ex.sigma0.size());
  Permutation target = ex.sigma0;

  if (spec.forward == ForwardProcess::SoftRank) {
    const SoftRankVector z0 = lift_to_grid(ex.sigma0);
    const SoftRankVector z1 = sample_reference(spec.bridge, z0.size(), rng);
    if (spec.param == Parametrization::PredictSigma0) {
      const auto z_t = sample_forward_marginal(z0, z1, t, spec.bridge.eta, rng);
      sigma_t = rank_of_coordinates(z_t.values);
    } else {
      const SoftRankVector z_s =
          s == 0.0 ? z0 : sample_forward_marginal(z0, z1, s, spec.bridge.eta, rng);
      const auto z_t =
          sample_forward_section(z_s, z1, s, t, spec.bridge.eta, rng);
      sigma_t = rank_of_coordinates(z_t.values);
      target = rank_of_coordinates(z_s.values);
    }
  } else {
    const auto shuffles_at = [&](double u) {
      return static_cast<std::size_t>(
          std::llround(u * static_cast<double>(spec.riffle_kmax)));
    };
    const std::size_t k_s = shuffles_at(s);
    const std::size_t k_t = shuffles_at(t);
    Permutation state = ex.sigma0;
    for (std::size_t i = 0; i < k_s; ++i) state = riffle_shuffle_step(state, rng);
    if (spec.param == Parametrization::PredictSigmaPrev) target = state;
    for (std::size_t i = k_s; i < k_t; ++i)
      state = riffle_shuffle_step(state, rng);
    sigma_t = state;
  }

  return CorruptedObservation{observe(ex.items, sigma_t),
                              observed_frame_sequence(target, sigma_t), t};
}

/// Mean loss and mean gradient over a batch of freshly corrupted examples.
inline DenoiserModel::Gradient training_loss(const DenoiserModel& model,
                                             std::span<const TrainingExample> batch,
                                             const CorruptionSpec& spec, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
  DenoiserModel::Gradient total;
  total.grad.assign(model.params().size(), 0.0);
  for (const auto& ex : batch) {
    const auto obs = corrupt_example(ex, spec, rng);
    const auto g = model.observed_loss_and_grad(obs.xt, obs.target_seq, obs.t);
    total.loss += g.loss;
    for (std::size_t j = 0; j < g.grad.size(); ++j) total.grad[j] += g.grad[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  for (auto& x : total.grad) x *= inv;
  return total;
}

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  CorruptionSpec corruption;
  std::uint64_t seed = 1;
};

struct TrainResult {
  std::vector<double> epoch_loss;
};

/// Minibatch gradient descent at a fixed learning rate. Deterministic for a
/// fixed seed; aborts with a diagnostic if the loss turns non-finite.
inline TrainResult train(DenoiserModel& model, const Dataset& data,
                         const TrainConfig& cfg) {
  if (model.variant() == DenoiserVariant::Oracle)
    throw std::invalid_argument("train: the oracle has no trainable parameters");
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  Rng rng = make_rng(cfg.seed);
  TrainResult result;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<TrainingExample> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(idx.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[idx[i]]);
      const auto g = training_loss(model, batch, cfg.corruption, rng);
      if (!std::isfinite(g.loss))
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      for (std::size_t j = 0; j < g.grad.size(); ++j)
        model.params()[j] -= cfg.learning_rate * g.grad[j];
      epoch_loss += g.loss;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

/// One composed backward move: sample sigma0_hat from the model at (z_t, t),
/// lift it to the grid, draw z_s from the reverse kernel, and read off the
/// ranking at s.
inline Permutation predict_sigma_prev(const DenoiserModel& model,
                                      const ItemMatrix& items,
                                      const SoftRankVector& z_t,
                                      const SoftRankVector& z1, double t, double s,
                                      const BridgeParams& bridge, Rng& rng) {
  const Permutation sigma_t = rank_of_coordinates(z_t.values);
  const ObservedItems xt = observe(items, sigma_t);
  const auto [seq, lp] = cgpl_sample(model, xt, t, rng);
  const Permutation sigma0_hat = element_frame_ranks(seq, sigma_t);
  const SoftRankVector z0_hat = lift_to_grid(sigma0_hat);
  const ReverseKernelQuery q(s, t, bridge.eta, z_t, z0_hat, z1);
  const SoftRankVector z_s = sample_reverse_step(q, rng);
  return rank_of_coordinates(z_s.values);
}

}  // namespace softrank
