#include "cuisine/transformer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double gelu(double x) {
  const double u = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_prime(double x) {
  const double u = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
}

void add_bias_rows(DenseMatrix& m, const DenseMatrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::span<double> row = m.row(r);
    std::span<const double> b = bias.row(0);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
}

void add_column_sums(const DenseMatrix& m, DenseMatrix& grad) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::span<const double> row = m.row(r);
    std::span<double> g = grad.row(0);
    for (std::size_t j = 0; j < row.size(); ++j) g[j] += row[j];
  }
}

/// y = gamma * xhat + beta per row, with xhat and 1/std cached for backward.
void layer_norm_forward(const DenseMatrix& x, const DenseMatrix& gamma,
                        const DenseMatrix& beta, DenseMatrix& xhat,
                        std::vector<double>& inv_std, DenseMatrix& y) {
  const std::size_t d = x.cols();
  xhat = DenseMatrix(x.rows(), d);
  y = DenseMatrix(x.rows(), d);
  inv_std.assign(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::span<const double> row = x.row(r);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mu) * inv;
      xhat(r, j) = xh;
      y(r, j) = gamma(0, j) * xh + beta(0, j);
    }
  }
}

void layer_norm_backward(const DenseMatrix& dy, const DenseMatrix& xhat,
                         const std::vector<double>& inv_std,
                         const DenseMatrix& gamma, DenseMatrix& grad_gamma,
                         DenseMatrix& grad_beta, DenseMatrix& dx) {
  const std::size_t d = dy.cols();
  dx = DenseMatrix(dy.rows(), d);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(r, j) * gamma(0, j);
      grad_gamma(0, j) += dy(r, j) * xhat(r, j);
      grad_beta(0, j) += dy(r, j);
      m1 += dxh;
      m2 += dxh * xhat(r, j);
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(r, j) * gamma(0, j);
      dx(r, j) = inv_std[r] * (dxh - m1 - xhat(r, j) * m2);
    }
  }
}

}  // namespace

TransformerModel::TransformerModel(std::size_t vocab_size, int n_classes,
                                   const TrainConfig& config)
    : config_(config) {
  config.validate();
  if (vocab_size < Vocabulary::kFirstReal) {
    throw ConfigError("transformer: vocabulary too small");
  }
  if (n_classes < 2) throw ConfigError("transformer: need at least two classes");
  if (config.embed_dim % config.n_heads != 0) {
    throw ConfigError("transformer: embed_dim must be divisible by n_heads");
  }

  const std::size_t d = static_cast<std::size_t>(config.embed_dim);
  const std::size_t ff = 4 * d;
  embedding_.init(vocab_size, d);
  positional_.init(static_cast<std::size_t>(config.max_len), d);
  layers_.resize(static_cast<std::size_t>(config.layers));
  for (Layer& layer : layers_) {
    layer.w_q.init(d, d);
    layer.w_k.init(d, d);
    layer.w_v.init(d, d);
    layer.w_o.init(d, d);
    layer.b_q.init(1, d);
    layer.b_v.init(1, d);
    layer.b_o.init(1, d);
    layer.ln1_gamma.init(1, d, 1.0);
    layer.ln1_beta.init(1, d);
    layer.w_ff1.init(d, ff);
    layer.b_ff1.init(1, ff);
    layer.w_ff2.init(ff, d);
    layer.b_ff2.init(1, d);
    layer.ln2_gamma.init(1, d, 1.0);
    layer.ln2_beta.init(1, d);
  }
  head_w_.init(d, static_cast<std::size_t>(n_classes));
  head_b_.init(1, static_cast<std::size_t>(n_classes));

  Prng rng(config.seed);
  auto fill_normal = [&rng](DenseMatrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 0.02;
  };
  fill_normal(embedding_.v);
  fill_normal(positional_.v);
  for (Layer& layer : layers_) {
    fill_normal(layer.w_q.v);
    fill_normal(layer.w_k.v);
    fill_normal(layer.w_v.v);
    fill_normal(layer.w_o.v);
    fill_normal(layer.w_ff1.v);
    fill_normal(layer.w_ff2.v);
  }
  fill_normal(head_w_.v);
  for (double& v : embedding_.v.row(Vocabulary::kPad)) v = 0.0;
}

void TransformerModel::layer_forward(const Layer& params, LayerCache& cache) const {
  const std::size_t s = cached_seq_len_;
  const std::size_t t_len = cached_true_len_;
  const std::size_t d = params.w_q.v.rows();
  const int heads = config_.n_heads;
  const std::size_t dh = d / static_cast<std::size_t>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  gemm(cache.x_in, false, params.w_q.v, false, cache.q);
  add_bias_rows(cache.q, params.b_q.v);
  gemm(cache.x_in, false, params.w_k.v, false, cache.k);
  gemm(cache.x_in, false, params.w_v.v, false, cache.v);
  add_bias_rows(cache.v, params.b_v.v);

  cache.probs = DenseMatrix(static_cast<std::size_t>(heads) * s, s);
  cache.attn = DenseMatrix(s, d);
  std::vector<double> scores(s);
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    for (std::size_t qi = 0; qi < s; ++qi) {
      for (std::size_t j = 0; j < s; ++j) {
        if (j >= t_len) {
          scores[j] = -std::numeric_limits<double>::infinity();
          continue;
        }
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          dot += cache.q(qi, off + c) * cache.k(j, off + c);
        }
        scores[j] = dot * scale;
      }
      std::span<double> prow = cache.probs.row(static_cast<std::size_t>(h) * s + qi);
      std::copy(scores.begin(), scores.end(), prow.begin());
      softmax_inplace(prow);
      for (std::size_t j = 0; j < t_len; ++j) {
        const double w = prow[j];
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < dh; ++c) {
          cache.attn(qi, off + c) += w * cache.v(j, off + c);
        }
      }
    }
  }

  DenseMatrix attn_out;
  gemm(cache.attn, false, params.w_o.v, false, attn_out);
  add_bias_rows(attn_out, params.b_o.v);
  cache.r1 = cache.x_in;
  cache.r1.add_scaled(attn_out, 1.0);
  layer_norm_forward(cache.r1, params.ln1_gamma.v, params.ln1_beta.v,
                     cache.ln1_xhat, cache.ln1_inv_std, cache.x1);

  gemm(cache.x1, false, params.w_ff1.v, false, cache.ff_pre);
  add_bias_rows(cache.ff_pre, params.b_ff1.v);
  cache.ff_act = DenseMatrix(s, cache.ff_pre.cols());
  for (std::size_t i = 0; i < cache.ff_pre.size(); ++i) {
    cache.ff_act.data()[i] = gelu(cache.ff_pre.data()[i]);
  }
  DenseMatrix ff_out;
  gemm(cache.ff_act, false, params.w_ff2.v, false, ff_out);
  add_bias_rows(ff_out, params.b_ff2.v);
  cache.r2 = cache.x1;
  cache.r2.add_scaled(ff_out, 1.0);
  layer_norm_forward(cache.r2, params.ln2_gamma.v, params.ln2_beta.v,
                     cache.ln2_xhat, cache.ln2_inv_std, cache.x_out);
}

std::vector<double> TransformerModel::forward(const TokenSequence& seq) {
  if (seq.true_length == 0) throw Error("transformer: empty sequence");
  if (seq.true_length > seq.ids.size()) {
    throw Error("transformer: true length exceeds id count");
  }
  const std::size_t s = seq.ids.size();
  if (s > static_cast<std::size_t>(config_.max_len)) {
    throw Error("transformer: sequence longer than max_len");
  }
  for (std::uint32_t id : seq.ids) {
    if (id >= embedding_.v.rows()) {
      throw Error("transformer: token id out of vocabulary range");
    }
  }
  const std::size_t d = static_cast<std::size_t>(config_.embed_dim);
  cached_ids_ = seq.ids;
  cached_seq_len_ = s;
  cached_true_len_ = seq.true_length;
  cache_.assign(layers_.size(), LayerCache{});

  DenseMatrix x(s, d);
  for (std::size_t p = 0; p < s; ++p) {
    std::span<const double> emb = embedding_.v.row(seq.ids[p]);
    std::span<const double> pos = positional_.v.row(p);
    std::span<double> row = x.row(p);
    for (std::size_t j = 0; j < d; ++j) row[j] = emb[j] + pos[j];
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache_[l].x_in = std::move(x);
    layer_forward(layers_[l], cache_[l]);
    x = cache_[l].x_out;
  }

  const std::size_t t_len = cached_true_len_;
  std::vector<double> pooled(d, 0.0);
  for (std::size_t p = 0; p < t_len; ++p) {
    std::span<const double> row = x.row(p);
    for (std::size_t j = 0; j < d; ++j) pooled[j] += row[j];
  }
  for (double& v : pooled) v /= static_cast<double>(t_len);
  cached_pooled_ = pooled;

  const int k = n_classes();
  std::vector<double> logits(head_b_.v.row(0).begin(), head_b_.v.row(0).end());
  for (std::size_t j = 0; j < d; ++j) {
    const double pv = pooled[j];
    if (pv == 0.0) continue;
    std::span<const double> wrow = head_w_.v.row(j);
    for (int c = 0; c < k; ++c) logits[c] += pv * wrow[c];
  }
  return logits;
}

void TransformerModel::layer_backward(Layer& params, const LayerCache& cache,
                                      DenseMatrix& d_out, DenseMatrix& d_in) {
  const std::size_t s = cached_seq_len_;
  const std::size_t t_len = cached_true_len_;
  const std::size_t d = params.w_q.v.rows();
  const int heads = config_.n_heads;
  const std::size_t dh = d / static_cast<std::size_t>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  DenseMatrix d_r2;
  layer_norm_backward(d_out, cache.ln2_xhat, cache.ln2_inv_std,
                      params.ln2_gamma.v, params.ln2_gamma.g, params.ln2_beta.g,
                      d_r2);

  // r2 = x1 + ff(x1): both branches receive d_r2.
  DenseMatrix d_x1 = d_r2;
  gemm(cache.ff_act, true, d_r2, false, params.w_ff2.g, true);
  add_column_sums(d_r2, params.b_ff2.g);
  DenseMatrix d_act;
  gemm(d_r2, false, params.w_ff2.v, true, d_act);
  DenseMatrix d_pre(s, d_act.cols());
  for (std::size_t i = 0; i < d_act.size(); ++i) {
    d_pre.data()[i] = d_act.data()[i] * gelu_prime(cache.ff_pre.data()[i]);
  }
  gemm(cache.x1, true, d_pre, false, params.w_ff1.g, true);
  add_column_sums(d_pre, params.b_ff1.g);
  DenseMatrix d_from_ff;
  gemm(d_pre, false, params.w_ff1.v, true, d_from_ff);
  d_x1.add_scaled(d_from_ff, 1.0);

  DenseMatrix d_r1;
  layer_norm_backward(d_x1, cache.ln1_xhat, cache.ln1_inv_std,
                      params.ln1_gamma.v, params.ln1_gamma.g, params.ln1_beta.g,
                      d_r1);

  // r1 = x_in + attn_out: the residual copy goes straight to d_in.
  d_in = d_r1;
  gemm(cache.attn, true, d_r1, false, params.w_o.g, true);
  add_column_sums(d_r1, params.b_o.g);
  DenseMatrix d_attn;
  gemm(d_r1, false, params.w_o.v, true, d_attn);

  DenseMatrix d_q(s, d), d_k(s, d), d_v(s, d);
  std::vector<double> dp(t_len), ds(t_len);
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    for (std::size_t qi = 0; qi < s; ++qi) {
      std::span<const double> prow =
          cache.probs.row(static_cast<std::size_t>(h) * s + qi);
      double inner = 0.0;
      for (std::size_t j = 0; j < t_len; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          acc += d_attn(qi, off + c) * cache.v(j, off + c);
        }
        dp[j] = acc;
        inner += acc * prow[j];
      }
      for (std::size_t j = 0; j < t_len; ++j) {
        ds[j] = prow[j] * (dp[j] - inner);
      }
      for (std::size_t j = 0; j < t_len; ++j) {
        const double w = prow[j];
        if (w != 0.0) {
          for (std::size_t c = 0; c < dh; ++c) {
            d_v(j, off + c) += w * d_attn(qi, off + c);
          }
        }
        const double dsj = ds[j];
        if (dsj != 0.0) {
          for (std::size_t c = 0; c < dh; ++c) {
            d_q(qi, off + c) += dsj * cache.k(j, off + c) * scale;
            d_k(j, off + c) += dsj * cache.q(qi, off + c) * scale;
          }
        }
      }
    }
  }

  gemm(cache.x_in, true, d_q, false, params.w_q.g, true);
  add_column_sums(d_q, params.b_q.g);
  gemm(cache.x_in, true, d_k, false, params.w_k.g, true);
  gemm(cache.x_in, true, d_v, false, params.w_v.g, true);
  add_column_sums(d_v, params.b_v.g);

  DenseMatrix tmp;
  gemm(d_q, false, params.w_q.v, true, tmp);
  d_in.add_scaled(tmp, 1.0);
  gemm(d_k, false, params.w_k.v, true, tmp);
  d_in.add_scaled(tmp, 1.0);
  gemm(d_v, false, params.w_v.v, true, tmp);
  d_in.add_scaled(tmp, 1.0);
}

void TransformerModel::backward(std::span<const double> dlogits) {
  if (cached_seq_len_ == 0) throw Error("transformer: backward before forward");
  const int k = n_classes();
  if (static_cast<int>(dlogits.size()) != k) {
    throw Error("transformer: upstream gradient has wrong length");
  }
  const std::size_t s = cached_seq_len_;
  const std::size_t t_len = cached_true_len_;
  const std::size_t d = static_cast<std::size_t>(config_.embed_dim);

  std::vector<double> d_pooled(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::span<const double> wrow = head_w_.v.row(j);
    std::span<double> gw = head_w_.g.row(j);
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      acc += wrow[c] * dlogits[c];
      gw[c] += cached_pooled_[j] * dlogits[c];
    }
    d_pooled[j] = acc;
  }
  for (int c = 0; c < k; ++c) head_b_.g(0, c) += dlogits[c];

  DenseMatrix d_x(s, d);
  const double inv_t = 1.0 / static_cast<double>(t_len);
  for (std::size_t p = 0; p < t_len; ++p) {
    std::span<double> row = d_x.row(p);
    for (std::size_t j = 0; j < d; ++j) row[j] = d_pooled[j] * inv_t;
  }

  DenseMatrix d_in;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    layer_backward(layers_[l], cache_[l], d_x, d_in);
    d_x = std::move(d_in);
  }

  for (std::size_t p = 0; p < s; ++p) {
    std::span<const double> row = d_x.row(p);
    std::span<double> pos = positional_.g.row(p);
    std::span<double> emb = embedding_.g.row(cached_ids_[p]);
    for (std::size_t j = 0; j < d; ++j) {
      pos[j] += row[j];
      emb[j] += row[j];
    }
  }
}

void TransformerModel::zero_grads() {
  for (TensorRef& t : tensors()) t.grad->fill(0.0);
}

std::vector<TensorRef> TransformerModel::tensors() {
  std::vector<TensorRef> out;
  out.push_back({"embedding", &embedding_.v, &embedding_.g});
  out.push_back({"positional", &positional_.v, &positional_.g});
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    auto push = [&out, &prefix](const char* name, Param& p) {
      out.push_back({prefix + name, &p.v, &p.g});
    };
    push("w_q", layer.w_q);
    push("b_q", layer.b_q);
    push("w_k", layer.w_k);
    push("w_v", layer.w_v);
    push("b_v", layer.b_v);
    push("w_o", layer.w_o);
    push("b_o", layer.b_o);
    push("ln1_gamma", layer.ln1_gamma);
    push("ln1_beta", layer.ln1_beta);
    push("w_ff1", layer.w_ff1);
    push("b_ff1", layer.b_ff1);
    push("w_ff2", layer.w_ff2);
    push("b_ff2", layer.b_ff2);
    push("ln2_gamma", layer.ln2_gamma);
    push("ln2_beta", layer.ln2_beta);
  }
  out.push_back({"head.w", &head_w_.v, &head_w_.g});
  out.push_back({"head.b", &head_b_.v, &head_b_.g});
  return out;
}

const DenseMatrix& TransformerModel::attention_probs(int layer) const {
  if (layer < 0 || static_cast<std::size_t>(layer) >= cache_.size()) {
    throw Error("transformer: no cached attention for that layer");
  }
  return cache_[static_cast<std::size_t>(layer)].probs;
}

}  // namespace cuisine
