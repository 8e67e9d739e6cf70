#include "cuisine/lstm.hpp"

#include <cmath>
#include <string>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

namespace {

constexpr const char* kGateNames[4] = {"i", "f", "g", "o"};

}  // namespace

LstmModel::LstmModel(std::size_t vocab_size, int n_classes,
                     const TrainConfig& config)
    : config_(config) {
  config.validate();
  if (vocab_size < Vocabulary::kFirstReal) {
    throw ConfigError("lstm: vocabulary too small");
  }
  if (n_classes < 2) throw ConfigError("lstm: need at least two classes");

  const std::size_t d = static_cast<std::size_t>(config.embed_dim);
  const std::size_t h = static_cast<std::size_t>(config.hidden_dim);

  embedding_ = DenseMatrix(vocab_size, d);
  d_embedding_ = DenseMatrix(vocab_size, d);
  layers_.resize(static_cast<std::size_t>(config.layers));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t in = l == 0 ? d : h;
    for (Gate& gate : layers_[l].gates) {
      gate.w = DenseMatrix(in, h);
      gate.u = DenseMatrix(h, h);
      gate.b = DenseMatrix(1, h);
      gate.dw = DenseMatrix(in, h);
      gate.du = DenseMatrix(h, h);
      gate.db = DenseMatrix(1, h);
    }
  }
  head_w_ = DenseMatrix(h, static_cast<std::size_t>(n_classes));
  head_b_ = DenseMatrix(1, static_cast<std::size_t>(n_classes));
  d_head_w_ = DenseMatrix(h, static_cast<std::size_t>(n_classes));
  d_head_b_ = DenseMatrix(1, static_cast<std::size_t>(n_classes));

  Prng rng(config.seed);
  for (std::size_t r = 0; r < embedding_.rows(); ++r) {
    for (std::size_t c = 0; c < embedding_.cols(); ++c) {
      embedding_(r, c) = rng.normal() * 0.1;
    }
  }
  for (double& v : embedding_.row(Vocabulary::kPad)) v = 0.0;

  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (Layer& layer : layers_) {
    for (Gate& gate : layer.gates) {
      for (std::size_t i = 0; i < gate.w.size(); ++i) {
        gate.w.data()[i] = rng.uniform(-bound, bound);
      }
      for (std::size_t i = 0; i < gate.u.size(); ++i) {
        gate.u.data()[i] = rng.uniform(-bound, bound);
      }
    }
  }
  for (std::size_t i = 0; i < head_w_.size(); ++i) {
    head_w_.data()[i] = rng.normal() * 0.1;
  }
}

std::span<const double> LstmModel::layer_input(int layer, std::size_t t) const {
  if (layer == 0) return embedding_.row(cached_ids_[t]);
  return cache_[layer - 1].h.row(t);
}

std::vector<double> LstmModel::forward(const TokenSequence& seq) {
  if (seq.true_length == 0) throw Error("lstm: empty sequence");
  if (seq.true_length > seq.ids.size()) {
    throw Error("lstm: true length exceeds id count");
  }
  const std::size_t t_max = seq.true_length;
  const std::size_t h = static_cast<std::size_t>(config_.hidden_dim);
  const int n_layers = config_.layers;
  for (std::size_t t = 0; t < t_max; ++t) {
    if (seq.ids[t] >= embedding_.rows()) {
      throw Error("lstm: token id out of vocabulary range");
    }
  }

  cached_ids_.assign(seq.ids.begin(), seq.ids.begin() + t_max);
  cached_len_ = t_max;
  cache_.assign(static_cast<std::size_t>(n_layers), LayerCache{});
  for (LayerCache& lc : cache_) {
    lc.i = DenseMatrix(t_max, h);
    lc.f = DenseMatrix(t_max, h);
    lc.g = DenseMatrix(t_max, h);
    lc.o = DenseMatrix(t_max, h);
    lc.c = DenseMatrix(t_max, h);
    lc.tanh_c = DenseMatrix(t_max, h);
    lc.h = DenseMatrix(t_max, h);
  }

  std::vector<double> pre(h);
  for (std::size_t t = 0; t < t_max; ++t) {
    for (int l = 0; l < n_layers; ++l) {
      LayerCache& lc = cache_[l];
      const std::span<const double> x = layer_input(l, t);
      for (int gi = 0; gi < 4; ++gi) {
        const Gate& gate = layers_[l].gates[gi];
        std::span<const double> b = gate.b.row(0);
        std::copy(b.begin(), b.end(), pre.begin());
        for (std::size_t kx = 0; kx < x.size(); ++kx) {
          const double xv = x[kx];
          if (xv == 0.0) continue;
          const std::span<const double> wrow = gate.w.row(kx);
          for (std::size_t j = 0; j < h; ++j) pre[j] += xv * wrow[j];
        }
        if (t > 0) {
          const std::span<const double> hp = lc.h.row(t - 1);
          for (std::size_t kx = 0; kx < h; ++kx) {
            const double hv = hp[kx];
            if (hv == 0.0) continue;
            const std::span<const double> urow = gate.u.row(kx);
            for (std::size_t j = 0; j < h; ++j) pre[j] += hv * urow[j];
          }
        }
        std::span<double> dst = gi == 0   ? lc.i.row(t)
                                : gi == 1 ? lc.f.row(t)
                                : gi == 2 ? lc.g.row(t)
                                          : lc.o.row(t);
        if (gi == 2) {
          for (std::size_t j = 0; j < h; ++j) dst[j] = std::tanh(pre[j]);
        } else {
          for (std::size_t j = 0; j < h; ++j) dst[j] = sigmoid(pre[j]);
        }
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double c_prev = t > 0 ? lc.c(t - 1, j) : 0.0;
        const double c = lc.f(t, j) * c_prev + lc.i(t, j) * lc.g(t, j);
        lc.c(t, j) = c;
        lc.tanh_c(t, j) = std::tanh(c);
        lc.h(t, j) = lc.o(t, j) * lc.tanh_c(t, j);
      }
    }
  }

  const std::span<const double> h_last = cache_.back().h.row(t_max - 1);
  const int k = n_classes();
  std::vector<double> logits(head_b_.row(0).begin(), head_b_.row(0).end());
  for (std::size_t j = 0; j < h; ++j) {
    const double hv = h_last[j];
    if (hv == 0.0) continue;
    const std::span<const double> wrow = head_w_.row(j);
    for (int c = 0; c < k; ++c) logits[c] += hv * wrow[c];
  }
  return logits;
}

void LstmModel::backward(std::span<const double> dlogits) {
  if (cached_len_ == 0) throw Error("lstm: backward before forward");
  const int k = n_classes();
  if (static_cast<int>(dlogits.size()) != k) {
    throw Error("lstm: upstream gradient has wrong length");
  }
  const std::size_t t_max = cached_len_;
  const std::size_t h = static_cast<std::size_t>(config_.hidden_dim);
  const int n_layers = config_.layers;

  const std::span<const double> h_last = cache_.back().h.row(t_max - 1);
  std::vector<double> dh_head(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const std::span<const double> wrow = head_w_.row(j);
    std::span<double> dwrow = d_head_w_.row(j);
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      acc += wrow[c] * dlogits[c];
      dwrow[c] += h_last[j] * dlogits[c];
    }
    dh_head[j] = acc;
  }
  for (int c = 0; c < k; ++c) d_head_b_(0, c) += dlogits[c];

  std::vector<std::vector<double>> dh_carry(n_layers, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> dc_carry(n_layers, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> dx_down(n_layers, std::vector<double>(h, 0.0));
  std::vector<double> dh(h), dc(h);
  std::array<std::vector<double>, 4> da;
  for (auto& v : da) v.assign(h, 0.0);

  for (std::size_t t = t_max; t-- > 0;) {
    for (int l = n_layers - 1; l >= 0; --l) {
      LayerCache& lc = cache_[l];
      for (std::size_t j = 0; j < h; ++j) {
        double v = dh_carry[l][j];
        if (l == n_layers - 1 && t == t_max - 1) v += dh_head[j];
        if (l < n_layers - 1) v += dx_down[l][j];
        dh[j] = v;
        dc[j] = dc_carry[l][j];
      }

      for (std::size_t j = 0; j < h; ++j) {
        const double i = lc.i(t, j), f = lc.f(t, j), g = lc.g(t, j),
                     o = lc.o(t, j);
        const double tc = lc.tanh_c(t, j);
        const double c_prev = t > 0 ? lc.c(t - 1, j) : 0.0;
        const double d_o = dh[j] * tc;
        dc[j] += dh[j] * o * (1.0 - tc * tc);
        const double d_i = dc[j] * g;
        const double d_f = dc[j] * c_prev;
        const double d_g = dc[j] * i;
        da[0][j] = d_i * i * (1.0 - i);
        da[1][j] = d_f * f * (1.0 - f);
        da[2][j] = d_g * (1.0 - g * g);
        da[3][j] = d_o * o * (1.0 - o);
        dc_carry[l][j] = dc[j] * f;
      }

      const std::span<const double> x = layer_input(l, t);
      std::vector<double> dx_local(x.size(), 0.0);
      std::fill(dh_carry[l].begin(), dh_carry[l].end(), 0.0);
      for (int gi = 0; gi < 4; ++gi) {
        Gate& gate = layers_[l].gates[gi];
        const std::vector<double>& a = da[gi];
        std::span<double> db = gate.db.row(0);
        for (std::size_t j = 0; j < h; ++j) db[j] += a[j];
        for (std::size_t kx = 0; kx < x.size(); ++kx) {
          const double xv = x[kx];
          const std::span<const double> wrow = gate.w.row(kx);
          std::span<double> dwrow = gate.dw.row(kx);
          double acc = 0.0;
          for (std::size_t j = 0; j < h; ++j) {
            dwrow[j] += xv * a[j];
            acc += wrow[j] * a[j];
          }
          dx_local[kx] += acc;
        }
        if (t > 0) {
          const std::span<const double> hp = lc.h.row(t - 1);
          for (std::size_t kx = 0; kx < h; ++kx) {
            const double hv = hp[kx];
            const std::span<const double> urow = gate.u.row(kx);
            std::span<double> durow = gate.du.row(kx);
            double acc = 0.0;
            for (std::size_t j = 0; j < h; ++j) {
              durow[j] += hv * a[j];
              acc += urow[j] * a[j];
            }
            dh_carry[l][kx] += acc;
          }
        }
      }
      if (l == 0) {
        std::span<double> erow = d_embedding_.row(cached_ids_[t]);
        for (std::size_t kx = 0; kx < dx_local.size(); ++kx) {
          erow[kx] += dx_local[kx];
        }
      } else {
        dx_down[l - 1] = std::move(dx_local);
      }
    }
  }
}

void LstmModel::zero_grads() {
  d_embedding_.fill(0.0);
  for (Layer& layer : layers_) {
    for (Gate& gate : layer.gates) {
      gate.dw.fill(0.0);
      gate.du.fill(0.0);
      gate.db.fill(0.0);
    }
  }
  d_head_w_.fill(0.0);
  d_head_b_.fill(0.0);
}

std::vector<TensorRef> LstmModel::tensors() {
  std::vector<TensorRef> out;
  out.push_back({"embedding", &embedding_, &d_embedding_});
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (int gi = 0; gi < 4; ++gi) {
      Gate& gate = layers_[l].gates[gi];
      out.push_back({prefix + "w_" + kGateNames[gi], &gate.w, &gate.dw});
      out.push_back({prefix + "u_" + kGateNames[gi], &gate.u, &gate.du});
      out.push_back({prefix + "b_" + kGateNames[gi], &gate.b, &gate.db});
    }
  }
  out.push_back({"head.w", &head_w_, &d_head_w_});
  out.push_back({"head.b", &head_b_, &d_head_b_});
  return out;
}

}  // namespace cuisine
