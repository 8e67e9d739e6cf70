#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cuisine/sequence.hpp"

namespace cuisine {

/// Stacked unidirectional LSTM (2 layers by default) over learned token
/// embeddings; the top layer's hidden state at the last non-PAD position
/// feeds a linear head. Gates per layer: i, f, o sigmoid and g tanh, with
/// c' = f*c + i*g and h' = o*tanh(c'). Only non-PAD positions are unrolled,
/// so padding never reaches the logits and the PAD embedding row stays
/// exactly zero.
class LstmModel : public SequenceClassifier {
 public:
  LstmModel(std::size_t vocab_size, int n_classes, const TrainConfig& config);

  std::string kind() const override { return "lstm"; }
  int n_classes() const override { return static_cast<int>(head_b_.cols()); }
  const TrainConfig& config() const override { return config_; }

  std::vector<double> forward(const TokenSequence& seq) override;
  void backward(std::span<const double> dlogits) override;
  void zero_grads() override;
  std::vector<TensorRef> tensors() override;

  std::size_t vocab_size() const { return embedding_.rows(); }

 private:
  // Gate order everywhere: i, f, g, o.
  struct Gate {
    DenseMatrix w, u, b;  // in x h, h x h, 1 x h
    DenseMatrix dw, du, db;
  };
  struct Layer {
    std::array<Gate, 4> gates;
  };
  struct LayerCache {
    DenseMatrix i, f, g, o, c, tanh_c, h;  // T x h each
  };

  std::span<const double> layer_input(int layer, std::size_t t) const;

  TrainConfig config_;
  DenseMatrix embedding_, d_embedding_;  // V x d
  std::vector<Layer> layers_;
  DenseMatrix head_w_, head_b_;  // h x K, 1 x K
  DenseMatrix d_head_w_, d_head_b_;

  std::vector<std::uint32_t> cached_ids_;
  std::size_t cached_len_ = 0;
  std::vector<LayerCache> cache_;
};

}  // namespace cuisine
