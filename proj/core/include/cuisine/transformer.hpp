#pragma once

#include <cstdint>
#include <vector>

#include "cuisine/sequence.hpp"

namespace cuisine {

/// Toy bidirectional transformer encoder trained from scratch: learned token
/// and positional embeddings, L post-norm encoder layers (multi-head
/// self-attention with an additive -inf mask on PAD keys, then a GELU
/// feed-forward with inner dim 4d, each sublayer wrapped in residual + layer
/// norm), mean pooling over non-PAD positions, linear head. embed_dim must
/// be divisible by n_heads.
class TransformerModel : public SequenceClassifier {
 public:
  TransformerModel(std::size_t vocab_size, int n_classes,
                   const TrainConfig& config);

  std::string kind() const override { return "transformer"; }
  int n_classes() const override { return static_cast<int>(head_b_.v.cols()); }
  const TrainConfig& config() const override { return config_; }

  std::vector<double> forward(const TokenSequence& seq) override;
  void backward(std::span<const double> dlogits) override;
  void zero_grads() override;
  std::vector<TensorRef> tensors() override;

  std::size_t vocab_size() const { return embedding_.v.rows(); }
  /// Attention probabilities from the last forward(). Row h*S + q (S =
  /// cached_seq_len) holds query position q's distribution over key
  /// positions for head h; masked keys are exactly zero.
  const DenseMatrix& attention_probs(int layer) const;
  std::size_t cached_seq_len() const { return cached_seq_len_; }

 private:
  struct Param {
    DenseMatrix v, g;
    void init(std::size_t rows, std::size_t cols, double value = 0.0) {
      v = DenseMatrix(rows, cols, value);
      g = DenseMatrix(rows, cols);
    }
  };
  struct Layer {
    Param w_q, w_k, w_v, w_o;  // d x d
    // No key bias: a shared offset on every key shifts each attention row
    // by a constant, which the row softmax cancels.
    Param b_q, b_v, b_o;  // 1 x d
    Param ln1_gamma, ln1_beta;  // 1 x d
    Param w_ff1, b_ff1;        // d x 4d, 1 x 4d
    Param w_ff2, b_ff2;        // 4d x d, 1 x d
    Param ln2_gamma, ln2_beta;  // 1 x d
  };
  struct LayerCache {
    DenseMatrix x_in;                  // S x d, input to the layer
    DenseMatrix q, k, v;               // S x d
    DenseMatrix probs;                 // (H*S) x S
    DenseMatrix attn;                  // S x d, concatenated head outputs
    DenseMatrix r1;                    // S x d, x_in + attention output
    DenseMatrix ln1_xhat, ln2_xhat;    // S x d
    std::vector<double> ln1_inv_std, ln2_inv_std;  // S
    DenseMatrix x1;                    // S x d, after first layer norm
    DenseMatrix ff_pre, ff_act;        // S x 4d
    DenseMatrix r2;                    // S x d
    DenseMatrix x_out;                 // S x d
  };

  void layer_forward(const Layer& params, LayerCache& cache) const;
  void layer_backward(Layer& params, const LayerCache& cache, DenseMatrix& d_out,
                      DenseMatrix& d_in);

  TrainConfig config_;
  Param embedding_;   // V x d
  Param positional_;  // max_len x d
  std::vector<Layer> layers_;
  Param head_w_;  // d x K
  Param head_b_;  // 1 x K

  std::vector<std::uint32_t> cached_ids_;
  std::size_t cached_seq_len_ = 0;  // S: positions computed
  std::size_t cached_true_len_ = 0;  // T: non-PAD prefix
  std::vector<double> cached_pooled_;
  std::vector<LayerCache> cache_;
};

}  // namespace cuisine
