#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unifront/model/batching.hpp"
#include "unifront/model/config.hpp"
#include "unifront/random.hpp"

namespace unifront {

/// A named weight matrix (vectors are 1 x n) with its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<T> value;
  std::vector<T> grad;

  std::size_t size() const { return value.size(); }
};

/// y = x * w + b, with w stored [in x out].
template <typename T>
struct Linear {
  Param<T> w, b;
};

template <typename T>
struct LayerNorm {
  Param<T> gain, bias;
};

template <typename T>
struct Attention {
  Linear<T> q, k, v, o;
};

template <typename T>
struct FeedForward {
  Linear<T> in, out;
};

template <typename T>
struct EncoderLayer {
  Attention<T> self_attn;
  LayerNorm<T> ln1;
  FeedForward<T> ffn;
  LayerNorm<T> ln2;
};

template <typename T>
struct DecoderLayer {
  Attention<T> self_attn;
  LayerNorm<T> ln1;
  Attention<T> cross_attn;
  LayerNorm<T> ln2;
  FeedForward<T> ffn;
  LayerNorm<T> ln3;
};

struct LossStats {
  /// Sum of label-smoothed cross-entropy over non-PAD target positions.
  double loss_sum = 0.0;
  int tokens = 0;

  double mean() const { return tokens ? loss_sum / tokens : 0.0; }
};

/// Post-layer-norm transformer encoder-decoder with sinusoidal positions,
/// separate source/target embeddings and a linear output projection.
///
/// Training uses forward_backward() on padded batches; inference uses the
/// const encode()/step() pair, which decodes one position at a time with
/// cached self-attention keys and values and is safe to call concurrently.
template <typename T>
class Transformer {
 public:
  Transformer(const ModelConfig& config, int src_vocab, int tgt_vocab);
  ~Transformer();
  Transformer(Transformer&&) noexcept;
  Transformer& operator=(Transformer&&) noexcept;
  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;

  /// Xavier-uniform matrices, zero biases, unit layer-norm gains. The output
  /// projection starts small so the initial distribution is near uniform.
  void initialize(Rng& rng);

  const ModelConfig& config() const { return config_; }
  int src_vocab() const { return src_vocab_; }
  int tgt_vocab() const { return tgt_vocab_; }

  /// All parameters in the fixed checkpoint order.
  std::vector<Param<T>*> parameters();
  std::vector<const Param<T>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Teacher-forced loss; accumulates gradients of the mean loss
  /// (loss_sum / tokens) into Param::grad. Dropout is applied only when
  /// `dropout_rng` is non-null.
  LossStats forward_backward(const Batch& batch, Rng* dropout_rng);
  /// Loss without dropout or gradients.
  LossStats compute_loss(const Batch& batch) const;
  /// Output logits [size * tgt_len_max * tgt_vocab] without dropout.
  std::vector<T> logits(const Batch& batch) const;
  /// Attention probabilities of every layer and head, for inspection
  /// ([layer][b][head][tq][tk] flattened per layer). Decoder self-attention.
  std::vector<std::vector<T>> decoder_self_attention(const Batch& batch) const;

  struct Memory {
    int length = 0;
    std::vector<T> states;                     // [length x d_model]
    std::vector<std::vector<T>> cross_keys;    // per decoder layer
    std::vector<std::vector<T>> cross_values;  // per decoder layer
  };

  struct DecoderState {
    int position = 0;
    std::vector<std::vector<T>> self_keys;    // per layer, [position x d_model]
    std::vector<std::vector<T>> self_values;  // per layer
  };

  Memory encode(std::span<const int> src) const;
  DecoderState start() const;
  /// Feeds `token` at the current position and writes log-probabilities of
  /// the next token into `log_probs` (size tgt_vocab).
  void step(const Memory& memory, DecoderState& state, int token, std::vector<T>& log_probs) const;

 private:
  struct Workspace;

  void register_params();
  void forward(const Batch& batch, Workspace& ws, Rng* rng) const;
  LossStats loss_and_grad(const Batch& batch, Workspace& ws, bool want_grad);
  LossStats loss_only(const Batch& batch, Workspace& ws) const;
  void backward(const Batch& batch, Workspace& ws);
  const std::vector<T>& positional_row(int pos) const;

  ModelConfig config_;
  int src_vocab_;
  int tgt_vocab_;
  Param<T> src_embed_;
  Param<T> tgt_embed_;
  std::vector<EncoderLayer<T>> encoder_;
  std::vector<DecoderLayer<T>> decoder_;
  Linear<T> generator_;
  std::vector<Param<T>*> params_;
  std::vector<std::vector<T>> positions_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace unifront
