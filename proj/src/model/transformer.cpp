#include "unifront/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unifront/core/vocab.hpp"
#include "unifront/error.hpp"
#include "unifront/model/kernels.hpp"

namespace unifront {

namespace {

constexpr double kLayerNormEps = 1e-6;

template <typename T>
Param<T> make_param(std::string name, int rows, int cols) {
  Param<T> p;
  p.name = std::move(name);
  p.rows = rows;
  p.cols = cols;
  p.value.assign(static_cast<std::size_t>(rows) * cols, T(0));
  p.grad.assign(p.value.size(), T(0));
  return p;
}

template <typename T>
Linear<T> make_linear(const std::string& name, int in, int out) {
  return {make_param<T>(name + ".w", in, out), make_param<T>(name + ".b", 1, out)};
}

template <typename T>
LayerNorm<T> make_layernorm(const std::string& name, int d) {
  return {make_param<T>(name + ".gain", 1, d), make_param<T>(name + ".bias", 1, d)};
}

template <typename T>
Attention<T> make_attention(const std::string& name, int d) {
  return {make_linear<T>(name + ".q", d, d), make_linear<T>(name + ".k", d, d), make_linear<T>(name + ".v", d, d),
          make_linear<T>(name + ".o", d, d)};
}

template <typename T>
void fill_uniform(Param<T>& p, double bound, Rng& rng) {
  for (auto& x : p.value) x = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
}

template <typename T>
void xavier(Param<T>& p, Rng& rng) {
  fill_uniform(p, std::sqrt(6.0 / (p.rows + p.cols)), rng);
}

// ---------------------------------------------------------------------------
// Layer primitives. Buffers are row-major [rows x cols].
// ---------------------------------------------------------------------------

template <typename T>
void linear_forward(const Linear<T>& l, const T* x, int n, T* y) {
  const int in = l.w.rows, out = l.w.cols;
  for (int i = 0; i < n; ++i) std::copy(l.b.value.begin(), l.b.value.end(), y + static_cast<std::ptrdiff_t>(i) * out);
  kernels::gemm_nn<T>(n, out, in, x, l.w.value.data(), y, true);
}

// Accumulates dW, db and (when dx is non-null) dx += dy * W^T.
template <typename T>
void linear_backward(Linear<T>& l, const T* x, int n, const T* dy, T* dx) {
  const int in = l.w.rows, out = l.w.cols;
  kernels::gemm_tn<T>(in, out, n, x, dy, l.w.grad.data(), true);
  for (int i = 0; i < n; ++i) {
    const T* row = dy + static_cast<std::ptrdiff_t>(i) * out;
    for (int j = 0; j < out; ++j) l.b.grad[j] += row[j];
  }
  if (dx) kernels::gemm_nt<T>(n, in, out, dy, l.w.value.data(), dx, true);
}

template <typename T>
struct NormCache {
  std::vector<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
void layernorm_forward(const LayerNorm<T>& ln, const T* x, int n, int d, T* y, NormCache<T>* cache) {
  if (cache) {
    cache->xhat.resize(static_cast<std::size_t>(n) * d);
    cache->rstd.resize(n);
  }
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<std::ptrdiff_t>(i) * d;
    T mean = 0;
    for (int j = 0; j < d; ++j) mean += xi[j];
    mean /= d;
    T var = 0;
    for (int j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= d;
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    T* yi = y + static_cast<std::ptrdiff_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      const T h = (xi[j] - mean) * rstd;
      if (cache) cache->xhat[static_cast<std::size_t>(i) * d + j] = h;
      yi[j] = h * ln.gain.value[j] + ln.bias.value[j];
    }
    if (cache) cache->rstd[i] = rstd;
  }
}

// dx = LN'(dy); overwrites dx.
template <typename T>
void layernorm_backward(LayerNorm<T>& ln, const NormCache<T>& c, int n, int d, const T* dy, T* dx) {
  for (int i = 0; i < n; ++i) {
    const T* g = dy + static_cast<std::ptrdiff_t>(i) * d;
    const T* h = c.xhat.data() + static_cast<std::ptrdiff_t>(i) * d;
    T mean_dh = 0, mean_dh_h = 0;
    for (int j = 0; j < d; ++j) {
      const T dh = g[j] * ln.gain.value[j];
      mean_dh += dh;
      mean_dh_h += dh * h[j];
      ln.gain.grad[j] += g[j] * h[j];
      ln.bias.grad[j] += g[j];
    }
    mean_dh /= d;
    mean_dh_h /= d;
    T* out = dx + static_cast<std::ptrdiff_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      const T dh = g[j] * ln.gain.value[j];
      out[j] = c.rstd[i] * (dh - mean_dh - h[j] * mean_dh_h);
    }
  }
}

template <typename T>
void make_dropout_mask(std::vector<T>& mask, std::size_t n, double p, Rng* rng) {
  mask.clear();
  if (!rng || p <= 0.0) return;
  mask.resize(n);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask) m = uniform01(*rng) < p ? T(0) : scale;
}

template <typename T>
void apply_mask(std::vector<T>& x, const std::vector<T>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
}

template <typename T>
struct AttnCache {
  std::vector<T> q_in, kv_in, Q, K, V, P, ctx;
};

template <typename T>
struct Dims {
  int batch, tq, tk, d, heads;
  int dh() const { return d / heads; }
};

// Multi-head attention over a padded batch. Keys j >= key_len[b] are masked,
// and with `causal` also keys j > i.
template <typename T>
void attention_forward(const Attention<T>& a, const Dims<T>& dm, const T* q_in, const T* kv_in, const int* key_len,
                       bool causal, T* out, AttnCache<T>& c) {
  const int nq = dm.batch * dm.tq, nk = dm.batch * dm.tk, d = dm.d, dh = dm.dh();
  c.q_in.assign(q_in, q_in + static_cast<std::ptrdiff_t>(nq) * d);
  c.kv_in.assign(kv_in, kv_in + static_cast<std::ptrdiff_t>(nk) * d);
  c.Q.resize(static_cast<std::size_t>(nq) * d);
  c.K.resize(static_cast<std::size_t>(nk) * d);
  c.V.resize(static_cast<std::size_t>(nk) * d);
  linear_forward(a.q, q_in, nq, c.Q.data());
  linear_forward(a.k, kv_in, nk, c.K.data());
  linear_forward(a.v, kv_in, nk, c.V.data());
  c.P.assign(static_cast<std::size_t>(dm.batch) * dm.heads * dm.tq * dm.tk, T(0));
  c.ctx.assign(static_cast<std::size_t>(nq) * d, T(0));
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T neg_inf = -std::numeric_limits<T>::infinity();
  const int jobs = dm.batch * dm.heads;

#pragma omp parallel for schedule(static)
  for (int job = 0; job < jobs; ++job) {
    const int b = job / dm.heads, h = job % dm.heads;
    std::vector<T> qh(static_cast<std::size_t>(dm.tq) * dh), kh(static_cast<std::size_t>(dm.tk) * dh),
        vh(static_cast<std::size_t>(dm.tk) * dh), ch(static_cast<std::size_t>(dm.tq) * dh);
    for (int i = 0; i < dm.tq; ++i) {
      const T* src = c.Q.data() + (static_cast<std::ptrdiff_t>(b) * dm.tq + i) * d + h * dh;
      std::copy(src, src + dh, qh.begin() + static_cast<std::ptrdiff_t>(i) * dh);
    }
    for (int j = 0; j < dm.tk; ++j) {
      const std::ptrdiff_t row = (static_cast<std::ptrdiff_t>(b) * dm.tk + j) * d + h * dh;
      std::copy(c.K.data() + row, c.K.data() + row + dh, kh.begin() + static_cast<std::ptrdiff_t>(j) * dh);
      std::copy(c.V.data() + row, c.V.data() + row + dh, vh.begin() + static_cast<std::ptrdiff_t>(j) * dh);
    }
    T* P = c.P.data() + static_cast<std::ptrdiff_t>(job) * dm.tq * dm.tk;
    kernels::gemm_nt<T>(dm.tq, dm.tk, dh, qh.data(), kh.data(), P, false);
    for (int i = 0; i < dm.tq; ++i) {
      T* row = P + static_cast<std::ptrdiff_t>(i) * dm.tk;
      for (int j = 0; j < dm.tk; ++j) {
        const bool masked = j >= key_len[b] || (causal && j > i);
        row[j] = masked ? neg_inf : row[j] * scale;
      }
    }
    kernels::reference::softmax_rows<T>(dm.tq, dm.tk, P);
    kernels::gemm_nn<T>(dm.tq, dh, dm.tk, P, vh.data(), ch.data(), false);
    for (int i = 0; i < dm.tq; ++i) {
      T* dst = c.ctx.data() + (static_cast<std::ptrdiff_t>(b) * dm.tq + i) * d + h * dh;
      std::copy(ch.begin() + static_cast<std::ptrdiff_t>(i) * dh, ch.begin() + static_cast<std::ptrdiff_t>(i + 1) * dh,
                dst);
    }
  }
  linear_forward(a.o, c.ctx.data(), nq, out);
}

// Accumulates into dq_in and dkv_in (which may alias for self-attention).
template <typename T>
void attention_backward(Attention<T>& a, const Dims<T>& dm, const AttnCache<T>& c, const T* dout, T* dq_in,
                        T* dkv_in) {
  const int nq = dm.batch * dm.tq, nk = dm.batch * dm.tk, d = dm.d, dh = dm.dh();
  std::vector<T> dctx(static_cast<std::size_t>(nq) * d, T(0));
  linear_backward(a.o, c.ctx.data(), nq, dout, dctx.data());
  std::vector<T> dQ(static_cast<std::size_t>(nq) * d, T(0)), dK(static_cast<std::size_t>(nk) * d, T(0)),
      dV(static_cast<std::size_t>(nk) * d, T(0));
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const int jobs = dm.batch * dm.heads;

#pragma omp parallel for schedule(static)
  for (int job = 0; job < jobs; ++job) {
    const int b = job / dm.heads, h = job % dm.heads;
    const std::size_t tq = dm.tq, tk = dm.tk;
    std::vector<T> qh(tq * dh), kh(tk * dh), vh(tk * dh), dch(tq * dh), dvh(tk * dh), dp(tq * tk), dqh(tq * dh),
        dkh(tk * dh);
    for (int i = 0; i < dm.tq; ++i) {
      const std::ptrdiff_t row = (static_cast<std::ptrdiff_t>(b) * dm.tq + i) * d + h * dh;
      std::copy(c.Q.data() + row, c.Q.data() + row + dh, qh.begin() + static_cast<std::ptrdiff_t>(i) * dh);
      std::copy(dctx.data() + row, dctx.data() + row + dh, dch.begin() + static_cast<std::ptrdiff_t>(i) * dh);
    }
    for (int j = 0; j < dm.tk; ++j) {
      const std::ptrdiff_t row = (static_cast<std::ptrdiff_t>(b) * dm.tk + j) * d + h * dh;
      std::copy(c.K.data() + row, c.K.data() + row + dh, kh.begin() + static_cast<std::ptrdiff_t>(j) * dh);
      std::copy(c.V.data() + row, c.V.data() + row + dh, vh.begin() + static_cast<std::ptrdiff_t>(j) * dh);
    }
    const T* P = c.P.data() + static_cast<std::ptrdiff_t>(job) * dm.tq * dm.tk;
    kernels::gemm_tn<T>(dm.tk, dh, dm.tq, P, dch.data(), dvh.data(), false);
    kernels::gemm_nt<T>(dm.tq, dm.tk, dh, dch.data(), vh.data(), dp.data(), false);
    for (int i = 0; i < dm.tq; ++i) {
      const T* p = P + static_cast<std::ptrdiff_t>(i) * dm.tk;
      T* g = dp.data() + static_cast<std::ptrdiff_t>(i) * dm.tk;
      T dot = 0;
      for (int j = 0; j < dm.tk; ++j) dot += p[j] * g[j];
      for (int j = 0; j < dm.tk; ++j) g[j] = p[j] * (g[j] - dot) * scale;
    }
    kernels::gemm_nn<T>(dm.tq, dh, dm.tk, dp.data(), kh.data(), dqh.data(), false);
    kernels::gemm_tn<T>(dm.tk, dh, dm.tq, dp.data(), qh.data(), dkh.data(), false);
    for (int i = 0; i < dm.tq; ++i) {
      T* dst = dQ.data() + (static_cast<std::ptrdiff_t>(b) * dm.tq + i) * d + h * dh;
      const T* src = dqh.data() + static_cast<std::ptrdiff_t>(i) * dh;
      for (int e = 0; e < dh; ++e) dst[e] += src[e];
    }
    for (int j = 0; j < dm.tk; ++j) {
      const std::ptrdiff_t row = (static_cast<std::ptrdiff_t>(b) * dm.tk + j) * d + h * dh;
      for (int e = 0; e < dh; ++e) {
        dK[row + e] += dkh[static_cast<std::size_t>(j) * dh + e];
        dV[row + e] += dvh[static_cast<std::size_t>(j) * dh + e];
      }
    }
  }
  linear_backward(a.q, c.q_in.data(), nq, dQ.data(), dq_in);
  linear_backward(a.k, c.kv_in.data(), nk, dK.data(), dkv_in);
  linear_backward(a.v, c.kv_in.data(), nk, dV.data(), dkv_in);
}

template <typename T>
struct FfnCache {
  std::vector<T> x, hidden, mask, dropped;
};

template <typename T>
void ffn_forward(const FeedForward<T>& f, const T* x, int n, double p, Rng* rng, T* y, FfnCache<T>& c) {
  const int d = f.in.w.rows, hidden = f.in.w.cols;
  c.x.assign(x, x + static_cast<std::ptrdiff_t>(n) * d);
  c.hidden.resize(static_cast<std::size_t>(n) * hidden);
  linear_forward(f.in, x, n, c.hidden.data());
  for (auto& v : c.hidden) v = v > T(0) ? v : T(0);
  make_dropout_mask(c.mask, c.hidden.size(), p, rng);
  c.dropped = c.hidden;
  apply_mask(c.dropped, c.mask);
  linear_forward(f.out, c.dropped.data(), n, y);
}

template <typename T>
void ffn_backward(FeedForward<T>& f, const FfnCache<T>& c, int n, const T* dy, T* dx) {
  const int hidden = f.in.w.cols;
  std::vector<T> dh(static_cast<std::size_t>(n) * hidden, T(0));
  linear_backward(f.out, c.dropped.data(), n, dy, dh.data());
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (!c.mask.empty()) dh[i] *= c.mask[i];
    if (c.hidden[i] <= T(0)) dh[i] = T(0);
  }
  linear_backward(f.in, c.x.data(), n, dh.data(), dx);
}

template <typename T>
struct EncoderCache {
  AttnCache<T> attn;
  std::vector<T> mask1, mask2;
  NormCache<T> ln1, ln2;
  FfnCache<T> ffn;
};

template <typename T>
struct DecoderCache {
  AttnCache<T> self_attn, cross_attn;
  std::vector<T> mask1, mask2, mask3;
  NormCache<T> ln1, ln2, ln3;
  FfnCache<T> ffn;
};

}  // namespace

template <typename T>
struct Transformer<T>::Workspace {
  std::vector<T> src_mask, tgt_mask;
  std::vector<EncoderCache<T>> enc;
  std::vector<DecoderCache<T>> dec;
  std::vector<T> memory;    // encoder output [B*Ts x d]
  std::vector<T> dec_out;   // decoder output [B*Tt x d]
  std::vector<T> logits;    // [B*Tt x V]
};

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config, int src_vocab, int tgt_vocab)
    : config_(config), src_vocab_(src_vocab), tgt_vocab_(tgt_vocab) {
  config_.validate();
  if (src_vocab <= kNumSpecials || tgt_vocab <= kNumSpecials) throw ModelError("vocabularies are too small");
  const int d = config_.d_model, f = config_.ffn_dim;
  src_embed_ = make_param<T>("src_embed", src_vocab, d);
  tgt_embed_ = make_param<T>("tgt_embed", tgt_vocab, d);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    encoder_.push_back({make_attention<T>(p + ".self_attn", d), make_layernorm<T>(p + ".ln1", d),
                        {make_linear<T>(p + ".ffn.in", d, f), make_linear<T>(p + ".ffn.out", f, d)},
                        make_layernorm<T>(p + ".ln2", d)});
  }
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    decoder_.push_back({make_attention<T>(p + ".self_attn", d), make_layernorm<T>(p + ".ln1", d),
                        make_attention<T>(p + ".cross_attn", d), make_layernorm<T>(p + ".ln2", d),
                        {make_linear<T>(p + ".ffn.in", d, f), make_linear<T>(p + ".ffn.out", f, d)},
                        make_layernorm<T>(p + ".ln3", d)});
  }
  generator_ = make_linear<T>("generator", d, tgt_vocab);
  register_params();

  const int max_pos = std::max(config_.max_src_len, config_.max_tgt_len) + 2;
  positions_.assign(max_pos, std::vector<T>(d));
  for (int pos = 0; pos < max_pos; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d);
      positions_[pos][i] = static_cast<T>(std::sin(angle));
      if (i + 1 < d) positions_[pos][i + 1] = static_cast<T>(std::cos(angle));
    }
  }
  for (auto* p : params_) {
    if (p->name.ends_with(".gain")) std::fill(p->value.begin(), p->value.end(), T(1));
  }
}

template <typename T>
Transformer<T>::~Transformer() = default;

template <typename T>
Transformer<T>::Transformer(Transformer&& other) noexcept
    : config_(std::move(other.config_)),
      src_vocab_(other.src_vocab_),
      tgt_vocab_(other.tgt_vocab_),
      src_embed_(std::move(other.src_embed_)),
      tgt_embed_(std::move(other.tgt_embed_)),
      encoder_(std::move(other.encoder_)),
      decoder_(std::move(other.decoder_)),
      generator_(std::move(other.generator_)),
      positions_(std::move(other.positions_)) {
  register_params();
}

template <typename T>
Transformer<T>& Transformer<T>::operator=(Transformer&& other) noexcept {
  config_ = std::move(other.config_);
  src_vocab_ = other.src_vocab_;
  tgt_vocab_ = other.tgt_vocab_;
  src_embed_ = std::move(other.src_embed_);
  tgt_embed_ = std::move(other.tgt_embed_);
  encoder_ = std::move(other.encoder_);
  decoder_ = std::move(other.decoder_);
  generator_ = std::move(other.generator_);
  positions_ = std::move(other.positions_);
  register_params();
  return *this;
}

template <typename T>
void Transformer<T>::register_params() {
  params_.clear();
  auto add_linear = [&](Linear<T>& l) {
    params_.push_back(&l.w);
    params_.push_back(&l.b);
  };
  auto add_norm = [&](LayerNorm<T>& n) {
    params_.push_back(&n.gain);
    params_.push_back(&n.bias);
  };
  auto add_attn = [&](Attention<T>& a) {
    add_linear(a.q);
    add_linear(a.k);
    add_linear(a.v);
    add_linear(a.o);
  };
  params_.push_back(&src_embed_);
  params_.push_back(&tgt_embed_);
  for (auto& l : encoder_) {
    add_attn(l.self_attn);
    add_norm(l.ln1);
    add_linear(l.ffn.in);
    add_linear(l.ffn.out);
    add_norm(l.ln2);
  }
  for (auto& l : decoder_) {
    add_attn(l.self_attn);
    add_norm(l.ln1);
    add_attn(l.cross_attn);
    add_norm(l.ln2);
    add_linear(l.ffn.in);
    add_linear(l.ffn.out);
    add_norm(l.ln3);
  }
  add_linear(generator_);
}

template <typename T>
void Transformer<T>::initialize(Rng& rng) {
  for (auto* p : params_) {
    if (p->name.ends_with(".gain")) {
      std::fill(p->value.begin(), p->value.end(), T(1));
    } else if (p->rows == 1) {
      std::fill(p->value.begin(), p->value.end(), T(0));
    } else if (p == &generator_.w) {
      fill_uniform(*p, std::sqrt(3.0) / config_.d_model, rng);
    } else {
      xavier(*p, rng);
    }
  }
}

template <typename T>
std::vector<Param<T>*> Transformer<T>::parameters() {
  return params_;
}

template <typename T>
std::vector<const Param<T>*> Transformer<T>::parameters() const {
  return {params_.begin(), params_.end()};
}

template <typename T>
std::size_t Transformer<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params_) n += p->size();
  return n;
}

template <typename T>
void Transformer<T>::zero_grad() {
  for (auto* p : params_) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
const std::vector<T>& Transformer<T>::positional_row(int pos) const {
  if (pos < 0 || static_cast<std::size_t>(pos) >= positions_.size()) {
    throw ModelError("position " + std::to_string(pos) + " exceeds the configured maximum length");
  }
  return positions_[pos];
}

template <typename T>
void Transformer<T>::forward(const Batch& batch, Workspace& ws, Rng* rng) const {
  const int d = config_.d_model, B = batch.size, Ts = batch.src_len_max, Tt = batch.tgt_len_max;
  const int ns = B * Ts, nt = B * Tt;
  const double p = config_.dropout;
  const T emb_scale = std::sqrt(static_cast<T>(d));

  auto embed = [&](const Param<T>& table, const std::vector<int>& ids, int T_len, int vocab, std::vector<T>& mask,
                   std::vector<T>& out) {
    out.resize(ids.size() * d);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const int id = ids[r];
      if (id < 0 || id >= vocab) throw ModelError("token id " + std::to_string(id) + " outside the vocabulary");
      const auto& pe = positional_row(static_cast<int>(r % T_len));
      const T* e = table.value.data() + static_cast<std::ptrdiff_t>(id) * d;
      for (int j = 0; j < d; ++j) out[r * d + j] = e[j] * emb_scale + pe[j];
    }
    make_dropout_mask(mask, out.size(), p, rng);
    apply_mask(out, mask);
  };

  std::vector<T> x;
  embed(src_embed_, batch.src, Ts, src_vocab_, ws.src_mask, x);
  ws.enc.resize(encoder_.size());
  std::vector<T> branch(static_cast<std::size_t>(ns) * d), sum(branch.size());
  const Dims<T> enc_dims{B, Ts, Ts, d, config_.heads};
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const auto& L = encoder_[l];
    auto& c = ws.enc[l];
    attention_forward(L.self_attn, enc_dims, x.data(), x.data(), batch.src_len.data(), false, branch.data(), c.attn);
    make_dropout_mask(c.mask1, branch.size(), p, rng);
    apply_mask(branch, c.mask1);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = x[i] + branch[i];
    layernorm_forward(L.ln1, sum.data(), ns, d, x.data(), &c.ln1);
    ffn_forward(L.ffn, x.data(), ns, p, rng, branch.data(), c.ffn);
    make_dropout_mask(c.mask2, branch.size(), p, rng);
    apply_mask(branch, c.mask2);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = x[i] + branch[i];
    layernorm_forward(L.ln2, sum.data(), ns, d, x.data(), &c.ln2);
  }
  ws.memory = std::move(x);

  std::vector<T> y;
  embed(tgt_embed_, batch.tgt_in, Tt, tgt_vocab_, ws.tgt_mask, y);
  ws.dec.resize(decoder_.size());
  branch.assign(static_cast<std::size_t>(nt) * d, T(0));
  sum.assign(branch.size(), T(0));
  const Dims<T> self_dims{B, Tt, Tt, d, config_.heads};
  const Dims<T> cross_dims{B, Tt, Ts, d, config_.heads};
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto& L = decoder_[l];
    auto& c = ws.dec[l];
    attention_forward(L.self_attn, self_dims, y.data(), y.data(), batch.tgt_len.data(), true, branch.data(),
                      c.self_attn);
    make_dropout_mask(c.mask1, branch.size(), p, rng);
    apply_mask(branch, c.mask1);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = y[i] + branch[i];
    layernorm_forward(L.ln1, sum.data(), nt, d, y.data(), &c.ln1);
    attention_forward(L.cross_attn, cross_dims, y.data(), ws.memory.data(), batch.src_len.data(), false,
                      branch.data(), c.cross_attn);
    make_dropout_mask(c.mask2, branch.size(), p, rng);
    apply_mask(branch, c.mask2);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = y[i] + branch[i];
    layernorm_forward(L.ln2, sum.data(), nt, d, y.data(), &c.ln2);
    ffn_forward(L.ffn, y.data(), nt, p, rng, branch.data(), c.ffn);
    make_dropout_mask(c.mask3, branch.size(), p, rng);
    apply_mask(branch, c.mask3);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = y[i] + branch[i];
    layernorm_forward(L.ln3, sum.data(), nt, d, y.data(), &c.ln3);
  }
  ws.dec_out = std::move(y);
  ws.logits.resize(static_cast<std::size_t>(nt) * tgt_vocab_);
  linear_forward(generator_, ws.dec_out.data(), nt, ws.logits.data());
}

// Converts logits to (p - q) / tokens in place when want_grad.
template <typename T>
LossStats Transformer<T>::loss_and_grad(const Batch& batch, Workspace& ws, bool want_grad) {
  const int V = tgt_vocab_, nt = batch.size * batch.tgt_len_max;
  const double eps = config_.label_smoothing;
  const double off = eps / (V - 2);
  LossStats stats;
  stats.tokens = batch.target_tokens();
  const T inv_tokens = T(1) / static_cast<T>(std::max(stats.tokens, 1));
  for (int r = 0; r < nt; ++r) {
    T* z = ws.logits.data() + static_cast<std::ptrdiff_t>(r) * V;
    const int gold = batch.tgt_out[r];
    if (gold == kPad) {
      if (want_grad) std::fill(z, z + V, T(0));
      continue;
    }
    T mx = z[0];
    for (int v = 1; v < V; ++v) mx = std::max(mx, z[v]);
    double denom = 0;
    for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(z[v] - mx));
    const double log_denom = std::log(denom);
    double loss = 0;
    for (int v = 0; v < V; ++v) {
      if (v == kPad) continue;
      const double q = v == gold ? 1.0 - eps : off;
      if (q > 0) loss -= q * (static_cast<double>(z[v] - mx) - log_denom);
    }
    stats.loss_sum += loss;
    if (want_grad) {
      for (int v = 0; v < V; ++v) {
        const double prob = std::exp(static_cast<double>(z[v] - mx) - log_denom);
        const double q = v == kPad ? 0.0 : (v == gold ? 1.0 - eps : off);
        z[v] = static_cast<T>(prob - q) * inv_tokens;
      }
    }
  }
  return stats;
}

template <typename T>
LossStats Transformer<T>::loss_only(const Batch& batch, Workspace& ws) const {
  return const_cast<Transformer<T>*>(this)->loss_and_grad(batch, ws, false);
}

template <typename T>
void Transformer<T>::backward(const Batch& batch, Workspace& ws) {
  const int d = config_.d_model, B = batch.size, Ts = batch.src_len_max, Tt = batch.tgt_len_max;
  const int ns = B * Ts, nt = B * Tt;
  const T emb_scale = std::sqrt(static_cast<T>(d));

  std::vector<T> dy(static_cast<std::size_t>(nt) * d, T(0));
  linear_backward(generator_, ws.dec_out.data(), nt, ws.logits.data(), dy.data());

  std::vector<T> dmem(static_cast<std::size_t>(ns) * d, T(0));
  std::vector<T> dsum(dy.size()), dbranch(dy.size());
  const Dims<T> self_dims{B, Tt, Tt, d, config_.heads};
  const Dims<T> cross_dims{B, Tt, Ts, d, config_.heads};
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    auto& L = decoder_[l];
    auto& c = ws.dec[l];
    // y3 = LN3(y2 + drop(ffn(y2)))
    layernorm_backward(L.ln3, c.ln3, nt, d, dy.data(), dsum.data());
    dy = dsum;
    dbranch = dsum;
    apply_mask(dbranch, c.mask3);
    ffn_backward(L.ffn, c.ffn, nt, dbranch.data(), dy.data());
    // y2 = LN2(y1 + drop(cross(y1, mem)))
    layernorm_backward(L.ln2, c.ln2, nt, d, dy.data(), dsum.data());
    dy = dsum;
    dbranch = dsum;
    apply_mask(dbranch, c.mask2);
    attention_backward(L.cross_attn, cross_dims, c.cross_attn, dbranch.data(), dy.data(), dmem.data());
    // y1 = LN1(y + drop(self(y)))
    layernorm_backward(L.ln1, c.ln1, nt, d, dy.data(), dsum.data());
    dy = dsum;
    dbranch = dsum;
    apply_mask(dbranch, c.mask1);
    attention_backward(L.self_attn, self_dims, c.self_attn, dbranch.data(), dy.data(), dy.data());
  }
  apply_mask(dy, ws.tgt_mask);
  for (int r = 0; r < nt; ++r) {
    T* g = tgt_embed_.grad.data() + static_cast<std::ptrdiff_t>(batch.tgt_in[r]) * d;
    for (int j = 0; j < d; ++j) g[j] += dy[static_cast<std::size_t>(r) * d + j] * emb_scale;
  }

  std::vector<T> dx = std::move(dmem);
  dsum.assign(dx.size(), T(0));
  dbranch.assign(dx.size(), T(0));
  const Dims<T> enc_dims{B, Ts, Ts, d, config_.heads};
  for (std::size_t l = encoder_.size(); l-- > 0;) {
    auto& L = encoder_[l];
    auto& c = ws.enc[l];
    layernorm_backward(L.ln2, c.ln2, ns, d, dx.data(), dsum.data());
    dx = dsum;
    dbranch = dsum;
    apply_mask(dbranch, c.mask2);
    ffn_backward(L.ffn, c.ffn, ns, dbranch.data(), dx.data());
    layernorm_backward(L.ln1, c.ln1, ns, d, dx.data(), dsum.data());
    dx = dsum;
    dbranch = dsum;
    apply_mask(dbranch, c.mask1);
    attention_backward(L.self_attn, enc_dims, c.attn, dbranch.data(), dx.data(), dx.data());
  }
  apply_mask(dx, ws.src_mask);
  for (int r = 0; r < ns; ++r) {
    T* g = src_embed_.grad.data() + static_cast<std::ptrdiff_t>(batch.src[r]) * d;
    for (int j = 0; j < d; ++j) g[j] += dx[static_cast<std::size_t>(r) * d + j] * emb_scale;
  }
}

template <typename T>
LossStats Transformer<T>::forward_backward(const Batch& batch, Rng* dropout_rng) {
  Workspace ws;
  forward(batch, ws, config_.dropout > 0 ? dropout_rng : nullptr);
  LossStats stats = loss_and_grad(batch, ws, true);
  backward(batch, ws);
  return stats;
}

template <typename T>
LossStats Transformer<T>::compute_loss(const Batch& batch) const {
  Workspace ws;
  forward(batch, ws, nullptr);
  return loss_only(batch, ws);
}

template <typename T>
std::vector<T> Transformer<T>::logits(const Batch& batch) const {
  Workspace ws;
  forward(batch, ws, nullptr);
  return std::move(ws.logits);
}

template <typename T>
std::vector<std::vector<T>> Transformer<T>::decoder_self_attention(const Batch& batch) const {
  Workspace ws;
  forward(batch, ws, nullptr);
  std::vector<std::vector<T>> out;
  for (auto& c : ws.dec) out.push_back(std::move(c.self_attn.P));
  return out;
}

template <typename T>
typename Transformer<T>::Memory Transformer<T>::encode(std::span<const int> src) const {
  if (src.empty()) throw ModelError("cannot encode an empty source sequence");
  if (static_cast<int>(src.size()) > config_.max_src_len) {
    throw ModelError("source sequence longer than max_src_len");
  }
  std::vector<EncodedPair> one{{std::vector<int>(src.begin(), src.end()), {kBos, kEos}}};
  Batch b = collate(one);
  // Only the encoder half is needed; run it through a batch with a
  // single-step target and keep the memory.
  Workspace ws;
  forward(b, ws, nullptr);
  Memory m;
  m.length = static_cast<int>(src.size());
  m.states = std::move(ws.memory);
  const int d = config_.d_model;
  for (const auto& L : decoder_) {
    std::vector<T> k(static_cast<std::size_t>(m.length) * d), v(k.size());
    linear_forward(L.cross_attn.k, m.states.data(), m.length, k.data());
    linear_forward(L.cross_attn.v, m.states.data(), m.length, v.data());
    m.cross_keys.push_back(std::move(k));
    m.cross_values.push_back(std::move(v));
  }
  return m;
}

template <typename T>
typename Transformer<T>::DecoderState Transformer<T>::start() const {
  DecoderState s;
  s.self_keys.resize(decoder_.size());
  s.self_values.resize(decoder_.size());
  return s;
}

namespace {

// Single-query attention over `len` cached keys/values ([len x d]).
template <typename T>
void attend_one(const T* q, const T* keys, const T* values, int len, int d, int heads, T* ctx) {
  const int dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<T> scores(len);
  for (int h = 0; h < heads; ++h) {
    for (int j = 0; j < len; ++j) {
      T s = 0;
      const T* k = keys + static_cast<std::ptrdiff_t>(j) * d + h * dh;
      for (int e = 0; e < dh; ++e) s += q[h * dh + e] * k[e];
      scores[j] = s * scale;
    }
    kernels::reference::softmax_rows<T>(1, len, scores.data());
    for (int e = 0; e < dh; ++e) ctx[h * dh + e] = 0;
    for (int j = 0; j < len; ++j) {
      const T* v = values + static_cast<std::ptrdiff_t>(j) * d + h * dh;
      for (int e = 0; e < dh; ++e) ctx[h * dh + e] += scores[j] * v[e];
    }
  }
}

}  // namespace

template <typename T>
void Transformer<T>::step(const Memory& memory, DecoderState& state, int token, std::vector<T>& log_probs) const {
  if (token < 0 || token >= tgt_vocab_) throw ModelError("token id outside the target vocabulary");
  const int d = config_.d_model, f = config_.ffn_dim, pos = state.position;
  const T emb_scale = std::sqrt(static_cast<T>(d));
  const auto& pe = positional_row(pos);
  std::vector<T> x(d), q(d), k(d), v(d), ctx(d), branch(d), sum(d), hidden(f);
  for (int j = 0; j < d; ++j) x[j] = tgt_embed_.value[static_cast<std::size_t>(token) * d + j] * emb_scale + pe[j];

  auto residual_norm = [&](const LayerNorm<T>& ln) {
    for (int j = 0; j < d; ++j) sum[j] = x[j] + branch[j];
    layernorm_forward<T>(ln, sum.data(), 1, d, x.data(), nullptr);
  };

  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto& L = decoder_[l];
    linear_forward(L.self_attn.q, x.data(), 1, q.data());
    linear_forward(L.self_attn.k, x.data(), 1, k.data());
    linear_forward(L.self_attn.v, x.data(), 1, v.data());
    auto& keys = state.self_keys[l];
    auto& values = state.self_values[l];
    keys.insert(keys.end(), k.begin(), k.end());
    values.insert(values.end(), v.begin(), v.end());
    attend_one(q.data(), keys.data(), values.data(), pos + 1, d, config_.heads, ctx.data());
    linear_forward(L.self_attn.o, ctx.data(), 1, branch.data());
    residual_norm(L.ln1);

    linear_forward(L.cross_attn.q, x.data(), 1, q.data());
    attend_one(q.data(), memory.cross_keys[l].data(), memory.cross_values[l].data(), memory.length, d,
               config_.heads, ctx.data());
    linear_forward(L.cross_attn.o, ctx.data(), 1, branch.data());
    residual_norm(L.ln2);

    linear_forward(L.ffn.in, x.data(), 1, hidden.data());
    for (auto& h : hidden) h = h > T(0) ? h : T(0);
    linear_forward(L.ffn.out, hidden.data(), 1, branch.data());
    residual_norm(L.ln3);
  }
  log_probs.resize(tgt_vocab_);
  linear_forward(generator_, x.data(), 1, log_probs.data());
  T mx = log_probs[0];
  for (T z : log_probs) mx = std::max(mx, z);
  double denom = 0;
  for (T z : log_probs) denom += std::exp(static_cast<double>(z - mx));
  const T log_denom = static_cast<T>(std::log(denom));
  for (auto& z : log_probs) z = z - mx - log_denom;
  ++state.position;
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace unifront
