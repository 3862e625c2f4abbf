#pragma once

// Dense building blocks shared by the encoders and the classifier: softmax,
// scaled dot-product attention, layer norm, multi-head attention and the
// pre-norm transformer block, each with an analytic backward pass.
//
// Conventions: sequences are L x d matrices (one row per position), linear
// maps act on the right (y = x W + b), biases are 1 x n matrices.

#include "memesent/random.hpp"
#include "memesent/types.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace memesent::nn {

template <typename Scalar>
struct NamedTensor {
  std::string name;
  MatrixX<Scalar>* value;
};

template <typename Scalar>
struct ConstNamedTensor {
  std::string name;
  const MatrixX<Scalar>* value;
};

/// Row-wise numerically stable softmax.
template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& x) {
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar m = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = logits.maxCoeff();
  VectorX<Scalar> e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
void add_bias(MatrixX<Scalar>& x, const MatrixX<Scalar>& bias) {
  x.rowwise() += bias.row(0);
}

template <typename Scalar>
MatrixX<Scalar> linear(const MatrixX<Scalar>& x, const MatrixX<Scalar>& w, const MatrixX<Scalar>& b) {
  MatrixX<Scalar> y = x * w;
  add_bias(y, b);
  return y;
}

/// Fills `m` with N(0, stddev^2) draws in row-major order.
template <typename Scalar>
void fill_normal(MatrixX<Scalar>& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(stddev * rng.normal());
}

// ---------------------------------------------------------------------------
// Scaled dot-product attention

template <typename Scalar>
struct AttentionCache {
  MatrixX<Scalar> probs;  // L x M
};

/// softmax(Q K^T / sqrt(dk)) V. With `causal`, position i attends to j <= i only.
template <typename Scalar>
MatrixX<Scalar> attention(const MatrixX<Scalar>& q, const MatrixX<Scalar>& k, const MatrixX<Scalar>& v,
                          bool causal = false, AttentionCache<Scalar>* cache = nullptr) {
  if (q.cols() != k.cols()) throw InputError("attention: Q and K widths differ");
  if (k.rows() != v.rows()) throw InputError("attention: K and V lengths differ");
  if (k.rows() == 0) throw InputError("attention: empty key sequence");
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  MatrixX<Scalar> scores = (q * k.transpose()) * scale;
  if (causal) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < scores.cols(); ++j) scores(i, j) = -std::numeric_limits<Scalar>::infinity();
    }
  }
  MatrixX<Scalar> probs = softmax_rows(scores);
  MatrixX<Scalar> out = probs * v;
  if (cache != nullptr) cache->probs = std::move(probs);
  return out;
}

template <typename Scalar>
struct AttentionGrads {
  MatrixX<Scalar> dq, dk, dv;
};

template <typename Scalar>
AttentionGrads<Scalar> attention_backward(const MatrixX<Scalar>& q, const MatrixX<Scalar>& k,
                                          const MatrixX<Scalar>& v, const AttentionCache<Scalar>& cache,
                                          const MatrixX<Scalar>& dout) {
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  const auto& p = cache.probs;
  AttentionGrads<Scalar> g;
  g.dv = p.transpose() * dout;
  const MatrixX<Scalar> dp = dout * v.transpose();
  // softmax Jacobian per row: ds = p * (dp - <dp, p>)
  const VectorX<Scalar> inner = (dp.array() * p.array()).rowwise().sum();
  MatrixX<Scalar> ds = p.array() * (dp.colwise() - inner).array();
  ds *= scale;
  g.dq = ds * k;
  g.dk = ds.transpose() * q;
  return g;
}

// ---------------------------------------------------------------------------
// Layer norm over each row

template <typename Scalar>
struct LayerNormCache {
  MatrixX<Scalar> xhat;
  VectorX<Scalar> inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
MatrixX<Scalar> layer_norm(const MatrixX<Scalar>& x, const MatrixX<Scalar>& gamma, const MatrixX<Scalar>& beta,
                           LayerNormCache<Scalar>* cache = nullptr) {
  const auto d = static_cast<Scalar>(x.cols());
  const VectorX<Scalar> mean = x.rowwise().sum() / d;
  MatrixX<Scalar> centered = x.colwise() - mean;
  const VectorX<Scalar> var = centered.array().square().rowwise().sum() / d;
  const VectorX<Scalar> inv_std = (var.array() + Scalar(kLayerNormEps)).rsqrt();
  MatrixX<Scalar> xhat = centered.array().colwise() * inv_std.array();
  MatrixX<Scalar> y = xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

/// Returns dx; accumulates into dgamma / dbeta.
template <typename Scalar>
MatrixX<Scalar> layer_norm_backward(const LayerNormCache<Scalar>& cache, const MatrixX<Scalar>& gamma,
                                    const MatrixX<Scalar>& dy, MatrixX<Scalar>& dgamma, MatrixX<Scalar>& dbeta) {
  const auto d = static_cast<Scalar>(dy.cols());
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const MatrixX<Scalar> dxhat = dy.array().rowwise() * gamma.row(0).array();
  const VectorX<Scalar> mean_dxhat = dxhat.rowwise().sum() / d;
  const VectorX<Scalar> mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum() / d;
  MatrixX<Scalar> dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx -= (cache.xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

// ---------------------------------------------------------------------------
// GELU (tanh approximation)

template <typename Scalar>
Scalar gelu(Scalar x) {
  const Scalar c = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  return Scalar(0.5) * x * (Scalar(1) + std::tanh(c * (x + Scalar(0.044715) * x * x * x)));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  const Scalar c = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  const Scalar t = std::tanh(c * (x + Scalar(0.044715) * x * x * x));
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * x * (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3 * 0.044715) * x * x);
}

// ---------------------------------------------------------------------------
// Multi-head attention

template <typename Scalar>
struct MultiHeadAttentionParams {
  int n_heads = 1;
  MatrixX<Scalar> wq, wk, wv, wo;  // d x d
  MatrixX<Scalar> bq, bk, bv, bo;  // 1 x d

  static MultiHeadAttentionParams zeros(int d, int n_heads) {
    if (n_heads < 1 || d % n_heads != 0) throw InputError("attention: d_model must be divisible by n_heads");
    MultiHeadAttentionParams p;
    p.n_heads = n_heads;
    for (auto* m : {&p.wq, &p.wk, &p.wv, &p.wo}) *m = MatrixX<Scalar>::Zero(d, d);
    for (auto* m : {&p.bq, &p.bk, &p.bv, &p.bo}) *m = MatrixX<Scalar>::Zero(1, d);
    return p;
  }

  static MultiHeadAttentionParams random(int d, int n_heads, Rng& rng) {
    auto p = zeros(d, n_heads);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto* m : {&p.wq, &p.wk, &p.wv, &p.wo}) fill_normal(*m, rng, s);
    return p;
  }

  int width() const { return static_cast<int>(wq.rows()); }

  std::vector<NamedTensor<Scalar>> tensors(const std::string& prefix) {
    return {{prefix + "wq", &wq}, {prefix + "wk", &wk}, {prefix + "wv", &wv}, {prefix + "wo", &wo},
            {prefix + "bq", &bq}, {prefix + "bk", &bk}, {prefix + "bv", &bv}, {prefix + "bo", &bo}};
  }
};

template <typename Scalar>
struct MultiHeadAttentionCache {
  MatrixX<Scalar> q, k, v, concat;
  std::vector<AttentionCache<Scalar>> heads;
};

/// Queries from `xq`, keys and values from `xkv` (pass the same matrix for
/// self-attention).
template <typename Scalar>
MatrixX<Scalar> multi_head_attention(const MatrixX<Scalar>& xq, const MatrixX<Scalar>& xkv,
                                     const MultiHeadAttentionParams<Scalar>& p, bool causal = false,
                                     MultiHeadAttentionCache<Scalar>* cache = nullptr) {
  const int d = p.width();
  if (xq.cols() != d || xkv.cols() != d) throw InputError("multi_head_attention: width mismatch");
  const int dh = d / p.n_heads;
  MatrixX<Scalar> q = linear(xq, p.wq, p.bq);
  MatrixX<Scalar> k = linear(xkv, p.wk, p.bk);
  MatrixX<Scalar> v = linear(xkv, p.wv, p.bv);
  MatrixX<Scalar> concat(xq.rows(), d);
  std::vector<AttentionCache<Scalar>> head_caches(static_cast<std::size_t>(p.n_heads));
  for (int h = 0; h < p.n_heads; ++h) {
    const MatrixX<Scalar> qh = q.middleCols(h * dh, dh);
    const MatrixX<Scalar> kh = k.middleCols(h * dh, dh);
    const MatrixX<Scalar> vh = v.middleCols(h * dh, dh);
    concat.middleCols(h * dh, dh) = attention(qh, kh, vh, causal, &head_caches[static_cast<std::size_t>(h)]);
  }
  MatrixX<Scalar> out = linear(concat, p.wo, p.bo);
  if (cache != nullptr) {
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->heads = std::move(head_caches);
  }
  return out;
}

template <typename Scalar>
struct MultiHeadAttentionInputGrads {
  MatrixX<Scalar> dxq, dxkv;
};

/// Accumulates parameter gradients into `grads`.
template <typename Scalar>
MultiHeadAttentionInputGrads<Scalar> multi_head_attention_backward(
    const MatrixX<Scalar>& xq, const MatrixX<Scalar>& xkv, const MultiHeadAttentionParams<Scalar>& p,
    const MultiHeadAttentionCache<Scalar>& cache, const MatrixX<Scalar>& dout,
    MultiHeadAttentionParams<Scalar>& grads) {
  const int d = p.width();
  const int dh = d / p.n_heads;
  grads.wo += cache.concat.transpose() * dout;
  grads.bo += dout.colwise().sum();
  const MatrixX<Scalar> dconcat = dout * p.wo.transpose();
  MatrixX<Scalar> dq(cache.q.rows(), d), dk(cache.k.rows(), d), dv(cache.v.rows(), d);
  for (int h = 0; h < p.n_heads; ++h) {
    const MatrixX<Scalar> qh = cache.q.middleCols(h * dh, dh);
    const MatrixX<Scalar> kh = cache.k.middleCols(h * dh, dh);
    const MatrixX<Scalar> vh = cache.v.middleCols(h * dh, dh);
    const MatrixX<Scalar> dout_h = dconcat.middleCols(h * dh, dh);
    auto g = attention_backward(qh, kh, vh, cache.heads[static_cast<std::size_t>(h)], dout_h);
    dq.middleCols(h * dh, dh) = g.dq;
    dk.middleCols(h * dh, dh) = g.dk;
    dv.middleCols(h * dh, dh) = g.dv;
  }
  grads.wq += xq.transpose() * dq;
  grads.wk += xkv.transpose() * dk;
  grads.wv += xkv.transpose() * dv;
  grads.bq += dq.colwise().sum();
  grads.bk += dk.colwise().sum();
  grads.bv += dv.colwise().sum();
  MultiHeadAttentionInputGrads<Scalar> out;
  out.dxq = dq * p.wq.transpose();
  out.dxkv = dk * p.wk.transpose() + dv * p.wv.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Pre-norm transformer block: y = x1 + FFN(LN2(x1)), x1 = x + MHA(LN1(x))

template <typename Scalar>
struct TransformerBlockParams {
  MatrixX<Scalar> ln1_gamma, ln1_beta;
  MultiHeadAttentionParams<Scalar> attn;
  MatrixX<Scalar> ln2_gamma, ln2_beta;
  MatrixX<Scalar> w1, b1;  // d x f, 1 x f
  MatrixX<Scalar> w2, b2;  // f x d, 1 x d

  /// All-zero tensors with the given shape (gradient accumulators).
  static TransformerBlockParams zeros(int d, int n_heads, int ffn) {
    TransformerBlockParams p;
    p.attn = MultiHeadAttentionParams<Scalar>::zeros(d, n_heads);
    p.ln1_gamma = p.ln1_beta = p.ln2_gamma = p.ln2_beta = MatrixX<Scalar>::Zero(1, d);
    p.w1 = MatrixX<Scalar>::Zero(d, ffn);
    p.b1 = MatrixX<Scalar>::Zero(1, ffn);
    p.w2 = MatrixX<Scalar>::Zero(ffn, d);
    p.b2 = MatrixX<Scalar>::Zero(1, d);
    return p;
  }

  static TransformerBlockParams random(int d, int n_heads, int ffn, Rng& rng) {
    auto p = zeros(d, n_heads, ffn);
    p.attn = MultiHeadAttentionParams<Scalar>::random(d, n_heads, rng);
    p.ln1_gamma.setOnes();
    p.ln2_gamma.setOnes();
    fill_normal(p.w1, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    fill_normal(p.w2, rng, 1.0 / std::sqrt(static_cast<double>(ffn)));
    return p;
  }

  int width() const { return attn.width(); }

  std::vector<NamedTensor<Scalar>> tensors(const std::string& prefix = "") {
    std::vector<NamedTensor<Scalar>> t = {{prefix + "ln1.gamma", &ln1_gamma}, {prefix + "ln1.beta", &ln1_beta}};
    for (auto& a : attn.tensors(prefix + "attn.")) t.push_back(a);
    t.insert(t.end(), {{prefix + "ln2.gamma", &ln2_gamma},
                       {prefix + "ln2.beta", &ln2_beta},
                       {prefix + "ffn.w1", &w1},
                       {prefix + "ffn.b1", &b1},
                       {prefix + "ffn.w2", &w2},
                       {prefix + "ffn.b2", &b2}});
    return t;
  }
};

template <typename Scalar>
struct TransformerBlockCache {
  MatrixX<Scalar> x, a1, x1, a2, pre_act, act;
  LayerNormCache<Scalar> ln1, ln2;
  MultiHeadAttentionCache<Scalar> attn;
};

template <typename Scalar>
MatrixX<Scalar> transformer_block(const MatrixX<Scalar>& x, const TransformerBlockParams<Scalar>& p,
                                  TransformerBlockCache<Scalar>* cache = nullptr) {
  if (x.cols() != p.width()) {
    throw InputError("transformer_block: input width " + std::to_string(x.cols()) + " != model width " +
                     std::to_string(p.width()));
  }
  LayerNormCache<Scalar> ln1, ln2;
  MultiHeadAttentionCache<Scalar> attn_cache;
  MatrixX<Scalar> a1 = layer_norm(x, p.ln1_gamma, p.ln1_beta, &ln1);
  MatrixX<Scalar> x1 = x + multi_head_attention(a1, a1, p.attn, false, &attn_cache);
  MatrixX<Scalar> a2 = layer_norm(x1, p.ln2_gamma, p.ln2_beta, &ln2);
  MatrixX<Scalar> pre_act = linear(a2, p.w1, p.b1);
  MatrixX<Scalar> act = pre_act.unaryExpr([](Scalar v) { return gelu(v); });
  MatrixX<Scalar> y = x1 + linear(act, p.w2, p.b2);
  if (cache != nullptr) {
    cache->x = x;
    cache->a1 = std::move(a1);
    cache->x1 = std::move(x1);
    cache->a2 = std::move(a2);
    cache->pre_act = std::move(pre_act);
    cache->act = std::move(act);
    cache->ln1 = std::move(ln1);
    cache->ln2 = std::move(ln2);
    cache->attn = std::move(attn_cache);
  }
  return y;
}

/// Returns dL/dx and accumulates parameter gradients into `grads`.
template <typename Scalar>
MatrixX<Scalar> transformer_block_backward(const TransformerBlockParams<Scalar>& p,
                                           const TransformerBlockCache<Scalar>& c, const MatrixX<Scalar>& dy,
                                           TransformerBlockParams<Scalar>& grads) {
  // y = x1 + act W2 + b2
  grads.w2 += c.act.transpose() * dy;
  grads.b2 += dy.colwise().sum();
  MatrixX<Scalar> dact = dy * p.w2.transpose();
  MatrixX<Scalar> dpre = dact.array() * c.pre_act.unaryExpr([](Scalar v) { return gelu_derivative(v); }).array();
  grads.w1 += c.a2.transpose() * dpre;
  grads.b1 += dpre.colwise().sum();
  MatrixX<Scalar> da2 = dpre * p.w1.transpose();
  MatrixX<Scalar> dx1 = dy + layer_norm_backward(c.ln2, p.ln2_gamma, da2, grads.ln2_gamma, grads.ln2_beta);
  // x1 = x + MHA(a1, a1)
  auto dattn = multi_head_attention_backward(c.a1, c.a1, p.attn, c.attn, dx1, grads.attn);
  MatrixX<Scalar> da1 = dattn.dxq + dattn.dxkv;
  return dx1 + layer_norm_backward(c.ln1, p.ln1_gamma, da1, grads.ln1_gamma, grads.ln1_beta);
}

}  // namespace memesent::nn
