#pragma once

// LSTM and bidirectional LSTM over L x d sequences with backpropagation
// through time. Gate blocks are laid out [input | forget | cell | output]
// along the 4H columns of W, U and b.

#include "memesent/nn.hpp"
#include "memesent/random.hpp"
#include "memesent/types.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace memesent::model {

template <typename Scalar>
Scalar logistic(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
struct LstmParams {
  MatrixX<Scalar> w;  // d_in x 4H
  MatrixX<Scalar> u;  // H x 4H
  MatrixX<Scalar> b;  // 1 x 4H

  static LstmParams zeros(int d_in, int hidden) {
    return {MatrixX<Scalar>::Zero(d_in, 4 * hidden), MatrixX<Scalar>::Zero(hidden, 4 * hidden),
            MatrixX<Scalar>::Zero(1, 4 * hidden)};
  }

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1.
  static LstmParams random(int d_in, int hidden, Rng& rng) {
    auto p = zeros(d_in, hidden);
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto* m : {&p.w, &p.u}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<Scalar>(rng.uniform(-a, a));
    }
    p.b.middleCols(hidden, hidden).setOnes();
    return p;
  }

  int hidden() const { return static_cast<int>(u.rows()); }
  int input_width() const { return static_cast<int>(w.rows()); }

  std::vector<nn::NamedTensor<Scalar>> tensors(const std::string& prefix) {
    return {{prefix + "w", &w}, {prefix + "u", &u}, {prefix + "b", &b}};
  }
};

template <typename Scalar>
struct LstmStep {
  RowVectorX<Scalar> h, c;
};

/// One step: i, f, o = logistic(xW + hU + b) blocks, g = tanh(block),
/// c' = f*c + i*g, h' = o*tanh(c').
template <typename Scalar>
LstmStep<Scalar> lstm_cell(const RowVectorX<Scalar>& x, const RowVectorX<Scalar>& h, const RowVectorX<Scalar>& c,
                           const LstmParams<Scalar>& p) {
  const int hid = p.hidden();
  if (x.size() != p.input_width() || h.size() != hid || c.size() != hid) {
    throw InputError("lstm_cell: shape mismatch");
  }
  const RowVectorX<Scalar> z = x * p.w + h * p.u + p.b.row(0);
  const auto i = z.segment(0, hid).unaryExpr([](Scalar v) { return logistic(v); });
  const auto f = z.segment(hid, hid).unaryExpr([](Scalar v) { return logistic(v); });
  const auto g = z.segment(2 * hid, hid).array().tanh();
  const auto o = z.segment(3 * hid, hid).unaryExpr([](Scalar v) { return logistic(v); });
  LstmStep<Scalar> out;
  out.c = (f.array() * c.array() + i.array() * g).matrix();
  out.h = (o.array() * out.c.array().tanh()).matrix();
  return out;
}

template <typename Scalar>
struct LstmCellGrads {
  RowVectorX<Scalar> dx, dh, dc;
};

/// Gradients of one lstm_cell step given dL/dh' and dL/dc'. Parameter
/// gradients are accumulated into `grads`.
template <typename Scalar>
LstmCellGrads<Scalar> lstm_cell_backward(const RowVectorX<Scalar>& x, const RowVectorX<Scalar>& h,
                                         const RowVectorX<Scalar>& c, const LstmParams<Scalar>& p,
                                         const RowVectorX<Scalar>& dh_out, const RowVectorX<Scalar>& dc_out,
                                         LstmParams<Scalar>& grads) {
  const int hid = p.hidden();
  const RowVectorX<Scalar> z = x * p.w + h * p.u + p.b.row(0);
  using Arr = Eigen::Array<Scalar, 1, Eigen::Dynamic>;
  const Arr i = z.segment(0, hid).unaryExpr([](Scalar v) { return logistic(v); }).array();
  const Arr f = z.segment(hid, hid).unaryExpr([](Scalar v) { return logistic(v); }).array();
  const Arr g = z.segment(2 * hid, hid).array().tanh();
  const Arr o = z.segment(3 * hid, hid).unaryExpr([](Scalar v) { return logistic(v); }).array();
  const Arr tc = (f * c.array() + i * g).tanh();
  const Arr dc = dc_out.array() + dh_out.array() * o * (Scalar(1) - tc * tc);
  RowVectorX<Scalar> dz(4 * hid);
  dz.segment(0, hid) = (dc * g * i * (Scalar(1) - i)).matrix();
  dz.segment(hid, hid) = (dc * c.array() * f * (Scalar(1) - f)).matrix();
  dz.segment(2 * hid, hid) = (dc * i * (Scalar(1) - g * g)).matrix();
  dz.segment(3 * hid, hid) = (dh_out.array() * tc * o * (Scalar(1) - o)).matrix();
  grads.w += x.transpose() * dz;
  grads.u += h.transpose() * dz;
  grads.b += dz;
  return {dz * p.w.transpose(), dz * p.u.transpose(), (dc * f).matrix()};
}

template <typename Scalar>
struct LstmSequenceCache {
  MatrixX<Scalar> gates;  // L x 4H, post-activation [i | f | g | o]
  MatrixX<Scalar> c;      // L x H
  MatrixX<Scalar> h;      // L x H
};

/// Hidden states for every position, starting from zero state.
template <typename Scalar>
MatrixX<Scalar> lstm_forward(const MatrixX<Scalar>& seq, const LstmParams<Scalar>& p,
                             LstmSequenceCache<Scalar>* cache = nullptr) {
  const int hid = p.hidden();
  const Eigen::Index len = seq.rows();
  if (seq.cols() != p.input_width()) {
    throw InputError("lstm: input width " + std::to_string(seq.cols()) + " != " + std::to_string(p.input_width()));
  }
  // Input contribution for all steps at once.
  MatrixX<Scalar> pre = seq * p.w;
  pre.rowwise() += p.b.row(0);
  MatrixX<Scalar> gates(len, 4 * hid), cs(len, hid), hs(len, hid);
  RowVectorX<Scalar> h = RowVectorX<Scalar>::Zero(hid);
  RowVectorX<Scalar> c = RowVectorX<Scalar>::Zero(hid);
  for (Eigen::Index t = 0; t < len; ++t) {
    RowVectorX<Scalar> z = pre.row(t) + h * p.u;
    for (int k = 0; k < hid; ++k) {
      z(k) = logistic(z(k));
      z(hid + k) = logistic(z(hid + k));
      z(2 * hid + k) = std::tanh(z(2 * hid + k));
      z(3 * hid + k) = logistic(z(3 * hid + k));
    }
    c = (z.segment(hid, hid).array() * c.array() + z.segment(0, hid).array() * z.segment(2 * hid, hid).array()).matrix();
    h = (z.segment(3 * hid, hid).array() * c.array().tanh()).matrix();
    gates.row(t) = z;
    cs.row(t) = c;
    hs.row(t) = h;
  }
  if (cache != nullptr) {
    cache->gates = std::move(gates);
    cache->c = std::move(cs);
    cache->h = hs;
  }
  return hs;
}

/// Backpropagation through time. `dh` is dL/dh_t for every position (L x H).
/// Returns dL/dseq and accumulates parameter gradients into `grads`.
template <typename Scalar>
MatrixX<Scalar> lstm_backward(const MatrixX<Scalar>& seq, const LstmParams<Scalar>& p,
                              const LstmSequenceCache<Scalar>& cache, const MatrixX<Scalar>& dh,
                              LstmParams<Scalar>& grads) {
  const int hid = p.hidden();
  const Eigen::Index len = seq.rows();
  MatrixX<Scalar> dz(len, 4 * hid);
  RowVectorX<Scalar> dh_next = RowVectorX<Scalar>::Zero(hid);
  RowVectorX<Scalar> dc_next = RowVectorX<Scalar>::Zero(hid);
  for (Eigen::Index t = len - 1; t >= 0; --t) {
    const auto gi = cache.gates.row(t).segment(0, hid).array();
    const auto gf = cache.gates.row(t).segment(hid, hid).array();
    const auto gg = cache.gates.row(t).segment(2 * hid, hid).array();
    const auto go = cache.gates.row(t).segment(3 * hid, hid).array();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> tc = cache.c.row(t).array().tanh();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> c_prev =
        t > 0 ? Eigen::Array<Scalar, 1, Eigen::Dynamic>(cache.c.row(t - 1).array())
              : Eigen::Array<Scalar, 1, Eigen::Dynamic>::Zero(hid);
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dht = dh.row(t).array() + dh_next.array();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dc = dc_next.array() + dht * go * (Scalar(1) - tc * tc);
    dz.row(t).segment(0, hid) = (dc * gg * gi * (Scalar(1) - gi)).matrix();
    dz.row(t).segment(hid, hid) = (dc * c_prev * gf * (Scalar(1) - gf)).matrix();
    dz.row(t).segment(2 * hid, hid) = (dc * gi * (Scalar(1) - gg * gg)).matrix();
    dz.row(t).segment(3 * hid, hid) = (dht * tc * go * (Scalar(1) - go)).matrix();
    dc_next = (dc * gf).matrix();
    dh_next = dz.row(t) * p.u.transpose();
  }
  grads.w += seq.transpose() * dz;
  grads.b += dz.colwise().sum();
  if (len > 1) grads.u += cache.h.topRows(len - 1).transpose() * dz.bottomRows(len - 1);
  return dz * p.w.transpose();
}

// ---------------------------------------------------------------------------
// Bidirectional LSTM

template <typename Scalar>
struct BiLstmParams {
  LstmParams<Scalar> fwd, bwd;

  static BiLstmParams zeros(int d_in, int hidden) {
    return {LstmParams<Scalar>::zeros(d_in, hidden), LstmParams<Scalar>::zeros(d_in, hidden)};
  }
  static BiLstmParams random(int d_in, int hidden, Rng& rng) {
    auto f = LstmParams<Scalar>::random(d_in, hidden, rng);
    auto b = LstmParams<Scalar>::random(d_in, hidden, rng);
    return {std::move(f), std::move(b)};
  }
  int hidden() const { return fwd.hidden(); }

  std::vector<nn::NamedTensor<Scalar>> tensors(const std::string& prefix) {
    auto t = fwd.tensors(prefix + "fwd.");
    for (auto& x : bwd.tensors(prefix + "bwd.")) t.push_back(x);
    return t;
  }
};

template <typename Scalar>
MatrixX<Scalar> reverse_rows(const MatrixX<Scalar>& x) {
  return x.colwise().reverse();
}

template <typename Scalar>
struct BiLstmCache {
  LstmSequenceCache<Scalar> fwd, bwd;
  MatrixX<Scalar> reversed;
};

/// Row t = [forward state at t | backward state at t], the backward pass run
/// over the reversed sequence and re-reversed.
template <typename Scalar>
MatrixX<Scalar> bilstm(const MatrixX<Scalar>& seq, const BiLstmParams<Scalar>& p, BiLstmCache<Scalar>* cache = nullptr) {
  if (seq.rows() < 1) throw InputError("bilstm: empty sequence");
  const int hid = p.hidden();
  MatrixX<Scalar> reversed = reverse_rows(seq);
  MatrixX<Scalar> out(seq.rows(), 2 * hid);
  out.leftCols(hid) = lstm_forward(seq, p.fwd, cache ? &cache->fwd : nullptr);
  out.rightCols(hid) = reverse_rows(lstm_forward(reversed, p.bwd, cache ? &cache->bwd : nullptr));
  if (cache != nullptr) cache->reversed = std::move(reversed);
  return out;
}

template <typename Scalar>
MatrixX<Scalar> bilstm_backward(const MatrixX<Scalar>& seq, const BiLstmParams<Scalar>& p, const BiLstmCache<Scalar>& cache,
                                const MatrixX<Scalar>& dout, BiLstmParams<Scalar>& grads) {
  const int hid = p.hidden();
  MatrixX<Scalar> dseq = lstm_backward(seq, p.fwd, cache.fwd, MatrixX<Scalar>(dout.leftCols(hid)), grads.fwd);
  const MatrixX<Scalar> drev_h = reverse_rows(MatrixX<Scalar>(dout.rightCols(hid)));
  dseq += reverse_rows(lstm_backward(cache.reversed, p.bwd, cache.bwd, drev_h, grads.bwd));
  return dseq;
}

}  // namespace memesent::model
