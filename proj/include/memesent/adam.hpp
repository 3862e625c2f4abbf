#pragma once

#include "memesent/types.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace memesent::model {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  std::vector<MatrixX<Scalar>> m, v;
};

/// One bias-corrected Adam update at step t (t >= 1). First and second
/// moments live in `state` and are created on first use.
template <typename Scalar>
void adam_step(std::span<MatrixX<Scalar>* const> params, std::span<const MatrixX<Scalar>* const> grads,
               AdamState<Scalar>& state, double lr, int t, const AdamConfig& cfg = {}) {
  if (t < 1) throw InputError("adam_step: t must be >= 1");
  if (params.size() != grads.size()) throw InputError("adam_step: params/grads count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i]->allFinite()) throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(i));
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
      state.v.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw InputError("adam_step: state does not match parameters");
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t));
  const auto step = static_cast<Scalar>(lr);
  const auto eps = static_cast<Scalar>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = *grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    params[i]->array() -= step * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

}  // namespace memesent::model
