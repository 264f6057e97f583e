// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

// Two-layer dense classifier with analytic gradients, Adam, and an EMA shadow.
//
//   h      = tanh(W1 x + b1)
//   logits = W2 h + b2
//
// All parameters live in one flat vector (W1 column-major, b1, W2, b2) so the
// optimizer and the EMA are plain vector expressions. The same architecture
// backs the label classifier and the domain classifier; only `classes` differs.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "dcaug/image.hpp"
#include "dcaug/rng.hpp"

namespace dcaug {

struct ClassifierShape {
  int inputs = 0;
  int hidden = 64;
  int classes = 0;

  Eigen::Index param_count() const {
    return Eigen::Index{hidden} * inputs + hidden + Eigen::Index{classes} * hidden + classes;
  }
  void validate() const {
    if (inputs < 1 || hidden < 1 || classes < 1)
      throw std::invalid_argument("ClassifierShape: inputs, hidden and classes must be >= 1");
  }
  friend bool operator==(const ClassifierShape&, const ClassifierShape&) = default;
};

template <typename Scalar>
class ClassifierParams {
 public:
  using Vector = Eigen::VectorX<Scalar>;
  using Matrix = Eigen::MatrixX<Scalar>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  ClassifierParams() = default;
  explicit ClassifierParams(const ClassifierShape& shape) : shape_(shape), flat_(Vector::Zero(shape.param_count())) {
    shape.validate();
  }

  const ClassifierShape& shape() const { return shape_; }
  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  MatrixMap w1() { return {flat_.data(), shape_.hidden, shape_.inputs}; }
  ConstMatrixMap w1() const { return {flat_.data(), shape_.hidden, shape_.inputs}; }
  VectorMap b1() { return {flat_.data() + off_b1(), shape_.hidden}; }
  ConstVectorMap b1() const { return {flat_.data() + off_b1(), shape_.hidden}; }
  MatrixMap w2() { return {flat_.data() + off_w2(), shape_.classes, shape_.hidden}; }
  ConstMatrixMap w2() const { return {flat_.data() + off_w2(), shape_.classes, shape_.hidden}; }
  VectorMap b2() { return {flat_.data() + off_b2(), shape_.classes}; }
  ConstVectorMap b2() const { return {flat_.data() + off_b2(), shape_.classes}; }

  bool congruent(const ClassifierParams& other) const { return shape_ == other.shape_; }

  template <typename Other>
  ClassifierParams<Other> cast() const {
    ClassifierParams<Other> out(shape_);
    out.flat() = flat_.template cast<Other>();
    return out;
  }

  friend bool operator==(const ClassifierParams& a, const ClassifierParams& b) {
    return a.shape_ == b.shape_ && a.flat_ == b.flat_;
  }

 private:
  Eigen::Index off_b1() const { return Eigen::Index{shape_.hidden} * shape_.inputs; }
  Eigen::Index off_w2() const { return off_b1() + shape_.hidden; }
  Eigen::Index off_b2() const { return off_w2() + Eigen::Index{shape_.classes} * shape_.hidden; }

  ClassifierShape shape_;
  Vector flat_;
};

/// Gradients share the parameter layout.
template <typename Scalar>
using GradientBundle = ClassifierParams<Scalar>;

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
template <typename Scalar>
ClassifierParams<Scalar> init_classifier(const ClassifierShape& shape, std::uint64_t seed) {
  ClassifierParams<Scalar> p(shape);
  Rng rng(seed);
  const double l1 = std::sqrt(6.0 / (shape.inputs + shape.hidden));
  const double l2 = std::sqrt(6.0 / (shape.hidden + shape.classes));
  auto w1 = p.w1();
  for (Eigen::Index j = 0; j < w1.cols(); ++j)
    for (Eigen::Index i = 0; i < w1.rows(); ++i) w1(i, j) = static_cast<Scalar>(rng.uniform(-l1, l1));
  auto w2 = p.w2();
  for (Eigen::Index j = 0; j < w2.cols(); ++j)
    for (Eigen::Index i = 0; i < w2.rows(); ++i) w2(i, j) = static_cast<Scalar>(rng.uniform(-l2, l2));
  return p;
}

/// Float working form, centered: v / 255 - 0.5.
template <typename Scalar>
Eigen::VectorX<Scalar> encode(const Image& img) {
  const auto px = img.pixels();
  Eigen::VectorX<Scalar> x(static_cast<Eigen::Index>(px.size()));
  for (std::size_t i = 0; i < px.size(); ++i)
    x[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(px[i]) / Scalar(255) - Scalar(0.5);
  return x;
}

/// One column per image.
template <typename Scalar>
Eigen::MatrixX<Scalar> encode_batch(std::span<const Image> images) {
  if (images.empty()) return {};
  Eigen::MatrixX<Scalar> x(static_cast<Eigen::Index>(images[0].size()), static_cast<Eigen::Index>(images.size()));
  for (std::size_t j = 0; j < images.size(); ++j) {
    if (images[j].size() != images[0].size()) throw std::invalid_argument("encode_batch: images differ in size");
    x.col(static_cast<Eigen::Index>(j)) = encode<Scalar>(images[j]);
  }
  return x;
}

/// Hidden activations and logits for a batch, kept for the backward pass.
template <typename Scalar>
struct Activations {
  Eigen::MatrixX<Scalar> hidden;
  Eigen::MatrixX<Scalar> logits;
};

template <typename Scalar>
Activations<Scalar> forward_batch(const ClassifierParams<Scalar>& p, const Eigen::Ref<const Eigen::MatrixX<Scalar>>& x) {
  if (x.rows() != p.shape().inputs)
    throw std::invalid_argument("forward: expected " + std::to_string(p.shape().inputs) + " inputs, got " +
                                std::to_string(x.rows()));
  Activations<Scalar> a;
  a.hidden.noalias() = p.w1() * x;
  a.hidden.colwise() += p.b1();
  a.hidden = a.hidden.array().tanh().matrix();
  a.logits.noalias() = p.w2() * a.hidden;
  a.logits.colwise() += p.b2();
  return a;
}

template <typename Scalar>
Eigen::VectorX<Scalar> forward(const ClassifierParams<Scalar>& p, const Eigen::Ref<const Eigen::VectorX<Scalar>>& x) {
  return forward_batch<Scalar>(p, x).logits.col(0);
}

template <typename Scalar>
Eigen::VectorX<Scalar> forward(const ClassifierParams<Scalar>& p, const Image& img) {
  return forward<Scalar>(p, encode<Scalar>(img));
}

/// -log softmax(logits)[label] with the max shift.
template <typename Derived>
typename Derived::Scalar cross_entropy(const Eigen::MatrixBase<Derived>& logits, int label) {
  using Scalar = typename Derived::Scalar;
  if (label < 0 || label >= logits.size())
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) + " out of range for " +
                                std::to_string(logits.size()) + " classes");
  const Scalar shift = logits.maxCoeff();
  const Scalar lse = std::log((logits.array() - shift).exp().sum()) + shift;
  return lse - logits(label);
}

template <typename Scalar>
Eigen::VectorX<Scalar> cross_entropy_batch(const Eigen::MatrixX<Scalar>& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size())
    throw std::invalid_argument("cross_entropy_batch: label count does not match batch");
  Eigen::VectorX<Scalar> out(logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) out[j] = cross_entropy(logits.col(j), labels[static_cast<std::size_t>(j)]);
  return out;
}

template <typename Scalar>
Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorX<Scalar>>& logits) {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return best;
}

/// Mean cross-entropy gradient over the batch, reusing forward activations.
template <typename Scalar>
GradientBundle<Scalar> backward_batch(const ClassifierParams<Scalar>& p, const Eigen::Ref<const Eigen::MatrixX<Scalar>>& x,
                                      const Activations<Scalar>& act, std::span<const int> labels) {
  const Eigen::Index n = x.cols();
  if (n == 0) throw std::invalid_argument("backward: empty batch");
  if (static_cast<std::size_t>(n) != labels.size()) throw std::invalid_argument("backward: label count does not match batch");
  // d loss / d logits = softmax - onehot, averaged over the batch.
  Eigen::MatrixX<Scalar> dz = (act.logits.rowwise() - act.logits.colwise().maxCoeff()).array().exp().matrix();
  dz.array().rowwise() /= dz.colwise().sum().array();
  for (Eigen::Index j = 0; j < n; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= p.shape().classes) throw std::invalid_argument("backward: label out of range");
    dz(y, j) -= Scalar(1);
  }
  dz /= static_cast<Scalar>(n);

  GradientBundle<Scalar> g(p.shape());
  g.w2().noalias() = dz * act.hidden.transpose();
  g.b2() = dz.rowwise().sum();
  Eigen::MatrixX<Scalar> da = (p.w2().transpose() * dz).array() * (Scalar(1) - act.hidden.array().square());
  g.w1().noalias() = da * x.transpose();
  g.b1() = da.rowwise().sum();
  return g;
}

template <typename Scalar>
GradientBundle<Scalar> backward_batch(const ClassifierParams<Scalar>& p, const Eigen::Ref<const Eigen::MatrixX<Scalar>>& x,
                                      std::span<const int> labels) {
  return backward_batch<Scalar>(p, x, forward_batch<Scalar>(p, x), labels);
}

template <typename Scalar>
GradientBundle<Scalar> backward(const ClassifierParams<Scalar>& p, const Eigen::Ref<const Eigen::VectorX<Scalar>>& x, int label) {
  const int labels[1] = {label};
  return backward_batch<Scalar>(p, x, labels);
}

template <typename Scalar>
struct AdamState {
  Eigen::VectorX<Scalar> m;
  Eigen::VectorX<Scalar> v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  AdamState() = default;
  AdamState(const ClassifierShape& shape, double learning_rate, double decay = 0.0)
      : m(Eigen::VectorX<Scalar>::Zero(shape.param_count())),
        v(Eigen::VectorX<Scalar>::Zero(shape.param_count())),
        lr(learning_rate),
        weight_decay(decay) {}
};

/// Bias-corrected Adam; weight decay is added to the gradient (L2 form).
template <typename Scalar>
void adam_step(ClassifierParams<Scalar>& p, const GradientBundle<Scalar>& g, AdamState<Scalar>& s) {
  if (!p.congruent(g) || s.m.size() != p.flat().size() || s.v.size() != p.flat().size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++s.step;
  const auto b1 = static_cast<Scalar>(s.beta1), b2 = static_cast<Scalar>(s.beta2);
  Eigen::VectorX<Scalar> grad = g.flat();
  if (s.weight_decay != 0) grad += static_cast<Scalar>(s.weight_decay) * p.flat();
  s.m = b1 * s.m + (Scalar(1) - b1) * grad;
  s.v = b2 * s.v + (Scalar(1) - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const auto step_size = static_cast<Scalar>(s.lr / c1);
  const auto sqrt_c2 = static_cast<Scalar>(std::sqrt(c2));
  p.flat().array() -= step_size * s.m.array() / (s.v.array().sqrt() / sqrt_c2 + static_cast<Scalar>(s.eps));
}

template <typename Scalar>
struct EmaState {
  ClassifierParams<Scalar> shadow;
  double beta = 0.999;

  EmaState() = default;
  /// The shadow starts as a copy of the source.
  EmaState(const ClassifierParams<Scalar>& source, double smoothing) : shadow(source), beta(smoothing) {
    if (!(smoothing >= 0.0 && smoothing < 1.0)) throw std::invalid_argument("EmaState: beta must be in [0, 1)");
  }
};

/// shadow <- (1 - beta) * source + beta * shadow
template <typename Scalar>
void ema_update(EmaState<Scalar>& e, const ClassifierParams<Scalar>& source) {
  if (!e.shadow.congruent(source)) throw std::invalid_argument("ema_update: shape mismatch");
  const auto b = static_cast<Scalar>(e.beta);
  e.shadow.flat() = (Scalar(1) - b) * source.flat() + b * e.shadow.flat();
}

/// FNV-1a over the raw parameter bytes; used to assert snapshots are untouched.
template <typename Scalar>
std::uint64_t checksum(const ClassifierParams<Scalar>& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(p.flat().data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(p.flat().size()) * sizeof(Scalar); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

using Classifier = ClassifierParams<float>;
using Ema = EmaState<float>;
using Adam = AdamState<float>;

}  // namespace dcaug
