#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "kite/tensor/tensor.hpp"

// Differentiable primitives. Every op records a backward function when
// gradient recording is enabled and at least one input requires a gradient.
// Instantiated for float (training) and double (gradient checks).
namespace kite::ad {

// Elementwise sum. `b` may also have a shape equal to a suffix of `a`'s shape,
// in which case it is broadcast over the leading axes (bias rows, position
// tables).
template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);

template <class Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor);

template <class Real>
Tensor<Real> sum(const Tensor<Real>& a);

template <class Real>
Tensor<Real> mean(const Tensor<Real>& a);

// [m x k] * [k x n] -> [m x n]
template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);

// Per-group product [G x m x k] * [G x k x n] -> [G x m x n]. With
// transpose_b, `b` is [G x n x k] and is used transposed.
template <class Real>
Tensor<Real> bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b = false);

// Swaps two axes of an N-d tensor (materialized copy).
template <class Real>
Tensor<Real> transpose(const Tensor<Real>& a, std::size_t axis0 = 0, std::size_t axis1 = 1);

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape);

template <class Real>
Tensor<Real> concat(std::span<const Tensor<Real>> parts, std::size_t axis);

template <class Real>
Tensor<Real> slice(const Tensor<Real>& a, std::size_t axis, std::size_t start, std::size_t length);

// Gathers rows of a [V x d] table; backward scatter-adds into the table.
template <class Real>
Tensor<Real> embedding_lookup(const Tensor<Real>& table, std::span<const std::int32_t> ids);

// Normalizes over the last axis, then applies gain and bias (both [d]).
template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Real eps = Real(1e-5));

// Batch normalization over axis 1 of [B x C] or [B x C x L]. In training mode
// batch statistics are used and the running buffers are updated in place
// with `momentum`; in evaluation mode the running buffers are used.
template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Tensor<Real>& running_mean, Tensor<Real>& running_var, bool training,
                        Real momentum = Real(0.1), Real eps = Real(1e-5));

template <class Real>
Tensor<Real> relu(const Tensor<Real>& x);

template <class Real>
Tensor<Real> leaky_relu(const Tensor<Real>& x, Real slope = Real(0.01));

// x [B x Cin x L], weight [Cout x Cin x K], bias [Cout]. Zero padding so the
// output length is ceil(L / stride).
template <class Real>
Tensor<Real> conv1d(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    std::size_t stride = 1);

// Max pooling along the last axis of [B x C x L]; a trailing partial window is
// kept, so the output length is ceil((L - kernel) / stride) + 1 for L >= kernel.
template <class Real>
Tensor<Real> max_pool1d(const Tensor<Real>& x, std::size_t kernel = 2, std::size_t stride = 2);

template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis);

// Row softmax of [n x m] or [G x n x m] scores restricted to keys with
// mask[j] != 0. key_mask holds K masks of length m; group g uses mask
// g / (G / K), so [B*H x n x m] scores take one mask per batch item.
// Masked keys get weight 0; a row with no visible key is all zeros.
template <class Real>
Tensor<Real> masked_softmax(const Tensor<Real>& scores, std::span<const std::uint8_t> key_mask);

// Mean over rows of -log softmax(logits)[target]. logits [N x M].
template <class Real>
Tensor<Real> cross_entropy_loss(const Tensor<Real>& logits, std::span<const std::int32_t> targets);

// Inverted dropout; identity when p == 0.
template <class Real>
Tensor<Real> dropout(const Tensor<Real>& x, Real p, std::mt19937_64& rng);

}  // namespace kite::ad
