#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "wvsort/nn/tensor.hpp"
#include "wvsort/pdw.hpp"

namespace wvsort::nn {

// Differentiable operations. Tensors whose leading axes are [B, L, ...] treat
// the product of the remaining axes as channels.

Tensor add(const Tensor& a, const Tensor& b);

/// Depthwise convolution along time (axis 1) with zero "same" padding.
/// x: [B, L, C...], weight: K x C values (shape [K, C...]), bias: C values. K odd.
Tensor depthwise_conv_time(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Batch normalisation per channel over (batch, time). In training mode uses
/// batch statistics and updates the running buffers in place (unbiased
/// variance); otherwise normalises with the running buffers.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, double momentum = 0.1, double eps = 1e-5);

/// Independent affine maps per group: x [..., G, In], weight [G, Out, In],
/// bias [G, Out] -> [..., G, Out].
Tensor grouped_linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// x [R, F], weight [Out, F], bias [Out] -> [R, Out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Swaps the last two axes.
Tensor transpose_last2(const Tensor& x);

/// Exact (erf) GELU.
Tensor gelu(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// Inverted dropout: kept entries are scaled by 1 / (1 - p).
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng);

/// Softmax over the last axis (max-subtracted).
Tensor softmax(const Tensor& x);

/// Mean over rows of -log softmax(logits)[label], fused for stability.
/// logits: [R, C]. Throws PreconditionError for a label >= C.
Tensor cross_entropy_logits(const Tensor& logits, std::span<const Label> labels);

/// Learned scalar-to-D embedding: z [B, L, N], w [N, D], b [N, D] -> [B, L, N, D].
Tensor lembs(const Tensor& z, const Tensor& w, const Tensor& b);

/// sum(x * weights); weights carry no gradient. Used to reduce tensors to scalars.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);

/// Per-(window, variable) standardisation over time: (x - mean) / (std + 1e-8).
/// values: [B, L, N] row-major.
std::vector<double> standardize_windows(std::span<const double> values, std::size_t batch, std::size_t length,
                                        std::size_t variables);

}  // namespace wvsort::nn
