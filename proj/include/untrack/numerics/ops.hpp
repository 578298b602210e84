// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "untrack/numerics/tape.hpp"

// Differentiable op set. Every function records its result on the tape of
// its first operand and registers an exact reverse-mode derivative. Matrices
// are rank-2 row-major arrays; "rows" are tokens and "cols" are channels.
namespace untrack::num {

// Linear algebra.
Var matmul(const Var& a, const Var& b);     // [m,k]x[k,n]
Var matmul_nt(const Var& a, const Var& b);  // [m,k]x[n,k]^T
Var transpose(const Var& x);

// Elementwise / broadcasting arithmetic.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
/// x[m,n] + bias[n] broadcast over rows.
Var add_bias(const Var& x, const Var& bias);

// Nonlinearities.
Var gelu(const Var& x);
Var exp(const Var& x);
Var sigmoid(const Var& x);
/// Passes values inside [lo, hi] through; gradient is zero where clamped.
Var clamp(const Var& x, double lo, double hi);

/// Softmax of a rank-2 array along `axis` (0 or 1).
Var softmax(const Var& x, std::size_t axis = 1);
/// Row softmax of x + mask, where mask is a constant additive array whose
/// entries may be -inf. Every row must keep at least one finite entry.
Var masked_softmax(const Var& x, const Array& additive_mask);

/// Row-wise layer normalisation with affine gamma/beta of length n.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);

/// Stride-1 convolution of x[c_in,h,w] with w[c_out,c_in,k,k] (k odd) and
/// edge-replicating padding, so a constant input yields a constant output.
Var conv2d(const Var& x, const Var& weight, const Var& bias);

// Reductions.
/// Mean along `axis` of a rank-2 array; that axis becomes extent 1.
Var avg_pool(const Var& x, std::size_t axis);
/// Mean over the token axis: [L,C] -> [1,C].
inline Var mean_rows(const Var& x) { return avg_pool(x, 0); }
/// Euclidean norm along the channel axis: [L,C] -> [L,1].
Var row_norm(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);

// Structural ops.
Var reshape(const Var& x, Shape shape);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var gather_rows(const Var& x, const std::vector<std::size_t>& rows);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);

// Fused losses (scalar outputs).
/// Penalty-reduced focal loss on probabilities p in (0,1) against a target
/// map y in [0,1]; normalised by max(1, #{y == 1}).
Var focal_loss(const Var& p, const Array& target, double alpha = 2.0, double beta = 4.0);
/// Mean absolute difference.
Var l1_loss(const Var& pred, const Array& target);
/// 1 - GIoU between a predicted box (x1,y1,x2,y2) and a fixed target box.
Var giou_loss(const Var& pred_xyxy, const Array& target_xyxy);

}  // namespace untrack::num
