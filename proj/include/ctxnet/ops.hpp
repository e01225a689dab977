#pragma once

#include "ctxnet/tensor.hpp"

#include <vector>

namespace ctxnet {

// Differentiable operators. Each records itself on the graph when grad mode is
// on and at least one input requires grad. Shape violations throw
// std::invalid_argument naming the operator and the offending shapes.

/// x: (C,H,W), weight: (O,C,k,k), bias: (O) -> (O,Ho,Wo).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad);

/// x: (C,H,W) -> (C,Ho,Wo). Ties go to the first row-major index.
Tensor maxpool2d(const Tensor& x, int kernel, int stride);

/// Nearest-neighbour upsampling by an integer factor. x: (C,H,W).
Tensor upsample_nearest(const Tensor& x, int factor);

/// Axis-aligned region in feature-map cell coordinates, [x0,x1) x [y0,y1).
struct Region {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Divides `region` into grid x grid bins; each bin is the unweighted mean of
/// the feature cells its extent overlaps (zero if none). x: (C,H,W) ->
/// (C*grid*grid), channel-major.
Tensor region_avg_pool(const Tensor& x, const Region& region, int grid);

/// x: (N,in) or (in), weight: (out,in), bias: (out) -> (N,out) or (out).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor logistic(const Tensor& x);
/// Natural log; rejects non-positive inputs.
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor smooth_l1(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
/// Flat gather: out[i] = x.value[indices[i]] -> (n).
Tensor gather(const Tensor& x, const std::vector<Index>& indices);
/// Flat concatenation of any number of tensors -> (total).
Tensor concat(const std::vector<Tensor>& parts);
/// Stacks equal-sized tensors as rows -> (N, D).
Tensor stack_rows(const std::vector<Tensor>& rows);
/// Column-wise max over rows of (N,D) -> (D). Ties go to the lower row.
Tensor max_rows(const Tensor& x);
/// x: (N,D), s: (N) -> (N,D) with row i scaled by s[i].
Tensor scale_rows(const Tensor& x, const Tensor& s);

}  // namespace ctxnet
