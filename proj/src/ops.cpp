#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctxnet {

namespace {

using RowMap = Eigen::Map<RowMatrixXd>;
using ConstRowMap = Eigen::Map<const RowMatrixXd>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b, const char* what) {
  throw std::invalid_argument(std::string(op) + ": " + what + " (" + shape_str(a) + " vs " + shape_str(b) + ")");
}

void require_rank(const char* op, const Tensor& t, int rank) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                                shape_str(t.shape()));
  }
}

Tensor make_result(Shape shape, VectorXd value, std::vector<Tensor> inputs, const char* op,
                   std::function<void(TensorNode&)> bw) {
  Tensor out(std::move(shape), std::move(value));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.op = op;
  node.parents.reserve(inputs.size());
  for (auto& t : inputs) node.parents.push_back(t.node());
  node.backward = std::move(bw);
  return out;
}

// Accumulates `g` into parent k when that parent wants a gradient.
template <typename Expr>
void accumulate(TensorNode& self, std::size_t k, const Expr& g) {
  auto& p = *self.parents[k];
  if (p.requires_grad) p.ensure_grad() += g;
}

bool wants(const TensorNode& self, std::size_t k) { return self.parents[k]->requires_grad; }

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", weight, 4);
  if (weight.dim(1) != x.dim(0)) shape_error("conv2d", x.shape(), weight.shape(), "input channels differ");
  if (weight.dim(2) != weight.dim(3)) shape_error("conv2d", x.shape(), weight.shape(), "kernel must be square");
  if (bias.size() != weight.dim(0)) shape_error("conv2d", weight.shape(), bias.shape(), "bias size != out channels");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: stride must be >= 1 and pad >= 0");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int O = weight.dim(0), k = weight.dim(2);
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  if (H + 2 * pad < k || W + 2 * pad < k) shape_error("conv2d", x.shape(), weight.shape(), "kernel larger than input");
  const Index K = static_cast<Index>(C) * k * k;
  const Index L = static_cast<Index>(Ho) * Wo;

  RowMatrixXd col(K, L);
  const double* xv = x.value().data();
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* row = col.row((static_cast<Index>(c) * k + ki) * k + kj).data();
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ki;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kj;
            row[oy * Wo + ox] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W) ? xv[(static_cast<Index>(c) * H + iy) * W + ix] : 0.0;
          }
        }
      }
    }
  }
  ConstRowMap wm(weight.value().data(), O, K);
  VectorXd out_v(static_cast<Index>(O) * L);
  RowMap out(out_v.data(), O, L);
  out.noalias() = wm * col;
  out.colwise() += bias.value();

  const bool keep = grad_enabled() && (x.requires_grad() || weight.requires_grad() || bias.requires_grad());
  if (!keep) col.resize(0, 0);
  return make_result(
      Shape{O, Ho, Wo}, std::move(out_v), {x, weight, bias}, "conv2d",
      [col = std::move(col), C, H, W, O, k, Ho, Wo, K, L, stride, pad](TensorNode& self) {
        ConstRowMap g(self.grad.data(), O, L);
        if (wants(self, 1)) {
          auto& gw = self.parents[1]->ensure_grad();
          RowMap(gw.data(), O, K).noalias() += g * col.transpose();
        }
        if (wants(self, 2)) self.parents[2]->ensure_grad() += g.rowwise().sum();
        if (wants(self, 0)) {
          ConstRowMap wm(self.parents[1]->value.data(), O, K);
          RowMatrixXd dcol = wm.transpose() * g;
          double* gx = self.parents[0]->ensure_grad().data();
          for (int c = 0; c < C; ++c) {
            for (int ki = 0; ki < k; ++ki) {
              for (int kj = 0; kj < k; ++kj) {
                const double* row = dcol.row((static_cast<Index>(c) * k + ki) * k + kj).data();
                for (int oy = 0; oy < Ho; ++oy) {
                  const int iy = oy * stride - pad + ki;
                  if (iy < 0 || iy >= H) continue;
                  for (int ox = 0; ox < Wo; ++ox) {
                    const int ix = ox * stride - pad + kj;
                    if (ix < 0 || ix >= W) continue;
                    gx[(static_cast<Index>(c) * H + iy) * W + ix] += row[oy * Wo + ox];
                  }
                }
              }
            }
          }
        }
      });
}

Tensor maxpool2d(const Tensor& x, int kernel, int stride) {
  require_rank("maxpool2d", x, 3);
  if (kernel < 1 || stride < 1) throw std::invalid_argument("maxpool2d: kernel and stride must be >= 1");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (kernel > H || kernel > W) {
    throw std::invalid_argument("maxpool2d: kernel " + std::to_string(kernel) + " larger than input " +
                                shape_str(x.shape()));
  }
  const int Ho = (H - kernel) / stride + 1, Wo = (W - kernel) / stride + 1;
  VectorXd out(static_cast<Index>(C) * Ho * Wo);
  std::vector<Index> argmax(static_cast<std::size_t>(out.size()));
  const double* xv = x.value().data();
  for (int c = 0; c < C; ++c) {
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        Index best = (static_cast<Index>(c) * H + oy * stride) * W + ox * stride;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            const Index idx = (static_cast<Index>(c) * H + oy * stride + ky) * W + ox * stride + kx;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const Index o = (static_cast<Index>(c) * Ho + oy) * Wo + ox;
        out[o] = xv[best];
        argmax[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return make_result(Shape{C, Ho, Wo}, std::move(out), {x}, "maxpool2d", [argmax](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[static_cast<Index>(o)];
  });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  require_rank("upsample_nearest", x, 3);
  if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Ho = H * factor, Wo = W * factor;
  VectorXd out(static_cast<Index>(C) * Ho * Wo);
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < Ho; ++y)
      for (int xx = 0; xx < Wo; ++xx)
        out[(static_cast<Index>(c) * Ho + y) * Wo + xx] = x[(static_cast<Index>(c) * H + y / factor) * W + xx / factor];
  return make_result(Shape{C, Ho, Wo}, std::move(out), {x}, "upsample_nearest",
                     [C, H, W, Ho, Wo, factor](TensorNode& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (int c = 0; c < C; ++c)
                         for (int y = 0; y < Ho; ++y)
                           for (int xx = 0; xx < Wo; ++xx)
                             g[(static_cast<Index>(c) * H + y / factor) * W + xx / factor] +=
                                 self.grad[(static_cast<Index>(c) * Ho + y) * Wo + xx];
                     });
}

Tensor region_avg_pool(const Tensor& x, const Region& r, int grid) {
  require_rank("region_avg_pool", x, 3);
  if (grid < 1) throw std::invalid_argument("region_avg_pool: grid must be >= 1");
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw std::invalid_argument("region_avg_pool: empty region");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  struct Bin {
    int cy0, cy1, cx0, cx1;  // inclusive-exclusive cell ranges
  };
  auto cell_range = [](double lo, double hi, int extent) {
    int a = std::max(0, static_cast<int>(std::floor(lo)));
    int b = std::min(extent, static_cast<int>(std::ceil(hi)));
    return std::pair{a, std::max(a, b)};
  };
  std::vector<Bin> bins;
  bins.reserve(static_cast<std::size_t>(grid) * grid);
  const double bw = (r.x1 - r.x0) / grid, bh = (r.y1 - r.y0) / grid;
  for (int by = 0; by < grid; ++by) {
    const auto [cy0, cy1] = cell_range(r.y0 + by * bh, r.y0 + (by + 1) * bh, H);
    for (int bx = 0; bx < grid; ++bx) {
      const auto [cx0, cx1] = cell_range(r.x0 + bx * bw, r.x0 + (bx + 1) * bw, W);
      bins.push_back({cy0, cy1, cx0, cx1});
    }
  }
  const Index G = static_cast<Index>(grid) * grid;
  VectorXd out = VectorXd::Zero(C * G);
  for (int c = 0; c < C; ++c) {
    for (Index b = 0; b < G; ++b) {
      const Bin& bin = bins[static_cast<std::size_t>(b)];
      const int count = (bin.cy1 - bin.cy0) * (bin.cx1 - bin.cx0);
      if (count == 0) continue;
      double s = 0;
      for (int y = bin.cy0; y < bin.cy1; ++y)
        for (int xx = bin.cx0; xx < bin.cx1; ++xx) s += x[(static_cast<Index>(c) * H + y) * W + xx];
      out[c * G + b] = s / count;
    }
  }
  return make_result(Shape{static_cast<int>(C * G)}, std::move(out), {x}, "region_avg_pool",
                     [bins = std::move(bins), C, H, W, G](TensorNode& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (int c = 0; c < C; ++c) {
                         for (Index b = 0; b < G; ++b) {
                           const Bin& bin = bins[static_cast<std::size_t>(b)];
                           const int count = (bin.cy1 - bin.cy0) * (bin.cx1 - bin.cx0);
                           if (count == 0) continue;
                           const double share = self.grad[c * G + b] / count;
                           for (int y = bin.cy0; y < bin.cy1; ++y)
                             for (int xx = bin.cx0; xx < bin.cx1; ++xx) g[(static_cast<Index>(c) * H + y) * W + xx] += share;
                         }
                       }
                     });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("dense", weight, 2);
  if (x.rank() != 1 && x.rank() != 2) shape_error("dense", x.shape(), weight.shape(), "input must be rank 1 or 2");
  const int in = x.shape().back();
  const int N = x.rank() == 2 ? x.dim(0) : 1;
  const int out_dim = weight.dim(0);
  if (weight.dim(1) != in) shape_error("dense", x.shape(), weight.shape(), "input width differs from weight");
  if (bias.size() != out_dim) shape_error("dense", weight.shape(), bias.shape(), "bias size != outputs");
  ConstRowMap xm(x.value().data(), N, in);
  ConstRowMap wm(weight.value().data(), out_dim, in);
  VectorXd out_v(static_cast<Index>(N) * out_dim);
  RowMap out(out_v.data(), N, out_dim);
  out.noalias() = xm * wm.transpose();
  out.rowwise() += bias.value().transpose();
  Shape shape = x.rank() == 2 ? Shape{N, out_dim} : Shape{out_dim};
  return make_result(std::move(shape), std::move(out_v), {x, weight, bias}, "dense",
                     [N, in, out_dim](TensorNode& self) {
                       ConstRowMap g(self.grad.data(), N, out_dim);
                       ConstRowMap xm(self.parents[0]->value.data(), N, in);
                       ConstRowMap wm(self.parents[1]->value.data(), out_dim, in);
                       if (wants(self, 0)) RowMap(self.parents[0]->ensure_grad().data(), N, in).noalias() += g * wm;
                       if (wants(self, 1))
                         RowMap(self.parents[1]->ensure_grad().data(), out_dim, in).noalias() += g.transpose() * xm;
                       if (wants(self, 2)) self.parents[2]->ensure_grad() += g.colwise().sum().transpose();
                     });
}

Tensor relu(const Tensor& x) {
  VectorXd out = x.value().cwiseMax(0.0);
  return make_result(x.shape(), std::move(out), {x}, "relu", [](TensorNode& self) {
    const auto& xv = self.parents[0]->value;
    accumulate(self, 0, (xv.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

namespace {
double stable_logistic(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

Tensor logistic(const Tensor& x) {
  VectorXd out = x.value().unaryExpr(&stable_logistic);
  return make_result(x.shape(), out, {x}, "logistic", [out](TensorNode& self) {
    accumulate(self, 0, (out.array() * (1.0 - out.array()) * self.grad.array()).matrix());
  });
}

Tensor log(const Tensor& x) {
  if ((x.value().array() <= 0.0).any()) {
    throw std::invalid_argument("log: non-positive input in tensor of shape " + shape_str(x.shape()));
  }
  VectorXd out = x.value().array().log().matrix();
  return make_result(x.shape(), std::move(out), {x}, "log", [](TensorNode& self) {
    accumulate(self, 0, (self.grad.array() / self.parents[0]->value.array()).matrix());
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  VectorXd out = x.value().unaryExpr([lo, hi](double v) { return std::isnan(v) ? v : std::clamp(v, lo, hi); });
  return make_result(x.shape(), std::move(out), {x}, "clamp", [lo, hi](TensorNode& self) {
    const auto& xv = self.parents[0]->value.array();
    accumulate(self, 0, ((xv >= lo) && (xv <= hi)).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Tensor smooth_l1(const Tensor& x) {
  VectorXd out = x.value().unaryExpr([](double v) {
    const double a = std::abs(v);
    return a < 1.0 ? 0.5 * v * v : a - 0.5;
  });
  return make_result(x.shape(), std::move(out), {x}, "smooth_l1", [](TensorNode& self) {
    const auto& xv = self.parents[0]->value;
    VectorXd d = xv.unaryExpr([](double v) { return std::abs(v) < 1.0 ? v : (v > 0 ? 1.0 : -1.0); });
    accumulate(self, 0, d.cwiseProduct(self.grad));
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape(), "shape mismatch");
  return make_result(a.shape(), a.value() + b.value(), {a, b}, "add", [](TensorNode& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape(), "shape mismatch");
  return make_result(a.shape(), a.value() - b.value(), {a, b}, "sub", [](TensorNode& self) {
    accumulate(self, 0, self.grad);
    accumulate(self, 1, -self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape(), "shape mismatch");
  return make_result(a.shape(), a.value().cwiseProduct(b.value()), {a, b}, "mul", [](TensorNode& self) {
    accumulate(self, 0, self.grad.cwiseProduct(self.parents[1]->value));
    accumulate(self, 1, self.grad.cwiseProduct(self.parents[0]->value));
  });
}

Tensor mul_scalar(const Tensor& x, double s) {
  return make_result(x.shape(), x.value() * s, {x}, "mul_scalar",
                     [s](TensorNode& self) { accumulate(self, 0, self.grad * s); });
}

Tensor add_scalar(const Tensor& x, double s) {
  return make_result(x.shape(), (x.value().array() + s).matrix(), {x}, "add_scalar",
                     [](TensorNode& self) { accumulate(self, 0, self.grad); });
}

Tensor sum(const Tensor& x) {
  VectorXd out(1);
  out[0] = x.value().sum();
  return make_result(Shape{}, std::move(out), {x}, "sum", [](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    g.array() += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("mean: empty tensor");
  VectorXd out(1);
  out[0] = x.value().mean();
  const double n = static_cast<double>(x.size());
  return make_result(Shape{}, std::move(out), {x}, "mean", [n](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    g.array() += self.grad[0] / n;
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) shape_error("reshape", x.shape(), shape, "element count differs");
  return make_result(std::move(shape), x.value(), {x}, "reshape",
                     [](TensorNode& self) { accumulate(self, 0, self.grad); });
}

Tensor gather(const Tensor& x, const std::vector<Index>& indices) {
  if (indices.empty()) throw std::invalid_argument("gather: no indices");
  VectorXd out(static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= x.size()) {
      throw std::invalid_argument("gather: index " + std::to_string(indices[i]) + " out of range for shape " +
                                  shape_str(x.shape()));
    }
    out[static_cast<Index>(i)] = x[indices[i]];
  }
  return make_result(Shape{static_cast<int>(indices.size())}, std::move(out), {x}, "gather",
                     [indices](TensorNode& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < indices.size(); ++i) g[indices[i]] += self.grad[static_cast<Index>(i)];
                     });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Index total = 0;
  for (const auto& p : parts) total += p.size();
  VectorXd out(total);
  Index off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = p.value();
    off += p.size();
  }
  return make_result(Shape{static_cast<int>(total)}, std::move(out), parts, "concat", [](TensorNode& self) {
    Index o = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const Index n = self.parents[k]->value.size();
      accumulate(self, k, self.grad.segment(o, n));
      o += n;
    }
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const Index d = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) shape_error("stack_rows", rows.front().shape(), r.shape(), "row sizes differ");
  }
  Tensor flat = concat(rows);
  return reshape(flat, Shape{static_cast<int>(rows.size()), static_cast<int>(d)});
}

Tensor max_rows(const Tensor& x) {
  require_rank("max_rows", x, 2);
  const int N = x.dim(0), D = x.dim(1);
  ConstRowMap m(x.value().data(), N, D);
  VectorXd out(D);
  std::vector<int> arg(static_cast<std::size_t>(D), 0);
  for (int j = 0; j < D; ++j) {
    int best = 0;
    for (int i = 1; i < N && !std::isnan(m(best, j)); ++i)
      if (m(i, j) > m(best, j) || std::isnan(m(i, j))) best = i;
    arg[static_cast<std::size_t>(j)] = best;
    out[j] = m(best, j);
  }
  return make_result(Shape{D}, std::move(out), {x}, "max_rows", [arg, D](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (int j = 0; j < D; ++j) g[static_cast<Index>(arg[static_cast<std::size_t>(j)]) * D + j] += self.grad[j];
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require_rank("scale_rows", x, 2);
  if (s.size() != x.dim(0)) shape_error("scale_rows", x.shape(), s.shape(), "one scale per row required");
  const int N = x.dim(0), D = x.dim(1);
  VectorXd out_v(x.size());
  RowMap(out_v.data(), N, D) = s.value().asDiagonal() * ConstRowMap(x.value().data(), N, D);
  return make_result(x.shape(), std::move(out_v), {x, s}, "scale_rows", [N, D](TensorNode& self) {
    ConstRowMap g(self.grad.data(), N, D);
    ConstRowMap xm(self.parents[0]->value.data(), N, D);
    if (wants(self, 0))
      RowMap(self.parents[0]->ensure_grad().data(), N, D) += self.parents[1]->value.asDiagonal() * g;
    if (wants(self, 1)) self.parents[1]->ensure_grad() += g.cwiseProduct(xm).rowwise().sum();
  });
}

}  // namespace ctxnet
