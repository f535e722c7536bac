#include "kite/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace kite::ad {
namespace {

template <class Real>
using NodePtr = std::shared_ptr<Node<Real>>;

template <class Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Real>
using CMap = Eigen::Map<const RowMat<Real>>;

template <class Real>
using MMap = Eigen::Map<RowMat<Real>>;

template <class Real>
Tensor<Real> make_result(Shape shape, std::vector<Real> value, std::vector<NodePtr<Real>> inputs,
                         std::string_view op, std::function<void(Node<Real>&)> bw) {
  auto n = std::make_shared<Node<Real>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  const bool needs =
      grad_enabled() && std::any_of(inputs.begin(), inputs.end(), [](const NodePtr<Real>& p) {
        return p->requires_grad;
      });
  if (needs) {
    n->requires_grad = true;
    n->inputs = std::move(inputs);
    n->backward = std::move(bw);
  }
  return Tensor<Real>(std::move(n));
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

std::size_t prod(const Shape& s, std::size_t from, std::size_t to) {
  std::size_t p = 1;
  for (std::size_t i = from; i < to; ++i) p *= s[i];
  return p;
}

}  // namespace

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const bool suffix = sb.size() <= sa.size() && std::equal(sb.begin(), sb.end(), sa.end() - sb.size());
  require(suffix, "add: shape " + to_string(sb) + " does not broadcast onto " + to_string(sa));
  const std::size_t inner = b.size();
  const std::size_t outer = a.size() / inner;
  std::vector<Real> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t o = 0; o < outer; ++o) {
    Real* row = out.data() + o * inner;
    for (std::size_t i = 0; i < inner; ++i) row[i] += bv[i];
  }
  return make_result<Real>(sa, std::move(out), {a.node(), b.node()}, "add",
                           [inner, outer](Node<Real>& self) {
                             auto& in_a = *self.inputs[0];
                             auto& in_b = *self.inputs[1];
                             const Real* g = self.grad.data();
                             if (in_a.requires_grad) {
                               Real* ga = in_a.grad_buffer();
                               for (std::size_t i = 0; i < outer * inner; ++i) ga[i] += g[i];
                             }
                             if (in_b.requires_grad) {
                               Real* gb = in_b.grad_buffer();
                               for (std::size_t o = 0; o < outer; ++o)
                                 for (std::size_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i];
                             }
                           });
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require(a.shape() == b.shape(),
          "mul: shapes differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<Real> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result<Real>(a.shape(), std::move(out), {a.node(), b.node()}, "mul",
                           [](Node<Real>& self) {
                             auto& in_a = *self.inputs[0];
                             auto& in_b = *self.inputs[1];
                             const std::size_t n = self.value.size();
                             if (in_a.requires_grad) {
                               Real* ga = in_a.grad_buffer();
                               for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * in_b.value[i];
                             }
                             if (in_b.requires_grad) {
                               Real* gb = in_b.grad_buffer();
                               for (std::size_t i = 0; i < n; ++i) gb[i] += self.grad[i] * in_a.value[i];
                             }
                           });
}

template <class Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor) {
  std::vector<Real> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  return make_result<Real>(a.shape(), std::move(out), {a.node()}, "scale",
                           [factor](Node<Real>& self) {
                             Real* ga = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += factor * self.grad[i];
                           });
}

template <class Real>
Tensor<Real> sum(const Tensor<Real>& a) {
  Real s = 0;
  for (Real v : a.values()) s += v;
  return make_result<Real>({1}, {s}, {a.node()}, "sum", [](Node<Real>& self) {
    auto& in = *self.inputs[0];
    Real* ga = in.grad_buffer();
    for (std::size_t i = 0; i < in.value.size(); ++i) ga[i] += self.grad[0];
  });
}

template <class Real>
Tensor<Real> mean(const Tensor<Real>& a) {
  return scale(sum(a), Real(1) / static_cast<Real>(a.size()));
}

template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require(a.rank() == 2 && b.rank() == 2,
          "matmul: expected 2-d operands, got " + to_string(a.shape()) + " and " + to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dimensions differ: " + to_string(a.shape()) + " x " +
                             to_string(b.shape()));
  std::vector<Real> out(m * n);
  MMap<Real>(out.data(), m, n).noalias() =
      CMap<Real>(a.values().data(), m, k) * CMap<Real>(b.values().data(), k, n);
  return make_result<Real>({m, n}, std::move(out), {a.node(), b.node()}, "matmul",
                           [m, k, n](Node<Real>& self) {
                             auto& in_a = *self.inputs[0];
                             auto& in_b = *self.inputs[1];
                             CMap<Real> g(self.grad.data(), m, n);
                             if (in_a.requires_grad) {
                               MMap<Real>(in_a.grad_buffer(), m, k).noalias() +=
                                   g * CMap<Real>(in_b.value.data(), k, n).transpose();
                             }
                             if (in_b.requires_grad) {
                               MMap<Real>(in_b.grad_buffer(), k, n).noalias() +=
                                   CMap<Real>(in_a.value.data(), m, k).transpose() * g;
                             }
                           });
}

namespace {

// Maps each flat index of the axis-swapped tensor to the source flat index.
std::vector<std::size_t> swap_axes_index(const Shape& in_shape, std::size_t ax0, std::size_t ax1,
                                         Shape& out_shape) {
  out_shape = in_shape;
  std::swap(out_shape[ax0], out_shape[ax1]);
  const std::size_t r = in_shape.size();
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in_shape[i];
  std::vector<std::size_t> src_stride = in_stride;
  std::swap(src_stride[ax0], src_stride[ax1]);
  const std::size_t n = numel(in_shape);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < r; ++d) src += idx[d] * src_stride[d];
    map[flat] = src;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

}  // namespace

template <class Real>
Tensor<Real> transpose(const Tensor<Real>& a, std::size_t axis0, std::size_t axis1) {
  require(axis0 < a.rank() && axis1 < a.rank(),
          "transpose: axes out of range for shape " + to_string(a.shape()));
  Shape out_shape;
  auto map = swap_axes_index(a.shape(), axis0, axis1, out_shape);
  std::vector<Real> out(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[map[i]];
  return make_result<Real>(std::move(out_shape), std::move(out), {a.node()}, "transpose",
                           [map = std::move(map)](Node<Real>& self) {
                             Real* ga = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < map.size(); ++i) ga[map[i]] += self.grad[i];
                           });
}

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape) {
  require(numel(shape) == a.size(),
          "reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  std::vector<Real> out(a.values().begin(), a.values().end());
  return make_result<Real>(std::move(shape), std::move(out), {a.node()}, "reshape",
                           [](Node<Real>& self) {
                             Real* ga = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
                           });
}

template <class Real>
Tensor<Real> concat(std::span<const Tensor<Real>> parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].shape();
  require(axis < first.size(), "concat: axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> lens;
  std::vector<NodePtr<Real>> inputs;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    require(ok, "concat: incompatible shapes " + to_string(first) + " and " + to_string(s));
    out_shape[axis] += s[axis];
    lens.push_back(s[axis]);
    inputs.push_back(p.node());
  }
  const std::size_t outer = prod(first, 0, axis);
  const std::size_t inner = prod(first, axis + 1, first.size());
  const std::size_t total = out_shape[axis];
  std::vector<Real> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto pv = parts[p].values();
    const std::size_t block = lens[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.data() + o * block, block, out.data() + (o * total + offset) * inner);
    }
    offset += lens[p];
  }
  return make_result<Real>(std::move(out_shape), std::move(out), std::move(inputs), "concat",
                           [lens, outer, inner, total](Node<Real>& self) {
                             std::size_t off = 0;
                             for (std::size_t p = 0; p < lens.size(); ++p) {
                               auto& in = *self.inputs[p];
                               const std::size_t block = lens[p] * inner;
                               if (in.requires_grad) {
                                 Real* gi = in.grad_buffer();
                                 for (std::size_t o = 0; o < outer; ++o) {
                                   const Real* src = self.grad.data() + (o * total + off) * inner;
                                   for (std::size_t i = 0; i < block; ++i) gi[o * block + i] += src[i];
                                 }
                               }
                               off += lens[p];
                             }
                           });
}

template <class Real>
Tensor<Real> slice(const Tensor<Real>& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  require(axis < s.size() && length > 0 && start + length <= s[axis],
          "slice: [" + std::to_string(start) + ", " + std::to_string(start + length) +
              ") out of range on axis " + std::to_string(axis) + " of " + to_string(s));
  Shape out_shape = s;
  out_shape[axis] = length;
  const std::size_t outer = prod(s, 0, axis);
  const std::size_t inner = prod(s, axis + 1, s.size());
  const std::size_t full = s[axis];
  std::vector<Real> out(numel(out_shape));
  const auto av = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(av.data() + (o * full + start) * inner, length * inner, out.data() + o * length * inner);
  }
  return make_result<Real>(std::move(out_shape), std::move(out), {a.node()}, "slice",
                           [outer, inner, full, start, length](Node<Real>& self) {
                             Real* ga = self.inputs[0]->grad_buffer();
                             for (std::size_t o = 0; o < outer; ++o) {
                               Real* dst = ga + (o * full + start) * inner;
                               const Real* src = self.grad.data() + o * length * inner;
                               for (std::size_t i = 0; i < length * inner; ++i) dst[i] += src[i];
                             }
                           });
}

template <class Real>
Tensor<Real> embedding_lookup(const Tensor<Real>& table, std::span<const std::int32_t> ids) {
  require(table.rank() == 2, "embedding_lookup: table must be 2-d, got " + to_string(table.shape()));
  require(!ids.empty(), "embedding_lookup: no ids");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  for (auto id : idx) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " outside table of " +
                       std::to_string(rows) + " rows");
    }
  }
  const std::size_t n = idx.size();
  std::vector<Real> out(n * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(tv.data() + static_cast<std::size_t>(idx[i]) * d, d, out.data() + i * d);
  }
  return make_result<Real>({n, d}, std::move(out), {table.node()}, "embedding_lookup",
                           [idx = std::move(idx), d](Node<Real>& self) {
                             Real* gt = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               Real* row = gt + static_cast<std::size_t>(idx[i]) * d;
                               const Real* g = self.grad.data() + i * d;
                               for (std::size_t j = 0; j < d; ++j) row[j] += g[j];
                             }
                           });
}

template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Real eps) {
  const std::size_t d = x.shape().back();
  require(gain.size() == d && bias.size() == d,
          "layer_norm: gain/bias must have " + std::to_string(d) + " entries");
  const std::size_t rows = x.size() / d;
  std::vector<Real> xhat(x.size()), inv_std(rows), out(x.size());
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xv.data() + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(d);
    const Real inv = Real(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (row[j] - mu) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_result<Real>(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()}, "layer_norm",
      [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](Node<Real>& self) {
        auto& in_x = *self.inputs[0];
        auto& in_g = *self.inputs[1];
        auto& in_b = *self.inputs[2];
        const Real* g = self.grad.data();
        if (in_g.requires_grad) {
          Real* gg = in_g.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (in_b.requires_grad) {
          Real* gb = in_b.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
        if (in_x.requires_grad) {
          Real* gx = in_x.grad_buffer();
          const Real* gain_v = in_g.value.data();
          const Real dn = static_cast<Real>(d);
          for (std::size_t r = 0; r < rows; ++r) {
            Real s1 = 0, s2 = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = g[r * d + j] * gain_v[j];
              s1 += dh;
              s2 += dh * xhat[r * d + j];
            }
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = g[r * d + j] * gain_v[j];
              gx[r * d + j] += inv_std[r] / dn * (dn * dh - s1 - xhat[r * d + j] * s2);
            }
          }
        }
      });
}

template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Tensor<Real>& running_mean, Tensor<Real>& running_var, bool training,
                        Real momentum, Real eps) {
  require(x.rank() == 2 || x.rank() == 3,
          "batch_norm: expected [B x C] or [B x C x L], got " + to_string(x.shape()));
  const std::size_t batch = x.dim(0), channels = x.dim(1);
  const std::size_t len = x.rank() == 3 ? x.dim(2) : 1;
  require(gain.size() == channels && bias.size() == channels && running_mean.size() == channels &&
              running_var.size() == channels,
          "batch_norm: parameter sizes must equal channel count " + std::to_string(channels));
  const std::size_t count = batch * len;
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<Real> mu(channels), inv(channels), xhat(x.size()), out(x.size());
  auto at = [&](std::size_t b, std::size_t c, std::size_t l) { return (b * channels + c) * len + l; };
  for (std::size_t c = 0; c < channels; ++c) {
    Real m, var;
    if (training) {
      m = 0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) m += xv[at(b, c, l)];
      m /= static_cast<Real>(count);
      var = 0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) var += (xv[at(b, c, l)] - m) * (xv[at(b, c, l)] - m);
      var /= static_cast<Real>(count);
      const Real unbiased = count > 1 ? var * static_cast<Real>(count) / static_cast<Real>(count - 1) : var;
      auto rm = running_mean.mutable_values();
      auto rv = running_var.mutable_values();
      rm[c] = (Real(1) - momentum) * rm[c] + momentum * m;
      rv[c] = (Real(1) - momentum) * rv[c] + momentum * unbiased;
    } else {
      m = running_mean.values()[c];
      var = running_var.values()[c];
    }
    mu[c] = m;
    inv[c] = Real(1) / std::sqrt(var + eps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t l = 0; l < len; ++l) {
        const auto i = at(b, c, l);
        xhat[i] = (xv[i] - m) * inv[c];
        out[i] = xhat[i] * gv[c] + bv[c];
      }
    }
  }
  return make_result<Real>(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()}, "batch_norm",
      [xhat = std::move(xhat), inv = std::move(inv), training, batch, channels, len](Node<Real>& self) {
        auto& in_x = *self.inputs[0];
        auto& in_g = *self.inputs[1];
        auto& in_b = *self.inputs[2];
        const Real* g = self.grad.data();
        const std::size_t count = batch * len;
        auto at = [&](std::size_t b, std::size_t c, std::size_t l) { return (b * channels + c) * len + l; };
        for (std::size_t c = 0; c < channels; ++c) {
          Real s1 = 0, s2 = 0;
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t l = 0; l < len; ++l) {
              const auto i = at(b, c, l);
              s1 += g[i];
              s2 += g[i] * xhat[i];
            }
          }
          if (in_g.requires_grad) in_g.grad_buffer()[c] += s2;
          if (in_b.requires_grad) in_b.grad_buffer()[c] += s1;
          if (!in_x.requires_grad) continue;
          Real* gx = in_x.grad_buffer();
          const Real gamma = in_g.value[c];
          const Real n = static_cast<Real>(count);
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t l = 0; l < len; ++l) {
              const auto i = at(b, c, l);
              if (training) {
                gx[i] += gamma * inv[c] / n * (n * g[i] - s1 - xhat[i] * s2);
              } else {
                gx[i] += gamma * inv[c] * g[i];
              }
            }
          }
        }
      });
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& x) {
  return leaky_relu(x, Real(0));
}

template <class Real>
Tensor<Real> leaky_relu(const Tensor<Real>& x, Real slope) {
  std::vector<Real> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : slope * xv[i];
  return make_result<Real>(x.shape(), std::move(out), {x.node()}, slope == Real(0) ? "relu" : "leaky_relu",
                           [slope](Node<Real>& self) {
                             auto& in = *self.inputs[0];
                             Real* gx = in.grad_buffer();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               gx[i] += in.value[i] > 0 ? self.grad[i] : slope * self.grad[i];
                           });
}

namespace {

struct ConvGeometry {
  std::size_t batch, c_in, len, c_out, kernel, stride, out_len, pad_left;
};

template <class Real>
void im2col(const Real* x, const ConvGeometry& g, Real* cols) {
  // cols: [c_in * kernel x out_len]
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    for (std::size_t k = 0; k < g.kernel; ++k) {
      Real* dst = cols + (ci * g.kernel + k) * g.out_len;
      for (std::size_t t = 0; t < g.out_len; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * g.stride + k) -
                                   static_cast<std::ptrdiff_t>(g.pad_left);
        dst[t] = (src >= 0 && src < static_cast<std::ptrdiff_t>(g.len)) ? x[ci * g.len + src] : Real(0);
      }
    }
  }
}

template <class Real>
void col2im_add(const Real* cols, const ConvGeometry& g, Real* dx) {
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const Real* src_row = cols + (ci * g.kernel + k) * g.out_len;
      for (std::size_t t = 0; t < g.out_len; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * g.stride + k) -
                                   static_cast<std::ptrdiff_t>(g.pad_left);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(g.len)) dx[ci * g.len + src] += src_row[t];
      }
    }
  }
}

}  // namespace

template <class Real>
Tensor<Real> conv1d(const Tensor<Real>& x, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    std::size_t stride) {
  require(x.rank() == 3, "conv1d: input must be [B x C x L], got " + to_string(x.shape()));
  require(weight.rank() == 3 && weight.dim(1) == x.dim(1),
          "conv1d: weight " + to_string(weight.shape()) + " incompatible with input " + to_string(x.shape()));
  require(bias.size() == weight.dim(0), "conv1d: bias must have one entry per output channel");
  require(stride > 0, "conv1d: stride must be positive");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), weight.dim(0), weight.dim(2), stride, 0, 0};
  g.out_len = (g.len + stride - 1) / stride;
  const std::size_t needed = (g.out_len - 1) * stride + g.kernel;
  const std::size_t pad_total = needed > g.len ? needed - g.len : 0;
  g.pad_left = pad_total / 2;

  const std::size_t ck = g.c_in * g.kernel;
  std::vector<Real> out(g.batch * g.c_out * g.out_len);
  std::vector<Real> cols(ck * g.out_len);
  CMap<Real> w(weight.values().data(), g.c_out, ck);
  const auto xv = x.values();
  const auto bv = bias.values();
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(xv.data() + b * g.c_in * g.len, g, cols.data());
    MMap<Real> o(out.data() + b * g.c_out * g.out_len, g.c_out, g.out_len);
    o.noalias() = w * CMap<Real>(cols.data(), ck, g.out_len);
    for (std::size_t co = 0; co < g.c_out; ++co) o.row(co).array() += bv[co];
  }
  return make_result<Real>({g.batch, g.c_out, g.out_len}, std::move(out),
                           {x.node(), weight.node(), bias.node()}, "conv1d", [g](Node<Real>& self) {
                             auto& in_x = *self.inputs[0];
                             auto& in_w = *self.inputs[1];
                             auto& in_b = *self.inputs[2];
                             const std::size_t ck = g.c_in * g.kernel;
                             std::vector<Real> cols(ck * g.out_len), dcols(ck * g.out_len);
                             CMap<Real> w(in_w.value.data(), g.c_out, ck);
                             for (std::size_t b = 0; b < g.batch; ++b) {
                               CMap<Real> go(self.grad.data() + b * g.c_out * g.out_len, g.c_out, g.out_len);
                               if (in_b.requires_grad) {
                                 Real* gb = in_b.grad_buffer();
                                 for (std::size_t co = 0; co < g.c_out; ++co) gb[co] += go.row(co).sum();
                               }
                               if (in_w.requires_grad) {
                                 im2col(in_x.value.data() + b * g.c_in * g.len, g, cols.data());
                                 MMap<Real>(in_w.grad_buffer(), g.c_out, ck).noalias() +=
                                     go * CMap<Real>(cols.data(), ck, g.out_len).transpose();
                               }
                               if (in_x.requires_grad) {
                                 MMap<Real>(dcols.data(), ck, g.out_len).noalias() = w.transpose() * go;
                                 col2im_add(dcols.data(), g, in_x.grad_buffer() + b * g.c_in * g.len);
                               }
                             }
                           });
}

template <class Real>
Tensor<Real> max_pool1d(const Tensor<Real>& x, std::size_t kernel, std::size_t stride) {
  require(x.rank() == 3, "max_pool1d: input must be [B x C x L], got " + to_string(x.shape()));
  require(kernel > 0 && stride > 0, "max_pool1d: kernel and stride must be positive");
  const std::size_t rows = x.dim(0) * x.dim(1), len = x.dim(2);
  const std::size_t span_len = len > kernel ? len - kernel : 0;
  const std::size_t out_len = (span_len + stride - 1) / stride + 1;
  std::vector<Real> out(rows * out_len);
  std::vector<std::size_t> arg(rows * out_len);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::size_t lo = t * stride, hi = std::min(lo + kernel, len);
      std::size_t best = lo;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        if (xv[r * len + i] > xv[r * len + best]) best = i;
      }
      out[r * out_len + t] = xv[r * len + best];
      arg[r * out_len + t] = r * len + best;
    }
  }
  return make_result<Real>({x.dim(0), x.dim(1), out_len}, std::move(out), {x.node()}, "max_pool1d",
                           [arg = std::move(arg)](Node<Real>& self) {
                             Real* gx = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += self.grad[i];
                           });
}

template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis) {
  const Shape& s = x.shape();
  require(axis < s.size(), "softmax: axis " + std::to_string(axis) + " invalid for " + to_string(s));
  const std::size_t outer = prod(s, 0, axis), n = s[axis], inner = prod(s, axis + 1, s.size());
  std::vector<Real> out(x.size());
  const auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      auto at = [&](std::size_t j) { return (o * n + j) * inner + i; };
      Real mx = xv[at(0)];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[at(j)]);
      Real z = 0;
      for (std::size_t j = 0; j < n; ++j) {
        out[at(j)] = std::exp(xv[at(j)] - mx);
        z += out[at(j)];
      }
      for (std::size_t j = 0; j < n; ++j) out[at(j)] /= z;
    }
  }
  return make_result<Real>(s, std::move(out), {x.node()}, "softmax", [outer, n, inner](Node<Real>& self) {
    Real* gx = self.inputs[0]->grad_buffer();
    const Real* y = self.value.data();
    const Real* g = self.grad.data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        auto at = [&](std::size_t j) { return (o * n + j) * inner + i; };
        Real dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += g[at(j)] * y[at(j)];
        for (std::size_t j = 0; j < n; ++j) gx[at(j)] += y[at(j)] * (g[at(j)] - dot);
      }
    }
  });
}

template <class Real>
Tensor<Real> masked_softmax(const Tensor<Real>& scores, std::span<const std::uint8_t> key_mask) {
  require(scores.rank() == 2 || scores.rank() == 3,
          "masked_softmax: scores must be [n x m] or [G x n x m], got " + to_string(scores.shape()));
  const std::size_t m = scores.shape().back();
  const std::size_t rows = scores.size() / m;
  const std::size_t per_group = scores.dim(scores.rank() - 2);
  const std::size_t groups = rows / per_group;
  const std::size_t masks = key_mask.size() / m;
  require(masks > 0 && key_mask.size() % m == 0 && groups % masks == 0,
          "masked_softmax: mask length " + std::to_string(key_mask.size()) + " does not fit scores " +
              to_string(scores.shape()));
  const std::size_t groups_per_mask = groups / masks;
  std::vector<Real> out(scores.size(), Real(0));
  const auto sv = scores.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = sv.data() + r * m;
    const std::uint8_t* mask = key_mask.data() + (r / per_group / groups_per_mask) * m;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (mask[j]) mx = std::max(mx, row[j]);
    if (mx == -std::numeric_limits<Real>::infinity()) continue;
    Real z = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!mask[j]) continue;
      out[r * m + j] = std::exp(row[j] - mx);
      z += out[r * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] /= z;
  }
  return make_result<Real>(scores.shape(), std::move(out), {scores.node()}, "masked_softmax",
                           [rows, m](Node<Real>& self) {
                             Real* gx = self.inputs[0]->grad_buffer();
                             const Real* y = self.value.data();
                             const Real* g = self.grad.data();
                             for (std::size_t r = 0; r < rows; ++r) {
                               Real dot = 0;
                               for (std::size_t j = 0; j < m; ++j) dot += g[r * m + j] * y[r * m + j];
                               for (std::size_t j = 0; j < m; ++j)
                                 gx[r * m + j] += y[r * m + j] * (g[r * m + j] - dot);
                             }
                           });
}

template <class Real>
Tensor<Real> bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0),
          "bmm: expected [G x m x k] and [G x k x n], got " + to_string(a.shape()) + " and " +
              to_string(b.shape()));
  const std::size_t groups = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  require((transpose_b ? b.dim(2) : b.dim(1)) == k,
          "bmm: inner dimensions differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  std::vector<Real> out(groups * m * n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t g = 0; g < groups; ++g) {
    CMap<Real> ag(av.data() + g * m * k, m, k);
    MMap<Real> og(out.data() + g * m * n, m, n);
    if (transpose_b) og.noalias() = ag * CMap<Real>(bv.data() + g * n * k, n, k).transpose();
    else og.noalias() = ag * CMap<Real>(bv.data() + g * k * n, k, n);
  }
  return make_result<Real>({groups, m, n}, std::move(out), {a.node(), b.node()}, "bmm",
                           [groups, m, k, n, transpose_b](Node<Real>& self) {
                             auto& in_a = *self.inputs[0];
                             auto& in_b = *self.inputs[1];
                             for (std::size_t g = 0; g < groups; ++g) {
                               CMap<Real> go(self.grad.data() + g * m * n, m, n);
                               const Real* bg = in_b.value.data() + g * k * n;
                               if (in_a.requires_grad) {
                                 MMap<Real> ga(in_a.grad_buffer() + g * m * k, m, k);
                                 if (transpose_b) ga.noalias() += go * CMap<Real>(bg, n, k);
                                 else ga.noalias() += go * CMap<Real>(bg, k, n).transpose();
                               }
                               if (in_b.requires_grad) {
                                 CMap<Real> ag(in_a.value.data() + g * m * k, m, k);
                                 if (transpose_b) {
                                   MMap<Real>(in_b.grad_buffer() + g * n * k, n, k).noalias() += go.transpose() * ag;
                                 } else {
                                   MMap<Real>(in_b.grad_buffer() + g * k * n, k, n).noalias() += ag.transpose() * go;
                                 }
                               }
                             }
                           });
}

template <class Real>
Tensor<Real> cross_entropy_loss(const Tensor<Real>& logits, std::span<const std::int32_t> targets) {
  require(logits.rank() == 2, "cross_entropy_loss: logits must be [N x M], got " + to_string(logits.shape()));
  const std::size_t n = logits.dim(0), m = logits.dim(1);
  require(targets.size() == n, "cross_entropy_loss: " + std::to_string(targets.size()) +
                                   " targets for " + std::to_string(n) + " rows");
  for (auto t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= m) {
      throw IndexError("cross_entropy_loss: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(m) + ")");
    }
  }
  std::vector<Real> prob(logits.size());
  const auto lv = logits.values();
  Real loss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const Real* row = lv.data() + r * m;
    Real mx = row[0];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    Real z = 0;
    for (std::size_t j = 0; j < m; ++j) {
      prob[r * m + j] = std::exp(row[j] - mx);
      z += prob[r * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) prob[r * m + j] /= z;
    loss -= row[targets[r]] - mx - std::log(z);
  }
  loss /= static_cast<Real>(n);
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return make_result<Real>({1}, {loss}, {logits.node()}, "cross_entropy",
                           [prob = std::move(prob), tgt = std::move(tgt), n, m](Node<Real>& self) {
                             Real* gx = self.inputs[0]->grad_buffer();
                             const Real scale_g = self.grad[0] / static_cast<Real>(n);
                             for (std::size_t r = 0; r < n; ++r) {
                               for (std::size_t j = 0; j < m; ++j) {
                                 const Real y = static_cast<std::size_t>(tgt[r]) == j ? Real(1) : Real(0);
                                 gx[r * m + j] += scale_g * (prob[r * m + j] - y);
                               }
                             }
                           });
}

template <class Real>
Tensor<Real> dropout(const Tensor<Real>& x, Real p, std::mt19937_64& rng) {
  if (p <= Real(0)) return x;
  if (p >= Real(1)) throw NumericError("dropout probability must be < 1");
  const Real keep_scale = Real(1) / (Real(1) - p);
  std::vector<Real> mask(x.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : mask) v = u(rng) >= static_cast<double>(p) ? keep_scale : Real(0);
  std::vector<Real> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return make_result<Real>(x.shape(), std::move(out), {x.node()}, "dropout",
                           [mask = std::move(mask)](Node<Real>& self) {
                             Real* gx = self.inputs[0]->grad_buffer();
                             for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += self.grad[i] * mask[i];
                           });
}

#define KITE_INSTANTIATE_OPS(Real)                                                                   \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                               \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                               \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                                            \
  template Tensor<Real> sum(const Tensor<Real>&);                                                    \
  template Tensor<Real> mean(const Tensor<Real>&);                                                   \
  template Tensor<Real> matmul(const Tensor<Real>&, const Tensor<Real>&);                            \
  template Tensor<Real> transpose(const Tensor<Real>&, std::size_t, std::size_t);                    \
  template Tensor<Real> reshape(const Tensor<Real>&, Shape);                                         \
  template Tensor<Real> concat(std::span<const Tensor<Real>>, std::size_t);                          \
  template Tensor<Real> slice(const Tensor<Real>&, std::size_t, std::size_t, std::size_t);           \
  template Tensor<Real> embedding_lookup(const Tensor<Real>&, std::span<const std::int32_t>);        \
  template Tensor<Real> layer_norm(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,    \
                                   Real);                                                            \
  template Tensor<Real> batch_norm(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,    \
                                   Tensor<Real>&, Tensor<Real>&, bool, Real, Real);                  \
  template Tensor<Real> relu(const Tensor<Real>&);                                                   \
  template Tensor<Real> leaky_relu(const Tensor<Real>&, Real);                                       \
  template Tensor<Real> conv1d(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,        \
                               std::size_t);                                                         \
  template Tensor<Real> max_pool1d(const Tensor<Real>&, std::size_t, std::size_t);                   \
  template Tensor<Real> softmax(const Tensor<Real>&, std::size_t);                                   \
  template Tensor<Real> masked_softmax(const Tensor<Real>&, std::span<const std::uint8_t>);          \
  template Tensor<Real> bmm(const Tensor<Real>&, const Tensor<Real>&, bool);                         \
  template Tensor<Real> cross_entropy_loss(const Tensor<Real>&, std::span<const std::int32_t>);      \
  template Tensor<Real> dropout(const Tensor<Real>&, Real, std::mt19937_64&);

KITE_INSTANTIATE_OPS(float)
KITE_INSTANTIATE_OPS(double)

#undef KITE_INSTANTIATE_OPS

}  // namespace kite::ad
