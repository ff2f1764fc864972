// SPDX-License-Identifier: Apache-2.0
#include "mcvqa/autodiff/ops.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcvqa/error.hpp"

namespace mcvqa::ad {
namespace {

// Number of leading-batch repetitions of `b` inside `a`, or throws.
std::size_t broadcast_repeats(const Shape& a, const Shape& b, const char* op) {
  const bool suffix = b.size() <= a.size() && std::equal(b.rbegin(), b.rend(), a.rbegin());
  if (!suffix) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a) + " and " +
                         shape_string(b) + " are not compatible");
  }
  return shape_size(a) / std::max<std::size_t>(shape_size(b), 1);
}

// Splits `shape` around `axis` into outer * len * inner.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename Real>
Real stable_sigmoid(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

// c[m,n] += a[m,k] * b[k,n]
template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * n;
    Real* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real* brow = b + p * n;
      Real acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      Real* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
using Unary = Real (*)(Real);

}  // namespace

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t reps = broadcast_repeats(av.shape(), bv.shape(), "add");
  const std::size_t bn = bv.size();
  Tensor<Real> out(av.shape());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t j = 0; j < bn; ++j) out[r * bn + j] = av[r * bn + j] + bv[j];
  }
  return a.graph->record(std::move(out), {a, b}, [a, b, reps, bn](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    if (g.requires_grad(a)) {
      auto ga = g.grad_buffer(a.id);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad_buffer(b.id);
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t j = 0; j < bn; ++j) gb[j] += up[r * bn + j];
      }
    }
  });
}

template <typename Real>
Var<Real> sub(Var<Real> a, Var<Real> b) {
  return add(a, scale(b, -1.0));
}

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t reps = broadcast_repeats(av.shape(), bv.shape(), "mul");
  const std::size_t bn = bv.size();
  Tensor<Real> out(av.shape());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t j = 0; j < bn; ++j) out[r * bn + j] = av[r * bn + j] * bv[j];
  }
  return a.graph->record(std::move(out), {a, b}, [a, b, reps, bn](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    const auto& av = g.value(a);
    const auto& bv = g.value(b);
    if (g.requires_grad(a)) {
      auto ga = g.grad_buffer(a.id);
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t j = 0; j < bn; ++j) ga[r * bn + j] += up[r * bn + j] * bv[j];
      }
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad_buffer(b.id);
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t j = 0; j < bn; ++j) gb[j] += up[r * bn + j] * av[r * bn + j];
      }
    }
  });
}

template <typename Real>
Var<Real> scale(Var<Real> a, double factor) {
  const auto& av = a.value();
  const Real f = static_cast<Real>(factor);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * f;
  return a.graph->record(std::move(out), {a}, [a, f](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * f;
  });
}

template <typename Real>
Var<Real> add_scalar(Var<Real> a, double offset) {
  const auto& av = a.value();
  const Real c = static_cast<Real>(offset);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  return a.graph->record(std::move(out), {a}, [a](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
  });
}

template <typename Real>
Var<Real> tanh(Var<Real> a) {
  const auto& av = a.value();
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  return a.graph->record(std::move(out), {a}, [a](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    const auto& y = g.value(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * (Real(1) - y[i] * y[i]);
  });
}

template <typename Real>
Var<Real> sigmoid(Var<Real> a) {
  const auto& av = a.value();
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = stable_sigmoid(av[i]);
  return a.graph->record(std::move(out), {a}, [a](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    const auto& y = g.value(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * y[i] * (Real(1) - y[i]);
  });
}

template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() < 1 || bv.rank() != 2 || av.shape().back() != bv.dim(0)) {
    throw DimensionError("matmul: inner dimensions of " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()) + " do not agree");
  }
  const std::size_t k = bv.dim(0);
  const std::size_t n = bv.dim(1);
  const std::size_t m = av.size() / std::max<std::size_t>(k, 1);
  Shape out_shape = av.shape();
  out_shape.back() = n;
  Tensor<Real> out(out_shape);
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return a.graph->record(std::move(out), {a, b}, [a, b, m, k, n](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    if (g.requires_grad(a)) {
      gemm_nt(up.data(), g.value(b).data().data(), g.grad_buffer(a.id).data(), m, n, k);
    }
    if (g.requires_grad(b)) {
      gemm_tn(g.value(a).data().data(), up.data(), g.grad_buffer(b.id).data(), m, k, n);
    }
  });
}

template <typename Real>
Var<Real> bmm(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(1)) {
    throw DimensionError("bmm: shapes " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()) + " do not agree");
  }
  const std::size_t batch = av.dim(0);
  const std::size_t m = av.dim(1);
  const std::size_t k = av.dim(2);
  const std::size_t n = bv.dim(2);
  Tensor<Real> out(Shape{batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    gemm_nn(av.data().data() + i * m * k, bv.data().data() + i * k * n, out.data().data() + i * m * n,
            m, k, n);
  }
  return a.graph->record(std::move(out), {a, b},
                         [a, b, batch, m, k, n](Graph<Real>& g, std::uint32_t self) {
                           const auto up = g.upstream(self);
                           if (g.requires_grad(a)) {
                             Real* ga = g.grad_buffer(a.id).data();
                             const Real* bd = g.value(b).data().data();
                             for (std::size_t i = 0; i < batch; ++i) {
                               gemm_nt(up.data() + i * m * n, bd + i * k * n, ga + i * m * k, m, n, k);
                             }
                           }
                           if (g.requires_grad(b)) {
                             Real* gb = g.grad_buffer(b.id).data();
                             const Real* ad = g.value(a).data().data();
                             for (std::size_t i = 0; i < batch; ++i) {
                               gemm_tn(ad + i * m * k, up.data() + i * m * n, gb + i * k * n, m, k, n);
                             }
                           }
                         });
}

template <typename Real>
Var<Real> transpose(Var<Real> a) {
  const auto& av = a.value();
  if (av.rank() < 2) {
    throw DimensionError("transpose: need rank >= 2, got " + shape_string(av.shape()));
  }
  const std::size_t rows = av.dim(av.rank() - 2);
  const std::size_t cols = av.dim(av.rank() - 1);
  const std::size_t batch = av.size() / std::max<std::size_t>(rows * cols, 1);
  Shape out_shape = av.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  Tensor<Real> out(out_shape);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t off = b * rows * cols;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[off + j * rows + i] = av[off + i * cols + j];
    }
  }
  return a.graph->record(std::move(out), {a}, [a, batch, rows, cols](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = b * rows * cols;
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) ga[off + i * cols + j] += up[off + j * rows + i];
      }
    }
  });
}

template <typename Real>
Var<Real> reshape(Var<Real> a, Shape shape) {
  Tensor<Real> out = a.value().reshaped(std::move(shape));
  return a.graph->record(std::move(out), {a}, [a](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i];
  });
}

template <typename Real>
Var<Real> softmax(Var<Real> x, std::size_t axis) {
  const auto& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "softmax");
  if (s.len == 0) throw DimensionError("softmax: empty axis in " + shape_string(xv.shape()));
  Tensor<Real> out(xv.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.len * s.inner + in;
      Real hi = -std::numeric_limits<Real>::infinity();
      for (std::size_t l = 0; l < s.len; ++l) hi = std::max(hi, xv[base + l * s.inner]);
      Real total = 0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const Real e = std::exp(xv[base + l * s.inner] - hi);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
    }
  }
  return x.graph->record(std::move(out), {x}, [x, s](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    const auto& y = g.value(self);
    auto gx = g.grad_buffer(x.id);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.len * s.inner + in;
        Real dot = 0;
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t i = base + l * s.inner;
          dot += up[i] * y[i];
        }
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t i = base + l * s.inner;
          gx[i] += y[i] * (up[i] - dot);
        }
      }
    }
  });
}

template <typename Real>
Var<Real> cross_entropy(Var<Real> probs, std::size_t target) {
  const auto& pv = probs.value();
  if (target >= pv.size()) {
    throw DimensionError("cross_entropy: target " + std::to_string(target) +
                         " out of range for " + shape_string(pv.shape()));
  }
  const Real floor = static_cast<Real>(kProbabilityFloor);
  const Real p = pv[target];
  const bool clamped = p <= floor;
  if (clamped) {
    spdlog::warn("cross_entropy: probability {} at target {} clamped to {}", static_cast<double>(p),
                 target, kProbabilityFloor);
  }
  const Real loss = -std::log(clamped ? floor : p);
  return probs.graph->record(Tensor<Real>::scalar(loss), {probs},
                             [probs, target, clamped](Graph<Real>& g, std::uint32_t self) {
                               if (clamped) return;
                               const Real up = g.upstream(self)[0];
                               g.grad_buffer(probs.id)[target] -= up / g.value(probs)[target];
                             });
}

template <typename Real>
Var<Real> max_pool(Var<Real> x, std::size_t axis) {
  const auto& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "max_pool");
  if (s.len == 0) throw DimensionError("max_pool: empty axis in " + shape_string(xv.shape()));
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<Real> out(out_shape);
  std::vector<std::size_t> arg(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.len * s.inner + in;
      std::size_t best = base;
      for (std::size_t l = 1; l < s.len; ++l) {
        const std::size_t i = base + l * s.inner;
        if (xv[i] > xv[best]) best = i;
      }
      out[o * s.inner + in] = xv[best];
      arg[o * s.inner + in] = best;
    }
  }
  return x.graph->record(std::move(out), {x}, [x, arg = std::move(arg)](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto gx = g.grad_buffer(x.id);
    for (std::size_t i = 0; i < up.size(); ++i) gx[arg[i]] += up[i];
  });
}

template <typename Real>
Var<Real> concat(std::span<const Var<Real>> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + shape_string(first));
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& sh = p.shape();
    bool ok = sh.size() == first.size();
    for (std::size_t i = 0; ok && i < sh.size(); ++i) ok = i == axis || sh[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: shapes " + shape_string(first) + " and " + shape_string(sh) +
                           " differ off axis " + std::to_string(axis));
    }
    widths.push_back(sh[axis]);
    total += sh[axis];
  }
  const AxisSplit s = split_axis(first, axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = total;
  Tensor<Real> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& pv = parts[p].value();
    const std::size_t chunk = widths[p] * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data().data() + o * chunk, chunk,
                  out.data().data() + o * total * s.inner + offset * s.inner);
    }
    offset += widths[p];
  }
  std::vector<Var<Real>> owned(parts.begin(), parts.end());
  return parts.front().graph->record(
      std::move(out), parts,
      [owned, widths, total, s](Graph<Real>& g, std::uint32_t self) {
        const auto up = g.upstream(self);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < owned.size(); ++p) {
          const std::size_t chunk = widths[p] * s.inner;
          if (g.requires_grad(owned[p])) {
            auto gp = g.grad_buffer(owned[p].id);
            for (std::size_t o = 0; o < s.outer; ++o) {
              const Real* src = up.data() + o * total * s.inner + offset * s.inner;
              Real* dst = gp.data() + o * chunk;
              for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          }
          offset += widths[p];
        }
      });
}

template <typename Real>
Var<Real> slice(Var<Real> x, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "slice");
  if (begin > end || end > s.len) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + shape_string(xv.shape()) + " axis " +
                         std::to_string(axis));
  }
  const std::size_t width = end - begin;
  Shape out_shape = xv.shape();
  out_shape[axis] = width;
  Tensor<Real> out(out_shape);
  const std::size_t chunk = width * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data().data() + o * s.len * s.inner + begin * s.inner, chunk,
                out.data().data() + o * chunk);
  }
  return x.graph->record(std::move(out), {x}, [x, s, begin, chunk](Graph<Real>& g, std::uint32_t self) {
    const auto up = g.upstream(self);
    auto gx = g.grad_buffer(x.id);
    for (std::size_t o = 0; o < s.outer; ++o) {
      Real* dst = gx.data() + o * s.len * s.inner + begin * s.inner;
      const Real* src = up.data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

template <typename Real>
Var<Real> embedding(Var<Real> table, std::span<const std::size_t> ids) {
  const auto& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("embedding: table must be 2-D, got " + shape_string(tv.shape()));
  const std::size_t vocab = tv.dim(0);
  const std::size_t d = tv.dim(1);
  Tensor<Real> out(Shape{ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw VocabularyError("embedding: token id " + std::to_string(ids[r]) +
                            " outside vocabulary of size " + std::to_string(vocab));
    }
    std::copy_n(tv.data().data() + ids[r] * d, d, out.data().data() + r * d);
  }
  std::vector<std::size_t> owned(ids.begin(), ids.end());
  return table.graph->record(std::move(out), {table},
                             [table, d, owned = std::move(owned)](Graph<Real>& g, std::uint32_t self) {
                               const auto up = g.upstream(self);
                               auto gt = g.grad_buffer(table.id);
                               for (std::size_t r = 0; r < owned.size(); ++r) {
                                 Real* dst = gt.data() + owned[r] * d;
                                 const Real* src = up.data() + r * d;
                                 for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                               }
                             });
}

template <typename Real>
Var<Real> sum(Var<Real> x) {
  const auto& xv = x.value();
  Real total = 0;
  for (Real v : xv.data()) total += v;
  return x.graph->record(Tensor<Real>::scalar(total), {x}, [x](Graph<Real>& g, std::uint32_t self) {
    const Real up = g.upstream(self)[0];
    auto gx = g.grad_buffer(x.id);
    for (auto& v : gx) v += up;
  });
}

template <typename Real>
Var<Real> mean(Var<Real> x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

template <typename Real>
Var<Real> weighted_sum(std::span<const Var<Real>> terms, std::span<const double> weights) {
  if (terms.empty() || terms.size() != weights.size()) {
    throw DimensionError("weighted_sum: need one weight per term");
  }
  Real total = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].value().size() != 1) {
      throw DimensionError("weighted_sum: term " + std::to_string(i) + " is not a scalar");
    }
    total += static_cast<Real>(weights[i]) * terms[i].value()[0];
  }
  std::vector<Var<Real>> owned(terms.begin(), terms.end());
  std::vector<double> w(weights.begin(), weights.end());
  return terms.front().graph->record(Tensor<Real>::scalar(total), terms,
                                     [owned, w](Graph<Real>& g, std::uint32_t self) {
                                       const Real up = g.upstream(self)[0];
                                       for (std::size_t i = 0; i < owned.size(); ++i) {
                                         if (g.requires_grad(owned[i])) {
                                           g.grad_buffer(owned[i].id)[0] += up * static_cast<Real>(w[i]);
                                         }
                                       }
                                     });
}

#define MCVQA_INSTANTIATE_OPS(Real)                                                           \
  template Var<Real> add(Var<Real>, Var<Real>);                                               \
  template Var<Real> sub(Var<Real>, Var<Real>);                                               \
  template Var<Real> mul(Var<Real>, Var<Real>);                                               \
  template Var<Real> scale(Var<Real>, double);                                                \
  template Var<Real> add_scalar(Var<Real>, double);                                           \
  template Var<Real> tanh(Var<Real>);                                                         \
  template Var<Real> sigmoid(Var<Real>);                                                      \
  template Var<Real> matmul(Var<Real>, Var<Real>);                                            \
  template Var<Real> bmm(Var<Real>, Var<Real>);                                               \
  template Var<Real> transpose(Var<Real>);                                                    \
  template Var<Real> reshape(Var<Real>, Shape);                                               \
  template Var<Real> softmax(Var<Real>, std::size_t);                                         \
  template Var<Real> cross_entropy(Var<Real>, std::size_t);                                   \
  template Var<Real> max_pool(Var<Real>, std::size_t);                                        \
  template Var<Real> concat(std::span<const Var<Real>>, std::size_t);                         \
  template Var<Real> slice(Var<Real>, std::size_t, std::size_t, std::size_t);                 \
  template Var<Real> embedding(Var<Real>, std::span<const std::size_t>);                      \
  template Var<Real> mean(Var<Real>);                                                         \
  template Var<Real> sum(Var<Real>);                                                          \
  template Var<Real> weighted_sum(std::span<const Var<Real>>, std::span<const double>);

MCVQA_INSTANTIATE_OPS(float)
MCVQA_INSTANTIATE_OPS(double)

#undef MCVQA_INSTANTIATE_OPS

}  // namespace mcvqa::ad
