// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "cuesep/dsp.hpp"

namespace cuesep::ops {
namespace {

using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RMat>;
using CMapM = Eigen::Map<const RMat>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

CMapM cmat(const Tensor& t, long rows, long cols) {
  return CMapM(t.data(), rows, cols);
}
MapM mmat(Tensor& t, long rows, long cols) { return MapM(t.data(), rows, cols); }

void check_same(Var a, Var b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
}

// (outer, n, inner) view of `s` around `axis`.
struct AxisView {
  std::size_t outer = 1, n = 1, inner = 1;
};
AxisView axis_view(const Shape& s, int axis) {
  require(axis >= 0 && axis < static_cast<int>(s.size()), "axis out of range");
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= s[i];
  v.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

Tensor permute_tensor(const Tensor& x, const std::vector<int>& perm) {
  const Shape& s = x.shape();
  const int r = x.rank();
  require(static_cast<int>(perm.size()) == r, "permute: rank mismatch");
  std::vector<std::size_t> in_stride(r, 1);
  for (int i = r - 2; i >= 0; --i) in_stride[i] = in_stride[i + 1] * s[i + 1];
  Shape os(r);
  std::vector<std::size_t> step(r);
  for (int i = 0; i < r; ++i) {
    os[i] = s[perm[i]];
    step[i] = in_stride[perm[i]];
  }
  Tensor out(os);
  if (out.size() == 0) return out;
  std::vector<int> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < out.size(); ++o) {
    out[o] = x[src];
    for (int d = r - 1; d >= 0; --d) {
      if (++idx[d] < os[d]) {
        src += step[d];
        break;
      }
      src -= step[d] * (os[d] - 1);
      idx[d] = 0;
    }
  }
  return out;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------- elementwise

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return a.graph().record(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    for (Var v : {a, b})
      if (Tensor* gv = g.grad_buffer(v))
        for (std::size_t i = 0; i < go.size(); ++i) (*gv)[i] += go[i];
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return a.graph().record(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    if (Tensor* gb = g.grad_buffer(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return a.graph().record(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * b.value()[i];
    if (Tensor* gb = g.grad_buffer(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * a.value()[i];
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  for (auto& v : y.values()) v *= s;
  return a.graph().record(std::move(y), {a}, [a, s](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += s * go[i];
  });
}

Var sigmoid(Var a) {
  Tensor y = a.value();
  for (auto& v : y.values()) v = sigm(v);
  auto cache = std::make_shared<Tensor>(y);
  return a.graph().record(std::move(y), {a}, [a, cache](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i)
        (*ga)[i] += go[i] * (*cache)[i] * (1.0 - (*cache)[i]);
  });
}

Var tanh(Var a) {
  Tensor y = a.value();
  for (auto& v : y.values()) v = std::tanh(v);
  auto cache = std::make_shared<Tensor>(y);
  return a.graph().record(std::move(y), {a}, [a, cache](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i)
        (*ga)[i] += go[i] * (1.0 - (*cache)[i] * (*cache)[i]);
  });
}

Var relu(Var a) {
  Tensor y = a.value();
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return a.graph().record(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i)
        if (a.value()[i] > 0.0) (*ga)[i] += go[i];
  });
}

Var prelu(Var a, Var alpha) {
  require(alpha.value().size() == 1, "prelu: expects a single slope");
  const double k = alpha.value()[0];
  Tensor y = a.value();
  for (auto& v : y.values()) v = v >= 0.0 ? v : k * v;
  return a.graph().record(std::move(y), {a, alpha}, [a, alpha](Graph& g, const Tensor& go) {
    const double k = alpha.value()[0];
    Tensor* ga = g.grad_buffer(a);
    Tensor* gk = g.grad_buffer(alpha);
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double x = a.value()[i];
      if (ga) (*ga)[i] += go[i] * (x >= 0.0 ? 1.0 : k);
      if (gk && x < 0.0) (*gk)[0] += go[i] * x;
    }
  });
}

// ---------------------------------------------------------------- shape

Var reshape(Var a, Shape s) {
  Tensor y = a.value().reshaped(std::move(s));
  return a.graph().record(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
  });
}

Var permute(Var a, const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return a.graph().record(permute_tensor(a.value(), perm), {a},
                          [a, inv](Graph& g, const Tensor& go) {
                            Tensor* ga = g.grad_buffer(a);
                            if (!ga) return;
                            Tensor back = permute_tensor(go, inv);
                            for (std::size_t i = 0; i < back.size(); ++i)
                              (*ga)[i] += back[i];
                          });
}

Var concat(const std::vector<Var>& xs, int axis) {
  require(!xs.empty(), "concat: no inputs");
  Shape s = xs[0].shape();
  int total = 0;
  for (const Var& x : xs) {
    Shape t = x.shape();
    require(t.size() == s.size(), "concat: rank mismatch");
    t[axis] = s[axis];
    require(t == s, "concat: shapes differ off the concat axis");
    total += x.dim(axis);
  }
  Shape os = s;
  os[axis] = total;
  Tensor y(os);
  const AxisView ov = axis_view(os, axis);
  std::size_t off = 0;
  for (const Var& x : xs) {
    const AxisView xv = axis_view(x.shape(), axis);
    for (std::size_t o = 0; o < xv.outer; ++o)
      std::copy_n(x.value().data() + o * xv.n * xv.inner, xv.n * xv.inner,
                  y.data() + (o * ov.n + off) * ov.inner);
    off += xv.n;
  }
  return xs[0].graph().record(std::move(y), xs, [xs, axis, ov](Graph& g, const Tensor& go) {
    std::size_t off = 0;
    for (const Var& x : xs) {
      const AxisView xv = axis_view(x.shape(), axis);
      if (Tensor* gx = g.grad_buffer(x))
        for (std::size_t o = 0; o < xv.outer; ++o)
          for (std::size_t i = 0; i < xv.n * xv.inner; ++i)
            (*gx)[o * xv.n * xv.inner + i] += go[(o * ov.n + off) * ov.inner + i];
      off += xv.n;
    }
  });
}

Var slice(Var a, int axis, int start, int len) {
  const AxisView v = axis_view(a.shape(), axis);
  require(start >= 0 && len >= 0 && start + len <= static_cast<int>(v.n),
          "slice out of range");
  Shape os = a.shape();
  os[axis] = len;
  Tensor y(os);
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(a.value().data() + (o * v.n + start) * v.inner, len * v.inner,
                y.data() + o * len * v.inner);
  return a.graph().record(std::move(y), {a}, [a, v, start, len](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < len * v.inner; ++i)
        (*ga)[(o * v.n + start) * v.inner + i] += go[o * len * v.inner + i];
  });
}

Var resize_axis(Var a, int axis, int len) {
  const AxisView v = axis_view(a.shape(), axis);
  const std::size_t keep = std::min<std::size_t>(v.n, len);
  Shape os = a.shape();
  os[axis] = len;
  Tensor y(os);
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(a.value().data() + o * v.n * v.inner, keep * v.inner,
                y.data() + o * len * v.inner);
  return a.graph().record(std::move(y), {a}, [a, v, len, keep](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < keep * v.inner; ++i)
        (*ga)[o * v.n * v.inner + i] += go[o * len * v.inner + i];
  });
}

// ---------------------------------------------------------------- reductions

Var mean_axis(Var a, int axis) {
  const AxisView v = axis_view(a.shape(), axis);
  Shape os = a.shape();
  os.erase(os.begin() + axis);
  Tensor y(os);
  const double inv = 1.0 / static_cast<double>(v.n);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.n; ++j)
      for (std::size_t i = 0; i < v.inner; ++i)
        y[o * v.inner + i] += a.value()[(o * v.n + j) * v.inner + i];
  for (auto& x : y.values()) x *= inv;
  return a.graph().record(std::move(y), {a}, [a, v, inv](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.n; ++j)
        for (std::size_t i = 0; i < v.inner; ++i)
          (*ga)[(o * v.n + j) * v.inner + i] += go[o * v.inner + i] * inv;
  });
}

Var sum_axis(Var a, int axis) {
  const AxisView v = axis_view(a.shape(), axis);
  Shape os = a.shape();
  os.erase(os.begin() + axis);
  Tensor y(os);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.n; ++j)
      for (std::size_t i = 0; i < v.inner; ++i)
        y[o * v.inner + i] += a.value()[(o * v.n + j) * v.inner + i];
  return a.graph().record(std::move(y), {a}, [a, v](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.n; ++j)
        for (std::size_t i = 0; i < v.inner; ++i)
          (*ga)[(o * v.n + j) * v.inner + i] += go[o * v.inner + i];
  });
}

Var broadcast_axis(Var a, int axis, int n) {
  Shape os = a.shape();
  require(axis >= 0 && axis <= static_cast<int>(os.size()), "broadcast: bad axis");
  os.insert(os.begin() + axis, n);
  const AxisView v = axis_view(os, axis);
  Tensor y(os);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.n; ++j)
      std::copy_n(a.value().data() + o * v.inner, v.inner,
                  y.data() + (o * v.n + j) * v.inner);
  return a.graph().record(std::move(y), {a}, [a, v](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.n; ++j)
        for (std::size_t i = 0; i < v.inner; ++i)
          (*ga)[o * v.inner + i] += go[(o * v.n + j) * v.inner + i];
  });
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  return a.graph().record(Tensor({1}, {s}), {a}, [a](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (auto& x : ga->values()) x += go[0];
  });
}

Var dot_const(Var a, const Tensor& w) {
  require(a.value().size() == w.size(), "dot_const: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += a.value()[i] * w[i];
  auto wc = std::make_shared<Tensor>(w);
  return a.graph().record(Tensor({1}, {s}), {a}, [a, wc](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_buffer(a))
      for (std::size_t i = 0; i < wc->size(); ++i) (*ga)[i] += go[0] * (*wc)[i];
  });
}

// ---------------------------------------------------------------- linear

Var channel_linear(Var x, Var w, Var b) {
  const int cin = x.dim(0);
  const int cout = w.dim(0);
  require(w.value().rank() == 2 && w.dim(1) == cin,
          "channel_linear: weight " + shape_str(w.shape()) + " vs input " +
              shape_str(x.shape()));
  const long m = static_cast<long>(x.value().size() / cin);
  Shape os = x.shape();
  os[0] = cout;
  Tensor y(os);
  mmat(y, cout, m).noalias() = cmat(w.value(), cout, cin) * cmat(x.value(), cin, m);
  if (b.valid()) {
    require(b.value().size() == static_cast<std::size_t>(cout), "channel_linear: bias size");
    for (int o = 0; o < cout; ++o)
      for (long j = 0; j < m; ++j) y[o * m + j] += b.value()[o];
  }
  return x.graph().record(std::move(y), {x, w, b}, [x, w, b, cin, cout, m](Graph& g, const Tensor& go) {
    auto dy = cmat(go, cout, m);
    if (Tensor* gw = g.grad_buffer(w))
      mmat(*gw, cout, cin).noalias() += dy * cmat(x.value(), cin, m).transpose();
    if (Tensor* gx = g.grad_buffer(x))
      mmat(*gx, cin, m).noalias() += cmat(w.value(), cout, cin).transpose() * dy;
    if (Tensor* gb = g.grad_buffer(b))
      MapV(gb->data(), cout) += dy.rowwise().sum();
  });
}

Var linear_last(Var x, Var w, Var b) {
  const int in = x.shape().back();
  const int out = w.dim(0);
  require(w.value().rank() == 2 && w.dim(1) == in,
          "linear_last: weight " + shape_str(w.shape()) + " vs input " +
              shape_str(x.shape()));
  const long m = static_cast<long>(x.value().size() / in);
  Shape os = x.shape();
  os.back() = out;
  Tensor y(os);
  mmat(y, m, out).noalias() = cmat(x.value(), m, in) * cmat(w.value(), out, in).transpose();
  if (b.valid()) {
    require(b.value().size() == static_cast<std::size_t>(out), "linear_last: bias size");
    mmat(y, m, out).rowwise() += CMapV(b.value().data(), out).transpose();
  }
  return x.graph().record(std::move(y), {x, w, b}, [x, w, b, in, out, m](Graph& g, const Tensor& go) {
    auto dy = cmat(go, m, out);
    if (Tensor* gw = g.grad_buffer(w))
      mmat(*gw, out, in).noalias() += dy.transpose() * cmat(x.value(), m, in);
    if (Tensor* gx = g.grad_buffer(x))
      mmat(*gx, m, in).noalias() += dy * cmat(w.value(), out, in);
    if (Tensor* gb = g.grad_buffer(b))
      MapV(gb->data(), out) += dy.colwise().sum().transpose();
  });
}

Var matmul(Var a, Var b) {
  require(a.value().rank() == 2 && b.value().rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
              shape_str(b.shape()));
  const long m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor y({static_cast<int>(m), static_cast<int>(n)});
  mmat(y, m, n).noalias() = cmat(a.value(), m, k) * cmat(b.value(), k, n);
  return a.graph().record(std::move(y), {a, b}, [a, b, m, k, n](Graph& g, const Tensor& go) {
    auto dy = cmat(go, m, n);
    if (Tensor* ga = g.grad_buffer(a))
      mmat(*ga, m, k).noalias() += dy * cmat(b.value(), k, n).transpose();
    if (Tensor* gb = g.grad_buffer(b))
      mmat(*gb, k, n).noalias() += cmat(a.value(), m, k).transpose() * dy;
  });
}

Var transpose(Var a) {
  require(a.value().rank() == 2, "transpose: expects a matrix");
  return permute(a, {1, 0});
}

// ---------------------------------------------------------------- convolution

Var conv1d(Var x, Var w, Var b, int dilation) {
  require(x.value().rank() == 2 && w.value().rank() == 3 && w.dim(1) == x.dim(0),
          "conv1d: weight " + shape_str(w.shape()) + " vs input " + shape_str(x.shape()));
  const int cin = x.dim(0), t_len = x.dim(1), cout = w.dim(0), k = w.dim(2);
  require(k % 2 == 1, "conv1d: kernel size must be odd");
  const int pad = dilation * (k - 1) / 2;
  const long rows = static_cast<long>(cin) * k;
  auto cols = std::make_shared<Tensor>(Shape{static_cast<int>(rows), t_len});
  for (int c = 0; c < cin; ++c)
    for (int j = 0; j < k; ++j)
      for (int t = 0; t < t_len; ++t) {
        const int s = t + j * dilation - pad;
        if (s >= 0 && s < t_len) cols->at(c * k + j, t) = x.value().at(c, s);
      }
  Tensor y({cout, t_len});
  mmat(y, cout, t_len).noalias() = cmat(w.value(), cout, rows) * cmat(*cols, rows, t_len);
  if (b.valid())
    for (int o = 0; o < cout; ++o)
      for (int t = 0; t < t_len; ++t) y.at(o, t) += b.value()[o];
  return x.graph().record(std::move(y), {x, w, b},
      [x, w, b, cols, cin, t_len, cout, k, rows, pad, dilation](Graph& g, const Tensor& go) {
        auto dy = cmat(go, cout, t_len);
        if (Tensor* gw = g.grad_buffer(w))
          mmat(*gw, cout, rows).noalias() += dy * cmat(*cols, rows, t_len).transpose();
        if (Tensor* gb = g.grad_buffer(b))
          MapV(gb->data(), cout) += dy.rowwise().sum();
        if (Tensor* gx = g.grad_buffer(x)) {
          RMat dcols = cmat(w.value(), cout, rows).transpose() * dy;
          for (int c = 0; c < cin; ++c)
            for (int j = 0; j < k; ++j)
              for (int t = 0; t < t_len; ++t) {
                const int s = t + j * dilation - pad;
                if (s >= 0 && s < t_len) gx->at(c, s) += dcols(c * k + j, t);
              }
        }
      });
}

Var depthwise_conv1d(Var x, Var w, Var b) {
  require(x.value().rank() == 2 && w.value().rank() == 2 && w.dim(0) == x.dim(0),
          "depthwise_conv1d: weight " + shape_str(w.shape()) + " vs input " +
              shape_str(x.shape()));
  const int ch = x.dim(0), t_len = x.dim(1), k = w.dim(1);
  require(k % 2 == 1, "depthwise_conv1d: kernel size must be odd");
  const int pad = (k - 1) / 2;
  Tensor y({ch, t_len});
  for (int c = 0; c < ch; ++c)
    for (int t = 0; t < t_len; ++t) {
      double acc = b.valid() ? b.value()[c] : 0.0;
      for (int j = 0; j < k; ++j) {
        const int s = t + j - pad;
        if (s >= 0 && s < t_len) acc += w.value().at(c, j) * x.value().at(c, s);
      }
      y.at(c, t) = acc;
    }
  return x.graph().record(std::move(y), {x, w, b}, [x, w, b, ch, t_len, k, pad](Graph& g, const Tensor& go) {
    Tensor* gx = g.grad_buffer(x);
    Tensor* gw = g.grad_buffer(w);
    Tensor* gb = g.grad_buffer(b);
    for (int c = 0; c < ch; ++c)
      for (int t = 0; t < t_len; ++t) {
        const double d = go.at(c, t);
        if (gb) (*gb)[c] += d;
        for (int j = 0; j < k; ++j) {
          const int s = t + j - pad;
          if (s < 0 || s >= t_len) continue;
          if (gw) gw->at(c, j) += d * x.value().at(c, s);
          if (gx) gx->at(c, s) += d * w.value().at(c, j);
        }
      }
  });
}

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  require(x.value().rank() == 4 && w.value().rank() == 4 && w.dim(1) == x.dim(1),
          "conv2d: weight " + shape_str(w.shape()) + " vs input " + shape_str(x.shape()));
  const int batch = x.dim(0), cin = x.dim(1), hin = x.dim(2), win = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int hout = (hin + 2 * pad - kh) / stride + 1;
  const int wout = (win + 2 * pad - kw) / stride + 1;
  require(hout > 0 && wout > 0, "conv2d: input smaller than kernel");
  const long rows = static_cast<long>(cin) * kh * kw;
  const long npix = static_cast<long>(hout) * wout;

  auto im2col = [=](const double* img, RMat& cols) {
    cols.setZero(rows, npix);
    for (int c = 0; c < cin; ++c)
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j) {
          const long r = (static_cast<long>(c) * kh + i) * kw + j;
          for (int oy = 0; oy < hout; ++oy) {
            const int iy = oy * stride + i - pad;
            if (iy < 0 || iy >= hin) continue;
            for (int ox = 0; ox < wout; ++ox) {
              const int ix = ox * stride + j - pad;
              if (ix < 0 || ix >= win) continue;
              cols(r, oy * wout + ox) = img[(static_cast<long>(c) * hin + iy) * win + ix];
            }
          }
        }
  };

  Tensor y({batch, cout, hout, wout});
  RMat cols;
  const auto wm = cmat(w.value(), cout, rows);
  const std::size_t in_img = static_cast<std::size_t>(cin) * hin * win;
  const std::size_t out_img = static_cast<std::size_t>(cout) * npix;
  for (int n = 0; n < batch; ++n) {
    im2col(x.value().data() + n * in_img, cols);
    MapM yo(y.data() + n * out_img, cout, npix);
    yo.noalias() = wm * cols;
    if (b.valid())
      for (int o = 0; o < cout; ++o) yo.row(o).array() += b.value()[o];
  }
  return x.graph().record(std::move(y), {x, w, b},
      [=](Graph& g, const Tensor& go) {
        Tensor* gx = g.grad_buffer(x);
        Tensor* gw = g.grad_buffer(w);
        Tensor* gb = g.grad_buffer(b);
        const auto wm = cmat(w.value(), cout, rows);
        RMat cols;
        for (int n = 0; n < batch; ++n) {
          CMapM dy(go.data() + n * out_img, cout, npix);
          if (gb) MapV(gb->data(), cout) += dy.rowwise().sum();
          if (gw) {
            im2col(x.value().data() + n * in_img, cols);
            mmat(*gw, cout, rows).noalias() += dy * cols.transpose();
          }
          if (gx) {
            RMat dcols = wm.transpose() * dy;
            double* dimg = gx->data() + n * in_img;
            for (int c = 0; c < cin; ++c)
              for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) {
                  const long r = (static_cast<long>(c) * kh + i) * kw + j;
                  for (int oy = 0; oy < hout; ++oy) {
                    const int iy = oy * stride + i - pad;
                    if (iy < 0 || iy >= hin) continue;
                    for (int ox = 0; ox < wout; ++ox) {
                      const int ix = ox * stride + j - pad;
                      if (ix < 0 || ix >= win) continue;
                      dimg[(static_cast<long>(c) * hin + iy) * win + ix] += dcols(r, oy * wout + ox);
                    }
                  }
                }
          }
        }
      });
}

// ---------------------------------------------------------------- normalization

Var global_norm(Var x, Var gamma, Var beta, double eps) {
  const int ch = x.dim(0);
  const std::size_t n = x.value().size();
  const std::size_t m = n / ch;
  require(gamma.value().size() == static_cast<std::size_t>(ch) &&
              beta.value().size() == static_cast<std::size_t>(ch),
          "global_norm: affine size mismatch");
  double mean = 0.0;
  for (double v : x.value().values()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x.value().values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + eps);
  auto xhat = std::make_shared<Tensor>(x.shape());
  Tensor y(x.shape());
  for (int c = 0; c < ch; ++c)
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = c * m + j;
      (*xhat)[i] = (x.value()[i] - mean) * inv_std;
      y[i] = gamma.value()[c] * (*xhat)[i] + beta.value()[c];
    }
  return x.graph().record(std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat, ch, n, m, inv_std](Graph& g, const Tensor& go) {
        Tensor* gg = g.grad_buffer(gamma);
        Tensor* gbeta = g.grad_buffer(beta);
        Tensor* gx = g.grad_buffer(x);
        double mean_d = 0.0, mean_dx = 0.0;
        for (int c = 0; c < ch; ++c)
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = c * m + j;
            if (gg) (*gg)[c] += go[i] * (*xhat)[i];
            if (gbeta) (*gbeta)[c] += go[i];
            const double d = go[i] * gamma.value()[c];
            mean_d += d;
            mean_dx += d * (*xhat)[i];
          }
        if (!gx) return;
        mean_d /= static_cast<double>(n);
        mean_dx /= static_cast<double>(n);
        for (int c = 0; c < ch; ++c)
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = c * m + j;
            const double d = go[i] * gamma.value()[c];
            (*gx)[i] += inv_std * (d - mean_d - (*xhat)[i] * mean_dx);
          }
      });
}

Var channel_norm(Var x, Var gamma, Var beta, double eps) {
  require(x.value().rank() == 2, "channel_norm: expects (C, T)");
  const int ch = x.dim(0), t_len = x.dim(1);
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<double>>(t_len);
  Tensor y(x.shape());
  for (int t = 0; t < t_len; ++t) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < ch; ++c) mean += x.value().at(c, t);
    mean /= ch;
    for (int c = 0; c < ch; ++c) var += std::pow(x.value().at(c, t) - mean, 2);
    var /= ch;
    (*inv_std)[t] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < ch; ++c) {
      xhat->at(c, t) = (x.value().at(c, t) - mean) * (*inv_std)[t];
      y.at(c, t) = gamma.value()[c] * xhat->at(c, t) + beta.value()[c];
    }
  }
  return x.graph().record(std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, ch, t_len](Graph& g, const Tensor& go) {
        Tensor* gg = g.grad_buffer(gamma);
        Tensor* gbeta = g.grad_buffer(beta);
        Tensor* gx = g.grad_buffer(x);
        for (int t = 0; t < t_len; ++t) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (int c = 0; c < ch; ++c) {
            if (gg) (*gg)[c] += go.at(c, t) * xhat->at(c, t);
            if (gbeta) (*gbeta)[c] += go.at(c, t);
            const double d = go.at(c, t) * gamma.value()[c];
            mean_d += d;
            mean_dx += d * xhat->at(c, t);
          }
          if (!gx) continue;
          mean_d /= ch;
          mean_dx /= ch;
          for (int c = 0; c < ch; ++c) {
            const double d = go.at(c, t) * gamma.value()[c];
            gx->at(c, t) += (*inv_std)[t] * (d - mean_d - xhat->at(c, t) * mean_dx);
          }
        }
      });
}

// ---------------------------------------------------------------- recurrent

namespace {
struct LstmCache {
  int batch = 0, steps = 0, in = 0, hidden = 0;
  // Rows [s * batch, (s + 1) * batch) hold processing step s, whose time index
  // is t = reverse ? L-1-s : s: activated gates (4H), cells and hiddens (H).
  RMat gates, cells, hiddens;
};

// Elementwise sigmoid and tanh written through exp so Eigen vectorizes them.
template <typename A>
auto sigm_array(const A& x) {
  return (1.0 + (-x).exp()).inverse();
}
template <typename A>
auto tanh_array(const A& x) {
  return 2.0 * (1.0 + (-2.0 * x).exp()).inverse() - 1.0;
}
}  // namespace

Var lstm(Var x, Var w_ih, Var w_hh, Var bias, bool reverse) {
  require(x.value().rank() == 3, "lstm: expects (B, L, I)");
  const int batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
  const int hidden = w_hh.dim(1);
  require(w_ih.dim(0) == 4 * hidden && w_ih.dim(1) == in && w_hh.dim(0) == 4 * hidden &&
              bias.value().size() == static_cast<std::size_t>(4 * hidden),
          "lstm: weight shapes do not match input " + shape_str(x.shape()));
  const long rows = static_cast<long>(batch) * steps;
  // Input projections for every (b, t) at once; row index b * L + t.
  RMat xw = cmat(x.value(), rows, in) * cmat(w_ih.value(), 4 * hidden, in).transpose();
  xw.rowwise() += CMapV(bias.value().data(), 4 * hidden).transpose();

  auto cache = std::make_shared<LstmCache>();
  cache->batch = batch;
  cache->steps = steps;
  cache->in = in;
  cache->hidden = hidden;
  cache->gates.resize(rows, 4 * hidden);
  cache->cells.resize(rows, hidden);
  cache->hiddens.resize(rows, hidden);

  const auto whh = cmat(w_hh.value(), 4 * hidden, hidden);
  Tensor y({batch, steps, hidden});
  RMat h = RMat::Zero(batch, hidden);
  RMat c = RMat::Zero(batch, hidden);
  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    auto z = cache->gates.middleRows(static_cast<long>(s) * batch, batch);
    z.noalias() = h * whh.transpose();
    for (int b = 0; b < batch; ++b) z.row(b) += xw.row(static_cast<long>(b) * steps + t);
    z.leftCols(2 * hidden) = sigm_array(z.leftCols(2 * hidden).array()).matrix();
    z.middleCols(2 * hidden, hidden) = tanh_array(z.middleCols(2 * hidden, hidden).array()).matrix();
    z.rightCols(hidden) = sigm_array(z.rightCols(hidden).array()).matrix();
    c.array() = z.middleCols(hidden, hidden).array() * c.array() +
                z.leftCols(hidden).array() * z.middleCols(2 * hidden, hidden).array();
    h.array() = z.rightCols(hidden).array() * tanh_array(c.array());
    cache->cells.middleRows(static_cast<long>(s) * batch, batch) = c;
    cache->hiddens.middleRows(static_cast<long>(s) * batch, batch) = h;
    for (int b = 0; b < batch; ++b) std::copy_n(h.row(b).data(), hidden, &y.at(b, t, 0));
  }
  return x.graph().record(std::move(y), {x, w_ih, w_hh, bias},
      [x, w_ih, w_hh, bias, cache, reverse](Graph& g, const Tensor& go) {
        const int batch = cache->batch, steps = cache->steps, in = cache->in,
                  hidden = cache->hidden;
        const long rows = static_cast<long>(batch) * steps;
        const auto whh = cmat(w_hh.value(), 4 * hidden, hidden);
        // dz for every step, in processing-step row order.
        RMat dz_all(rows, 4 * hidden);
        RMat dh_next = RMat::Zero(batch, hidden);
        RMat dc_next = RMat::Zero(batch, hidden);
        RMat dh(batch, hidden);
        for (int s = steps - 1; s >= 0; --s) {
          const int t = reverse ? steps - 1 - s : s;
          const long r0 = static_cast<long>(s) * batch;
          const auto gt = cache->gates.middleRows(r0, batch);
          const auto ig = gt.leftCols(hidden).array();
          const auto fg = gt.middleCols(hidden, hidden).array();
          const auto gg = gt.middleCols(2 * hidden, hidden).array();
          const auto og = gt.rightCols(hidden).array();
          const Eigen::ArrayXXd tc = tanh_array(cache->cells.middleRows(r0, batch).array());
          for (int b = 0; b < batch; ++b)
            dh.row(b) = CMapV(go.data() + (static_cast<std::size_t>(b) * steps + t) * hidden,
                              hidden).transpose() + dh_next.row(b);
          const Eigen::ArrayXXd dc = dh.array() * og * (1.0 - tc * tc) + dc_next.array();
          auto dz = dz_all.middleRows(r0, batch);
          dz.leftCols(hidden) = (dc * gg * ig * (1.0 - ig)).matrix();
          if (s > 0)
            dz.middleCols(hidden, hidden) =
                (dc * cache->cells.middleRows(r0 - batch, batch).array() * fg * (1.0 - fg))
                    .matrix();
          else
            dz.middleCols(hidden, hidden).setZero();
          dz.middleCols(2 * hidden, hidden) = (dc * ig * (1.0 - gg * gg)).matrix();
          dz.rightCols(hidden) = (dh.array() * tc * og * (1.0 - og)).matrix();
          dc_next = (dc * fg).matrix();
          dh_next.noalias() = dz * whh;
        }
        if (Tensor* gwhh = g.grad_buffer(w_hh); gwhh && steps > 1) {
          // Step s pairs with the hidden state of step s - 1.
          const long tail = rows - batch;
          mmat(*gwhh, 4 * hidden, hidden).noalias() +=
              dz_all.bottomRows(tail).transpose() * cache->hiddens.topRows(tail);
        }
        if (Tensor* gb = g.grad_buffer(bias))
          MapV(gb->data(), 4 * hidden) += dz_all.colwise().sum().transpose();
        const bool need_x = g.grad_buffer(x) != nullptr;
        const bool need_wih = g.grad_buffer(w_ih) != nullptr;
        if (!need_x && !need_wih) return;
        // Back to the (b, t) row layout of the input projection.
        RMat dxw(rows, 4 * hidden);
        for (int s = 0; s < steps; ++s) {
          const int t = reverse ? steps - 1 - s : s;
          for (int b = 0; b < batch; ++b)
            dxw.row(static_cast<long>(b) * steps + t) = dz_all.row(static_cast<long>(s) * batch + b);
        }
        if (Tensor* gwih = g.grad_buffer(w_ih))
          mmat(*gwih, 4 * hidden, in).noalias() += dxw.transpose() * cmat(x.value(), rows, in);
        if (Tensor* gx = g.grad_buffer(x))
          mmat(*gx, rows, in).noalias() += dxw * cmat(w_ih.value(), 4 * hidden, in);
      });
}

// ---------------------------------------------------------------- softmax

Var softmax(Var a, int axis, const std::vector<bool>& enabled) {
  const AxisView v = axis_view(a.shape(), axis);
  require(enabled.empty() || enabled.size() == v.n, "softmax: mask size mismatch");
  auto on = [&enabled](std::size_t j) { return enabled.empty() || enabled[j]; };
  bool any = false;
  for (std::size_t j = 0; j < v.n; ++j) any = any || on(j);
  require(any, "softmax: every entry disabled");
  Tensor y(a.shape());
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < v.n; ++j)
        if (on(j)) mx = std::max(mx, a.value()[(o * v.n + j) * v.inner + i]);
      double z = 0.0;
      for (std::size_t j = 0; j < v.n; ++j) {
        const std::size_t idx = (o * v.n + j) * v.inner + i;
        y[idx] = on(j) ? std::exp(a.value()[idx] - mx) : 0.0;
        z += y[idx];
      }
      for (std::size_t j = 0; j < v.n; ++j) y[(o * v.n + j) * v.inner + i] /= z;
    }
  auto out = std::make_shared<Tensor>(y);
  return a.graph().record(std::move(y), {a}, [a, v, out](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < v.n; ++j) {
          const std::size_t idx = (o * v.n + j) * v.inner + i;
          dot += (*out)[idx] * go[idx];
        }
        for (std::size_t j = 0; j < v.n; ++j) {
          const std::size_t idx = (o * v.n + j) * v.inner + i;
          (*ga)[idx] += (*out)[idx] * (go[idx] - dot);
        }
      }
  });
}

// ---------------------------------------------------------------- framing

Var frame_signal(Var x, int win, int hop) {
  require(x.value().rank() == 1, "frame_signal: expects a 1-D signal");
  const int len = x.dim(0);
  require(len >= win, "frame_signal: signal shorter than one window");
  const int frames = (len - win) / hop + 1;
  Tensor y({frames, win});
  for (int f = 0; f < frames; ++f)
    std::copy_n(x.value().data() + static_cast<std::size_t>(f) * hop, win,
                y.data() + static_cast<std::size_t>(f) * win);
  return x.graph().record(std::move(y), {x}, [x, frames, win, hop](Graph& g, const Tensor& go) {
    Tensor* gx = g.grad_buffer(x);
    if (!gx) return;
    for (int f = 0; f < frames; ++f)
      for (int j = 0; j < win; ++j) (*gx)[f * hop + j] += go.at(f, j);
  });
}

Var overlap_add(Var frames, int hop, int out_len) {
  require(frames.value().rank() == 2, "overlap_add: expects (T_f, win)");
  const int nf = frames.dim(0), win = frames.dim(1);
  Tensor y({out_len});
  for (int f = 0; f < nf; ++f)
    for (int j = 0; j < win; ++j) {
      const int p = f * hop + j;
      if (p < out_len) y[p] += frames.value().at(f, j);
    }
  return frames.graph().record(std::move(y), {frames},
      [frames, nf, win, hop, out_len](Graph& g, const Tensor& go) {
        Tensor* gf = g.grad_buffer(frames);
        if (!gf) return;
        for (int f = 0; f < nf; ++f)
          for (int j = 0; j < win; ++j) {
            const int p = f * hop + j;
            if (p < out_len) gf->at(f, j) += go[p];
          }
      });
}

Var chunk(Var f, int k, int hop) {
  require(f.value().rank() == 2, "chunk: expects (C, T_f)");
  const int ch = f.dim(0), tf = f.dim(1);
  if (tf < k || (tf - k) % hop != 0)
    throw std::invalid_argument("unpadded feature: T_f=" + std::to_string(tf) +
                                " does not tile into chunks of " + std::to_string(k) +
                                " at hop " + std::to_string(hop));
  const int tv = (tf - k) / hop + 1;
  Tensor y({ch, k, tv});
  for (int c = 0; c < ch; ++c)
    for (int j = 0; j < k; ++j)
      for (int t = 0; t < tv; ++t) y.at(c, j, t) = f.value().at(c, t * hop + j);
  return f.graph().record(std::move(y), {f}, [f, ch, k, tv, hop](Graph& g, const Tensor& go) {
    Tensor* gf = g.grad_buffer(f);
    if (!gf) return;
    for (int c = 0; c < ch; ++c)
      for (int j = 0; j < k; ++j)
        for (int t = 0; t < tv; ++t) gf->at(c, t * hop + j) += go.at(c, j, t);
  });
}

Var dechunk(Var f, int hop) {
  require(f.value().rank() == 3, "dechunk: expects (C, K, T_v)");
  const int ch = f.dim(0), k = f.dim(1), tv = f.dim(2);
  const int tf = (tv - 1) * hop + k;
  auto inv_count = std::make_shared<std::vector<double>>(tf, 0.0);
  for (int t = 0; t < tv; ++t)
    for (int j = 0; j < k; ++j) (*inv_count)[t * hop + j] += 1.0;
  for (auto& c : *inv_count) c = 1.0 / c;
  Tensor y({ch, tf});
  for (int c = 0; c < ch; ++c)
    for (int j = 0; j < k; ++j)
      for (int t = 0; t < tv; ++t) y.at(c, t * hop + j) += f.value().at(c, j, t);
  for (int c = 0; c < ch; ++c)
    for (int col = 0; col < tf; ++col) y.at(c, col) *= (*inv_count)[col];
  return f.graph().record(std::move(y), {f}, [f, ch, k, tv, hop, inv_count](Graph& g, const Tensor& go) {
    Tensor* gf = g.grad_buffer(f);
    if (!gf) return;
    for (int c = 0; c < ch; ++c)
      for (int j = 0; j < k; ++j)
        for (int t = 0; t < tv; ++t)
          gf->at(c, j, t) += go.at(c, t * hop + j) * (*inv_count)[t * hop + j];
  });
}

// ---------------------------------------------------------------- losses

Var si_snr(Var est, const Tensor& ref) {
  require(est.value().size() == ref.size(), "si_snr: length mismatch");
  const std::size_t n = ref.size();
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rr += ref[i] * ref[i];
    er += est.value()[i] * ref[i];
  }
  if (rr <= 0.0) throw std::invalid_argument("degenerate reference");
  const double alpha = er / rr;
  double ss = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = alpha * ref[i];
    const double e = est.value()[i] - s;
    ss += s * s;
    nn += e * e;
  }
  constexpr double lo = 1e-10, hi = 1e10;
  const double raw = nn > 0.0 ? ss / nn : hi;
  const bool clamped = !(raw > lo && raw < hi);
  const double ratio = std::clamp(raw, lo, hi);
  auto refc = std::make_shared<Tensor>(ref);
  return est.graph().record(Tensor({1}, {10.0 * std::log10(ratio)}), {est},
      [est, refc, alpha, ss, nn, clamped](Graph& g, const Tensor& go) {
        Tensor* ge = g.grad_buffer(est);
        if (!ge || clamped) return;
        const double k = 10.0 / std::log(10.0) * go[0];
        for (std::size_t i = 0; i < refc->size(); ++i) {
          const double s = alpha * (*refc)[i];
          const double e = est.value()[i] - s;
          (*ge)[i] += k * (2.0 * s / ss - 2.0 * e / nn);
        }
      });
}

Var stft_mag_l1(Var est, const Tensor& ref, int win, int hop) {
  require(est.value().rank() == 1 && est.value().size() == ref.size(),
          "stft_mag_l1: est and ref must be equal-length signals");
  require(win > hop && hop > 0, "stft_mag_l1: need win > hop > 0");
  const int len = static_cast<int>(ref.size());
  const auto& basis = dsp::dft_basis(win);
  const int bins = basis.bins;
  const int pad = win / 2;
  const int frames = dsp::centered_num_frames(len, hop);
  const auto window = dsp::hann(win);
  const CMapM cosm(basis.cos.data(), win, bins);
  const CMapM sinm(basis.sin.data(), win, bins);

  auto framed = [&](std::span<const double> sig) {
    const auto padded = dsp::reflect_pad(sig, pad);
    RMat fr(frames, win);
    for (int f = 0; f < frames; ++f)
      for (int j = 0; j < win; ++j) fr(f, j) = window[j] * padded[f * hop + j];
    return fr;
  };
  RMat fe = framed(est.value().values());
  RMat fr = framed(ref.values());
  auto re = std::make_shared<RMat>(fe * cosm);
  auto im = std::make_shared<RMat>(-(fe * sinm));
  RMat rre = fr * cosm;
  RMat rim = -(fr * sinm);
  auto diff_sign = std::make_shared<RMat>(frames, bins);
  auto mag = std::make_shared<RMat>(frames, bins);
  double total = 0.0;
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < bins; ++k) {
      const double me = std::sqrt((*re)(f, k) * (*re)(f, k) + (*im)(f, k) * (*im)(f, k));
      const double mr = std::sqrt(rre(f, k) * rre(f, k) + rim(f, k) * rim(f, k));
      (*mag)(f, k) = me;
      const double d = me - mr;
      total += std::abs(d);
      (*diff_sign)(f, k) = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
  const double count = static_cast<double>(frames) * bins;
  return est.graph().record(Tensor({1}, {total / count}), {est},
      [=](Graph& g, const Tensor& go) {
        Tensor* ge = g.grad_buffer(est);
        if (!ge) return;
        const CMapM cosm(basis.cos.data(), win, bins);
        const CMapM sinm(basis.sin.data(), win, bins);
        RMat dre(frames, bins), dim(frames, bins);
        const double k0 = go[0] / count;
        for (int f = 0; f < frames; ++f)
          for (int k = 0; k < bins; ++k) {
            const double m = (*mag)(f, k);
            if (m <= 0.0) {
              dre(f, k) = dim(f, k) = 0.0;
              continue;
            }
            const double d = k0 * (*diff_sign)(f, k) / m;
            dre(f, k) = d * (*re)(f, k);
            dim(f, k) = d * (*im)(f, k);
          }
        RMat dfr = dre * cosm.transpose() - dim * sinm.transpose();
        std::vector<double> dpad(static_cast<std::size_t>(len + 2 * pad), 0.0);
        for (int f = 0; f < frames; ++f)
          for (int j = 0; j < win; ++j) dpad[f * hop + j] += dfr(f, j) * window[j];
        for (int i = 0; i < len + 2 * pad; ++i) {
          int j = i - pad;
          if (j < 0) j = -j;
          if (j >= len) j = 2 * (len - 1) - j;
          (*ge)[j] += dpad[i];
        }
      });
}

Var cross_entropy(Var logits, const std::vector<int>& tokens) {
  require(logits.value().rank() == 2, "cross_entropy: expects (classes, T)");
  const int classes = logits.dim(0), t_len = logits.dim(1);
  require(static_cast<int>(tokens.size()) == t_len, "cross_entropy: token count mismatch");
  for (int tok : tokens)
    if (tok < 0 || tok >= classes)
      throw std::out_of_range("token out of range: " + std::to_string(tok));
  auto prob = std::make_shared<Tensor>(logits.shape());
  double loss = 0.0;
  for (int t = 0; t < t_len; ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) mx = std::max(mx, logits.value().at(c, t));
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += std::exp(logits.value().at(c, t) - mx);
    const double lse = mx + std::log(z);
    loss += lse - logits.value().at(tokens[t], t);
    for (int c = 0; c < classes; ++c)
      prob->at(c, t) = std::exp(logits.value().at(c, t) - lse);
  }
  return logits.graph().record(Tensor({1}, {loss / t_len}), {logits},
      [logits, prob, tokens, classes, t_len](Graph& g, const Tensor& go) {
        Tensor* gl = g.grad_buffer(logits);
        if (!gl) return;
        const double k = go[0] / t_len;
        for (int t = 0; t < t_len; ++t)
          for (int c = 0; c < classes; ++c)
            gl->at(c, t) += k * (prob->at(c, t) - (c == tokens[t] ? 1.0 : 0.0));
      });
}

}  // namespace cuesep::ops
