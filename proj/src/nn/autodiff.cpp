#include "armrl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "armrl/error.hpp"

namespace armrl::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw UsageError("operands recorded on different tapes");
  return *a.tape;
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                     " differ");
  }
}

void require_rank(Var a, int rank, const char* op) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

// Unary elementwise op given f(x) and f'(x, y).
template <typename F, typename D>
Var unary(Var a, F f, D df) {
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const int ia = a.id;
  return t.record(std::move(y), t.requires_grad(ia), [ia, df](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

const Tensor& Var::value() const {
  if (tape == nullptr) throw UsageError("unbound Var");
  return tape->value(id);
}

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::leaf(const Tensor& value, Tensor* sink) {
  Var v = record(value, true, nullptr);
  nodes_.back().sink = sink;
  return v;
}

Var Tape::record(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backward) {
  if (consumed_) throw UsageError("tape already consumed by backward()");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

Tensor Tape::gradient(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.has_grad ? n.grad : Tensor(n.value.shape());
}

void Tape::backward(Var output) { backward(output, Tensor(output.shape(), 1.0)); }

void Tape::backward(Var output, const Tensor& seed) {
  if (consumed_) throw UsageError("tape already consumed by backward()");
  if (output.tape != this) throw UsageError("backward() on a Var from another tape");
  if (seed.shape() != output.shape()) {
    throw ShapeError("backward seed shape " + shape_string(seed.shape()) + " != output shape " +
                     shape_string(output.shape()));
  }
  consumed_ = true;
  if (!requires_grad(output.id)) return;
  grad(output.id) = seed;
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.sink != nullptr) {
      Tensor& s = *n.sink;
      if (s.shape() != n.value.shape()) s = Tensor(n.value.shape());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] += n.grad[k];
    }
  }
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const int ia = a.id, ib = b.id;
  return t.record(std::move(y), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    for (int id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      Tensor& gx = tp.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const int ia = a.id, ib = b.id;
  return t.record(std::move(y), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor& gx = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gx = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const int ia = a.id, ib = b.id;
  return t.record(std::move(y), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor& gx = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gx = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * av[i];
    }
  });
}

Var minimum(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "minimum");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(y[i], bv[i]);
  const int ia = a.id, ib = b.id;
  return t.record(std::move(y), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    // Ties route the gradient to the first operand.
    if (tp.requires_grad(ia)) {
      Tensor& gx = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) if (av[i] <= bv[i]) gx[i] += g[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gx = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) if (av[i] > bv[i]) gx[i] += g[i];
    }
  });
}

Var scale(Var a, double k) {
  return unary(a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var add_scalar(Var a, double k) {
  return unary(a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const int ia = a.id;
  return t.record(Tensor::scalar(s), t.requires_grad(ia), [ia](Tape& tp, int self) {
    const double g = tp.grad(self)[0];
    Tensor& gx = tp.grad(ia);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  require_rank(a, 2, "row_sum");
  Tape& t = *a.tape;
  const int rows = a.value().dim(0), cols = a.value().dim(1);
  Tensor y(Shape{rows});
  const double* x = a.value().data();
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += x[r * cols + c];
    y[static_cast<std::size_t>(r)] = s;
  }
  const int ia = a.id;
  return t.record(std::move(y), t.requires_grad(ia), [ia, rows, cols](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(ia);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) gx[static_cast<std::size_t>(r * cols + c)] += g[static_cast<std::size_t>(r)];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = *a.tape;
  Tensor y = a.value().reshaped(std::move(shape));
  const int ia = a.id;
  return t.record(std::move(y), t.requires_grad(ia), [ia](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var flatten(Var a) {
  const Tensor& v = a.value();
  if (v.rank() < 1) throw ShapeError("flatten needs a batch dimension");
  const int b = v.dim(0);
  const int rest = b == 0 ? 0 : static_cast<int>(v.size() / static_cast<std::size_t>(b));
  return reshape(a, Shape{b, rest});
}

Var dense(Var x, Var w, Var b) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weight");
  require_rank(b, 1, "dense bias");
  const int batch = x.value().dim(0), in = x.value().dim(1), out = w.value().dim(0);
  if (w.value().dim(1) != in || b.value().dim(0) != out) {
    throw ShapeError("dense: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(w.shape()) + " / bias " + shape_string(b.shape()));
  }
  // Plain loops with a fixed summation order: a row's output must not depend
  // on how many other rows share the batch.
  Tensor y(Shape{batch, out});
  {
    const double* xv = x.value().data();
    const double* wv = w.value().data();
    const double* bv = b.value().data();
    double* yv = y.data();
    for (int r = 0; r < batch; ++r) {
      const double* xr = xv + static_cast<std::ptrdiff_t>(r) * in;
      for (int o = 0; o < out; ++o) {
        const double* wr = wv + static_cast<std::ptrdiff_t>(o) * in;
        double acc = 0.0;
        for (int k = 0; k < in; ++k) acc += xr[k] * wr[k];
        yv[static_cast<std::ptrdiff_t>(r) * out + o] = acc + bv[o];
      }
    }
  }
  const int ix = x.id, iw = w.id, ib = b.id;
  const bool rg = t.requires_grad(ix) || t.requires_grad(iw) || t.requires_grad(ib);
  return t.record(std::move(y), rg, [ix, iw, ib, batch, in, out](Tape& tp, int self) {
    ConstMapMat G(tp.grad(self).data(), batch, out);
    if (tp.requires_grad(ix)) {
      MapMat GX(tp.grad(ix).data(), batch, in);
      GX.noalias() += G * ConstMapMat(tp.value(iw).data(), out, in);
    }
    if (tp.requires_grad(iw)) {
      MapMat GW(tp.grad(iw).data(), out, in);
      GW.noalias() += G.transpose() * ConstMapMat(tp.value(ix).data(), batch, in);
    }
    if (tp.requires_grad(ib)) {
      Eigen::Map<Eigen::RowVectorXd> GB(tp.grad(ib).data(), out);
      GB += G.colwise().sum();
    }
  });
}

namespace {

struct ConvGeometry {
  int batch, channels, height, width, filters, kernel, stride, out_h, out_w;
  int patch() const { return channels * kernel * kernel; }
  int positions() const { return out_h * out_w; }
};

// Unrolls one sample into [C*k*k, out_h*out_w].
void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const int p = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        double* row = cols + static_cast<std::ptrdiff_t>((c * g.kernel + ky) * g.kernel + kx) * p;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const double* src = x + (static_cast<std::ptrdiff_t>(c) * g.height + oy * g.stride + ky) * g.width + kx;
          for (int ox = 0; ox < g.out_w; ++ox) row[oy * g.out_w + ox] = src[ox * g.stride];
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* x) {
  const int p = g.positions();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const double* row = cols + static_cast<std::ptrdiff_t>((c * g.kernel + ky) * g.kernel + kx) * p;
        for (int oy = 0; oy < g.out_h; ++oy) {
          double* dst = x + (static_cast<std::ptrdiff_t>(c) * g.height + oy * g.stride + ky) * g.width + kx;
          for (int ox = 0; ox < g.out_w; ++ox) dst[ox * g.stride] += row[oy * g.out_w + ox];
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var w, Var b, int stride) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  require_rank(b, 1, "conv2d bias");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  ConvGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), stride, 0, 0};
  if (wv.dim(1) != g.channels || wv.dim(3) != g.kernel || b.value().dim(0) != g.filters || g.kernel > g.height ||
      g.kernel > g.width) {
    throw ShapeError("conv2d: input " + shape_string(xv.shape()) + " incompatible with weight " +
                     shape_string(wv.shape()) + " / bias " + shape_string(b.shape()));
  }
  g.out_h = (g.height - g.kernel) / stride + 1;
  g.out_w = (g.width - g.kernel) / stride + 1;

  Tensor y(Shape{g.batch, g.filters, g.out_h, g.out_w});
  std::vector<double> cols(static_cast<std::size_t>(g.patch()) * static_cast<std::size_t>(g.positions()));
  const std::size_t in_stride = static_cast<std::size_t>(g.channels) * g.height * g.width;
  const std::size_t out_stride = static_cast<std::size_t>(g.filters) * g.positions();
  ConstMapMat W(wv.data(), g.filters, g.patch());
  Eigen::Map<const Eigen::VectorXd> B(b.value().data(), g.filters);
  for (int n = 0; n < g.batch; ++n) {
    im2col(xv.data() + n * in_stride, g, cols.data());
    MapMat Y(y.data() + n * out_stride, g.filters, g.positions());
    Y.noalias() = W * ConstMapMat(cols.data(), g.patch(), g.positions());
    Y.colwise() += B;
  }

  const int ix = x.id, iw = w.id, ib = b.id;
  const bool rg = t.requires_grad(ix) || t.requires_grad(iw) || t.requires_grad(ib);
  return t.record(std::move(y), rg, [ix, iw, ib, g, in_stride, out_stride](Tape& tp, int self) {
    const Tensor& gy = tp.grad(self);
    const bool want_x = tp.requires_grad(ix), want_w = tp.requires_grad(iw), want_b = tp.requires_grad(ib);
    ConstMapMat W(tp.value(iw).data(), g.filters, g.patch());
    std::vector<double> cols(static_cast<std::size_t>(g.patch()) * static_cast<std::size_t>(g.positions()));
    RowMat dcols;
    for (int n = 0; n < g.batch; ++n) {
      ConstMapMat G(gy.data() + n * out_stride, g.filters, g.positions());
      if (want_w) {
        im2col(tp.value(ix).data() + n * in_stride, g, cols.data());
        MapMat GW(tp.grad(iw).data(), g.filters, g.patch());
        GW.noalias() += G * ConstMapMat(cols.data(), g.patch(), g.positions()).transpose();
      }
      if (want_b) {
        Eigen::Map<Eigen::VectorXd> GB(tp.grad(ib).data(), g.filters);
        GB += G.rowwise().sum();
      }
      if (want_x) {
        dcols.noalias() = W.transpose() * G;
        col2im_add(dcols.data(), g, tp.grad(ix).data() + n * in_stride);
      }
    }
  });
}

Var log_softmax(Var logits) {
  require_rank(logits, 2, "log_softmax");
  Tape& t = *logits.tape;
  const int rows = logits.value().dim(0), cols = logits.value().dim(1);
  Tensor y(Shape{rows, cols});
  const double* x = logits.value().data();
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) m = std::max(m, xr[c]);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += std::exp(xr[c] - m);
    const double log_s = std::log(s);
    for (int c = 0; c < cols; ++c) y[static_cast<std::size_t>(r * cols + c)] = (xr[c] - m) - log_s;
  }
  const int ia = logits.id;
  return t.record(std::move(y), t.requires_grad(ia), [ia, rows, cols](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    Tensor& gx = tp.grad(ia);
    for (int r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (int c = 0; c < cols; ++c) gs += g[static_cast<std::size_t>(r * cols + c)];
      for (int c = 0; c < cols; ++c) {
        const auto k = static_cast<std::size_t>(r * cols + c);
        gx[k] += g[k] - std::exp(y[k]) * gs;
      }
    }
  });
}

Var softmax(Var logits) { return exp(log_softmax(logits)); }

Var gather(Var a, const std::vector<int>& index) {
  require_rank(a, 2, "gather");
  Tape& t = *a.tape;
  const int rows = a.value().dim(0), cols = a.value().dim(1);
  if (static_cast<int>(index.size()) != rows) throw ShapeError("gather: index count != rows");
  for (int i : index) {
    if (i < 0 || i >= cols) throw ShapeError("gather: index " + std::to_string(i) + " out of range");
  }
  Tensor y(Shape{rows});
  for (int r = 0; r < rows; ++r) {
    y[static_cast<std::size_t>(r)] = a.value()[static_cast<std::size_t>(r * cols + index[static_cast<std::size_t>(r)])];
  }
  const int ia = a.id;
  return t.record(std::move(y), t.requires_grad(ia), [ia, cols, index](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(ia);
    for (std::size_t r = 0; r < index.size(); ++r) gx[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(index[r])] += g[r];
  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  return scale(mean(gather(log_softmax(logits), labels)), -1.0);
}

}  // namespace armrl::nn
