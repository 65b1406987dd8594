#include "ilnet/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/kernels.hpp"

namespace ilnet::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void require_same_tape(const char* op, const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw StateError(std::string(op) + ": inputs live on different tapes");
}

}  // namespace

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

Var linear(const Var& x, const Var& w, const Var& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws.size() != 2 || xs.empty() || xs.back() != ws[0]) shape_error("linear", xs, ws);
  if (b.valid() && (b.shape().size() != 1 || b.shape()[0] != ws[1])) shape_error("linear(bias)", ws, b.shape());
  const std::size_t din = ws[0];
  const std::size_t dout = ws[1];
  const std::size_t rows = x.value().size() / din;
  Shape ys = xs;
  ys.back() = dout;
  DenseArray y(ys);
  if (b.valid()) {
    const double* bp = b.value().ptr();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bp, bp + dout, y.ptr() + r * dout);
  }
  kernels::active().gemm_nn(rows, dout, din, x.value().ptr(), w.value().ptr(), y.ptr());
  Tape& tape = x.tape();
  const std::size_t xi = x.id(), wi = w.id();
  const bool has_b = b.valid();
  const std::size_t bi = has_b ? b.id() : 0;
  auto fn = [xi, wi, bi, has_b, rows, din, dout](Tape& t, std::size_t self) {
    const DenseArray& dy = t.grad(self);
    const auto& k = kernels::active();
    if (DenseArray* dx = t.grad_target(xi)) k.gemm_nt(rows, dout, din, dy.ptr(), t.value(wi).ptr(), dx->ptr());
    if (DenseArray* dw = t.grad_target(wi)) k.gemm_tn(rows, dout, din, t.value(xi).ptr(), dy.ptr(), dw->ptr());
    if (has_b) {
      if (DenseArray* db = t.grad_target(bi)) {
        for (std::size_t r = 0; r < rows; ++r) k.axpy(1.0, dy.ptr() + r * dout, db->ptr(), dout);
      }
    }
  };
  if (has_b) return tape.record("linear", std::move(y), {x, w, b}, fn);
  return tape.record("linear", std::move(y), {x, w}, fn);
}

Var linear(const Var& x, const Var& w) { return linear(x, w, Var()); }

Var add(const Var& a, const Var& b) {
  require_same_tape("add", a, b);
  require_same_shape("add", a, b);
  DenseArray y = a.value();
  const DenseArray& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("add", std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    for (std::size_t id : {ai, bi}) {
      if (DenseArray* d = t.grad_target(id)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_tape("sub", a, b);
  require_same_shape("sub", a, b);
  DenseArray y = a.value();
  const DenseArray& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("sub", std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    if (DenseArray* d = t.grad_target(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
    }
    if (DenseArray* d = t.grad_target(bi)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_tape("mul", a, b);
  require_same_shape("mul", a, b);
  DenseArray y = a.value();
  const DenseArray& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("mul", std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    if (DenseArray* d = t.grad_target(ai)) {
      const DenseArray& bv = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i] * bv[i];
    }
    if (DenseArray* d = t.grad_target(bi)) {
      const DenseArray& av = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double c) {
  DenseArray y = a.value();
  for (double& v : y.values()) v *= c;
  const std::size_t ai = a.id();
  return a.tape().record("scale", std::move(y), {a}, [ai, c](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += c * g[i];
  });
}

Var add_row_vector(const Var& x, const Var& row) {
  require_same_tape("add_row_vector", x, row);
  const std::size_t c = row.value().size();
  if (x.value().size() % c != 0 || x.value().last_dim() % c != 0) shape_error("add_row_vector", x.shape(), row.shape());
  DenseArray y = x.value();
  const std::size_t rows = y.size() / c;
  const double* rp = row.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) y[r * c + j] += rp[j];
  }
  const std::size_t xi = x.id(), ri = row.id();
  return x.tape().record("add_row_vector", std::move(y), {x, row}, [xi, ri, rows, c](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    if (DenseArray* d = t.grad_target(xi)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
    }
    if (DenseArray* d = t.grad_target(ri)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) (*d)[j] += g[r * c + j];
      }
    }
  });
}

Var add_outer_broadcast(const Var& x, const Var& y) {
  require_same_tape("add_outer_broadcast", x, y);
  const std::size_t a = y.value().size();
  if (x.value().size() % a != 0) shape_error("add_outer_broadcast", x.shape(), y.shape());
  const std::size_t bdim = x.value().size() / a;
  DenseArray out = x.value();
  const double* yp = y.value().ptr();
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < bdim; ++j) out[i * bdim + j] += yp[i];
  }
  const std::size_t xi = x.id(), yi = y.id();
  return x.tape().record("add_outer_broadcast", std::move(out), {x, y}, [xi, yi, a, bdim](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    if (DenseArray* d = t.grad_target(xi)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
    }
    if (DenseArray* d = t.grad_target(yi)) {
      for (std::size_t i = 0; i < a; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < bdim; ++j) s += g[i * bdim + j];
        (*d)[i] += s;
      }
    }
  });
}

Var scale_rows(const Var& x, std::vector<double> weights) {
  const std::size_t r = weights.size();
  if (r == 0 || x.value().size() % r != 0) {
    throw DimensionError("scale_rows: " + std::to_string(r) + " weights for shape " + shape_str(x.shape()));
  }
  const std::size_t c = x.value().size() / r;
  DenseArray y = x.value();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] *= weights[i];
  }
  const std::size_t xi = x.id();
  return x.tape().record("scale_rows", std::move(y), {x}, [xi, c, w = std::move(weights)](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0.0) continue;
      for (std::size_t j = 0; j < c; ++j) d[i * c + j] += w[i] * g[i * c + j];
    }
  });
}

Var gelu(const Var& x) {
  DenseArray y = x.value();
  for (double& v : y.values()) v = gelu_value(v);
  const std::size_t xi = x.id();
  return x.tape().record("gelu", std::move(y), {x}, [xi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    const DenseArray& xv = t.value(xi);
    DenseArray& d = t.grad(xi);
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      d[i] += g[i] * (cdf + v * pdf);
    }
  });
}

Var sigmoid(const Var& x) {
  DenseArray y = x.value();
  for (double& v : y.values()) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const std::size_t xi = x.id();
  Tape& tape = x.tape();
  Var out = tape.record("sigmoid", std::move(y), {x}, [xi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    const DenseArray& s = t.value(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s[i] * (1.0 - s[i]);
  });
  return out;
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const std::size_t c = x.value().last_dim();
  if (gamma.value().size() != c || beta.value().size() != c) shape_error("layer_norm", x.shape(), gamma.shape());
  const std::size_t rows = x.value().size() / c;
  const DenseArray& xv = x.value();
  DenseArray y(x.shape());
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(rows);
  const double* gp = gamma.value().ptr();
  const double* bp = beta.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.ptr() + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xr[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xr[j] - mean) * is;
      xhat[r * c + j] = h;
      y[r * c + j] = gp[j] * h + bp[j];
    }
  }
  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.tape().record(
      "layer_norm", std::move(y), {x, gamma, beta},
      [xi, gi, bi, rows, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const DenseArray& g = t.grad(self);
        const DenseArray& gv = t.value(gi);
        if (DenseArray* dg = t.grad_target(gi)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) (*dg)[j] += g[r * c + j] * xhat[r * c + j];
          }
        }
        if (DenseArray* db = t.grad_target(bi)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) (*db)[j] += g[r * c + j];
          }
        }
        if (DenseArray* dx = t.grad_target(xi)) {
          const double inv_c = 1.0 / static_cast<double>(c);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = g[r * c + j] * gv[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[r * c + j];
            }
            mean_dh *= inv_c;
            mean_dh_h *= inv_c;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = g[r * c + j] * gv[j];
              (*dx)[r * c + j] += inv_std[r] * (dh - mean_dh - xhat[r * c + j] * mean_dh_h);
            }
          }
        }
      });
}

Var softmax(const Var& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw ArgumentError("softmax: axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  const DenseArray& xv = x.value();
  DenseArray y(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xv[base];
      for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, xv[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(xv[base + k * inner] - mx);
        y[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < len; ++k) y[base + k * inner] /= z;
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record("softmax", std::move(y), {x}, [xi, outer, inner, len](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    const DenseArray& p = t.value(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double dotp = 0.0;
        for (std::size_t k = 0; k < len; ++k) dotp += g[base + k * inner] * p[base + k * inner];
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = base + k * inner;
          d[i] += p[i] * (g[i] - dotp);
        }
      }
    }
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return x.tape().record("sum", DenseArray::scalar(s), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    DenseArray& d = t.grad(xi);
    for (double& v : d.values()) v += g;
  });
}

Var reshape(const Var& x, Shape shape) {
  DenseArray y = x.value();
  y.reshape(std::move(shape));
  const std::size_t xi = x.id();
  return x.tape().record("reshape", std::move(y), {x}, [xi](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

namespace {

// Flat source index for every flat output index of a permutation.
std::vector<std::size_t> permutation_map(const Shape& in, const std::vector<std::size_t>& axes, Shape& out) {
  const std::size_t r = in.size();
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  out.resize(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = in[axes[i]];
  const std::size_t n = shape_numel(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += idx[i] * in_stride[axes[i]];
    map[flat] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out[i]) break;
      idx[i] = 0;
    }
  }
  return map;
}

}  // namespace

Var permute(const Var& x, const std::vector<std::size_t>& axes) {
  const Shape& s = x.shape();
  std::vector<bool> seen(s.size(), false);
  if (axes.size() != s.size()) throw DimensionError("permute: axes do not match shape " + shape_str(s));
  for (std::size_t a : axes) {
    if (a >= s.size() || seen[a]) throw DimensionError("permute: invalid axes for shape " + shape_str(s));
    seen[a] = true;
  }
  Shape out;
  std::vector<std::size_t> map = permutation_map(s, axes, out);
  DenseArray y(out);
  const DenseArray& xv = x.value();
  for (std::size_t i = 0; i < map.size(); ++i) y[i] = xv[map[i]];
  const std::size_t xi = x.id();
  return x.tape().record("permute", std::move(y), {x}, [xi, map = std::move(map)](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < map.size(); ++i) d[map[i]] += g[i];
  });
}

Var concat_last(const Var& a, const Var& b) {
  require_same_tape("concat_last", a, b);
  Shape sa = a.shape(), sb = b.shape();
  if (sa.empty() || sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 1, sb.begin())) {
    shape_error("concat_last", sa, sb);
  }
  const std::size_t ca = sa.back(), cb = sb.back();
  const std::size_t rows = a.value().size() / ca;
  Shape so = sa;
  so.back() = ca + cb;
  DenseArray y(so);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().ptr() + r * ca, ca, y.ptr() + r * (ca + cb));
    std::copy_n(b.value().ptr() + r * cb, cb, y.ptr() + r * (ca + cb) + ca);
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("concat_last", std::move(y), {a, b}, [ai, bi, rows, ca, cb](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    if (DenseArray* d = t.grad_target(ai)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < ca; ++j) (*d)[r * ca + j] += g[r * (ca + cb) + j];
      }
    }
    if (DenseArray* d = t.grad_target(bi)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cb; ++j) (*d)[r * cb + j] += g[r * (ca + cb) + ca + j];
      }
    }
  });
}

Var gather_rows(const Var& x, const std::vector<std::size_t>& rows) {
  const Shape& s = x.shape();
  if (s.empty() || rows.empty()) throw DimensionError("gather_rows: empty input or index list for " + shape_str(s));
  const std::size_t width = x.value().size() / s[0];
  for (std::size_t r : rows) {
    if (r >= s[0]) throw ArgumentError("gather_rows: row " + std::to_string(r) + " out of range for " + shape_str(s));
  }
  Shape so = s;
  so[0] = rows.size();
  DenseArray y(so);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.value().ptr() + rows[i] * width, width, y.ptr() + i * width);
  const std::size_t xi = x.id();
  return x.tape().record("gather_rows", std::move(y), {x}, [xi, width, rows](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) d[rows[i] * width + j] += g[i * width + j];
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if ((xs.size() != 3 && xs.size() != 4) || ws.size() != 4) shape_error("conv2d", xs, ws);
  const bool batched = xs.size() == 4;
  const std::size_t nb = batched ? xs[0] : 1;
  const std::size_t c = xs[batched ? 1 : 0], l = xs[batched ? 2 : 1], wd = xs[batched ? 3 : 2];
  const std::size_t o = ws[0], kl = ws[2], kw = ws[3];
  if (ws[1] != c) shape_error("conv2d(channels)", xs, ws);
  if (kl > l || kw > wd) {
    throw DimensionError("conv2d: kernel " + shape_str({kl, kw}) + " larger than spatial extent of input " + shape_str(xs));
  }
  if (b.shape().size() != 1 || b.shape()[0] != o) shape_error("conv2d(bias)", ws, b.shape());
  const std::size_t ol = l - kl + 1, ow = wd - kw + 1;
  Shape ys = batched ? Shape{nb, o, ol, ow} : Shape{o, ol, ow};
  DenseArray y(ys);
  const double* xp = x.value().ptr();
  const double* wp = w.value().ptr();
  const double* bp = b.value().ptr();
  for (std::size_t n = 0; n < nb; ++n) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      for (std::size_t i = 0; i < ol; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          double s = bp[oc];
          for (std::size_t ic = 0; ic < c; ++ic) {
            for (std::size_t u = 0; u < kl; ++u) {
              for (std::size_t v = 0; v < kw; ++v) {
                s += xp[((n * c + ic) * l + i + u) * wd + j + v] * wp[((oc * c + ic) * kl + u) * kw + v];
              }
            }
          }
          y[((n * o + oc) * ol + i) * ow + j] = s;
        }
      }
    }
  }
  const std::size_t xi = x.id(), wi = w.id(), bi = b.id();
  return x.tape().record(
      "conv2d", std::move(y), {x, w, b}, [=](Tape& t, std::size_t self) {
        const DenseArray& g = t.grad(self);
        DenseArray* dx = t.grad_target(xi);
        DenseArray* dw = t.grad_target(wi);
        DenseArray* db = t.grad_target(bi);
        const double* xv = t.value(xi).ptr();
        const double* wv = t.value(wi).ptr();
        for (std::size_t n = 0; n < nb; ++n) {
          for (std::size_t oc = 0; oc < o; ++oc) {
            for (std::size_t i = 0; i < ol; ++i) {
              for (std::size_t j = 0; j < ow; ++j) {
                const double gv = g[((n * o + oc) * ol + i) * ow + j];
                if (db) (*db)[oc] += gv;
                for (std::size_t ic = 0; ic < c; ++ic) {
                  for (std::size_t u = 0; u < kl; ++u) {
                    for (std::size_t v = 0; v < kw; ++v) {
                      const std::size_t xidx = ((n * c + ic) * l + i + u) * wd + j + v;
                      const std::size_t widx = ((oc * c + ic) * kl + u) * kw + v;
                      if (dx) (*dx)[xidx] += gv * wv[widx];
                      if (dw) (*dw)[widx] += gv * xv[xidx];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

namespace {

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_grad(double r, double delta) {
  if (std::abs(r) <= delta) return r;
  return r > 0 ? delta : -delta;
}

}  // namespace

Var huber_loss(const Var& pred, const Var& target, double delta) {
  require_same_tape("huber_loss", pred, target);
  require_same_shape("huber_loss", pred, target);
  const DenseArray& p = pred.value();
  const DenseArray& q = target.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += huber(p[i] - q[i], delta);
  const double inv_n = 1.0 / static_cast<double>(p.size());
  const std::size_t pi = pred.id(), ti = target.id();
  return pred.tape().record("huber_loss", DenseArray::scalar(s * inv_n), {pred, target},
                            [pi, ti, delta, inv_n](Tape& t, std::size_t self) {
                              const double g = t.grad(self)[0] * inv_n;
                              const DenseArray& p = t.value(pi);
                              const DenseArray& q = t.value(ti);
                              DenseArray* dp = t.grad_target(pi);
                              DenseArray* dq = t.grad_target(ti);
                              for (std::size_t i = 0; i < p.size(); ++i) {
                                const double d = g * huber_grad(p[i] - q[i], delta);
                                if (dp) (*dp)[i] += d;
                                if (dq) (*dq)[i] -= d;
                              }
                            });
}

Var huber_weighted(const Var& pred, const DenseArray& target, const std::vector<double>& weights, double delta) {
  const DenseArray& p = pred.value();
  if (p.shape() != target.shape() || weights.size() != p.size()) shape_error("huber_weighted", p.shape(), target.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (weights[i] != 0.0) s += weights[i] * huber(p[i] - target[i], delta);
  }
  const std::size_t pi = pred.id();
  return pred.tape().record("huber_weighted", DenseArray::scalar(s), {pred},
                            [pi, target, weights, delta](Tape& t, std::size_t self) {
                              const double g = t.grad(self)[0];
                              const DenseArray& p = t.value(pi);
                              DenseArray& dp = t.grad(pi);
                              for (std::size_t i = 0; i < p.size(); ++i) {
                                if (weights[i] != 0.0) dp[i] += g * weights[i] * huber_grad(p[i] - target[i], delta);
                              }
                            });
}

Var cross_entropy(const Var& logits, std::size_t target) {
  const DenseArray& z = logits.value();
  if (z.rank() != 1) throw DimensionError("cross_entropy: logits must be [K], got " + shape_str(z.shape()));
  if (target >= z.size()) {
    throw ArgumentError("cross_entropy: target index " + std::to_string(target) + " out of range for K=" +
                        std::to_string(z.size()));
  }
  return cross_entropy_rows(reshape(logits, {1, z.size()}), {target}, {1.0});
}

Var cross_entropy_rows(const Var& logits, const std::vector<std::size_t>& targets, const std::vector<double>& weights) {
  const DenseArray& z = logits.value();
  const std::size_t k = z.last_dim();
  const std::size_t rows = z.size() / k;
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_str(z.shape()));
  }
  std::vector<double> probs(z.size());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= k) throw ArgumentError("cross_entropy_rows: target index out of range");
    const double* zr = z.ptr() + r * k;
    double mx = zr[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, zr[j]);
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j) se += std::exp(zr[j] - mx);
    const double lse = mx + std::log(se);
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(zr[j] - lse);
    if (weights[r] != 0.0) total += weights[r] * (lse - zr[targets[r]]);
  }
  const std::size_t li = logits.id();
  return logits.tape().record("cross_entropy", DenseArray::scalar(total), {logits},
                              [li, k, rows, targets, weights, probs = std::move(probs)](Tape& t, std::size_t self) {
                                const double g = t.grad(self)[0];
                                DenseArray& d = t.grad(li);
                                for (std::size_t r = 0; r < rows; ++r) {
                                  if (weights[r] == 0.0) continue;
                                  const double s = g * weights[r];
                                  for (std::size_t j = 0; j < k; ++j) {
                                    d[r * k + j] += s * (probs[r * k + j] - (j == targets[r] ? 1.0 : 0.0));
                                  }
                                }
                              });
}

Var smooth_polar(const Var& xy, double eps, double dist_scale) {
  const DenseArray& v = xy.value();
  if (v.last_dim() != 2) throw DimensionError("smooth_polar: expected [.., 2], got " + shape_str(v.shape()));
  const std::size_t n = v.size() / 2;
  Shape so = v.shape();
  so.back() = 3;
  DenseArray y(so);
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = v[2 * i], yy = v[2 * i + 1];
    const double r = std::sqrt(x * x + yy * yy + e2);
    y[3 * i] = dist_scale * r;
    y[3 * i + 1] = x / r;
    y[3 * i + 2] = yy / r;
  }
  const std::size_t xi = xy.id();
  return xy.tape().record("smooth_polar", std::move(y), {xy}, [xi, n, e2, dist_scale](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    const DenseArray& v = t.value(xi);
    DenseArray& d = t.grad(xi);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = v[2 * i], y = v[2 * i + 1];
      const double r2 = x * x + y * y + e2;
      const double r = std::sqrt(r2);
      const double r3 = r2 * r;
      const double gr = g[3 * i] * dist_scale, gc = g[3 * i + 1], gs = g[3 * i + 2];
      d[2 * i] += gr * x / r + gc * (y * y + e2) / r3 - gs * x * y / r3;
      d[2 * i + 1] += gr * y / r - gc * x * y / r3 + gs * (x * x + e2) / r3;
    }
  });
}

}  // namespace ilnet::nn
