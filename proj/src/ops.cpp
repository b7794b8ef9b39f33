#include "pdgan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pdgan {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

bool want_tape(std::initializer_list<const Tensor*> ins) {
  if (!Tape::active()) return false;
  for (auto* t : ins)
    if (t->requires_grad()) return true;
  return false;
}

void require_rank4(const Tensor& t, const char* where) {
  if (t.shape().rank != 4) throw DimensionError(std::string(where) + ": expected rank-4 tensor, got " + t.shape().str());
}

// Reused im2col buffer; convolutions never nest, so one per thread suffices.
double* conv_scratch(Index n) {
  thread_local Array buf;
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

Tensor uninitialized(const Shape& s) { return Tensor(s, Array(s.numel())); }

// cols is (Cin*kh*kw) x (Ho*Wo), row-major.
void im2col(const double* in, Index cin, Index h, Index w, Index kh, Index kw, int stride,
            int pad, Index ho, Index wo, double* cols) {
  const Index n = ho * wo;
  for (Index ci = 0; ci < cin; ++ci) {
    const double* chan = in + ci * h * w;
    for (Index dy = 0; dy < kh; ++dy) {
      for (Index dx = 0; dx < kw; ++dx) {
        double* row = cols + ((ci * kh + dy) * kw + dx) * n;
        for (Index yo = 0; yo < ho; ++yo) {
          const Index y = yo * stride - pad + dy;
          double* dst = row + yo * wo;
          if (y < 0 || y >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* srow = chan + y * w;
          if (stride == 1) {
            const Index x0 = dx - pad;  // source x at xo = 0
            Index lo = std::max<Index>(0, -x0);
            Index hi = std::min<Index>(wo, w - x0);
            if (hi < lo) hi = lo;
            std::fill(dst, dst + lo, 0.0);
            if (hi > lo) std::memcpy(dst + lo, srow + x0 + lo, sizeof(double) * static_cast<std::size_t>(hi - lo));
            std::fill(dst + hi, dst + wo, 0.0);
          } else {
            for (Index xo = 0; xo < wo; ++xo) {
              const Index x = xo * stride - pad + dx;
              dst[xo] = (x >= 0 && x < w) ? srow[x] : 0.0;
            }
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, Index cin, Index h, Index w, Index kh, Index kw, int stride,
                int pad, Index ho, Index wo, double* in_grad) {
  const Index n = ho * wo;
  for (Index ci = 0; ci < cin; ++ci) {
    double* chan = in_grad + ci * h * w;
    for (Index dy = 0; dy < kh; ++dy) {
      for (Index dx = 0; dx < kw; ++dx) {
        const double* row = cols + ((ci * kh + dy) * kw + dx) * n;
        for (Index yo = 0; yo < ho; ++yo) {
          const Index y = yo * stride - pad + dy;
          if (y < 0 || y >= h) continue;
          double* drow = chan + y * w;
          const double* src = row + yo * wo;
          for (Index xo = 0; xo < wo; ++xo) {
            const Index x = xo * stride - pad + dx;
            if (x >= 0 && x < w) drow[x] += src[xo];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(kernel, "conv2d kernel");
  const auto& is = input.shape().dim;
  const auto& ks = kernel.shape().dim;
  const Index b = is[0], cin = is[1], h = is[2], w = is[3];
  const Index cout = ks[0], kh = ks[2], kw = ks[3];
  if (kh % 2 == 0 || kw % 2 == 0) throw ArgumentError("conv2d kernel extents must be odd");
  if (stride < 1) throw ArgumentError("conv2d stride must be >= 1");
  if (padding < 0) throw ArgumentError("conv2d padding must be >= 0");
  if (ks[1] != cin)
    throw DimensionError("conv2d channel mismatch: input " + input.shape().str() + " vs kernel " +
                         kernel.shape().str());
  if (h + 2 * padding < kh || w + 2 * padding < kw)
    throw DimensionError("conv2d kernel larger than padded input");
  const Index ho = (h + 2 * padding - kh) / stride + 1;
  const Index wo = (w + 2 * padding - kw) / stride + 1;
  const Index k = cin * kh * kw, n = ho * wo;

  Tensor out = uninitialized(Shape::nchw(b, cout, ho, wo));
  {
    RowMap cols(conv_scratch(k * n), k, n);
    ConstRowMap kmat(kernel.value().data(), cout, k);
    for (Index bi = 0; bi < b; ++bi) {
      im2col(input.value().data() + bi * cin * h * w, cin, h, w, kh, kw, stride, padding, ho, wo,
             cols.data());
      RowMap omat(out.value().data() + bi * cout * n, cout, n);
      omat.noalias() = kmat * cols;
    }
  }
  if (want_tape({&input, &kernel})) {
    out.set_requires_grad(true);
    auto in_n = input.node(), k_n = kernel.node(), out_n = out.node();
    const int s = stride, p = padding;
    Tape::active()->record([=] {
      if (!out_n->has_grad()) return;
      RowMap cols(conv_scratch(k * n), k, n);
      for (Index bi = 0; bi < b; ++bi) {
        ConstRowMap gmat(out_n->grad.data() + bi * cout * n, cout, n);
        if (k_n->requires_grad) {
          im2col(in_n->value.data() + bi * cin * h * w, cin, h, w, kh, kw, s, p, ho, wo,
                 cols.data());
          RowMap kg(k_n->grad_buffer().data(), cout, k);
          kg.noalias() += gmat * cols.transpose();
        }
        if (in_n->requires_grad) {
          ConstRowMap kmat(k_n->value.data(), cout, k);
          cols.noalias() = kmat.transpose() * gmat;
          col2im_add(cols.data(), cin, h, w, kh, kw, s, p, ho, wo,
                     in_n->grad_buffer().data() + bi * cin * h * w);
        }
      }
    });
  }
  return out;
}

std::pair<Tensor, Tensor> conv2d_dual(const Tensor& input, const Tensor& k1, const Tensor& k2,
                                      int stride, int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(k1, "conv2d kernel");
  require_rank4(k2, "conv2d kernel");
  const auto& is = input.shape().dim;
  const auto& d1 = k1.shape().dim;
  const auto& d2 = k2.shape().dim;
  if (d1[1] != d2[1] || d1[2] != d2[2] || d1[3] != d2[3])
    throw DimensionError("conv2d_dual kernels disagree: " + k1.shape().str() + " vs " +
                         k2.shape().str());
  const Index b = is[0], cin = is[1], h = is[2], w = is[3];
  const Index c1 = d1[0], c2 = d2[0], kh = d1[2], kw = d1[3];
  if (kh % 2 == 0 || kw % 2 == 0) throw ArgumentError("conv2d kernel extents must be odd");
  if (stride < 1) throw ArgumentError("conv2d stride must be >= 1");
  if (padding < 0) throw ArgumentError("conv2d padding must be >= 0");
  if (d1[1] != cin)
    throw DimensionError("conv2d channel mismatch: input " + input.shape().str() + " vs kernel " +
                         k1.shape().str());
  if (h + 2 * padding < kh || w + 2 * padding < kw)
    throw DimensionError("conv2d kernel larger than padded input");
  const Index ho = (h + 2 * padding - kh) / stride + 1;
  const Index wo = (w + 2 * padding - kw) / stride + 1;
  const Index k = cin * kh * kw, n = ho * wo;

  Tensor o1 = uninitialized(Shape::nchw(b, c1, ho, wo));
  Tensor o2 = uninitialized(Shape::nchw(b, c2, ho, wo));
  {
    RowMap cols(conv_scratch(k * n), k, n);
    ConstRowMap m1(k1.value().data(), c1, k);
    ConstRowMap m2(k2.value().data(), c2, k);
    for (Index bi = 0; bi < b; ++bi) {
      im2col(input.value().data() + bi * cin * h * w, cin, h, w, kh, kw, stride, padding, ho, wo,
             cols.data());
      RowMap(o1.value().data() + bi * c1 * n, c1, n).noalias() = m1 * cols;
      RowMap(o2.value().data() + bi * c2 * n, c2, n).noalias() = m2 * cols;
    }
  }
  if (want_tape({&input, &k1, &k2})) {
    o1.set_requires_grad(true);
    o2.set_requires_grad(true);
    auto in_n = input.node(), k1_n = k1.node(), k2_n = k2.node();
    auto o1_n = o1.node(), o2_n = o2.node();
    const int s = stride, p = padding;
    Tape::active()->record([=] {
      const bool g1 = o1_n->has_grad(), g2 = o2_n->has_grad();
      if (!g1 && !g2) return;
      RowMap cols(conv_scratch(k * n), k, n);
      for (Index bi = 0; bi < b; ++bi) {
        if (k1_n->requires_grad || k2_n->requires_grad) {
          im2col(in_n->value.data() + bi * cin * h * w, cin, h, w, kh, kw, s, p, ho, wo,
                 cols.data());
          if (g1 && k1_n->requires_grad) {
            ConstRowMap gmat(o1_n->grad.data() + bi * c1 * n, c1, n);
            RowMap(k1_n->grad_buffer().data(), c1, k).noalias() += gmat * cols.transpose();
          }
          if (g2 && k2_n->requires_grad) {
            ConstRowMap gmat(o2_n->grad.data() + bi * c2 * n, c2, n);
            RowMap(k2_n->grad_buffer().data(), c2, k).noalias() += gmat * cols.transpose();
          }
        }
        if (in_n->requires_grad) {
          bool seeded = false;
          if (g1) {
            ConstRowMap gmat(o1_n->grad.data() + bi * c1 * n, c1, n);
            cols.noalias() = ConstRowMap(k1_n->value.data(), c1, k).transpose() * gmat;
            seeded = true;
          }
          if (g2) {
            ConstRowMap gmat(o2_n->grad.data() + bi * c2 * n, c2, n);
            if (seeded)
              cols.noalias() += ConstRowMap(k2_n->value.data(), c2, k).transpose() * gmat;
            else
              cols.noalias() = ConstRowMap(k2_n->value.data(), c2, k).transpose() * gmat;
          }
          col2im_add(cols.data(), cin, h, w, kh, kw, s, p, ho, wo,
                     in_n->grad_buffer().data() + bi * cin * h * w);
        }
      }
    });
  }
  return {o1, o2};
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  require_rank4(x, "add_channel_bias");
  const auto& d = x.shape().dim;
  const Index b = d[0], c = d[1], hw = d[2] * d[3];
  if (bias.numel() != c)
    throw DimensionError("bias length " + std::to_string(bias.numel()) + " vs channels " +
                         std::to_string(c));
  Tensor out = uninitialized(x.shape());
  for (Index bi = 0; bi < b; ++bi)
    for (Index ci = 0; ci < c; ++ci) {
      const Index off = (bi * c + ci) * hw;
      out.value().segment(off, hw) = x.value().segment(off, hw) + bias.value()[ci];
    }
  if (want_tape({&x, &bias})) {
    out.set_requires_grad(true);
    auto xn = x.node(), bn = bias.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      if (xn->requires_grad) xn->grad_buffer() += on->grad;
      if (bn->requires_grad) {
        Array& bg = bn->grad_buffer();
        for (Index bi = 0; bi < b; ++bi)
          for (Index ci = 0; ci < c; ++ci) bg[ci] += on->grad.segment((bi * c + ci) * hw, hw).sum();
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.rank != 2) throw DimensionError("linear weight must be rank 2, got " + ws.str());
  const Index b = xs.dim[0], k = xs.numel() / xs.dim[0];
  const Index m = ws.dim[0];
  if (ws.dim[1] != k)
    throw DimensionError("linear: input features " + std::to_string(k) + " vs weight " + ws.str());
  Tensor out = uninitialized(Shape::nchw(b, m, 1, 1));
  {
    ConstRowMap xm(x.value().data(), b, k);
    ConstRowMap wm(weight.value().data(), m, k);
    RowMap om(out.value().data(), b, m);
    om.noalias() = xm * wm.transpose();
  }
  if (want_tape({&x, &weight})) {
    out.set_requires_grad(true);
    auto xn = x.node(), wn = weight.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      ConstRowMap gm(on->grad.data(), b, m);
      if (xn->requires_grad) {
        ConstRowMap wm(wn->value.data(), m, k);
        RowMap xg(xn->grad_buffer().data(), b, k);
        xg.noalias() += gm * wm;
      }
      if (wn->requires_grad) {
        ConstRowMap xm(xn->value.data(), b, k);
        RowMap wg(wn->grad_buffer().data(), m, k);
        wg.noalias() += gm.transpose() * xm;
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, const Shape& s) {
  if (s.numel() != x.numel())
    throw DimensionError("reshape " + x.shape().str() + " -> " + s.str());
  Tensor out(s, x.value());
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad()) xn->grad_buffer() += on->grad;
    });
  }
  return out;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  require_rank4(x, "upsample_nearest");
  if (factor < 1) throw ArgumentError("upsample factor must be >= 1");
  const auto& d = x.shape().dim;
  const Index b = d[0], c = d[1], h = d[2], w = d[3];
  const Index f = factor, ho = h * f, wo = w * f;
  Tensor out = uninitialized(Shape::nchw(b, c, ho, wo));
  {
    const double* src = x.value().data();
    double* dst = out.value().data();
    for (Index bc = 0; bc < b * c; ++bc)
      for (Index y = 0; y < h; ++y) {
        double* orow0 = dst + bc * ho * wo + y * f * wo;
        const double* srow = src + bc * h * w + y * w;
        for (Index xx = 0; xx < w; ++xx)
          for (Index j = 0; j < f; ++j) orow0[xx * f + j] = srow[xx];
        for (Index i = 1; i < f; ++i)
          std::memcpy(orow0 + i * wo, orow0, sizeof(double) * static_cast<std::size_t>(wo));
      }
  }
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad() || !xn->requires_grad) return;
      const double* g = on->grad.data();
      double* xg = xn->grad_buffer().data();
      for (Index bc = 0; bc < b * c; ++bc)
        for (Index yo = 0; yo < ho; ++yo) {
          const double* grow = g + bc * ho * wo + yo * wo;
          double* xrow = xg + bc * h * w + (yo / f) * w;
          for (Index xo = 0; xo < wo; ++xo) xrow[xo / f] += grow[xo];
        }
    });
  }
  return out;
}

Tensor avgpool(const Tensor& x, int factor) {
  require_rank4(x, "avgpool");
  if (factor < 1) throw ArgumentError("avgpool factor must be >= 1");
  const auto& d = x.shape().dim;
  const Index b = d[0], c = d[1], h = d[2], w = d[3];
  if (h % factor != 0 || w % factor != 0)
    throw ArgumentError("avgpool factor must divide extents, got " + x.shape().str() + " / " +
                        std::to_string(factor));
  const Index f = factor, ho = h / f, wo = w / f;
  const double inv = 1.0 / static_cast<double>(f * f);
  Tensor out = uninitialized(Shape::nchw(b, c, ho, wo));
  {
    const double* src = x.value().data();
    double* dst = out.value().data();
    for (Index bc = 0; bc < b * c; ++bc)
      for (Index yo = 0; yo < ho; ++yo)
        for (Index xo = 0; xo < wo; ++xo) {
          double acc = 0;
          for (Index i = 0; i < f; ++i) {
            const double* srow = src + bc * h * w + (yo * f + i) * w + xo * f;
            for (Index j = 0; j < f; ++j) acc += srow[j];
          }
          dst[bc * ho * wo + yo * wo + xo] = acc * inv;
        }
  }
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad() || !xn->requires_grad) return;
      const double* g = on->grad.data();
      double* xg = xn->grad_buffer().data();
      for (Index bc = 0; bc < b * c; ++bc)
        for (Index yo = 0; yo < ho; ++yo)
          for (Index xo = 0; xo < wo; ++xo) {
            const double gv = g[bc * ho * wo + yo * wo + xo] * inv;
            for (Index i = 0; i < f; ++i) {
              double* xrow = xg + bc * h * w + (yo * f + i) * w + xo * f;
              for (Index j = 0; j < f; ++j) xrow[j] += gv;
            }
          }
    });
  }
  return out;
}

Tensor activation(const Tensor& x, Act kind) {
  Array v;
  switch (kind) {
    case Act::ReLU: v = x.value().max(0.0); break;
    case Act::LeakyReLU: v = (x.value() > 0.0).select(x.value(), kLeakySlope * x.value()); break;
    case Act::Sigmoid: v = 1.0 / (1.0 + (-x.value()).exp()); break;
    case Act::Tanh: v = x.value().tanh(); break;
  }
  Tensor out(x.shape(), std::move(v));
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad() || !xn->requires_grad) return;
      const Array& g = on->grad;
      const Array& y = on->value;
      switch (kind) {
        case Act::ReLU:
          xn->grad_buffer() += (xn->value > 0.0).select(g, 0.0);
          break;
        case Act::LeakyReLU:
          xn->grad_buffer() += (xn->value > 0.0).select(g, kLeakySlope * g);
          break;
        case Act::Sigmoid:
          xn->grad_buffer() += g * y * (1.0 - y);
          break;
        case Act::Tanh:
          xn->grad_buffer() += g * (1.0 - y.square());
          break;
      }
    });
  }
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape(), a.value() + b.value());
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto an = a.node(), bn = b.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      if (an->requires_grad) an->grad_buffer() += on->grad;
      if (bn->requires_grad) bn->grad_buffer() += on->grad;
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape(), a.value() - b.value());
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto an = a.node(), bn = b.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      if (an->requires_grad) an->grad_buffer() += on->grad;
      if (bn->requires_grad) bn->grad_buffer() -= on->grad;
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape(), a.value() * b.value());
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto an = a.node(), bn = b.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      if (an->requires_grad) an->grad_buffer() += on->grad * bn->value;
      if (bn->requires_grad) bn->grad_buffer() += on->grad * an->value;
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& x, double s) {
  Tensor out(x.shape(), x.value() + s);
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad) xn->grad_buffer() += on->grad;
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double s) {
  Tensor out(x.shape(), x.value() * s);
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad) xn->grad_buffer() += s * on->grad;
    });
  }
  return out;
}

Tensor reciprocal(const Tensor& x) {
  Tensor out(x.shape(), x.value().inverse());
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad)
        xn->grad_buffer() -= on->grad * on->value.square();
    });
  }
  return out;
}

Tensor abs(const Tensor& x) {
  Tensor out(x.shape(), x.value().abs());
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad) xn->grad_buffer() += on->grad * xn->value.sign();
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  Tensor out(Shape::scalar(), Array::Constant(1, x.value().sum()));
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad) xn->grad_buffer() += on->grad[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  Tensor out(Shape::scalar(), Array::Constant(1, x.value().sum() * inv));
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (on->has_grad() && xn->requires_grad) xn->grad_buffer() += on->grad[0] * inv;
    });
  }
  return out;
}

Tensor mul_map(const Tensor& x, const Tensor& map) {
  require_rank4(x, "mul_map");
  require_rank4(map, "mul_map map");
  const auto& d = x.shape().dim;
  const auto& md = map.shape().dim;
  const Index b = d[0], c = d[1], hw = d[2] * d[3];
  if (md[1] != 1 || md[2] != d[2] || md[3] != d[3] || (md[0] != 1 && md[0] != b))
    throw DimensionError("mul_map: map " + map.shape().str() + " incompatible with " +
                         x.shape().str());
  const bool shared = md[0] == 1;
  Tensor out = uninitialized(x.shape());
  for (Index bi = 0; bi < b; ++bi) {
    auto mseg = map.value().segment(shared ? 0 : bi * hw, hw);
    for (Index ci = 0; ci < c; ++ci)
      out.value().segment((bi * c + ci) * hw, hw) =
          x.value().segment((bi * c + ci) * hw, hw) * mseg;
  }
  if (want_tape({&x, &map})) {
    out.set_requires_grad(true);
    auto xn = x.node(), mn = map.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      for (Index bi = 0; bi < b; ++bi) {
        const Index moff = shared ? 0 : bi * hw;
        for (Index ci = 0; ci < c; ++ci) {
          const Index off = (bi * c + ci) * hw;
          if (xn->requires_grad)
            xn->grad_buffer().segment(off, hw) +=
                on->grad.segment(off, hw) * mn->value.segment(moff, hw);
          if (mn->requires_grad)
            mn->grad_buffer().segment(moff, hw) +=
                on->grad.segment(off, hw) * xn->value.segment(off, hw);
        }
      }
    });
  }
  return out;
}

Tensor modulate(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& map) {
  require_rank4(x, "modulate");
  require_rank4(map, "modulate map");
  if (gamma.shape() != x.shape() || beta.shape() != x.shape())
    throw DimensionError("modulate: gamma " + gamma.shape().str() + " / beta " +
                         beta.shape().str() + " must match " + x.shape().str());
  const auto& d = x.shape().dim;
  const auto& md = map.shape().dim;
  const Index b = d[0], c = d[1], hw = d[2] * d[3];
  if (md[1] != 1 || md[2] != d[2] || md[3] != d[3] || (md[0] != 1 && md[0] != b))
    throw DimensionError("modulate: map " + map.shape().str() + " incompatible with " +
                         x.shape().str());
  const bool shared = md[0] == 1;
  Tensor out = uninitialized(x.shape());
  for (Index bi = 0; bi < b; ++bi) {
    auto mseg = map.value().segment(shared ? 0 : bi * hw, hw);
    for (Index ci = 0; ci < c; ++ci) {
      const Index off = (bi * c + ci) * hw;
      out.value().segment(off, hw) = (gamma.value().segment(off, hw) * x.value().segment(off, hw) +
                                      beta.value().segment(off, hw)) *
                                     mseg;
    }
  }
  if (want_tape({&x, &gamma, &beta, &map})) {
    out.set_requires_grad(true);
    auto xn = x.node(), gn = gamma.node(), bn = beta.node(), mn = map.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      for (Index bi = 0; bi < b; ++bi) {
        const Index moff = shared ? 0 : bi * hw;
        auto mseg = mn->value.segment(moff, hw);
        for (Index ci = 0; ci < c; ++ci) {
          const Index off = (bi * c + ci) * hw;
          auto g = on->grad.segment(off, hw);
          if (xn->requires_grad)
            xn->grad_buffer().segment(off, hw) += g * gn->value.segment(off, hw) * mseg;
          if (gn->requires_grad)
            gn->grad_buffer().segment(off, hw) += g * xn->value.segment(off, hw) * mseg;
          if (bn->requires_grad) bn->grad_buffer().segment(off, hw) += g * mseg;
          if (mn->requires_grad)
            mn->grad_buffer().segment(moff, hw) +=
                g * (gn->value.segment(off, hw) * xn->value.segment(off, hw) +
                     bn->value.segment(off, hw));
        }
      }
    });
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  const auto& da = a.shape().dim;
  const auto& db = b.shape().dim;
  if (da[0] != db[0] || da[2] != db[2] || da[3] != db[3])
    throw DimensionError("concat_channels: " + a.shape().str() + " vs " + b.shape().str());
  const Index bs = da[0], ca = da[1], cb = db[1], hw = da[2] * da[3];
  Tensor out = uninitialized(Shape::nchw(bs, ca + cb, da[2], da[3]));
  for (Index bi = 0; bi < bs; ++bi) {
    out.value().segment(bi * (ca + cb) * hw, ca * hw) = a.value().segment(bi * ca * hw, ca * hw);
    out.value().segment(bi * (ca + cb) * hw + ca * hw, cb * hw) =
        b.value().segment(bi * cb * hw, cb * hw);
  }
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto an = a.node(), bn = b.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad()) return;
      for (Index bi = 0; bi < bs; ++bi) {
        if (an->requires_grad)
          an->grad_buffer().segment(bi * ca * hw, ca * hw) +=
              on->grad.segment(bi * (ca + cb) * hw, ca * hw);
        if (bn->requires_grad)
          bn->grad_buffer().segment(bi * cb * hw, cb * hw) +=
              on->grad.segment(bi * (ca + cb) * hw + ca * hw, cb * hw);
      }
    });
  }
  return out;
}

Tensor instance_normalize(const Tensor& x, double eps) {
  require_rank4(x, "instance_normalize");
  if (eps <= 0) throw ArgumentError("instance_normalize eps must be > 0");
  const auto& d = x.shape().dim;
  const Index b = d[0], c = d[1], hw = d[2] * d[3];
  if (hw < 1) throw DimensionError("instance_normalize needs at least one spatial element");
  Tensor out = uninitialized(x.shape());
  auto istd = std::make_shared<std::vector<double>>(static_cast<std::size_t>(b * c));
  const double inv = 1.0 / static_cast<double>(hw);
  for (Index bc = 0; bc < b * c; ++bc) {
    auto seg = x.value().segment(bc * hw, hw);
    const double mu = seg.sum() * inv;
    const double var = (seg - mu).square().sum() * inv;
    const double is = 1.0 / std::sqrt(var + eps);
    (*istd)[static_cast<std::size_t>(bc)] = is;
    out.value().segment(bc * hw, hw) = (seg - mu) * is;
  }
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xn = x.node(), on = out.node();
    Tape::active()->record([=] {
      if (!on->has_grad() || !xn->requires_grad) return;
      for (Index bc = 0; bc < b * c; ++bc) {
        auto g = on->grad.segment(bc * hw, hw);
        auto xhat = on->value.segment(bc * hw, hw);
        const double mg = g.sum() * inv;
        const double mgx = (g * xhat).sum() * inv;
        xn->grad_buffer().segment(bc * hw, hw) +=
            (*istd)[static_cast<std::size_t>(bc)] * (g - mg - xhat * mgx);
      }
    });
  }
  return out;
}

Tensor detach(const Tensor& x) { return Tensor(x.shape(), x.value()); }

}  // namespace pdgan
