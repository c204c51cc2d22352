// SPDX-License-Identifier: Apache-2.0
#include <piann/ops.hpp>

#include <algorithm>
#include <cmath>

namespace piann {

namespace {

Tape &common_tape(const Var &a, const Var &b) {
  if (&a.tape() != &b.tape())
    throw std::logic_error("operands live on different tapes");
  return a.tape();
}

void require_rank(const Var &a, std::size_t rank, const char *op) {
  if (a.shape().size() != rank)
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " + to_string(a.shape()));
}

double sigmoid_value(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

} // namespace

Var matmul(const Var &a, const Var &b) {
  Tape &tape = common_tape(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k)
    throw ShapeError("matmul: inner extents differ: " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  Tensor out(Shape{m, n});
  {
    const auto &av = a.value().storage();
    const auto &bv = b.value().storage();
    auto &ov = out.storage();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        if (aip == 0.0)
          continue;
        const double *brow = &bv[p * n];
        double *orow = &ov[i * n];
        for (std::size_t j = 0; j < n; ++j)
          orow[j] += aip * brow[j];
      }
  }
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    if (t.requires_grad(ia)) {
      // ga = g . b^T
      const auto &bv = t.value(ib).storage();
      auto &ga = t.grad_slot(ia).storage();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (t.requires_grad(ib)) {
      // gb = a^T . g
      const auto &av = t.value(ia).storage();
      auto &gb = t.grad_slot(ib).storage();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j)
            gb[p * n + j] += aip * g[i * n + j];
        }
    }
  });
}

Var matvec(const Var &w, const Var &x) {
  Tape &tape = common_tape(w, x);
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t rows = w.shape()[0], cols = w.shape()[1];
  if (x.shape()[0] != cols)
    throw ShapeError("matvec: " + to_string(w.shape()) + " cannot multiply " +
                     to_string(x.shape()));
  Tensor out(Shape{rows});
  {
    const auto &wv = w.value().storage();
    const auto &xv = x.value().storage();
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c)
        acc += wv[r * cols + c] * xv[c];
      out[r] = acc;
    }
  }
  const auto iw = w.id(), ix = x.id();
  return tape.record(std::move(out), {iw, ix}, [iw, ix, rows, cols](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    if (t.requires_grad(iw)) {
      const auto &xv = t.value(ix).storage();
      auto &gw = t.grad_slot(iw).storage();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          gw[r * cols + c] += g[r] * xv[c];
    }
    if (t.requires_grad(ix)) {
      const auto &wv = t.value(iw).storage();
      auto &gx = t.grad_slot(ix).storage();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          gx[c] += wv[r * cols + c] * g[r];
    }
  });
}

Var transpose(const Var &a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out(Shape{n, m});
  const auto &av = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.at(j, i) = av.at(i, j);
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, m, n](Tape &t, std::size_t self) {
    const auto &g = t.grad(self);
    auto &ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        ga.at(i, j) += g.at(j, i);
  });
}

Var elementwise(const Var &a, const Var &b, Elementwise kind) {
  Tape &tape = common_tape(a, b);
  const auto &av = a.value();
  const auto &bv = b.value();
  const bool same = av.shape() == bv.shape();
  const bool a_scalar = !same && av.size() == 1;
  const bool b_scalar = !same && bv.size() == 1;
  if (!same && !a_scalar && !b_scalar)
    throw ShapeError("elementwise: shape mismatch " + to_string(av.shape()) +
                     " vs " + to_string(bv.shape()));
  const Shape &out_shape = a_scalar ? bv.shape() : av.shape();
  Tensor out(out_shape);
  const std::size_t n = out.size();
  auto a_at = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
  auto b_at = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a_at(i), y = b_at(i);
    switch (kind) {
    case Elementwise::kAdd: out[i] = x + y; break;
    case Elementwise::kSub: out[i] = x - y; break;
    case Elementwise::kMul: out[i] = x * y; break;
    case Elementwise::kDiv:
      if (y == 0.0)
        throw NumericError("div: zero divisor at flat index " + std::to_string(i));
      out[i] = x / y;
      break;
    }
  }
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib},
                     [ia, ib, kind, a_scalar, b_scalar, n](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    const auto &av = t.value(ia).storage();
    const auto &bv = t.value(ib).storage();
    auto ai = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
    auto bi = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };
    if (t.requires_grad(ia)) {
      auto &ga = t.grad_slot(ia).storage();
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        switch (kind) {
        case Elementwise::kAdd:
        case Elementwise::kSub: d = g[i]; break;
        case Elementwise::kMul: d = g[i] * bi(i); break;
        case Elementwise::kDiv: d = g[i] / bi(i); break;
        }
        ga[a_scalar ? 0 : i] += d;
      }
    }
    if (t.requires_grad(ib)) {
      auto &gb = t.grad_slot(ib).storage();
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        switch (kind) {
        case Elementwise::kAdd: d = g[i]; break;
        case Elementwise::kSub: d = -g[i]; break;
        case Elementwise::kMul: d = g[i] * ai(i); break;
        case Elementwise::kDiv: {
          const double y = bi(i);
          d = -g[i] * ai(i) / (y * y);
          break;
        }
        }
        gb[b_scalar ? 0 : i] += d;
      }
    }
  });
}

Var affine(const Var &a, double alpha, double beta) {
  Tensor out = a.value();
  for (auto &v : out.storage())
    v = alpha * v + beta;
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, alpha](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += alpha * g[i];
  });
}

Var activation(const Var &a, Activation kind) {
  Tensor out = a.value();
  for (auto &v : out.storage())
    v = kind == Activation::kSigmoid ? sigmoid_value(v) : std::tanh(v);
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, kind](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    const auto &y = t.value(self).storage();
    auto &ga = t.grad_slot(ia).storage();
    if (kind == Activation::kSigmoid)
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i] * y[i] * (1.0 - y[i]);
    else
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax_rows(const Var &a) {
  const auto &shape = a.shape();
  if (shape.empty() || shape.size() > 2)
    throw ShapeError("softmax_rows: expected rank 1 or 2, got " + to_string(shape));
  const std::size_t rows = shape.size() == 2 ? shape[0] : 1;
  const std::size_t cols = shape.back();
  Tensor out = a.value();
  auto &ov = out.storage();
  for (std::size_t r = 0; r < rows; ++r) {
    double *row = &ov[r * cols];
    const double top = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - top);
      total += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c)
      row[c] /= total;
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, rows, cols](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    const auto &s = t.value(self).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t off = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c)
        dot += g[off + c] * s[off + c];
      for (std::size_t c = 0; c < cols; ++c)
        ga[off + c] += s[off + c] * (g[off + c] - dot);
    }
  });
}

namespace {

// Views a tensor as [outer x extent x inner] around `axis`.
struct AxisView {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisView axis_view(const Shape &shape, std::size_t axis) {
  AxisView v;
  for (std::size_t d = 0; d < axis; ++d)
    v.outer *= shape[d];
  v.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d)
    v.inner *= shape[d];
  return v;
}

} // namespace

Var concat(const Var &a, const Var &b, std::size_t axis) {
  Tape &tape = common_tape(a, b);
  const auto &sa = a.shape();
  const auto &sb = b.shape();
  if (axis >= sa.size() || axis >= sb.size())
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     to_string(sa) + " and " + to_string(sb));
  if (sa.size() != sb.size())
    throw ShapeError("concat: rank mismatch " + to_string(sa) + " vs " + to_string(sb));
  for (std::size_t d = 0; d < sa.size(); ++d)
    if (d != axis && sa[d] != sb[d])
      throw ShapeError("concat: shape mismatch " + to_string(sa) + " vs " + to_string(sb));
  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  const AxisView va = axis_view(sa, axis), vb = axis_view(sb, axis);
  const std::size_t ea = va.extent * va.inner, eb = vb.extent * vb.inner;
  Tensor out(out_shape);
  {
    const auto &av = a.value().storage();
    const auto &bv = b.value().storage();
    auto &ov = out.storage();
    for (std::size_t o = 0; o < va.outer; ++o) {
      std::copy_n(&av[o * ea], ea, &ov[o * (ea + eb)]);
      std::copy_n(&bv[o * eb], eb, &ov[o * (ea + eb) + ea]);
    }
  }
  const auto ia = a.id(), ib = b.id();
  const std::size_t outer = va.outer;
  return tape.record(std::move(out), {ia, ib}, [ia, ib, outer, ea, eb](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    if (t.requires_grad(ia)) {
      auto &ga = t.grad_slot(ia).storage();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t e = 0; e < ea; ++e)
          ga[o * ea + e] += g[o * (ea + eb) + e];
    }
    if (t.requires_grad(ib)) {
      auto &gb = t.grad_slot(ib).storage();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t e = 0; e < eb; ++e)
          gb[o * eb + e] += g[o * (ea + eb) + ea + e];
    }
  });
}

Var slice(const Var &a, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto &sa = a.shape();
  if (axis >= sa.size())
    throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for " +
                     to_string(sa));
  if (begin > end || end > sa[axis])
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + to_string(sa));
  const AxisView v = axis_view(sa, axis);
  const std::size_t len = end - begin;
  Shape out_shape = sa;
  out_shape[axis] = len;
  Tensor out(out_shape);
  {
    const auto &av = a.value().storage();
    auto &ov = out.storage();
    for (std::size_t o = 0; o < v.outer; ++o)
      std::copy_n(&av[(o * v.extent + begin) * v.inner], len * v.inner,
                  &ov[o * len * v.inner]);
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, v, begin, len](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t e = 0; e < len * v.inner; ++e)
        ga[(o * v.extent + begin) * v.inner + e] += g[o * len * v.inner + e];
  });
}

Var stack(std::span<const Var> rows) {
  if (rows.empty())
    throw ShapeError("stack: no rows");
  Tape &tape = rows.front().tape();
  const Shape &row_shape = rows.front().shape();
  if (row_shape.size() != 1)
    throw ShapeError("stack: rows must be rank 1, got " + to_string(row_shape));
  const std::size_t width = row_shape[0];
  Tensor out(Shape{rows.size(), width});
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (&rows[r].tape() != &tape)
      throw std::logic_error("stack: rows live on different tapes");
    if (rows[r].shape() != row_shape)
      throw ShapeError("stack: row shape " + to_string(rows[r].shape()) +
                       " differs from " + to_string(row_shape));
    std::copy_n(rows[r].value().storage().begin(), width, &out.storage()[r * width]);
    ids.push_back(rows[r].id());
  }
  auto captured = ids;
  return tape.record(std::move(out), std::move(ids),
                     [ids = std::move(captured), width](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!t.requires_grad(ids[r]))
        continue;
      auto &gr = t.grad_slot(ids[r]).storage();
      for (std::size_t c = 0; c < width; ++c)
        gr[c] += g[r * width + c];
    }
  });
}

Var reshape(const Var &a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + to_string(a.shape()) + " as " +
                     to_string(shape));
  Tensor out(std::move(shape), a.value().storage());
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i];
  });
}

Var sum(const Var &a) {
  double total = 0.0;
  for (double v : a.value().storage())
    total += v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(total), {ia}, [ia](Tape &t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto &v : t.grad_slot(ia).storage())
      v += g;
  });
}

Var mean(const Var &a) {
  if (a.size() == 0)
    throw ShapeError("mean of empty tensor");
  return affine(sum(a), 1.0 / static_cast<double>(a.size()), 0.0);
}

Var square(const Var &a) {
  Tensor out = a.value();
  for (auto &v : out.storage())
    v *= v;
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    const auto &x = t.value(ia).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += 2.0 * x[i] * g[i];
  });
}

Var frobenius_sq(const Var &a) {
  double total = 0.0;
  for (double v : a.value().storage())
    total += v * v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(total), {ia}, [ia](Tape &t, std::size_t self) {
    const double g = t.grad(self)[0];
    const auto &x = t.value(ia).storage();
    auto &ga = t.grad_slot(ia).storage();
    for (std::size_t i = 0; i < x.size(); ++i)
      ga[i] += 2.0 * g * x[i];
  });
}

Var additive_scores(const Var &keys, const Var &query, const Var &v) {
  Tape &tape = common_tape(keys, query);
  common_tape(keys, v);
  require_rank(keys, 2, "additive_scores");
  const std::size_t n = keys.shape()[0], width = keys.shape()[1];
  if (query.shape() != Shape{width} || v.shape() != Shape{width})
    throw ShapeError("additive_scores: keys " + to_string(keys.shape()) +
                     " incompatible with query " + to_string(query.shape()) +
                     " / v " + to_string(v.shape()));
  Tensor out(Shape{n});
  {
    const auto &kv = keys.value().storage();
    const auto &qv = query.value().storage();
    const auto &vv = v.value().storage();
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < width; ++k)
        acc += vv[k] * std::tanh(kv[j * width + k] + qv[k]);
      out[j] = acc;
    }
  }
  const auto ik = keys.id(), iq = query.id(), iv = v.id();
  return tape.record(std::move(out), {ik, iq, iv},
                     [ik, iq, iv, n, width](Tape &t, std::size_t self) {
    const auto &g = t.grad(self).storage();
    const auto &kv = t.value(ik).storage();
    const auto &qv = t.value(iq).storage();
    const auto &vv = t.value(iv).storage();
    const bool need_k = t.requires_grad(ik);
    const bool need_q = t.requires_grad(iq);
    const bool need_v = t.requires_grad(iv);
    std::vector<double> *gk = need_k ? &t.grad_slot(ik).storage() : nullptr;
    std::vector<double> *gq = need_q ? &t.grad_slot(iq).storage() : nullptr;
    std::vector<double> *gv = need_v ? &t.grad_slot(iv).storage() : nullptr;
    for (std::size_t j = 0; j < n; ++j) {
      const double gj = g[j];
      if (gj == 0.0)
        continue;
      for (std::size_t k = 0; k < width; ++k) {
        const double th = std::tanh(kv[j * width + k] + qv[k]);
        if (gv)
          (*gv)[k] += gj * th;
        const double pre = gj * vv[k] * (1.0 - th * th);
        if (gk)
          (*gk)[j * width + k] += pre;
        if (gq)
          (*gq)[k] += pre;
      }
    }
  });
}

} // namespace piann
