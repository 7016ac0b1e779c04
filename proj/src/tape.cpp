/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/tape.hpp"

#include <cmath>

namespace spherecast {

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad && recording_) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor value, bool requires_grad) { return push(std::move(value), requires_grad, {}); }

double Tape::scalar(Var v) const {
  const Tensor& t = val(v);
  if (t.size() != 1) throw DimensionError("Tape::scalar: not a 1x1 tensor");
  return t.data[0];
}

Var Tape::add(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  require_same_shape(ta, tb, "Tape::add");
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, b, self](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
      }
    };
  return self;
}

Var Tape::sub(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  require_same_shape(ta, tb, "Tape::sub");
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= tb.data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, b, self](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
      }
    };
  return self;
}

Var Tape::mul(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  require_same_shape(ta, tb, "Tape::mul");
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, b, self](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad_mut(a);
        const Tensor& vb = t.val(b);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * vb.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_mut(b);
        const Tensor& va = t.val(a);
        for (size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * va.data[i];
      }
    };
  return self;
}

Var Tape::scale(Var a, double s) { return affine(a, s, 0.0); }

Var Tape::add_scaled(Var a, Var b, double s) {
  const Tensor &ta = val(a), &tb = val(b);
  require_same_shape(ta, tb, "Tape::add_scaled");
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += s * tb.data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, b, s, self](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) gb.data[i] += s * g.data[i];
      }
    };
  return self;
}

Var Tape::affine(Var a, double s, double t0) {
  const Tensor& ta = val(a);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = s * out.data[i] + t0;
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, s, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += s * g.data[i];
    };
  return self;
}

Var Tape::leaky_relu(Var a, double slope) {
  const Tensor& ta = val(a);
  Tensor out = ta;
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, slope, self](Tape& t) {
      const Tensor& g = t.grad(self);
      const Tensor& va = t.val(a);
      Tensor& ga = t.grad_mut(a);
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * (va.data[i] > 0.0 ? 1.0 : slope);
    };
  return self;
}

Var Tape::clamp(Var a, double lo, double hi) {
  const Tensor& ta = val(a);
  Tensor out = ta;
  for (double& v : out.data) v = v < lo ? lo : (v > hi ? hi : v);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, lo, hi, self](Tape& t) {
      const Tensor& g = t.grad(self);
      const Tensor& va = t.val(a);
      Tensor& ga = t.grad_mut(a);
      for (size_t i = 0; i < g.size(); ++i)
        if (va.data[i] > lo && va.data[i] < hi) ga.data[i] += g.data[i];
    };
  return self;
}

Var Tape::smooth_clamp(Var a, double c) {
  const Tensor& ta = val(a);
  Tensor out = ta;
  for (double& v : out.data) v = c * std::tanh(v / c);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, c, self](Tape& t) {
      const Tensor& g = t.grad(self);
      const Tensor& va = t.val(a);
      Tensor& ga = t.grad_mut(a);
      for (size_t i = 0; i < g.size(); ++i) {
        const double th = std::tanh(va.data[i] / c);
        ga.data[i] += g.data[i] * (1.0 - th * th);
      }
    };
  return self;
}

Var Tape::row_mul(Var a, const std::vector<double>& w) {
  const Tensor& ta = val(a);
  if (static_cast<int>(w.size()) != ta.rows) throw DimensionError("Tape::row_mul: weight length != rows");
  Tensor out = ta;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) *= w[r];
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, w, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(r, c) += g.at(r, c) * w[r];
    };
  return self;
}

Var Tape::matmul(Var x, Var w) {
  const Tensor &tx = val(x), &tw = val(w);
  if (tx.cols != tw.rows) throw DimensionError("Tape::matmul: inner dimensions differ");
  Tensor out(tx.rows, tw.cols);
  for (int i = 0; i < tx.rows; ++i)
    for (int k = 0; k < tx.cols; ++k) {
      const double xv = tx.at(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < tw.cols; ++j) out.at(i, j) += xv * tw.at(k, j);
    }
  bool rg = requires_grad(x) || requires_grad(w);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [x, w, self](Tape& t) {
      const Tensor& g = t.grad(self);
      const Tensor& tx = t.val(x);
      const Tensor& tw = t.val(w);
      if (t.requires_grad(x)) {
        Tensor& gx = t.grad_mut(x);  // gX += g W^T
        for (int i = 0; i < tx.rows; ++i)
          for (int k = 0; k < tx.cols; ++k) {
            double acc = 0.0;
            for (int j = 0; j < tw.cols; ++j) acc += g.at(i, j) * tw.at(k, j);
            gx.at(i, k) += acc;
          }
      }
      if (t.requires_grad(w)) {
        Tensor& gw = t.grad_mut(w);  // gW += X^T g
        for (int i = 0; i < tx.rows; ++i)
          for (int k = 0; k < tx.cols; ++k) {
            const double xv = tx.at(i, k);
            if (xv == 0.0) continue;
            for (int j = 0; j < tw.cols; ++j) gw.at(k, j) += xv * g.at(i, j);
          }
      }
    };
  return self;
}

Var Tape::add_bias(Var x, Var b) {
  const Tensor &tx = val(x), &tb = val(b);
  if (tb.rows != 1 || tb.cols != tx.cols) throw DimensionError("Tape::add_bias: bias must be 1 x cols");
  Tensor out = tx;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) += tb.data[c];
  bool rg = requires_grad(x) || requires_grad(b);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [x, b, self](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(x)) {
        Tensor& gx = t.grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_mut(b);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) gb.data[c] += g.at(r, c);
      }
    };
  return self;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("Tape::concat_cols: no parts");
  const int rows = val(parts[0]).rows;
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    if (val(p).rows != rows) throw DimensionError("Tape::concat_cols: row mismatch");
    total += val(p).cols;
    rg = rg || requires_grad(p);
  }
  Tensor out(rows, total);
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < tp.cols; ++c) out.at(r, off + c) = tp.at(r, c);
    off += tp.cols;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [ps, self](Tape& t) {
      const Tensor& g = t.grad(self);
      int off = 0;
      for (Var p : ps) {
        const int pc = t.val(p).cols;
        if (t.requires_grad(p)) {
          Tensor& gp = t.grad_mut(p);
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < pc; ++c) gp.at(r, c) += g.at(r, off + c);
        }
        off += pc;
      }
    };
  return self;
}

Var Tape::slice_cols(Var a, int col0, int ncols) {
  const Tensor& ta = val(a);
  if (col0 < 0 || col0 + ncols > ta.cols) throw DimensionError("Tape::slice_cols: out of range");
  Tensor out(ta.rows, ncols);
  for (int r = 0; r < ta.rows; ++r)
    for (int c = 0; c < ncols; ++c) out.at(r, c) = ta.at(r, col0 + c);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, col0, ncols, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < ncols; ++c) ga.at(r, col0 + c) += g.at(r, c);
    };
  return self;
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Tensor& ta = val(a);
  if (static_cast<size_t>(rows) * cols != ta.size()) throw DimensionError("Tape::reshape: element count differs");
  Tensor out(rows, cols);
  out.data = ta.data;
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    };
  return self;
}

Var Tape::gather_rows(Var a, const std::vector<int>& idx) {
  const Tensor& ta = val(a);
  Tensor out(static_cast<int>(idx.size()), ta.cols);
  for (size_t e = 0; e < idx.size(); ++e)
    for (int c = 0; c < ta.cols; ++c) out.at(static_cast<int>(e), c) = ta.at(idx[e], c);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, idx, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (size_t e = 0; e < idx.size(); ++e)
        for (int c = 0; c < g.cols; ++c) ga.at(idx[e], c) += g.at(static_cast<int>(e), c);
    };
  return self;
}

Var Tape::scatter_add_rows(Var a, const std::vector<int>& idx, int n_out) {
  const Tensor& ta = val(a);
  if (static_cast<size_t>(ta.rows) != idx.size()) throw DimensionError("Tape::scatter_add_rows: index count != rows");
  Tensor out(n_out, ta.cols);
  for (size_t e = 0; e < idx.size(); ++e)
    for (int c = 0; c < ta.cols; ++c) out.at(idx[e], c) += ta.at(static_cast<int>(e), c);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, idx, self](Tape& t) {
      const Tensor& g = t.grad(self);
      Tensor& ga = t.grad_mut(a);
      for (size_t e = 0; e < idx.size(); ++e)
        for (int c = 0; c < g.cols; ++c) ga.at(static_cast<int>(e), c) += g.at(idx[e], c);
    };
  return self;
}

Var Tape::spmm(const CsrMatrix& m, Var x) {
  const Tensor& tx = val(x);
  Tensor out;
  m.multiply(tx, out);
  bool rg = requires_grad(x);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [&m, x, self](Tape& t) {
      // gX += A^T g; caller guarantees the matrix outlives the tape.
      m.multiply_transpose_accum(t.grad(self), t.grad_mut(x));
    };
  return self;
}

Var Tape::dd_theta(Var a, const GridPtr& g) {
  const Tensor& ta = val(a);
  Tensor out;
  stencil::d_dtheta(ta, *g, out);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, g, self](Tape& t) { stencil::d_dtheta_adjoint(t.grad(self), *g, t.grad_mut(a)); };
  return self;
}

Var Tape::dd_phi(Var a, const GridPtr& g) {
  const Tensor& ta = val(a);
  Tensor out;
  stencil::d_dphi(ta, *g, out);
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, g, self](Tape& t) { stencil::d_dphi_adjoint(t.grad(self), *g, t.grad_mut(a)); };
  return self;
}

Var Tape::sum(Var a) {
  const Tensor& ta = val(a);
  double acc = 0.0;
  for (double v : ta.data) acc += v;
  Tensor out(1, 1);
  out.data[0] = acc;
  bool rg = requires_grad(a);
  Var self = push(std::move(out), rg, {});
  if (rg && recording_)
    nodes_[self.id].back = [a, self](Tape& t) {
      const double g = t.grad(self).data[0];
      Tensor& ga = t.grad_mut(a);
      for (double& v : ga.data) v += g;
    };
  return self;
}

Var Tape::mean(Var a) {
  const size_t n = val(a).size();
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

void Tape::run_backward() {
  for (size_t i = nodes_.size(); i-- > 0;)
    if (nodes_[i].back) nodes_[i].back(*this);
}

void Tape::backward(Var scalar_loss) {
  if (!recording_) throw NumericError("Tape::backward: tape was not recording");
  if (val(scalar_loss).size() != 1) throw DimensionError("Tape::backward: loss is not scalar");
  for (Node& n : nodes_)
    if (n.requires_grad && n.grad.size() == 0) n.grad = Tensor(n.value.rows, n.value.cols);
  grad_mut(scalar_loss).data[0] = 1.0;
  run_backward();
}

void Tape::backward_seeded(std::span<const std::pair<Var, Tensor>> seeds) {
  if (!recording_) throw NumericError("Tape::backward_seeded: tape was not recording");
  for (Node& n : nodes_)
    if (n.requires_grad && n.grad.size() == 0) n.grad = Tensor(n.value.rows, n.value.cols);
  for (const auto& [v, g] : seeds) {
    require_same_shape(val(v), g, "Tape::backward_seeded");
    Tensor& gv = grad_mut(v);
    for (size_t i = 0; i < g.size(); ++i) gv.data[i] += g.data[i];
  }
  run_backward();
}

void Tape::clear() { nodes_.clear(); }

}  // namespace spherecast
