/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "spherecast/common.hpp"
#include "spherecast/csr.hpp"
#include "spherecast/grid.hpp"

namespace spherecast {

// Handle to a node on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over Tensor-valued operations.
//
// Nodes are recorded in forward (topological) order; backward() walks them
// in reverse, accumulating gradients in a fixed order so results are
// bit-reproducible. With recording(false) the same ops compute values only,
// which is the inference path - there is exactly one implementation of each
// numeric operation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  // --- leaves ---
  Var leaf(Tensor value, bool requires_grad = false);
  Var leaf_grid(const ScalarField& f, bool requires_grad = false) { return leaf(f.values, requires_grad); }

  // --- elementwise ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scaled(Var a, Var b, double s);  // a + s*b
  Var affine(Var a, double s, double t);   // s*a + t
  Var square(Var a) { return mul(a, a); }
  Var leaky_relu(Var a, double slope);
  Var clamp(Var a, double lo, double hi);        // zero gradient outside the open interval
  Var smooth_clamp(Var a, double c);             // c * tanh(x / c)

  // --- per-row broadcast by a constant weight vector (length = rows) ---
  Var row_mul(Var a, const std::vector<double>& w);

  // --- dense linear algebra ---
  Var matmul(Var x, Var w);       // [n,k] x [k,m] -> [n,m]
  Var add_bias(Var x, Var b);     // b is [1,m], broadcast over rows

  // --- shape ---
  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, int col0, int ncols);
  Var reshape(Var a, int rows, int cols);

  // --- indexed row ops ---
  Var gather_rows(Var a, const std::vector<int>& idx);                  // out[e,:] = a[idx[e],:]
  Var scatter_add_rows(Var a, const std::vector<int>& idx, int n_out);  // out[idx[e],:] += a[e,:]

  // --- sparse ---
  Var spmm(const CsrMatrix& m, Var x);  // m is a constant

  // --- grid stencils ---
  Var dd_theta(Var a, const GridPtr& g);
  Var dd_phi(Var a, const GridPtr& g);

  // --- reductions ---
  Var sum(Var a);   // -> [1,1]
  Var mean(Var a);  // -> [1,1]

  // --- access ---
  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Backward pass from a scalar loss (seeds d loss/d loss = 1).
  void backward(Var scalar_loss);
  // Backward pass from explicit output gradients.
  void backward_seeded(std::span<const std::pair<Var, Tensor>> seeds);

  // Drops all nodes. Existing Var handles become invalid.
  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // empty for leaves / non-grad nodes
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
  Tensor& grad_mut(Var v) { return nodes_[v.id].grad; }
  void run_backward();

  std::vector<Node> nodes_;
  bool recording_ = true;
};

}  // namespace spherecast
