/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <asd/tensor.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace asd {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape* tape = nullptr;
  Index id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const std::vector<Index>& shape() const;
  Index size() const { return value().size(); }
};

/// Records a forward computation node by node; backward() propagates
/// gradients to every node reachable from the seed in reverse order.
///
/// Ops never hold references into the node vector across insertions; backward
/// closures capture node ids plus any cached tensors by value.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is not tracked (inputs, masks, stop-gradients).
  Var constant(Tensor value);

  /// Leaf that accumulates a gradient (trainable parameters).
  Var parameter(Tensor value);

  Var scalar_constant(double v) { return constant(Tensor::scalar(v)); }

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient of the last backward() seed w.r.t. this node. Zero tensor if
  /// the node was never reached.
  Tensor grad(Var v) const;

  /// Reverse sweep from a scalar node (size 1), seeding with d(seed)/d(seed)=1.
  void backward(Var seed);

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }

  // Internal: used by op implementations.
  Var emit(Tensor value, bool requires_grad, BackwardFn fn);
  void accumulate(Index id, const Tensor& contribution);
  Tensor& grad_buffer(Index id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until first contribution
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

// ---- elementwise ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// alpha * a + beta, with compile-time constants.
Var affine(Var a, double alpha, double beta);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh_op(Var a);

// ---- shape ----
Var reshape(Var a, std::vector<Index> shape);
Var concat_vec(const std::vector<Var>& parts);
Var slice_vec(Var a, Index start, Index len);
Var stack_rows(const std::vector<Var>& rows);
Var row(Var m, Index r);
Var reverse_rows(Var m);
Var concat_cols(Var a, Var b);

// ---- linear algebra ----
Var matmul(Var a, Var b);
/// a * b^T; both arguments may be the same node.
Var matmul_nt(Var a, Var b);
/// x[in] -> [out] or X[n,in] -> [n,out]; weights [in,out], bias [out].
Var dense(Var x, Var weights, Var bias);
/// out[t,:] = scale[t] * m[t,:].
Var scale_rows(Var m, Var scale);

// ---- NN kernels ----
/// Cross-correlation, stride 1, same padding; x [C,H,W], k [K,C,kh,kw], b [K].
Var conv2d(Var x, Var kernels, Var bias);
/// 2x2 stride-2 max; odd extents padded by edge replication.
Var maxpool2(Var x);
Var global_avg_pool(Var x);
/// Row softmax of x[n,d] at the given temperature (max-subtracted).
Var softmax(Var x, double temperature = 1.0);
Var diag(Var square);

/// Sum over unmasked timesteps of the binary cross-entropy between labels and
/// the speaking-class probability probs[t,1], clamped to [1e-7, 1-1e-7].
Var cross_entropy_sum(Var probs, const std::vector<int>& labels,
                      const std::vector<std::uint8_t>& mask);

// ---- recurrent ----
struct GruParams {
  Var w_ih;  // [in, 3h], gate order (r, z, n)
  Var w_hh;  // [h, 3h]
  Var b_ih;  // [3h]
  Var b_hh;  // [3h]
};

Var gru_cell(Var x, Var h, const GruParams& p);
/// Runs a GRU over the rows of X[T,in]; returns hidden states stacked [T,h].
Var gru_sequence(Var x_rows, Var h0, const GruParams& p, bool reverse_time);
/// Forward and backward passes of hidden_dim/2 each, concatenated to [T,hidden_dim].
Var bigru(Var x_rows, const GruParams& fwd, const GruParams& bwd, Var h0_fwd, Var h0_bwd);

// ---- value-level helpers shared with non-tape code ----
/// Softmax of a plain vector at a temperature (max-subtracted).
Tensor softmax_value(const Tensor& logits, double temperature);
/// Binary cross-entropy of the positive-class probability, clamped.
double binary_cross_entropy(int label, double p_speaking);

}  // namespace asd
