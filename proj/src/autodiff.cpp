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

#include <asd/autodiff.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace asd {

namespace {

constexpr double kProbClamp = 1e-7;

Tape* same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument("op: arguments live on different tapes");
  }
  return a.tape;
}

void require_rank(Var v, Index rank, const char* what) {
  if (v.value().rank() != rank) {
    throw std::invalid_argument(std::string(what) + ": expected rank " +
                                std::to_string(rank) + ", got shape " +
                                v.value().shape_string());
  }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }
const std::vector<Index>& Var::shape() const { return value().shape(); }

Var Tape::constant(Tensor value) { return emit(std::move(value), false, nullptr); }

Var Tape::parameter(Tensor value) { return emit(std::move(value), true, nullptr); }

Var Tape::emit(Tensor value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backward = requires_grad ? std::move(fn) : nullptr;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<Index>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
  return nodes_.at(static_cast<std::size_t>(v.id)).value;
}

bool Tape::requires_grad(Var v) const {
  return nodes_.at(static_cast<std::size_t>(v.id)).requires_grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor& Tape::grad_buffer(Index id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::accumulate(Index id, const Tensor& contribution) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  Tensor& g = grad_buffer(id);
  g.vec() += contribution.vec();
}

void Tape::backward(Var seed) {
  if (seed.tape != this) throw std::invalid_argument("backward: foreign var");
  const Node& top = nodes_.at(static_cast<std::size_t>(seed.id));
  if (top.value.size() != 1) {
    throw std::invalid_argument("backward: seed must be scalar, got " +
                                top.value.shape_string());
  }
  if (!top.requires_grad) return;
  grad_buffer(seed.id)[0] += 1.0;
  for (Index i = seed.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requires_grad && n.backward && !n.grad.empty()) {
      n.backward(*this, n.grad);
    }
  }
}

// ---- elementwise ----

Var add(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.vec() += b.value().vec();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  out.vec() -= b.value().vec();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    Tensor ng = g;
    ng.vec() = -g.vec();
    tp.accumulate(ib, ng);
  });
}

Var mul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor va = a.value(), vb = b.value();
  Tensor out = va;
  out.vec().array() *= vb.vec().array();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg, [ia, ib, va, vb](Tape& tp, const Tensor& g) {
    Tensor da = g;
    da.vec().array() *= vb.vec().array();
    tp.accumulate(ia, da);
    Tensor db = g;
    db.vec().array() *= va.vec().array();
    tp.accumulate(ib, db);
  });
}

Var affine(Var a, double alpha, double beta) {
  Tape* t = a.tape;
  Tensor out = a.value();
  out.vec().array() = alpha * out.vec().array() + beta;
  Index ia = a.id;
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, alpha](Tape& tp, const Tensor& g) {
                   Tensor da = g;
                   da.vec() *= alpha;
                   tp.accumulate(ia, da);
                 });
}

Var relu(Var a) {
  Tape* t = a.tape;
  Tensor va = a.value();
  Tensor out = va;
  out.vec() = out.vec().cwiseMax(0.0);
  Index ia = a.id;
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, va](Tape& tp, const Tensor& g) {
                   Tensor da = g;
                   for (Index i = 0; i < da.size(); ++i) {
                     if (va[i] <= 0.0) da[i] = 0.0;
                   }
                   tp.accumulate(ia, da);
                 });
}

Var sigmoid(Var a) {
  Tape* t = a.tape;
  Tensor out = a.value();
  out.vec().array() = 1.0 / (1.0 + (-out.vec().array()).exp());
  Tensor cached = out;
  Index ia = a.id;
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, cached](Tape& tp, const Tensor& g) {
                   Tensor da = g;
                   da.vec().array() *=
                       cached.vec().array() * (1.0 - cached.vec().array());
                   tp.accumulate(ia, da);
                 });
}

Var tanh_op(Var a) {
  Tape* t = a.tape;
  Tensor out = a.value();
  out.vec().array() = out.vec().array().tanh();
  Tensor cached = out;
  Index ia = a.id;
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, cached](Tape& tp, const Tensor& g) {
                   Tensor da = g;
                   da.vec().array() *= 1.0 - cached.vec().array().square();
                   tp.accumulate(ia, da);
                 });
}

// ---- shape ----

Var reshape(Var a, std::vector<Index> shape) {
  Tape* t = a.tape;
  if (Tensor::count(shape) != a.value().size()) {
    throw std::invalid_argument("reshape: element count mismatch");
  }
  Tensor out(shape, a.value().flat());
  Index ia = a.id;
  std::vector<Index> old_shape = a.value().shape();
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, old_shape](Tape& tp, const Tensor& g) {
                   tp.accumulate(ia, Tensor(old_shape, g.flat()));
                 });
}

Var concat_vec(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_vec: no parts");
  Tape* t = parts[0].tape;
  Index total = 0;
  bool rg = false;
  for (Var p : parts) {
    same_tape(parts[0], p);
    total += p.value().size();
    rg = rg || t->requires_grad(p);
  }
  Tensor out({total});
  Index off = 0;
  std::vector<std::pair<Index, Index>> spans;  // (id, length)
  for (Var p : parts) {
    const Tensor& v = p.value();
    out.vec().segment(off, v.size()) = v.vec();
    spans.emplace_back(p.id, v.size());
    off += v.size();
  }
  return t->emit(std::move(out), rg, [spans](Tape& tp, const Tensor& g) {
    Index off = 0;
    for (auto [id, len] : spans) {
      Tensor part({len});
      part.vec() = g.vec().segment(off, len);
      tp.accumulate(id, part);
      off += len;
    }
  });
}

Var slice_vec(Var a, Index start, Index len) {
  Tape* t = a.tape;
  const Tensor& v = a.value();
  if (start < 0 || len <= 0 || start + len > v.size()) {
    throw std::invalid_argument("slice_vec: out of range");
  }
  Tensor out({len});
  out.vec() = v.vec().segment(start, len);
  Index ia = a.id, n = v.size();
  return t->emit(std::move(out), t->requires_grad(a),
                 [ia, start, len, n](Tape& tp, const Tensor& g) {
                   Tensor da = Tensor::zeros({n});
                   da.vec().segment(start, len) = g.vec();
                   tp.accumulate(ia, da);
                 });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  Tape* t = rows[0].tape;
  Index d = rows[0].value().size();
  bool rg = false;
  std::vector<Index> ids;
  ids.reserve(rows.size());
  Tensor out({static_cast<Index>(rows.size()), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    same_tape(rows[0], rows[r]);
    const Tensor& v = rows[r].value();
    if (v.size() != d) throw std::invalid_argument("stack_rows: ragged rows");
    out.vec().segment(static_cast<Index>(r) * d, d) = v.vec();
    rg = rg || t->requires_grad(rows[r]);
    ids.push_back(rows[r].id);
  }
  return t->emit(std::move(out), rg, [ids, d](Tape& tp, const Tensor& g) {
    for (std::size_t r = 0; r < ids.size(); ++r) {
      Tensor part({d});
      part.vec() = g.vec().segment(static_cast<Index>(r) * d, d);
      tp.accumulate(ids[r], part);
    }
  });
}

Var row(Var m, Index r) {
  require_rank(m, 2, "row");
  Tape* t = m.tape;
  const Tensor& v = m.value();
  Index rows = v.dim(0), cols = v.dim(1);
  if (r < 0 || r >= rows) throw std::invalid_argument("row: index out of range");
  Tensor out({cols});
  out.vec() = v.vec().segment(r * cols, cols);
  Index im = m.id;
  return t->emit(std::move(out), t->requires_grad(m),
                 [im, r, rows, cols](Tape& tp, const Tensor& g) {
                   Tensor dm = Tensor::zeros({rows, cols});
                   dm.vec().segment(r * cols, cols) = g.vec();
                   tp.accumulate(im, dm);
                 });
}

Var reverse_rows(Var m) {
  require_rank(m, 2, "reverse_rows");
  Tape* t = m.tape;
  const Tensor& v = m.value();
  Index rows = v.dim(0), cols = v.dim(1);
  Tensor out({rows, cols});
  out.mat() = v.mat().colwise().reverse();
  Index im = m.id;
  return t->emit(std::move(out), t->requires_grad(m),
                 [im, rows, cols](Tape& tp, const Tensor& g) {
                   Tensor dm({rows, cols});
                   dm.mat() = g.mat().colwise().reverse();
                   tp.accumulate(im, dm);
                 });
}

Var concat_cols(Var a, Var b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  Tape* t = same_tape(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.dim(0) != vb.dim(0)) {
    throw std::invalid_argument("concat_cols: row count mismatch");
  }
  Index rows = va.dim(0), ca = va.dim(1), cb = vb.dim(1);
  Tensor out({rows, ca + cb});
  out.mat().leftCols(ca) = va.mat();
  out.mat().rightCols(cb) = vb.mat();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg,
                 [ia, ib, rows, ca, cb](Tape& tp, const Tensor& g) {
                   Tensor da({rows, ca});
                   da.mat() = g.mat().leftCols(ca);
                   tp.accumulate(ia, da);
                   Tensor db({rows, cb});
                   db.mat() = g.mat().rightCols(cb);
                   tp.accumulate(ib, db);
                 });
}

// ---- linear algebra ----

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  Tape* t = same_tape(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.dim(1) != vb.dim(0)) {
    throw std::invalid_argument("matmul: inner dimension mismatch " +
                                va.shape_string() + " x " + vb.shape_string());
  }
  Tensor out({va.dim(0), vb.dim(1)});
  out.mat().noalias() = va.mat() * vb.mat();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg, [ia, ib, va, vb](Tape& tp, const Tensor& g) {
    Tensor da({va.dim(0), va.dim(1)});
    da.mat().noalias() = g.mat() * vb.mat().transpose();
    tp.accumulate(ia, da);
    Tensor db({vb.dim(0), vb.dim(1)});
    db.mat().noalias() = va.mat().transpose() * g.mat();
    tp.accumulate(ib, db);
  });
}

Var matmul_nt(Var a, Var b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  Tape* t = same_tape(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.dim(1) != vb.dim(1)) {
    throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  }
  Tensor out({va.dim(0), vb.dim(0)});
  out.mat().noalias() = va.mat() * vb.mat().transpose();
  bool rg = t->requires_grad(a) || t->requires_grad(b);
  Index ia = a.id, ib = b.id;
  return t->emit(std::move(out), rg, [ia, ib, va, vb](Tape& tp, const Tensor& g) {
    Tensor da({va.dim(0), va.dim(1)});
    da.mat().noalias() = g.mat() * vb.mat();
    tp.accumulate(ia, da);
    Tensor db({vb.dim(0), vb.dim(1)});
    db.mat().noalias() = g.mat().transpose() * va.mat();
    tp.accumulate(ib, db);
  });
}

Var dense(Var x, Var weights, Var bias) {
  Tape* t = same_tape(x, weights);
  same_tape(x, bias);
  require_rank(weights, 2, "dense");
  const Tensor& w = weights.value();
  const Tensor& b = bias.value();
  Index in = w.dim(0), out_dim = w.dim(1);
  if (b.size() != out_dim) throw std::invalid_argument("dense: bias size mismatch");
  const Tensor& vx = x.value();
  const bool vector_input = vx.rank() == 1;
  Index rows = vector_input ? 1 : vx.dim(0);
  if ((vector_input ? vx.size() : vx.dim(1)) != in) {
    throw std::invalid_argument("dense: input width " + vx.shape_string() +
                                " does not match weights " + w.shape_string());
  }
  Tensor out(vector_input ? std::vector<Index>{out_dim}
                          : std::vector<Index>{rows, out_dim});
  auto xm = vx.mat(rows, in);
  auto om = out.mat(rows, out_dim);
  om.noalias() = xm * w.mat();
  om.rowwise() += b.vec().transpose();
  bool rg = t->requires_grad(x) || t->requires_grad(weights) || t->requires_grad(bias);
  Index ix = x.id, iw = weights.id, ib = bias.id;
  Tensor vx_cached = vx, w_cached = w;
  return t->emit(
      std::move(out), rg,
      [ix, iw, ib, rows, in, out_dim, vector_input, vx_cached,
       w_cached](Tape& tp, const Tensor& g) {
        auto gm = g.mat(rows, out_dim);
        Tensor dx(vector_input ? std::vector<Index>{in}
                               : std::vector<Index>{rows, in});
        dx.mat(rows, in).noalias() = gm * w_cached.mat().transpose();
        tp.accumulate(ix, dx);
        Tensor dw({in, out_dim});
        dw.mat().noalias() = vx_cached.mat(rows, in).transpose() * gm;
        tp.accumulate(iw, dw);
        Tensor db({out_dim});
        db.vec() = gm.colwise().sum().transpose();
        tp.accumulate(ib, db);
      });
}

Var scale_rows(Var m, Var scale) {
  require_rank(m, 2, "scale_rows");
  Tape* t = same_tape(m, scale);
  const Tensor& vm = m.value();
  const Tensor& vs = scale.value();
  Index rows = vm.dim(0), cols = vm.dim(1);
  if (vs.size() != rows) {
    throw std::invalid_argument("scale_rows: scale length != row count");
  }
  Tensor out({rows, cols});
  out.mat() = vs.vec().asDiagonal() * vm.mat();
  bool rg = t->requires_grad(m) || t->requires_grad(scale);
  Index im = m.id, is = scale.id;
  Tensor vm_cached = vm, vs_cached = vs;
  return t->emit(std::move(out), rg,
                 [im, is, rows, cols, vm_cached, vs_cached](Tape& tp, const Tensor& g) {
                   Tensor dm({rows, cols});
                   dm.mat() = vs_cached.vec().asDiagonal() * g.mat();
                   tp.accumulate(im, dm);
                   Tensor ds({rows});
                   ds.vec() =
                       (g.mat().array() * vm_cached.mat().array()).rowwise().sum();
                   tp.accumulate(is, ds);
                 });
}

// ---- NN kernels ----

namespace {

/// Patch matrix for 3x3-style same-padded cross-correlation:
/// cols index output pixels, rows index (c, di, dj) taps; out-of-range taps are 0.
Tensor im2col(const Tensor& x, Index kh, Index kw) {
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const Index ph = kh / 2, pw = kw / 2;
  Tensor patches({C * kh * kw, H * W});
  auto pm = patches.mat();
  const double* xd = x.data();
  Index prow = 0;
  for (Index c = 0; c < C; ++c) {
    for (Index di = 0; di < kh; ++di) {
      for (Index dj = 0; dj < kw; ++dj, ++prow) {
        for (Index i = 0; i < H; ++i) {
          const Index si = i + di - ph;
          if (si < 0 || si >= H) continue;
          const Index j0 = std::max<Index>(0, pw - dj);
          const Index j1 = std::min<Index>(W, W + pw - dj);
          for (Index j = j0; j < j1; ++j) {
            pm(prow, i * W + j) = xd[(c * H + si) * W + (j + dj - pw)];
          }
        }
      }
    }
  }
  return patches;
}

void col2im_accumulate(const Tensor& dpatches, Index C, Index H, Index W, Index kh,
                       Index kw, Tensor& dx) {
  const Index ph = kh / 2, pw = kw / 2;
  auto pm = dpatches.mat();
  double* xd = dx.data();
  Index prow = 0;
  for (Index c = 0; c < C; ++c) {
    for (Index di = 0; di < kh; ++di) {
      for (Index dj = 0; dj < kw; ++dj, ++prow) {
        for (Index i = 0; i < H; ++i) {
          const Index si = i + di - ph;
          if (si < 0 || si >= H) continue;
          const Index j0 = std::max<Index>(0, pw - dj);
          const Index j1 = std::min<Index>(W, W + pw - dj);
          for (Index j = j0; j < j1; ++j) {
            xd[(c * H + si) * W + (j + dj - pw)] += pm(prow, i * W + j);
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var kernels, Var bias) {
  require_rank(x, 3, "conv2d");
  require_rank(kernels, 4, "conv2d");
  Tape* t = same_tape(x, kernels);
  same_tape(x, bias);
  const Tensor& vx = x.value();
  const Tensor& vk = kernels.value();
  const Index C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const Index K = vk.dim(0), kh = vk.dim(2), kw = vk.dim(3);
  if (vk.dim(1) != C) {
    throw std::invalid_argument("conv2d: kernel channels " +
                                std::to_string(vk.dim(1)) + " != input channels " +
                                std::to_string(C));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel extents must be odd");
  }
  if (bias.value().size() != K) throw std::invalid_argument("conv2d: bias size");

  Tensor patches = im2col(vx, kh, kw);
  Tensor out({K, H, W});
  out.mat(K, H * W).noalias() = vk.mat(K, C * kh * kw) * patches.mat();
  for (Index k = 0; k < K; ++k) {
    out.mat(K, H * W).row(k).array() += bias.value()[k];
  }
  bool rg = t->requires_grad(x) || t->requires_grad(kernels) || t->requires_grad(bias);
  Index ix = x.id, ik = kernels.id, ib = bias.id;
  Tensor vk_cached = vk;
  return t->emit(
      std::move(out), rg,
      [ix, ik, ib, C, H, W, K, kh, kw, patches, vk_cached](Tape& tp, const Tensor& g) {
        auto gm = g.mat(K, H * W);
        Tensor dk({K, C, kh, kw});
        dk.mat(K, C * kh * kw).noalias() = gm * patches.mat().transpose();
        tp.accumulate(ik, dk);
        Tensor db({K});
        db.vec() = gm.rowwise().sum();
        tp.accumulate(ib, db);
        Tensor dpatches({C * kh * kw, H * W});
        dpatches.mat().noalias() = vk_cached.mat(K, C * kh * kw).transpose() * gm;
        Tensor dx = Tensor::zeros({C, H, W});
        col2im_accumulate(dpatches, C, H, W, kh, kw, dx);
        tp.accumulate(ix, dx);
      });
}

Var maxpool2(Var x) {
  require_rank(x, 3, "maxpool2");
  Tape* t = x.tape;
  const Tensor& vx = x.value();
  const Index C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const Index OH = (H + 1) / 2, OW = (W + 1) / 2;
  Tensor out({C, OH, OW});
  // Flat source index of each output's max, for the backward scatter.
  std::vector<Index> argmax(static_cast<std::size_t>(C * OH * OW));
  const double* xd = vx.data();
  for (Index c = 0; c < C; ++c) {
    for (Index i = 0; i < OH; ++i) {
      for (Index j = 0; j < OW; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        Index best_src = -1;
        for (Index di = 0; di < 2; ++di) {
          for (Index dj = 0; dj < 2; ++dj) {
            // Edge replication for odd extents: clamp to the last row/col.
            const Index si = std::min<Index>(2 * i + di, H - 1);
            const Index sj = std::min<Index>(2 * j + dj, W - 1);
            const Index src = (c * H + si) * W + sj;
            if (xd[src] > best) {
              best = xd[src];
              best_src = src;
            }
          }
        }
        out[(c * OH + i) * OW + j] = best;
        argmax[static_cast<std::size_t>((c * OH + i) * OW + j)] = best_src;
      }
    }
  }
  Index ix = x.id;
  std::vector<Index> in_shape = vx.shape();
  return t->emit(std::move(out), t->requires_grad(x),
                 [ix, argmax, in_shape](Tape& tp, const Tensor& g) {
                   Tensor dx = Tensor::zeros(in_shape);
                   for (Index i = 0; i < g.size(); ++i) {
                     dx[argmax[static_cast<std::size_t>(i)]] += g[i];
                   }
                   tp.accumulate(ix, dx);
                 });
}

Var global_avg_pool(Var x) {
  require_rank(x, 3, "global_avg_pool");
  Tape* t = x.tape;
  const Tensor& vx = x.value();
  const Index C = vx.dim(0), HW = vx.dim(1) * vx.dim(2);
  Tensor out({C});
  out.vec() = vx.mat(C, HW).rowwise().mean();
  Index ix = x.id;
  std::vector<Index> in_shape = vx.shape();
  return t->emit(std::move(out), t->requires_grad(x),
                 [ix, C, HW, in_shape](Tape& tp, const Tensor& g) {
                   Tensor dx(in_shape);
                   dx.mat(C, HW) = (g.vec() / static_cast<double>(HW)) *
                                   Eigen::RowVectorXd::Ones(HW);
                   tp.accumulate(ix, dx);
                 });
}

Var softmax(Var x, double temperature) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("softmax: temperature must be positive");
  }
  Tape* t = x.tape;
  const Tensor& vx = x.value();
  const bool vector_input = vx.rank() == 1;
  const Index rows = vector_input ? 1 : vx.dim(0);
  const Index cols = vector_input ? vx.size() : vx.dim(1);
  Tensor out(vx.shape());
  auto xm = vx.mat(rows, cols);
  auto om = out.mat(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const double m = xm.row(r).maxCoeff();
    om.row(r) = ((xm.row(r).array() - m) / temperature).exp();
    om.row(r) /= om.row(r).sum();
  }
  Tensor cached = out;
  Index ix = x.id;
  return t->emit(std::move(out), t->requires_grad(x),
                 [ix, rows, cols, temperature, cached](Tape& tp, const Tensor& g) {
                   Tensor dx(cached.shape());
                   auto ym = cached.mat(rows, cols);
                   auto gm = g.mat(rows, cols);
                   auto dm = dx.mat(rows, cols);
                   for (Index r = 0; r < rows; ++r) {
                     const double dot = ym.row(r).dot(gm.row(r));
                     dm.row(r) = (ym.row(r).array() *
                                  (gm.row(r).array() - dot) / temperature)
                                     .matrix();
                   }
                   tp.accumulate(ix, dx);
                 });
}

Var diag(Var square) {
  require_rank(square, 2, "diag");
  Tape* t = square.tape;
  const Tensor& v = square.value();
  if (v.dim(0) != v.dim(1)) throw std::invalid_argument("diag: matrix not square");
  const Index n = v.dim(0);
  Tensor out({n});
  out.vec() = v.mat().diagonal();
  Index is = square.id;
  return t->emit(std::move(out), t->requires_grad(square),
                 [is, n](Tape& tp, const Tensor& g) {
                   Tensor ds = Tensor::zeros({n, n});
                   ds.mat().diagonal() = g.vec();
                   tp.accumulate(is, ds);
                 });
}

Var cross_entropy_sum(Var probs, const std::vector<int>& labels,
                      const std::vector<std::uint8_t>& mask) {
  require_rank(probs, 2, "cross_entropy_sum");
  Tape* t = probs.tape;
  const Tensor& vp = probs.value();
  const Index T = vp.dim(0);
  if (vp.dim(1) != 2) throw std::invalid_argument("cross_entropy_sum: need [T,2]");
  if (static_cast<Index>(labels.size()) != T ||
      static_cast<Index>(mask.size()) != T) {
    throw std::invalid_argument("cross_entropy_sum: label/mask length mismatch");
  }
  double total = 0.0;
  for (Index i = 0; i < T; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    total += binary_cross_entropy(labels[static_cast<std::size_t>(i)], vp[2 * i + 1]);
  }
  Tensor out = Tensor::scalar(total);
  Index ip = probs.id;
  Tensor vp_cached = vp;
  return t->emit(std::move(out), t->requires_grad(probs),
                 [ip, T, labels, mask, vp_cached](Tape& tp, const Tensor& g) {
                   Tensor dp = Tensor::zeros({T, 2});
                   const double gs = g[0];
                   for (Index i = 0; i < T; ++i) {
                     if (!mask[static_cast<std::size_t>(i)]) continue;
                     const double raw = vp_cached[2 * i + 1];
                     if (raw < kProbClamp || raw > 1.0 - kProbClamp) continue;
                     const double y =
                         static_cast<double>(labels[static_cast<std::size_t>(i)]);
                     dp[2 * i + 1] = gs * (-y / raw + (1.0 - y) / (1.0 - raw));
                   }
                   tp.accumulate(ip, dp);
                 });
}

// ---- recurrent ----

Var gru_cell(Var x, Var h, const GruParams& p) {
  const Index hidden = h.value().size();
  Var gi = dense(x, p.w_ih, p.b_ih);
  Var gh = dense(h, p.w_hh, p.b_hh);
  Var r = sigmoid(add(slice_vec(gi, 0, hidden), slice_vec(gh, 0, hidden)));
  Var z = sigmoid(add(slice_vec(gi, hidden, hidden), slice_vec(gh, hidden, hidden)));
  Var n = tanh_op(add(slice_vec(gi, 2 * hidden, hidden),
                      mul(r, slice_vec(gh, 2 * hidden, hidden))));
  // h' = (1-z)*n + z*h
  return add(n, mul(z, sub(h, n)));
}

Var gru_sequence(Var x_rows, Var h0, const GruParams& p, bool reverse_time) {
  require_rank(x_rows, 2, "gru_sequence");
  const Index T = x_rows.value().dim(0);
  std::vector<Var> hs(static_cast<std::size_t>(T));
  Var h = h0;
  for (Index step = 0; step < T; ++step) {
    const Index tt = reverse_time ? (T - 1 - step) : step;
    h = gru_cell(row(x_rows, tt), h, p);
    hs[static_cast<std::size_t>(tt)] = h;
  }
  return stack_rows(hs);
}

Var bigru(Var x_rows, const GruParams& fwd, const GruParams& bwd, Var h0_fwd,
          Var h0_bwd) {
  Var hf = gru_sequence(x_rows, h0_fwd, fwd, /*reverse_time=*/false);
  Var hb = gru_sequence(x_rows, h0_bwd, bwd, /*reverse_time=*/true);
  return concat_cols(hf, hb);
}

// ---- value-level helpers ----

Tensor softmax_value(const Tensor& logits, double temperature) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("softmax_value: temperature must be positive");
  }
  Tensor out = logits;
  const double m = out.vec().maxCoeff();
  out.vec().array() = ((out.vec().array() - m) / temperature).exp();
  out.vec() /= out.vec().sum();
  return out;
}

double binary_cross_entropy(int label, double p_speaking) {
  const double p = std::clamp(p_speaking, kProbClamp, 1.0 - kProbClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace asd
