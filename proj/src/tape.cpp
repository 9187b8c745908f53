#include "foaa/tape.hpp"

#include <cmath>

#include "foaa/errors.hpp"
#include "foaa/kernels/dispatch.hpp"

namespace foaa {

namespace {

struct GlobalFault {
  std::string op;
  double factor = 1.0;
};

GlobalFault& global_fault() {
  static GlobalFault fault;
  return fault;
}

Tape& same_tape(Var a, Var b, std::string_view op) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape())
    throw ContractError(std::string(op) + ": operands belong to different tapes");
  return *a.tape();
}

Tape& tape_of(Var a, std::string_view op) {
  if (!a.valid()) throw ContractError(std::string(op) + ": invalid variable");
  return *a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
}

void axpy(Tensor& dst, const Tensor& src, double alpha = 1.0) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

}  // namespace

void set_global_adjoint_fault(std::string op, double factor) {
  global_fault() = GlobalFault{std::move(op), factor};
}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape())
    grad = Tensor::zeros_like(value);
  else
    grad.fill(0.0);
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, false, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{"variable", std::move(value), {}, track_gradients_, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Parameter& param) {
  if (auto it = bound_.find(&param); it != bound_.end()) return Var(this, it->second);
  if (param.value.empty()) throw ContractError("parameter '" + param.name + "' has no value");
  nodes_.push_back(Node{"parameter", {}, {}, track_gradients_ && !param.frozen, &param, {}});
  bound_.emplace(&param, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, const std::vector<Var>& inputs,
                 Adjoint adjoint) {
  if (backward_done_) throw ContractError("tape is read-only after backward");
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError(std::string(op) + ": input from another tape");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::string(op), std::move(value), {}, needs, nullptr,
                        needs ? std::move(adjoint) : Adjoint{}});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_of(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.param) {
    if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
    return n.param->grad;
  }
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward: loss was not produced by this tape");
  if (loss.value().numel() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + shape_to_string(loss.shape()));
  if (backward_done_) throw ContractError("backward: tape already differentiated");
  backward_done_ = true;

  const auto& gf = global_fault();
  const std::string& fault_op = fault_op_.empty() ? gf.op : fault_op_;
  const double fault_factor = fault_op_.empty() ? gf.factor : fault_factor_;

  grad_of(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.adjoint) {
      if (!fault_op.empty() && n.op == fault_op) {
        Tensor g = n.grad;
        for (auto& x : g.data()) x *= fault_factor;
        n.adjoint(*this, g);
      } else {
        n.adjoint(*this, n.grad);
      }
    }
  }
}

std::optional<std::string> Tape::first_non_finite() const {
  for (const Node& n : nodes_)
    if (!(n.param ? n.param->value : n.value).all_finite()) return n.op;
  return std::nullopt;
}

void Tape::inject_adjoint_fault(std::string op, double factor) {
  fault_op_ = std::move(op);
  fault_factor_ = factor;
}

// ---------------------------------------------------------------------------
// Operations

Var elementwise(ElementwiseOp op, Var a, Var b) {
  static constexpr const char* names[] = {"add", "sub", "mul"};
  const char* name = names[static_cast<int>(op)];
  Tape& t = same_tape(a, b, name);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, name);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    switch (op) {
      case ElementwiseOp::Add: out[i] = av[i] + bv[i]; break;
      case ElementwiseOp::Sub: out[i] = av[i] - bv[i]; break;
      case ElementwiseOp::Mul: out[i] = av[i] * bv[i]; break;
    }
  }
  const auto ia = a.id(), ib = b.id();
  return t.record(name, std::move(out), {a, b}, [op, ia, ib](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad_of(ia);
      if (op == ElementwiseOp::Mul) {
        const Tensor& bv = tp.value(ib);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
      } else {
        axpy(ga, g);
      }
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad_of(ib);
      if (op == ElementwiseOp::Mul) {
        const Tensor& av = tp.value(ia);
        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
      } else {
        axpy(gb, g, op == ElementwiseOp::Sub ? -1.0 : 1.0);
      }
    }
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw ContractError("add_n: no operands");
  Tape& t = tape_of(terms.front(), "add_n");
  if (terms.size() == 1) return terms.front();
  Tensor out = terms.front().value();
  std::vector<std::size_t> ids;
  ids.reserve(terms.size());
  for (const Var& v : terms) {
    if (v.tape() != &t) throw ContractError("add_n: operands belong to different tapes");
    ids.push_back(v.id());
  }
  for (std::size_t k = 1; k < terms.size(); ++k) {
    require_same_shape(out, terms[k].value(), "add_n");
    axpy(out, terms[k].value());
  }
  return t.record("add_n", std::move(out), terms, [ids](Tape& tp, const Tensor& g) {
    for (auto id : ids)
      if (tp.requires_grad(id)) axpy(tp.grad_of(id), g);
  });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw DimensionError("matmul: cannot multiply " + shape_to_string(av.shape()) + " by " +
                         shape_to_string(bv.shape()));
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out(Shape{m, n});
  kernels::gemm(false, false, m, n, k, av.data(), bv.data(), out.data(), false);
  const auto ia = a.id(), ib = b.id();
  return t.record("matmul", std::move(out), {a, b}, [ia, ib, m, k, n](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia))  // dA = dC · Bᵀ
      kernels::gemm(false, true, m, k, n, g.data(), tp.value(ib).data(), tp.grad_of(ia).data(), true);
    if (tp.requires_grad(ib))  // dB = Aᵀ · dC
      kernels::gemm(true, false, k, n, m, tp.value(ia).data(), g.data(), tp.grad_of(ib).data(), true);
  });
}

Var matvec(Var w, Var x) {
  Tape& t = same_tape(w, x, "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  if (wv.rank() != 2 || xv.rank() != 1 || wv.dim(1) != xv.dim(0))
    throw DimensionError("matvec: cannot multiply " + shape_to_string(wv.shape()) + " by " +
                         shape_to_string(xv.shape()));
  const std::size_t m = wv.dim(0), n = wv.dim(1);
  Tensor out(Shape{m});
  kernels::gemm(false, false, m, 1, n, wv.data(), xv.data(), out.data(), false);
  const auto iw = w.id(), ix = x.id();
  return t.record("matvec", std::move(out), {w, x}, [iw, ix, m, n](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(iw))  // dW = g · xᵀ
      kernels::gemm(false, false, m, n, 1, g.data(), tp.value(ix).data(), tp.grad_of(iw).data(), true);
    if (tp.requires_grad(ix))  // dx = Wᵀ · g
      kernels::gemm(true, false, n, 1, m, tp.value(iw).data(), g.data(), tp.grad_of(ix).data(), true);
  });
}

Var softmax_rows(Var x) {
  Tape& t = tape_of(x, "softmax_rows");
  const Tensor& xv = x.value();
  if (xv.rank() != 2 && xv.rank() != 1)
    throw DimensionError("softmax_rows: expected a matrix or vector, got " + shape_to_string(xv.shape()));
  const std::size_t cols = xv.shape().back();
  const std::size_t rows = xv.numel() / cols;
  Tensor out(xv.shape());
  kernels::softmax_rows(rows, cols, xv.data(), out.data());
  const auto ix = x.id();
  const auto iy = t.size();
  return t.record("softmax_rows", std::move(out), {x}, [ix, iy, rows, cols](Tape& tp, const Tensor& g) {
    // dx_ij = y_ij (g_ij - sum_l g_il y_il)
    const Tensor& y = tp.value(iy);
    Tensor& gx = tp.grad_of(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < cols; ++j) gx[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

Var scale(Var x, double factor) {
  Tape& t = tape_of(x, "scale");
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  const auto ix = x.id();
  return t.record("scale", std::move(out), {x},
                  [ix, factor](Tape& tp, const Tensor& g) { axpy(tp.grad_of(ix), g, factor); });
}

Var relu(Var x) {
  Tape& t = tape_of(x, "relu");
  Tensor out = x.value();
  for (auto& v : out.data()) v = v < 0.0 ? 0.0 : v;
  const auto ix = x.id();
  return t.record("relu", std::move(out), {x}, [ix](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(ix);
    Tensor& gx = tp.grad_of(ix);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x, "sum");
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const auto ix = x.id();
  return t.record("sum", Tensor::scalar(s), {x}, [ix](Tape& tp, const Tensor& g) {
    for (auto& v : tp.grad_of(ix).data()) v += g[0];
  });
}

Var reshape(Var x, Shape shape) {
  Tape& t = tape_of(x, "reshape");
  Tensor out = x.value().reshaped(std::move(shape));
  const auto ix = x.id();
  return t.record("reshape", std::move(out), {x}, [ix](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_of(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
}

Var row_mean(Var x) {
  Tape& t = tape_of(x, "row_mean");
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw DimensionError("row_mean: expected a matrix, got " + shape_to_string(xv.shape()));
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += xv.at(r, c);
    out[r] = s / static_cast<double>(cols);
  }
  const auto ix = x.id();
  return t.record("row_mean", std::move(out), {x}, [ix, rows, cols](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_of(ix);
    const double inv = 1.0 / static_cast<double>(cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += g[r] * inv;
  });
}

Var dropout(Var x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must lie in [0, 1)");
  Tape& t = tape_of(x, "dropout");
  if (p == 0.0) return x;
  Tensor mask(x.shape());
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  for (auto& m : mask.data()) m = keep(rng) ? inv : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i];
  const auto ix = x.id();
  return t.record("dropout", std::move(out), {x}, [ix, mask = std::move(mask)](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_of(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var conv2d_3x3(Var x, Var weight, Var bias) {
  Tape& t = same_tape(x, weight, "conv2d_3x3");
  same_tape(x, bias, "conv2d_3x3");
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != 3 || wv.dim(3) != 3 ||
      bv.rank() != 1 || bv.dim(0) != wv.dim(0))
    throw DimensionError("conv2d_3x3: input " + shape_to_string(xv.shape()) + ", weight " +
                         shape_to_string(wv.shape()) + ", bias " + shape_to_string(bv.shape()));
  const std::size_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2), O = wv.dim(0);
  const auto hh = static_cast<std::ptrdiff_t>(H), ww = static_cast<std::ptrdiff_t>(W);
  Tensor out(Shape{O, H, W});
  for (std::size_t o = 0; o < O; ++o) {
    double* plane = &out[o * H * W];
    for (std::size_t i = 0; i < H * W; ++i) plane[i] = bv[o];
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = xv.data().data() + c * H * W;
      const double* ker = wv.data().data() + (o * C + c) * 9;
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky)
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const double wgt = ker[ky * 3 + kx];
          for (std::ptrdiff_t y = 0; y < hh; ++y) {
            const std::ptrdiff_t sy = y + ky - 1;
            if (sy < 0 || sy >= hh) continue;
            for (std::ptrdiff_t xx = 0; xx < ww; ++xx) {
              const std::ptrdiff_t sx = xx + kx - 1;
              if (sx < 0 || sx >= ww) continue;
              plane[y * ww + xx] += wgt * src[sy * ww + sx];
            }
          }
        }
    }
  }
  const auto ix = x.id(), iw = weight.id(), ib = bias.id();
  return t.record("conv2d_3x3", std::move(out), {x, weight, bias},
                  [ix, iw, ib, C, H, W, O](Tape& tp, const Tensor& g) {
    const auto hh = static_cast<std::ptrdiff_t>(H), ww = static_cast<std::ptrdiff_t>(W);
    const bool gx_on = tp.requires_grad(ix), gw_on = tp.requires_grad(iw), gb_on = tp.requires_grad(ib);
    const Tensor& xv = tp.value(ix);
    const Tensor& wv = tp.value(iw);
    Tensor* gx = gx_on ? &tp.grad_of(ix) : nullptr;
    Tensor* gw = gw_on ? &tp.grad_of(iw) : nullptr;
    Tensor* gb = gb_on ? &tp.grad_of(ib) : nullptr;
    for (std::size_t o = 0; o < O; ++o) {
      const double* gplane = g.data().data() + o * H * W;
      if (gb) {
        double s = 0.0;
        for (std::size_t i = 0; i < H * W; ++i) s += gplane[i];
        (*gb)[o] += s;
      }
      for (std::size_t c = 0; c < C; ++c) {
        const double* src = xv.data().data() + c * H * W;
        for (std::ptrdiff_t ky = 0; ky < 3; ++ky)
          for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
            const std::size_t widx = (o * C + c) * 9 + static_cast<std::size_t>(ky * 3 + kx);
            const double wgt = wv[widx];
            double acc = 0.0;
            for (std::ptrdiff_t y = 0; y < hh; ++y) {
              const std::ptrdiff_t sy = y + ky - 1;
              if (sy < 0 || sy >= hh) continue;
              for (std::ptrdiff_t xx = 0; xx < ww; ++xx) {
                const std::ptrdiff_t sx = xx + kx - 1;
                if (sx < 0 || sx >= ww) continue;
                const double gv = gplane[y * ww + xx];
                acc += gv * src[sy * ww + sx];
                if (gx) (*gx)[c * H * W + static_cast<std::size_t>(sy * ww + sx)] += gv * wgt;
              }
            }
            if (gw) (*gw)[widx] += acc;
          }
      }
    }
  });
}

Var avg_pool2(Var x) {
  Tape& t = tape_of(x, "avg_pool2");
  const Tensor& xv = x.value();
  if (xv.rank() != 3 || xv.dim(1) < 2 || xv.dim(2) < 2)
    throw DimensionError("avg_pool2: expected c×h×w with h,w >= 2, got " + shape_to_string(xv.shape()));
  const std::size_t C = xv.dim(0), H = xv.dim(1), W = xv.dim(2), Ho = H / 2, Wo = W / 2;
  Tensor out(Shape{C, Ho, Wo});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xx = 0; xx < Wo; ++xx) {
        const std::size_t base = c * H * W + 2 * y * W + 2 * xx;
        out[(c * Ho + y) * Wo + xx] = 0.25 * (xv[base] + xv[base + 1] + xv[base + W] + xv[base + W + 1]);
      }
  const auto ix = x.id();
  return t.record("avg_pool2", std::move(out), {x}, [ix, C, H, W, Ho, Wo](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_of(ix);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xx = 0; xx < Wo; ++xx) {
          const double v = 0.25 * g[(c * Ho + y) * Wo + xx];
          const std::size_t base = c * H * W + 2 * y * W + 2 * xx;
          gx[base] += v;
          gx[base + 1] += v;
          gx[base + W] += v;
          gx[base + W + 1] += v;
        }
  });
}

}  // namespace foaa
