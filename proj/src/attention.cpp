#include "foaa/attention.hpp"

#include <cmath>

#include "foaa/errors.hpp"
#include "foaa/init.hpp"
#include "foaa/kernels/dispatch.hpp"

namespace foaa {

std::optional<OuterOpKind> parse_outer_op(std::string_view name) {
  for (auto kind : kAllOuterOps)
    if (to_string(kind) == name) return kind;
  if (name == "oa") return OuterOpKind::Add;
  if (name == "os") return OuterOpKind::Sub;
  if (name == "op") return OuterOpKind::Mul;
  if (name == "od") return OuterOpKind::Div;
  return std::nullopt;
}

namespace {

void check_outer_inputs(const Tensor& q, const Tensor& k) {
  if (q.rank() != 1 || k.rank() != 1 || q.numel() != k.numel())
    throw DimensionError("outer_op: expected two vectors of equal length, got " + shape_to_string(q.shape()) +
                         " and " + shape_to_string(k.shape()));
}

const char* outer_op_name(OuterOpKind kind) {
  switch (kind) {
    case OuterOpKind::Add: return "outer_add";
    case OuterOpKind::Sub: return "outer_sub";
    case OuterOpKind::Mul: return "outer_mul";
    case OuterOpKind::Div: return "outer_div";
  }
  return "outer";
}

}  // namespace

Tensor outer_op(OuterOpKind kind, const Tensor& q, const Tensor& k, double eps) {
  check_outer_inputs(q, k);
  if (!(eps > 0.0)) throw ConfigError("outer division epsilon must be positive");
  Tensor out(Shape{q.numel(), k.numel()});
  kernels::outer(kind, q.data(), k.data(), eps, out.data());
  return out;
}

Var outer_op(OuterOpKind kind, Var q, Var k, double eps) {
  if (!q.valid() || q.tape() != k.tape()) throw ContractError("outer_op: operands belong to different tapes");
  Tape& t = *q.tape();
  Tensor out = outer_op(kind, q.value(), k.value(), eps);
  const std::size_t m = q.value().numel();
  const auto iq = q.id(), ik = k.id();
  return t.record(outer_op_name(kind), std::move(out), {q, k}, [kind, iq, ik, m, eps](Tape& tp, const Tensor& g) {
    const Tensor& qv = tp.value(iq);
    const Tensor& kv = tp.value(ik);
    const bool need_q = tp.requires_grad(iq), need_k = tp.requires_grad(ik);
    Tensor* gq = need_q ? &tp.grad_of(iq) : nullptr;
    Tensor* gk = need_k ? &tp.grad_of(ik) : nullptr;
    switch (kind) {
      case OuterOpKind::Add:
      case OuterOpKind::Sub: {
        const double ksign = kind == OuterOpKind::Add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j];
            if (gq) (*gq)[i] += gij;
            if (gk) (*gk)[j] += ksign * gij;
          }
        break;
      }
      case OuterOpKind::Mul:
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j];
            if (gq) (*gq)[i] += gij * kv[j];
            if (gk) (*gk)[j] += gij * qv[i];
          }
        break;
      case OuterOpKind::Div: {
        std::vector<double> inv(m), slope(m);
        for (std::size_t j = 0; j < m; ++j) {
          inv[j] = 1.0 / division_guard(kv[j], eps);
          slope[j] = division_guard_slope(kv[j], eps);
        }
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j];
            if (gq) (*gq)[i] += gij * inv[j];
            if (gk) (*gk)[j] -= gij * qv[i] * inv[j] * inv[j] * slope[j];
          }
        break;
      }
    }
  });
}

FoaaHeadParams FoaaHeadParams::init(const std::string& prefix, std::size_t m, Rng& rng) {
  return FoaaHeadParams{uniform_parameter(prefix + ".w_q", {m, m}, m, rng),
                        uniform_parameter(prefix + ".w_k", {m, m}, m, rng),
                        uniform_parameter(prefix + ".w_v", {m, m}, m, rng)};
}

void FoaaHeadParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_q);
  out.push_back(&w_k);
  out.push_back(&w_v);
}

FoaaBlockParams FoaaBlockParams::init(const std::string& prefix, std::size_t m, const std::vector<OuterOpKind>& ops,
                                      Rng& rng, double div_epsilon) {
  if (!(div_epsilon > 0.0)) throw ConfigError("div_epsilon must be positive");
  FoaaBlockParams block;
  block.dim = m;
  block.div_epsilon = div_epsilon;
  for (auto kind : ops) {
    if (block.heads.contains(kind)) continue;
    block.heads.emplace(kind, FoaaHeadParams::init(prefix + "." + std::string(to_string(kind)), m, rng));
  }
  return block;
}

std::vector<OuterOpKind> FoaaBlockParams::enabled_ops() const {
  std::vector<OuterOpKind> ops;
  for (const auto& [kind, head] : heads) ops.push_back(kind);
  return ops;
}

void FoaaBlockParams::collect(std::vector<Parameter*>& out) {
  for (auto& [kind, head] : heads) head.collect(out);
}

FusionHeadParams FusionHeadParams::init(const std::string& prefix, std::size_t m, std::size_t num_classes, Rng& rng) {
  return FusionHeadParams{uniform_parameter(prefix + ".fc", {m, m}, m, rng), zero_parameter(prefix + ".fc_bias", {m}),
                          uniform_parameter(prefix + ".classifier", {m, num_classes}, m, rng),
                          zero_parameter(prefix + ".bias", {num_classes})};
}

void FusionHeadParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&fc);
  out.push_back(&fc_bias);
  out.push_back(&classifier);
  out.push_back(&bias);
}

namespace {

struct Projected {
  Var q, k, v;
};

Projected project(FoaaHeadParams& head, Var x_q, Var x_k, Var x_v) {
  Tape& t = *x_q.tape();
  const std::size_t m = head.dim();
  for (Var x : {x_q, x_k, x_v})
    if (x.value().rank() != 1 || x.value().numel() != m)
      throw DimensionError("attention: expected flattened inputs of length " + std::to_string(m) + ", got " +
                           shape_to_string(x.shape()));
  return {matvec(t.leaf(head.w_q), x_q), matvec(t.leaf(head.w_k), x_k), matvec(t.leaf(head.w_v), x_v)};
}

}  // namespace

AttentionResult attend(OuterOpKind kind, FoaaHeadParams& head, Var x_q, Var x_k, Var x_v, double eps) {
  auto [q, k, v] = project(head, x_q, x_k, x_v);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(head.dim()));
  Var scores = scale(outer_op(kind, q, k, eps), inv_sqrt_m);
  Var weights = softmax_rows(scores);
  return {matvec(weights, v), weights, scores};
}

AttentionResult sdp_attend(FoaaHeadParams& head, Var x_q, Var x_k, Var x_v) {
  auto [q, k, v] = project(head, x_q, x_k, x_v);
  const std::size_t m = head.dim();
  Var qk = matmul(reshape(q, {m, 1}), reshape(k, {1, m}));
  Var scores = scale(qk, 1.0 / std::sqrt(static_cast<double>(m)));
  Var weights = softmax_rows(scores);
  return {matvec(weights, v), weights, scores};
}

Var foaa_self_attention(FoaaBlockParams& block, Var x) {
  if (block.heads.empty()) throw ConfigError("self-attention block has no enabled operators");
  std::vector<Var> terms;
  for (auto& [kind, head] : block.heads) terms.push_back(attention_score(kind, head, x, x, x, block.div_epsilon));
  terms.push_back(x);
  return add_n(terms);
}

Var sdp_self_attention(FoaaHeadParams& head, Var x) { return add(sdp_attention(head, x, x, x), x); }

Var foaa_cross_attention(FoaaBlockParams& block_ab, FoaaBlockParams& block_ba, Var x_a, Var x_b,
                         CrossDirections directions) {
  if (x_a.value().rank() != 1 || x_a.shape() != x_b.shape())
    throw DimensionError("cross-attention: branch embeddings differ, " + shape_to_string(x_a.shape()) + " vs " +
                         shape_to_string(x_b.shape()));
  if (!directions.a_to_b && !directions.b_to_a) throw ConfigError("cross-attention needs at least one direction");
  if ((directions.a_to_b && block_ab.heads.empty()) || (directions.b_to_a && block_ba.heads.empty()))
    throw ConfigError("cross-attention block has no enabled operators");
  std::vector<Var> terms;
  if (directions.a_to_b)
    for (auto& [kind, head] : block_ab.heads)
      terms.push_back(attention_score(kind, head, x_a, x_b, x_b, block_ab.div_epsilon));
  if (directions.b_to_a)
    for (auto& [kind, head] : block_ba.heads)
      terms.push_back(attention_score(kind, head, x_b, x_a, x_a, block_ba.div_epsilon));
  terms.push_back(x_a);
  terms.push_back(x_b);
  return add_n(terms);
}

Var fusion_hidden(FusionHeadParams& params, Var fused) {
  Tape& t = *fused.tape();
  const std::size_t m = params.dim();
  if (fused.value().rank() != 1 || fused.value().numel() != m)
    throw DimensionError("fusion_head: expected a vector of length " + std::to_string(m) + ", got " +
                         shape_to_string(fused.shape()));
  return relu(add(matvec(t.leaf(params.fc), fused), t.leaf(params.fc_bias)));
}

Var fusion_head(FusionHeadParams& params, Var fused) {
  Tape& t = *fused.tape();
  const std::size_t m = params.dim();
  Var hidden = fusion_hidden(params, fused);
  Var logits = matmul(reshape(hidden, {1, m}), t.leaf(params.classifier));
  return add(reshape(logits, {params.num_classes()}), t.leaf(params.bias));
}

Var direct_outer_fusion(Var x_a, Var x_b, const std::vector<OuterOpKind>& ops, double eps) {
  if (ops.empty()) throw ConfigError("direct outer fusion needs at least one operator");
  if (x_a.value().rank() != 1 || x_a.shape() != x_b.shape())
    throw DimensionError("direct_outer_fusion: embeddings differ, " + shape_to_string(x_a.shape()) + " vs " +
                         shape_to_string(x_b.shape()));
  std::vector<Var> terms;
  for (auto kind : ops) terms.push_back(row_mean(outer_op(kind, x_a, x_b, eps)));
  return add_n(terms);
}

}  // namespace foaa
