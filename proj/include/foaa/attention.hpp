#pragma once

// Flattened outer-arithmetic attention.
//
// Inputs are single flattened embeddings of length m. A head projects them to
// q, k, v with three m×m matrices, builds the m×m score matrix
// S_ij = (q_i ∘ k_j) / sqrt(m) for ∘ in {+, -, *, /}, normalises each row with
// softmax over j and returns A·v.
//
// For vector inputs the scaled dot-product baseline's score matrix q·kᵀ is the
// outer product, so sdp_attention and attention_score(Mul, ...) compute the same
// function. They remain separate code paths (matrix product versus outer
// kernel) and are checked against each other in the tests.

#include <map>
#include <vector>

#include "foaa/outer_op_kind.hpp"
#include "foaa/tape.hpp"

namespace foaa {

inline constexpr double kDefaultDivEpsilon = 1e-6;

/// Plain-value outer operation: entry (i,j) = q_i ∘ k_j, Div uses
/// division_guard on k_j.
Tensor outer_op(OuterOpKind kind, const Tensor& q, const Tensor& k, double eps = kDefaultDivEpsilon);

/// Differentiable outer operation on the tape.
Var outer_op(OuterOpKind kind, Var q, Var k, double eps = kDefaultDivEpsilon);

struct FoaaHeadParams {
  Parameter w_q, w_k, w_v;

  // Weights uniform in ±1/sqrt(m).
  static FoaaHeadParams init(const std::string& prefix, std::size_t m, Rng& rng);
  std::size_t dim() const { return w_q.value.dim(0); }
  void collect(std::vector<Parameter*>& out);
};

/// One set of heads for a single attention direction, keyed by operator.
struct FoaaBlockParams {
  std::size_t dim = 0;
  double div_epsilon = kDefaultDivEpsilon;
  std::map<OuterOpKind, FoaaHeadParams> heads;

  static FoaaBlockParams init(const std::string& prefix, std::size_t m, const std::vector<OuterOpKind>& ops,
                              Rng& rng, double div_epsilon = kDefaultDivEpsilon);
  std::vector<OuterOpKind> enabled_ops() const;
  void collect(std::vector<Parameter*>& out);
};

struct FusionHeadParams {
  Parameter fc;          // m×m
  Parameter fc_bias;     // m
  Parameter classifier;  // m×num_classes
  Parameter bias;        // num_classes

  static FusionHeadParams init(const std::string& prefix, std::size_t m, std::size_t num_classes, Rng& rng);
  std::size_t dim() const { return fc.value.dim(0); }
  std::size_t num_classes() const { return classifier.value.dim(1); }
  void collect(std::vector<Parameter*>& out);
};

struct AttentionResult {
  Var attended;  // m-vector A·v
  Var weights;   // m×m row-stochastic matrix A
  Var scores;    // m×m scaled scores before softmax
};

AttentionResult attend(OuterOpKind kind, FoaaHeadParams& head, Var x_q, Var x_k, Var x_v,
                       double eps = kDefaultDivEpsilon);

inline Var attention_score(OuterOpKind kind, FoaaHeadParams& head, Var x_q, Var x_k, Var x_v,
                           double eps = kDefaultDivEpsilon) {
  return attend(kind, head, x_q, x_k, x_v, eps).attended;
}

/// Scaled dot-product baseline: softmax(q·kᵀ / sqrt(m)) v, with q·kᵀ formed as
/// an (m×1)·(1×m) matrix product.
AttentionResult sdp_attend(FoaaHeadParams& head, Var x_q, Var x_k, Var x_v);

inline Var sdp_attention(FoaaHeadParams& head, Var x_q, Var x_k, Var x_v) {
  return sdp_attend(head, x_q, x_k, x_v).attended;
}

/// Sum of attention_score(kind, heads[kind], x, x, x) over enabled operators,
/// plus x itself.
Var foaa_self_attention(FoaaBlockParams& block, Var x);

/// Standard attention counterpart of foaa_self_attention: sdp_attention + x.
Var sdp_self_attention(FoaaHeadParams& head, Var x);

struct CrossDirections {
  bool a_to_b = true;  // queries from A, keys/values from B
  bool b_to_a = true;
};

/// Bidirectional cross-attention. Direction A→B uses queries from x_a and
/// keys/values from x_b with block_ab's heads; B→A swaps the roles with
/// block_ba. All attended vectors and both skips x_a, x_b are summed.
Var foaa_cross_attention(FoaaBlockParams& block_ab, FoaaBlockParams& block_ba, Var x_a, Var x_b,
                         CrossDirections directions = {});

/// logits = classifierᵀ · relu(fc · fused + fc_bias) + bias.
Var fusion_head(FusionHeadParams& params, Var fused);

// relu(fc · fused + fc_bias), the m-vector the classifier reads.
Var fusion_hidden(FusionHeadParams& params, Var fused);

/// Simplified outer-fusion baseline without attention: for each operator,
/// the row means of outer_op(kind, x_a, x_b), summed. A stand-in for the
/// direct outer-arithmetic fusion comparison, not a replication of it.
Var direct_outer_fusion(Var x_a, Var x_b, const std::vector<OuterOpKind>& ops = {kAllOuterOps.begin(), kAllOuterOps.end()},
                        double eps = kDefaultDivEpsilon);

}  // namespace foaa
