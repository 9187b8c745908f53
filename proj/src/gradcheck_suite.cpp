#include "foaa/gradcheck_suite.hpp"

#include <functional>

#include "foaa/attention.hpp"
#include "foaa/encoders.hpp"
#include "foaa/gradcheck.hpp"
#include "foaa/init.hpp"
#include "foaa/train.hpp"

namespace foaa {

namespace {

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double bound = 1.0) {
  return Parameter(name, uniform_tensor(std::move(shape), bound, rng));
}

// Fixed random weights turn a tensor-valued op into a scalar loss whose
// gradient exercises every output entry.
Var weighted_sum(Var y, const Tensor& weights) {
  return sum(mul(y, y.tape()->constant(weights)));
}

using Instance = std::function<double(Rng&, const GradCheckSuiteConfig&)>;

double check(const Objective& f, std::vector<Parameter*> params, const GradCheckSuiteConfig& c) {
  return finite_diff_check(f, params, c.step).max_rel_error;
}

double check_outer(OuterOpKind kind, Rng& rng, const GradCheckSuiteConfig& c) {
  const std::size_t m = c.dim;
  Parameter q = random_param("q", {m}, rng);
  Parameter k = random_param("k", {m}, rng);
  // Keep denominators away from the guard band so central differences are
  // well conditioned.
  if (kind == OuterOpKind::Div)
    for (auto& v : k.value.data()) v = (v < 0 ? -1.0 : 1.0) * (0.5 + std::abs(v));
  const Tensor w = uniform_tensor({m, m}, 1.0, rng);
  return check([&](Tape& t) { return weighted_sum(outer_op(kind, t.leaf(q), t.leaf(k)), w); }, {&q, &k}, c);
}

double check_attention(OuterOpKind kind, Rng& rng, const GradCheckSuiteConfig& c) {
  const std::size_t m = c.dim;
  FoaaHeadParams head = FoaaHeadParams::init("head", m, rng);
  Parameter xq = random_param("x_q", {m}, rng), xk = random_param("x_k", {m}, rng), xv = random_param("x_v", {m}, rng);
  const Tensor w = uniform_tensor({m}, 1.0, rng);
  return check(
      [&](Tape& t) { return weighted_sum(attention_score(kind, head, t.leaf(xq), t.leaf(xk), t.leaf(xv)), w); },
      {&head.w_q, &head.w_k, &head.w_v, &xq, &xk, &xv}, c);
}

struct Suite {
  std::string name;
  Instance run;
};

std::vector<Suite> build_suite() {
  std::vector<Suite> s;
  s.push_back({"matmul", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 Parameter a = random_param("a", {3, 4}, rng), b = random_param("b", {4, 2}, rng);
                 const Tensor w = uniform_tensor({3, 2}, 1.0, rng);
                 return check([&](Tape& t) { return weighted_sum(matmul(t.leaf(a), t.leaf(b)), w); }, {&a, &b}, c);
               }});
  s.push_back({"matvec", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 Parameter a = random_param("w", {4, 5}, rng), x = random_param("x", {5}, rng);
                 const Tensor w = uniform_tensor({4}, 1.0, rng);
                 return check([&](Tape& t) { return weighted_sum(matvec(t.leaf(a), t.leaf(x)), w); }, {&a, &x}, c);
               }});
  s.push_back({"softmax_rows", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 Parameter x = random_param("x", {3, 5}, rng, 2.0);
                 const Tensor w = uniform_tensor({3, 5}, 1.0, rng);
                 return check([&](Tape& t) { return weighted_sum(softmax_rows(t.leaf(x)), w); }, {&x}, c);
               }});
  s.push_back({"elementwise", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 Parameter a = random_param("a", {6}, rng), b = random_param("b", {6}, rng);
                 const Tensor w = uniform_tensor({6}, 1.0, rng);
                 return check(
                     [&](Tape& t) {
                       Var x = t.leaf(a), y = t.leaf(b);
                       return weighted_sum(mul(sub(add(x, y), y), add(x, x)), w);
                     },
                     {&a, &b}, c);
               }});
  for (auto kind : kAllOuterOps)
    s.push_back({"outer_" + std::string(to_string(kind)),
                 [kind](Rng& rng, const GradCheckSuiteConfig& c) { return check_outer(kind, rng, c); }});
  for (auto kind : kAllOuterOps)
    s.push_back({"attention_score_" + std::string(to_string(kind)),
                 [kind](Rng& rng, const GradCheckSuiteConfig& c) { return check_attention(kind, rng, c); }});
  s.push_back({"sdp_attention", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 const std::size_t m = c.dim;
                 FoaaHeadParams head = FoaaHeadParams::init("sdp", m, rng);
                 Parameter x = random_param("x", {m}, rng);
                 const Tensor w = uniform_tensor({m}, 1.0, rng);
                 return check([&](Tape& t) {
                   Var xv = t.leaf(x);
                   return weighted_sum(sdp_attention(head, xv, xv, xv), w);
                 }, {&head.w_q, &head.w_k, &head.w_v, &x}, c);
               }});
  s.push_back({"self_attention", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 const std::size_t m = c.dim;
                 FoaaBlockParams block = FoaaBlockParams::init("self", m, {kAllOuterOps.begin(), kAllOuterOps.end()}, rng);
                 Parameter x = random_param("x", {m}, rng);
                 const Tensor w = uniform_tensor({m}, 1.0, rng);
                 std::vector<Parameter*> ps{&x};
                 block.collect(ps);
                 return check([&](Tape& t) { return weighted_sum(foaa_self_attention(block, t.leaf(x)), w); }, ps, c);
               }});
  s.push_back({"cross_attention", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 const std::size_t m = c.dim;
                 const std::vector<OuterOpKind> ops{kAllOuterOps.begin(), kAllOuterOps.end()};
                 FoaaBlockParams ab = FoaaBlockParams::init("ab", m, ops, rng);
                 FoaaBlockParams ba = FoaaBlockParams::init("ba", m, ops, rng);
                 Parameter xa = random_param("x_a", {m}, rng), xb = random_param("x_b", {m}, rng);
                 const Tensor w = uniform_tensor({m}, 1.0, rng);
                 std::vector<Parameter*> ps{&xa, &xb};
                 ab.collect(ps);
                 ba.collect(ps);
                 return check([&](Tape& t) { return weighted_sum(foaa_cross_attention(ab, ba, t.leaf(xa), t.leaf(xb)), w); },
                              ps, c);
               }});
  s.push_back({"direct_outer_fusion", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 const std::size_t m = c.dim;
                 Parameter xa = random_param("x_a", {m}, rng), xb = random_param("x_b", {m}, rng);
                 for (auto& v : xb.value.data()) v = (v < 0 ? -1.0 : 1.0) * (0.5 + std::abs(v));
                 const Tensor w = uniform_tensor({m}, 1.0, rng);
                 return check([&](Tape& t) { return weighted_sum(direct_outer_fusion(t.leaf(xa), t.leaf(xb)), w); },
                              {&xa, &xb}, c);
               }});
  s.push_back({"fusion_head", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 const std::size_t m = c.dim;
                 FusionHeadParams head = FusionHeadParams::init("head", m, 3, rng);
                 head.fc_bias.value = uniform_tensor({m}, 0.5, rng);
                 Parameter x = random_param("x", {m}, rng);
                 const Tensor w = uniform_tensor({3}, 1.0, rng);
                 std::vector<Parameter*> ps{&x};
                 head.collect(ps);
                 return check([&](Tape& t) { return weighted_sum(fusion_head(head, t.leaf(x)), w); }, ps, c);
               }});
  s.push_back({"encode_image", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 ImageEncoderConfig ic;
                 ic.channels = 2;
                 ic.height = 8;
                 ic.width = 6;
                 ic.stage1_channels = 3;
                 ic.stage2_channels = 2;
                 ic.embed_dim = c.dim;
                 ImageEncoderParams enc = ImageEncoderParams::init("img", ic, rng);
                 enc.conv1_b.value = uniform_tensor({3}, 0.3, rng);
                 enc.conv2_b.value = uniform_tensor({2}, 0.3, rng);
                 const Tensor img = uniform_tensor({2, 8, 6}, 1.0, rng);
                 const Tensor w = uniform_tensor({c.dim}, 1.0, rng);
                 std::vector<Parameter*> ps;
                 enc.collect(ps);
                 return check([&](Tape& t) { return weighted_sum(encode_image(enc, t.constant(img)), w); }, ps, c);
               }});
  s.push_back({"encode_tabular", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 TabularEncoderConfig tc;
                 tc.input_dim = 5;
                 tc.hidden_dim = 7;
                 tc.embed_dim = c.dim;
                 TabularEncoderParams enc = TabularEncoderParams::init("tab", tc, rng);
                 enc.b1.value = uniform_tensor({7}, 0.3, rng);
                 const std::uint64_t dropout_seed = rng();
                 Parameter row = random_param("row", {5}, rng);
                 const Tensor w = uniform_tensor({c.dim}, 1.0, rng);
                 std::vector<Parameter*> ps{&row};
                 enc.collect(ps);
                 // Training mode with a fixed dropout mask per evaluation.
                 return check([&](Tape& t) {
                   Rng drop(dropout_seed);
                   return weighted_sum(encode_tabular(enc, t.leaf(row), Mode::Train, &drop), w);
                 }, ps, c);
               }});
  s.push_back({"cross_entropy", [](Rng& rng, const GradCheckSuiteConfig& c) {
                 Parameter z = random_param("logits", {4}, rng, 3.0);
                 const std::size_t label = rng() % 4;
                 return check([&](Tape& t) { return cross_entropy(t.leaf(z), label); }, {&z}, c);
               }});
  return s;
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckSuiteConfig& config) {
  std::vector<GradCheckEntry> out;
  Rng rng(config.seed);
  for (const Suite& suite : build_suite()) {
    GradCheckEntry e;
    e.op_class = suite.name;
    e.instances = config.instances;
    for (std::size_t i = 0; i < config.instances; ++i) e.max_rel_error = std::max(e.max_rel_error, suite.run(rng, config));
    e.passed = e.max_rel_error <= config.tolerance;
    out.push_back(e);
  }
  return out;
}

}  // namespace foaa
