#include "foaa/encoders.hpp"

#include "foaa/errors.hpp"
#include "foaa/init.hpp"

namespace foaa {

namespace {

void check_image_config(const ImageEncoderConfig& c) {
  if (c.height < 4 || c.width < 4)
    throw DimensionError("image encoder needs spatial dims >= 4, got " + std::to_string(c.height) + "x" +
                         std::to_string(c.width));
  if (c.channels == 0 || c.stage1_channels == 0 || c.stage2_channels == 0 || c.embed_dim == 0)
    throw ConfigError("image encoder widths must be positive");
}

}  // namespace

ImageEncoderParams ImageEncoderParams::init(const std::string& prefix, const ImageEncoderConfig& config, Rng& rng) {
  check_image_config(config);
  const std::size_t c = config.channels, c1 = config.stage1_channels, c2 = config.stage2_channels;
  const std::size_t flat = c2 * (config.height / 4) * (config.width / 4);
  ImageEncoderParams p;
  p.config = config;
  p.conv1_w = uniform_parameter(prefix + ".conv1_w", {c1, c, 3, 3}, c * 9, rng);
  p.conv1_b = zero_parameter(prefix + ".conv1_b", {c1});
  p.conv2_w = uniform_parameter(prefix + ".conv2_w", {c2, c1, 3, 3}, c1 * 9, rng);
  p.conv2_b = zero_parameter(prefix + ".conv2_b", {c2});
  p.dense_w = uniform_parameter(prefix + ".dense_w", {config.embed_dim, flat}, flat, rng);
  p.dense_b = zero_parameter(prefix + ".dense_b", {config.embed_dim});
  p.apply_freeze();
  return p;
}

void ImageEncoderParams::apply_freeze() {
  conv1_w.frozen = conv1_b.frozen = config.freeze_stage1;
  conv2_w.frozen = conv2_b.frozen = config.freeze_stage2;
}

void ImageEncoderParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b}) out.push_back(p);
}

Var encode_image(ImageEncoderParams& params, Var img) {
  const auto& c = params.config;
  const Shape& s = img.shape();
  if (s.size() != 3) throw DimensionError("encode_image: expected c×h×w, got " + shape_to_string(s));
  if (s[1] < 4 || s[2] < 4) throw DimensionError("encode_image: spatial dims must be >= 4, got " + shape_to_string(s));
  if (s[0] != c.channels || s[1] != c.height || s[2] != c.width)
    throw DimensionError("encode_image: encoder built for " + shape_to_string({c.channels, c.height, c.width}) +
                         ", got " + shape_to_string(s));
  Tape& t = *img.tape();
  Var h = avg_pool2(relu(conv2d_3x3(img, t.leaf(params.conv1_w), t.leaf(params.conv1_b))));
  h = avg_pool2(relu(conv2d_3x3(h, t.leaf(params.conv2_w), t.leaf(params.conv2_b))));
  const std::size_t flat = h.value().numel();
  return add(matvec(t.leaf(params.dense_w), reshape(h, {flat})), t.leaf(params.dense_b));
}

TabularEncoderParams TabularEncoderParams::init(const std::string& prefix, const TabularEncoderConfig& config,
                                                Rng& rng) {
  if (config.input_dim == 0 || config.hidden_dim == 0 || config.embed_dim == 0)
    throw ConfigError("tabular encoder widths must be positive");
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  TabularEncoderParams p;
  p.config = config;
  p.w1 = uniform_parameter(prefix + ".w1", {config.hidden_dim, config.input_dim}, config.input_dim, rng);
  p.b1 = zero_parameter(prefix + ".b1", {config.hidden_dim});
  p.w2 = uniform_parameter(prefix + ".w2", {config.embed_dim, config.hidden_dim}, config.hidden_dim, rng);
  p.b2 = zero_parameter(prefix + ".b2", {config.embed_dim});
  return p;
}

void TabularEncoderParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&w1, &b1, &w2, &b2}) out.push_back(p);
}

Var encode_tabular(TabularEncoderParams& params, Var row, Mode mode, Rng* rng) {
  if (row.value().rank() != 1 || row.value().numel() != params.config.input_dim)
    throw DimensionError("encode_tabular: expected " + std::to_string(params.config.input_dim) + " features, got " +
                         shape_to_string(row.shape()));
  Tape& t = *row.tape();
  Var h = relu(add(matvec(t.leaf(params.w1), row), t.leaf(params.b1)));
  if (mode == Mode::Train && params.config.dropout > 0.0) {
    if (!rng) throw ContractError("encode_tabular: training mode needs a random stream for dropout");
    h = dropout(h, params.config.dropout, *rng);
  }
  return add(matvec(t.leaf(params.w2), h), t.leaf(params.b2));
}

}  // namespace foaa
