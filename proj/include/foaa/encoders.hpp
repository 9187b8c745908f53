#pragma once

// Toy per-modality input heads. Each maps its modality to a flattened
// embedding of length m so the attention blocks see one common dimension.

#include <vector>

#include "foaa/tape.hpp"

namespace foaa {

enum class Mode { Train, Eval };

struct ImageEncoderConfig {
  std::size_t channels = 1, height = 16, width = 16;
  std::size_t stage1_channels = 4, stage2_channels = 8;
  std::size_t embed_dim = 64;
  bool freeze_stage1 = false;
  bool freeze_stage2 = false;
};

/// conv3x3 -> relu -> avgpool2, twice, then a dense projection of the
/// flattened map to m. The dense layer's width is fixed by the input size the
/// encoder is built for.
struct ImageEncoderParams {
  ImageEncoderConfig config;
  Parameter conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b;

  static ImageEncoderParams init(const std::string& prefix, const ImageEncoderConfig& config, Rng& rng);
  // Reapplies the freeze flags to the stage parameters.
  void apply_freeze();
  void collect(std::vector<Parameter*>& out);
};

Var encode_image(ImageEncoderParams& params, Var img);

struct TabularEncoderConfig {
  std::size_t input_dim = 8;
  std::size_t hidden_dim = 128;
  std::size_t embed_dim = 64;
  double dropout = 0.25;
};

struct TabularEncoderParams {
  TabularEncoderConfig config;
  Parameter w1, b1, w2, b2;

  static TabularEncoderParams init(const std::string& prefix, const TabularEncoderConfig& config, Rng& rng);
  void collect(std::vector<Parameter*>& out);
};

// Dropout is applied only in Mode::Train and then needs `rng`.
Var encode_tabular(TabularEncoderParams& params, Var row, Mode mode = Mode::Eval, Rng* rng = nullptr);

}  // namespace foaa
