#pragma once

namespace xvoice {

struct ModelDims {
  int feature_dim = 8;   // D
  int time_dim = 32;     // d_t, sinusoidal time embedding
  int lid_dim = 16;      // d_L
  int time_hidden = 32;  // d_h, output of the time-level injection MLP
  int text_dim = 32;     // d_T
  int hidden = 96;       // width of the two field-network hidden layers

  int input_width() const { return 3 * feature_dim + 2 * text_dim + time_hidden; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

}  // namespace xvoice
