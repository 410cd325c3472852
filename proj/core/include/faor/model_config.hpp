#pragma once

#include <string>

#include "faor/kv_config.hpp"
#include "faor/resampling.hpp"

namespace faor {

enum class CoordEncoding { kRaw, kSinCos };

// Architecture hyper-parameters. Keys in the text form:
//   L, D, d_k, mlp_hidden, cond_hidden, coord_encoding (raw | sincos:F),
//   lift_kernel (1 | 3), priors (on | off), resampler (geodesic | bilinear | bicubic)
struct ModelConfig {
  int num_blocks = 4;           // 36 in the full-scale model
  int channels = 32;
  double attention_scale = 0;   // d_k; 0 means "use channels"
  int mlp_hidden = 64;
  int cond_hidden = 0;          // ATFM conditioning width; 0 means "use channels"
  CoordEncoding coord_encoding = CoordEncoding::kRaw;
  int coord_frequencies = 4;
  int lift_kernel = 1;
  bool use_priors = true;
  ResamplerKind resampler = ResamplerKind::kGeodesic;

  double d_k() const { return attention_scale > 0 ? attention_scale : channels; }
  int conditioning_width() const { return cond_hidden > 0 ? cond_hidden : channels; }
  int coord_features() const {
    return coord_encoding == CoordEncoding::kRaw ? 2 : 4 * coord_frequencies;
  }

  void validate() const;
  std::string to_text() const;
  static ModelConfig from_config(const KeyValueConfig& kv);
};

}  // namespace faor
