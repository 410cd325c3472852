#include "faor/model_config.hpp"

#include <sstream>

#include "faor/errors.hpp"

namespace faor {

void ModelConfig::validate() const {
  if (num_blocks < 1) throw InputError("L (num_blocks) must be at least 1");
  if (channels < 2) throw InputError("D (channels) must be at least 2");
  if (mlp_hidden < 1) throw InputError("mlp_hidden must be positive");
  if (attention_scale < 0) throw InputError("d_k must be positive");
  if (cond_hidden < 0) throw InputError("cond_hidden must be positive");
  if (lift_kernel != 1 && lift_kernel != 3) throw InputError("lift_kernel must be 1 or 3");
  if (coord_encoding == CoordEncoding::kSinCos && coord_frequencies < 1) {
    throw InputError("sincos coordinate encoding needs at least one frequency");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "L = " << num_blocks << "\n"
     << "D = " << channels << "\n"
     << "d_k = " << d_k() << "\n"
     << "mlp_hidden = " << mlp_hidden << "\n"
     << "cond_hidden = " << conditioning_width() << "\n"
     << "coord_encoding = "
     << (coord_encoding == CoordEncoding::kRaw ? std::string("raw")
                                               : "sincos:" + std::to_string(coord_frequencies))
     << "\n"
     << "lift_kernel = " << lift_kernel << "\n"
     << "priors = " << (use_priors ? "on" : "off") << "\n"
     << "resampler = " << resampler_name(resampler) << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_config(const KeyValueConfig& kv) {
  ModelConfig c;
  c.num_blocks = kv.get_int("L", c.num_blocks);
  c.channels = kv.get_int("D", c.channels);
  c.attention_scale = kv.get_double("d_k", c.attention_scale);
  c.mlp_hidden = kv.get_int("mlp_hidden", c.mlp_hidden);
  c.cond_hidden = kv.get_int("cond_hidden", c.cond_hidden);
  const std::string enc = kv.get_string("coord_encoding", "raw");
  if (enc == "raw") {
    c.coord_encoding = CoordEncoding::kRaw;
  } else if (enc.rfind("sincos", 0) == 0) {
    c.coord_encoding = CoordEncoding::kSinCos;
    if (enc.size() > 6) {
      if (enc[6] != ':') throw InputError("coord_encoding must be raw or sincos:F");
      KeyValueConfig f;
      f.set("coord_encoding", enc.substr(7));
      c.coord_frequencies = f.get_int("coord_encoding", 0);
    }
  } else {
    throw InputError("coord_encoding must be raw or sincos:F, got '" + enc + "'");
  }
  c.lift_kernel = kv.get_int("lift_kernel", c.lift_kernel);
  c.use_priors = kv.get_bool("priors", c.use_priors);
  c.resampler = parse_resampler(kv.get_string("resampler", "geodesic"));
  c.validate();
  return c;
}

}  // namespace faor
