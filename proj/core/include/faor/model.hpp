#pragma once

// The FAOR network.
//
//   X (H x W x 3) --lift--> f_0 --L encoder blocks--> Z (H x W x D)
//   Z --resample at HR coordinates--> Z_hat --SGIF(z_hat, lat, lon)--> Y
//
// Encoder block, with priors P (stretching ratio, instance map):
//   f_ln  = LN(f_l)
//   f_at  = alpha(P) * f_ln + beta(P)                       (ATFM)
//   f_ca  = MLP(v_at A^T),  A = softmax(q_ln^T k_at / (N sqrt(d_k)))
//   f~    = f_l + f_ca
//   f_l+1 = f~ + MLP(LN(f~))
//
// All spatial tensors are flattened to (H*W) x C. Branch-terminal layers
// (ATFM output, both MLP outputs, SGIF output) start at zero under
// InitMode::kIdentity, so every block begins as the identity.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "faor/erp_geometry.hpp"
#include "faor/grid.hpp"
#include "faor/model_config.hpp"
#include "faor/resampling.hpp"
#include "faor/tensor.hpp"

namespace faor {

// Conditioning priors on a feature grid: the stretching-ratio map rescaled
// to [0, 1] and an instance-id map (0 = background).
struct PriorMaps {
  int height = 0;
  int width = 0;
  std::vector<double> m_d;
  std::vector<std::uint16_t> m_s;

  // Prior for the whole ERP grid. An empty instance map means all background.
  static PriorMaps for_grid(const ErpGrid& grid, std::span<const std::uint16_t> instances = {});
  // Prior for a lattice window; m_d follows the window's own latitudes.
  static PriorMaps for_lattice(const SourceLattice& lattice,
                               std::span<const std::uint16_t> instances = {});

  // (H*W) x 2 rows of (m_d, (id mod 256) / 255).
  std::vector<double> stacked() const;
};

// Instance-id map resized with nearest-neighbor sampling.
std::vector<std::uint16_t> resize_instances(std::span<const std::uint16_t> ids, int height,
                                            int width, int out_height, int out_width);

enum class InitMode {
  kIdentity,  // branch-terminal layers zeroed
  kRandom,    // every parameter random; used by gradient checks
};

template <typename T>
class FaorModel {
 public:
  using Tensor = ad::Tensor<T>;

  FaorModel(ModelConfig config, std::uint64_t seed, InitMode mode = InitMode::kIdentity);

  const ModelConfig& config() const { return config_; }
  const ad::ParameterSet<T>& params() const { return params_; }

  // image: (H*W) x 3, priors: (H*W) x 2
  Tensor lift(const Tensor& image, int height, int width) const;
  Tensor atfm(int block, const Tensor& f_ln, const Tensor& priors) const;
  Tensor attention_matrix(int block, const Tensor& f_ln, const Tensor& f_at) const;
  Tensor cross_attention(int block, const Tensor& f_ln, const Tensor& f_at) const;
  Tensor encoder_block(int block, const Tensor& f_l, const Tensor& priors) const;
  Tensor encode(const Tensor& image, const Tensor& priors, int height, int width) const;

  Tensor coord_features(std::span<const SphericalCoord> coords) const;
  // z_hat: M x D -> M x 3 (unclamped)
  Tensor sgif(const Tensor& z_hat, std::span<const SphericalCoord> coords) const;

  // Priors as a tensor, or zeros when the model runs without priors.
  Tensor prior_tensor(const PriorMaps& priors) const;

 private:
  struct Linear {
    Tensor weight;
    Tensor bias;
  };
  struct Block {
    Tensor ln1_gain, ln1_bias;
    Linear atfm_fc1, atfm_fc2;
    Linear q, k, v;
    Linear ca_fc1, ca_fc2;
    Tensor ln2_gain, ln2_bias;
    Linear mlp_fc1, mlp_fc2;
  };

  Linear make_linear(const std::string& name, int in, int out, bool zero);
  Tensor make_norm(const std::string& name, bool gain);
  T uniform(double bound);
  Tensor mlp(const Linear& fc1, const Linear& fc2, const Tensor& x) const;
  Tensor apply(const Linear& l, const Tensor& x) const;

  ModelConfig config_;
  InitMode mode_;
  std::mt19937_64 init_rng_;
  ad::ParameterSet<T> params_;
  Linear lift_;
  std::vector<Block> blocks_;
  std::array<Linear, 4> sgif_;
};

struct InferenceStats {
  std::uint64_t sgif_evaluations = 0;
  double encode_ms = 0.0;
  double resample_ms = 0.0;
  double sgif_ms = 0.0;
};

ad::Tensor<double> image_tensor(const ErpImage& image);

// Latent grid Z of an ERP image.
template <typename T>
LatentGrid safe_encode(const FaorModel<T>& model, const ErpImage& x, const PriorMaps& priors);

// Single SGIF evaluation for one resampled latent vector.
template <typename T>
std::array<double, 3> sgif_predict(const FaorModel<T>& model, std::span<const double> z_hat,
                                   const SphericalCoord& coord);

// Encode once, resample the latent grid at every HR pixel center, then run
// SGIF exactly once per HR pixel. Output is clamped to [0, 1].
template <typename T>
ErpImage super_resolve(const FaorModel<T>& model, const ErpImage& x, double scale,
                       const PriorMaps& priors, InferenceStats* stats = nullptr);

// Same, starting from an already computed latent grid.
template <typename T>
ErpImage render_from_latent(const FaorModel<T>& model, const LatentGrid& z, double scale,
                            InferenceStats* stats = nullptr);

// Checkpoints carry the model configuration next to the parameters.
template <typename T>
void save_model(const FaorModel<T>& model, const std::filesystem::path& path);
template <typename T>
FaorModel<T> load_model(const std::filesystem::path& path);

}  // namespace faor
