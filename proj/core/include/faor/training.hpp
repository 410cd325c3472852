#pragma once

// Random-scale LR/HR pair construction, random pixel supervision, L1 loss
// and Adam with a step-halving learning-rate schedule.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "faor/grid.hpp"
#include "faor/kv_config.hpp"
#include "faor/model.hpp"
#include "faor/resampling.hpp"
#include "faor/tensor.hpp"

namespace faor {

struct TrainConfig {
  int base_patch = 128;
  double r_min = 1.0;
  double r_max = 4.0;
  int pixels_per_patch = 16384;
  double lr0 = 1e-4;
  std::vector<long long> lr_milestones = {30000, 50000, 100000, 400000};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long max_iters = 1000;
  std::uint64_t seed = 0;
  int log_every = 100;
  long long checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
  double lr_at(long long iteration) const;

  // Keys: base_patch, r_min, r_max, pixels_per_patch, lr0, lr_milestones
  // (comma separated), beta1, beta2, eps, max_iters, seed, log_every,
  // checkpoint_every.
  std::string to_text() const;
  static TrainConfig from_config(const KeyValueConfig& kv);
};

// A full-resolution training image with an optional instance map.
struct TrainImage {
  ErpImage image;
  std::vector<std::uint16_t> instances;  // empty or H*W ids
};

struct TrainSample {
  ErpImage lr_patch;                       // base x base x 3
  SourceLattice lattice;                   // LR samples within the HR frame
  std::vector<std::uint16_t> lr_instances; // base x base, empty if absent
  std::vector<SphericalCoord> gt_coords;   // full-frame coordinates
  std::vector<double> gt_values;           // 3 per coordinate
  double r = 1.0;
  int crop_row = 0;
  int crop_col = 0;
  int crop_size = 0;
};

// Crops a random round(base * r) square (rows inside the frame, columns
// wrapping across the seam), downsamples it to base x base with a planar
// Catmull-Rom resize, and draws `pixels` ground-truth pixels uniformly
// from the crop.
TrainSample make_pair(const TrainImage& hr, double r, int base, int pixels, std::mt19937_64& rng);

// LR counterpart of a full ERP image: Catmull-Rom resampling (seam wrap,
// pole clamp) onto the round(H / scale) x round(W / scale) grid.
ErpImage degrade(const ErpImage& hr, double scale);

// Mean absolute difference over all entries.
double l1_loss(std::span<const double> pred, std::span<const double> gt);

// Bias-corrected Adam update of one parameter array; `step` counts from 1.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<double> m,
                 std::span<double> v, long long step, double lr, double beta1, double beta2,
                 double eps);

template <typename T>
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long step = 0;

  explicit AdamState(const ad::ParameterSet<T>& params);
};

// Applies one Adam step to every parameter from its accumulated gradient.
template <typename T>
void adam_step(const ad::ParameterSet<T>& params, AdamState<T>& state, double lr,
               const TrainConfig& config);

// L1 loss graph of the model on one training sample: encode the LR patch,
// resample the latents at the ground-truth coordinates, predict with SGIF.
template <typename T>
ad::Tensor<T> sample_loss(const FaorModel<T>& model, const TrainSample& sample);

struct LossRecord {
  long long iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double r = 0.0;
};

struct TrainCallbacks {
  std::function<void(const LossRecord&)> on_log;
  std::function<void(long long iteration)> on_checkpoint;
};

struct TrainResult {
  std::vector<LossRecord> history;  // every iteration
  double seconds = 0.0;
};

// Deterministic for a fixed config seed. A non-finite loss throws
// NumericError naming the iteration.
template <typename T>
TrainResult train_loop(const std::vector<TrainImage>& dataset, const FaorModel<T>& model,
                       const TrainConfig& config, const TrainCallbacks& callbacks = {});

// CSV with header "iteration,lr,loss,r".
void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> history);

}  // namespace faor
