#include "faor/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "faor/errors.hpp"

namespace faor {

void TrainConfig::validate() const {
  if (base_patch < 1) throw InputError("base_patch must be positive");
  if (!(r_min >= 1.0) || !(r_max >= r_min) || !std::isfinite(r_max)) {
    throw InputError("scale range must satisfy 1 <= r_min <= r_max");
  }
  if (pixels_per_patch < 1) throw InputError("pixels_per_patch must be positive");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw InputError("lr0 must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw InputError("Adam hyper-parameters out of range");
  }
  if (max_iters < 0) throw InputError("max_iters must be non-negative");
  if (log_every < 1) throw InputError("log_every must be positive");
  if (checkpoint_every < 0) throw InputError("checkpoint_every must be non-negative");
  for (std::size_t i = 1; i < lr_milestones.size(); ++i) {
    if (lr_milestones[i] <= lr_milestones[i - 1]) {
      throw InputError("lr_milestones must be strictly increasing");
    }
  }
}

double TrainConfig::lr_at(long long iteration) const {
  int halvings = 0;
  for (long long m : lr_milestones) {
    if (m <= iteration) ++halvings;
  }
  return std::ldexp(lr0, -halvings);
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "base_patch = " << base_patch << "\n"
      << "r_min = " << r_min << "\n"
      << "r_max = " << r_max << "\n"
      << "pixels_per_patch = " << pixels_per_patch << "\n"
      << "lr0 = " << lr0 << "\n"
      << "lr_milestones = ";
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
    out << (i ? "," : "") << lr_milestones[i];
  }
  out << "\n"
      << "beta1 = " << beta1 << "\n"
      << "beta2 = " << beta2 << "\n"
      << "eps = " << eps << "\n"
      << "max_iters = " << max_iters << "\n"
      << "seed = " << seed << "\n"
      << "log_every = " << log_every << "\n"
      << "checkpoint_every = " << checkpoint_every << "\n";
  return out.str();
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  TrainConfig c;
  c.base_patch = kv.get_int("base_patch", c.base_patch);
  c.r_min = kv.get_double("r_min", c.r_min);
  c.r_max = kv.get_double("r_max", c.r_max);
  c.pixels_per_patch = kv.get_int("pixels_per_patch", c.pixels_per_patch);
  c.lr0 = kv.get_double("lr0", c.lr0);
  c.lr_milestones = kv.get_int_list("lr_milestones", c.lr_milestones);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.eps = kv.get_double("eps", c.eps);
  c.max_iters = kv.get_int64("max_iters", c.max_iters);
  const long long seed = kv.get_int64("seed", static_cast<long long>(c.seed));
  if (seed < 0) throw InputError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.log_every = kv.get_int("log_every", c.log_every);
  c.checkpoint_every = kv.get_int64("checkpoint_every", c.checkpoint_every);
  c.validate();
  return c;
}

TrainSample make_pair(const TrainImage& hr, double r, int base, int pixels,
                      std::mt19937_64& rng) {
  const ErpImage& img = hr.image;
  if (img.channels() != 3) throw InputError("training images must have 3 channels");
  if (!(r >= 1.0) || !std::isfinite(r)) throw InputError("scale r must be >= 1");
  if (base < 1 || pixels < 1) throw InputError("patch size and pixel count must be positive");
  if (!hr.instances.empty() && hr.instances.size() != img.pixel_count()) {
    throw InputError("instance map size does not match the training image");
  }
  const int c = static_cast<int>(std::lround(base * r));
  if (c > img.height() || c > img.width()) {
    throw InputError("training image " + std::to_string(img.height()) + "x" +
                     std::to_string(img.width()) + " is smaller than the " + std::to_string(c) +
                     "-pixel crop");
  }
  const int w = img.width();
  std::uniform_int_distribution<int> row_dist(0, img.height() - c);
  std::uniform_int_distribution<int> col_dist(0, w - 1);
  const int row0 = row_dist(rng);
  const int col0 = col_dist(rng);

  ErpImage crop(c, c, 3);
  std::vector<std::uint16_t> crop_ids;
  if (!hr.instances.empty()) crop_ids.resize(static_cast<std::size_t>(c) * c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      const int fc = (col0 + j) % w;
      const auto src = img.pixel(row0 + i, fc);
      std::copy(src.begin(), src.end(), crop.pixel(i, j).begin());
      if (!crop_ids.empty()) {
        crop_ids[static_cast<std::size_t>(i) * c + j] =
            hr.instances[static_cast<std::size_t>(row0 + i) * w + fc];
      }
    }
  }

  const ErpGrid frame = img.erp();
  TrainSample s{
      .lr_patch = resize_bicubic_planar(crop, base, base),
      .lattice = SourceLattice::window(frame, row0, col0, c, c, base, base),
      .lr_instances = crop_ids.empty() ? std::vector<std::uint16_t>{}
                                       : resize_instances(crop_ids, c, c, base, base),
      .gt_coords = {},
      .gt_values = {},
      .r = r,
      .crop_row = row0,
      .crop_col = col0,
      .crop_size = c,
  };
  s.gt_coords.reserve(pixels);
  s.gt_values.reserve(static_cast<std::size_t>(pixels) * 3);
  std::uniform_int_distribution<int> pick(0, c - 1);
  for (int k = 0; k < pixels; ++k) {
    const int row = row0 + pick(rng);
    const int col = (col0 + pick(rng)) % w;
    s.gt_coords.push_back(pixel_to_spherical(frame, row, col));
    const auto v = img.pixel(row, col);
    s.gt_values.insert(s.gt_values.end(), v.begin(), v.end());
  }
  return s;
}

ErpImage degrade(const ErpImage& hr, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("scale must be positive");
  const ErpGrid grid = hr.erp();
  return bicubic_resample(hr, grid, hr_coordinate_grid(grid, 1.0 / scale));
}

double l1_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw InputError("l1_loss length mismatch");
  if (pred.empty()) throw InputError("l1_loss of empty lists");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - gt[i]);
  return total / static_cast<double>(pred.size());
}

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<double> m,
                 std::span<double> v, long long step, double lr, double beta1, double beta2,
                 double eps) {
  if (param.size() != grad.size() || m.size() != param.size() || v.size() != param.size()) {
    throw InputError("Adam state does not match the parameter size");
  }
  if (step < 1) throw InputError("Adam step counts from 1");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in Adam update");
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] = static_cast<T>(param[i] - lr * m_hat / (std::sqrt(v_hat) + eps));
  }
}

template <typename T>
AdamState<T>::AdamState(const ad::ParameterSet<T>& params) {
  for (const auto& p : params) {
    m.emplace_back(p.tensor.numel(), 0.0);
    v.emplace_back(p.tensor.numel(), 0.0);
  }
}

template <typename T>
void adam_step(const ad::ParameterSet<T>& params, AdamState<T>& state, double lr,
               const TrainConfig& config) {
  if (state.m.size() != params.size()) throw InputError("Adam state built for other parameters");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor<T> t = params[i].tensor;
    std::vector<T> zero;
    std::span<const T> g = t.grad();
    if (!t.has_grad()) {
      zero.assign(t.numel(), T(0));
      g = zero;
    }
    adam_update<T>(t.mutable_data(), g, state.m[i], state.v[i], state.step, lr, config.beta1,
                   config.beta2, config.eps);
  }
}

template <typename T>
ad::Tensor<T> sample_loss(const FaorModel<T>& model, const TrainSample& sample) {
  const ErpImage& x = sample.lr_patch;
  const auto image = ad::Tensor<T>::from({static_cast<int>(x.pixel_count()), 3},
                                         std::vector<T>(x.values().begin(), x.values().end()));
  const PriorMaps priors = PriorMaps::for_lattice(sample.lattice, sample.lr_instances);
  const auto z = model.encode(image, model.prior_tensor(priors), x.height(), x.width());
  const Stencil stencil =
      build_stencil(sample.lattice, sample.gt_coords, model.config().resampler);
  const auto y = model.sgif(ad::gather(z, stencil), sample.gt_coords);
  const std::vector<T> target(sample.gt_values.begin(), sample.gt_values.end());
  return ad::l1_loss(y, std::span<const T>(target));
}

template <typename T>
TrainResult train_loop(const std::vector<TrainImage>& dataset, const FaorModel<T>& model,
                       const TrainConfig& config, const TrainCallbacks& callbacks) {
  config.validate();
  if (dataset.empty()) throw InputError("training dataset is empty");
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_image(0, dataset.size() - 1);
  std::uniform_real_distribution<double> pick_r(config.r_min, config.r_max);
  AdamState<T> adam(model.params());
  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.max_iters));

  for (long long it = 0; it < config.max_iters; ++it) {
    const TrainImage& img = dataset[pick_image(rng)];
    const double r = config.r_min == config.r_max ? config.r_min : pick_r(rng);
    const TrainSample sample =
        make_pair(img, r, config.base_patch, config.pixels_per_patch, rng);

    model.params().zero_grad();
    const ad::Tensor<T> loss = sample_loss(model, sample);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      throw NumericError("non-finite training loss at iteration " + std::to_string(it));
    }
    ad::backward(loss);
    const double lr = config.lr_at(it);
    adam_step(model.params(), adam, lr, config);

    const LossRecord rec{it, lr, value, r};
    result.history.push_back(rec);
    if (callbacks.on_log && (it % config.log_every == 0 || it + 1 == config.max_iters)) {
      callbacks.on_log(rec);
    }
    if (callbacks.on_checkpoint && config.checkpoint_every > 0 &&
        (it + 1) % config.checkpoint_every == 0) {
      callbacks.on_checkpoint(it + 1);
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> history) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(10);
  out << "iteration,lr,loss,r\n";
  for (const auto& rec : history) {
    out << rec.iteration << "," << rec.lr << "," << rec.loss << "," << rec.r << "\n";
  }
  if (!out) throw InputError("failed writing " + path.string());
}

#define FAOR_INSTANTIATE_TRAINING(T)                                                         \
  template void adam_update<T>(std::span<T>, std::span<const T>, std::span<double>,          \
                               std::span<double>, long long, double, double, double, double); \
  template struct AdamState<T>;                                                              \
  template void adam_step<T>(const ad::ParameterSet<T>&, AdamState<T>&, double,              \
                             const TrainConfig&);                                            \
  template ad::Tensor<T> sample_loss<T>(const FaorModel<T>&, const TrainSample&);            \
  template TrainResult train_loop<T>(const std::vector<TrainImage>&, const FaorModel<T>&,    \
                                     const TrainConfig&, const TrainCallbacks&);

FAOR_INSTANTIATE_TRAINING(float)
FAOR_INSTANTIATE_TRAINING(double)

}  // namespace faor
