#include "faor/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "faor/checkpoint.hpp"
#include "faor/errors.hpp"
#include "faor/kv_config.hpp"

namespace faor {

PriorMaps PriorMaps::for_grid(const ErpGrid& grid, std::span<const std::uint16_t> instances) {
  return for_lattice(SourceLattice::full(grid), instances);
}

PriorMaps PriorMaps::for_lattice(const SourceLattice& lattice,
                                 std::span<const std::uint16_t> instances) {
  PriorMaps p;
  p.height = lattice.rows();
  p.width = lattice.cols();
  const std::size_t n = static_cast<std::size_t>(p.height) * p.width;
  if (!instances.empty() && instances.size() != n) {
    throw InputError("instance map size does not match the prior grid");
  }
  p.m_d.resize(n);
  for (int r = 0; r < p.height; ++r) {
    const double v = std::cos(lattice.center(r, 0).lat);
    std::fill_n(p.m_d.begin() + static_cast<std::size_t>(r) * p.width, p.width, v);
  }
  if (instances.empty()) {
    p.m_s.assign(n, 0);
  } else {
    p.m_s.assign(instances.begin(), instances.end());
  }
  return p;
}

std::vector<double> PriorMaps::stacked() const {
  std::vector<double> out(m_d.size() * 2);
  for (std::size_t i = 0; i < m_d.size(); ++i) {
    out[2 * i] = m_d[i];
    out[2 * i + 1] = static_cast<double>(m_s[i] % 256) / 255.0;
  }
  return out;
}

std::vector<std::uint16_t> resize_instances(std::span<const std::uint16_t> ids, int height,
                                            int width, int out_height, int out_width) {
  if (ids.size() != static_cast<std::size_t>(height) * width) {
    throw InputError("instance map size does not match its dimensions");
  }
  std::vector<std::uint16_t> out(static_cast<std::size_t>(out_height) * out_width);
  for (int r = 0; r < out_height; ++r) {
    const int sr = std::min(height - 1, static_cast<int>((r + 0.5) * height / out_height));
    for (int c = 0; c < out_width; ++c) {
      const int sc = std::min(width - 1, static_cast<int>((c + 0.5) * width / out_width));
      out[static_cast<std::size_t>(r) * out_width + c] = ids[static_cast<std::size_t>(sr) * width + sc];
    }
  }
  return out;
}

namespace {

template <typename T>
ad::Tensor<T> to_tensor(ad::Shape shape, std::span<const double> values) {
  return ad::Tensor<T>::from(std::move(shape), std::vector<T>(values.begin(), values.end()));
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

template <typename T>
T FaorModel<T>::uniform(double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  return static_cast<T>(dist(init_rng_));
}

template <typename T>
typename FaorModel<T>::Linear FaorModel<T>::make_linear(const std::string& name, int in, int out,
                                                        bool zero) {
  const bool zeroed = zero && mode_ == InitMode::kIdentity;
  // He-uniform; the smaller 1/sqrt(fan_in) range shrinks activations through
  // the GELU stack and stalls early training.
  const double bound = std::sqrt(6.0 / in);
  std::vector<T> w(static_cast<std::size_t>(in) * out, T(0));
  std::vector<T> b(out, T(0));
  if (!zeroed) {
    for (auto& v : w) v = uniform(bound);
  }
  if (mode_ == InitMode::kRandom) {
    for (auto& v : b) v = uniform(0.1);
  }
  Linear l;
  l.weight = params_.add(name + ".weight", {in, out}, std::move(w));
  l.bias = params_.add(name + ".bias", {out}, std::move(b));
  return l;
}

template <typename T>
ad::Tensor<T> FaorModel<T>::make_norm(const std::string& name, bool gain) {
  const int d = config_.channels;
  std::vector<T> v(d, gain ? T(1) : T(0));
  if (mode_ == InitMode::kRandom) {
    for (auto& x : v) x += uniform(gain ? 0.2 : 0.1);
  }
  return params_.add(name, {d}, std::move(v));
}

template <typename T>
FaorModel<T>::FaorModel(ModelConfig config, std::uint64_t seed, InitMode mode)
    : config_(std::move(config)), mode_(mode), init_rng_(seed) {
  config_.validate();
  const int d = config_.channels;
  const int lift_in = 3 * config_.lift_kernel * config_.lift_kernel;
  lift_ = make_linear("lift", lift_in, d, false);
  for (int b = 0; b < config_.num_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    Block blk;
    blk.ln1_gain = make_norm(p + "ln1.gain", true);
    blk.ln1_bias = make_norm(p + "ln1.bias", false);
    blk.atfm_fc1 = make_linear(p + "atfm.fc1", 2, config_.conditioning_width(), false);
    blk.atfm_fc2 = make_linear(p + "atfm.fc2", config_.conditioning_width(), 2 * d, true);
    blk.q = make_linear(p + "ca.q", d, d, false);
    blk.k = make_linear(p + "ca.k", d, d, false);
    blk.v = make_linear(p + "ca.v", d, d, false);
    blk.ca_fc1 = make_linear(p + "ca.mlp.fc1", d, config_.mlp_hidden, false);
    blk.ca_fc2 = make_linear(p + "ca.mlp.fc2", config_.mlp_hidden, d, true);
    blk.ln2_gain = make_norm(p + "ln2.gain", true);
    blk.ln2_bias = make_norm(p + "ln2.bias", false);
    blk.mlp_fc1 = make_linear(p + "mlp.fc1", d, config_.mlp_hidden, false);
    blk.mlp_fc2 = make_linear(p + "mlp.fc2", config_.mlp_hidden, d, true);
    blocks_.push_back(std::move(blk));
  }
  const int h = config_.mlp_hidden;
  sgif_[0] = make_linear("sgif.fc1", d + config_.coord_features(), h, false);
  sgif_[1] = make_linear("sgif.fc2", h, h, false);
  sgif_[2] = make_linear("sgif.fc3", h, h, false);
  sgif_[3] = make_linear("sgif.fc4", h, 3, true);
}

template <typename T>
ad::Tensor<T> FaorModel<T>::apply(const Linear& l, const Tensor& x) const {
  return ad::linear(x, l.weight, l.bias);
}

template <typename T>
ad::Tensor<T> FaorModel<T>::mlp(const Linear& fc1, const Linear& fc2, const Tensor& x) const {
  return apply(fc2, ad::gelu(apply(fc1, x)));
}

template <typename T>
ad::Tensor<T> FaorModel<T>::lift(const Tensor& image, int height, int width) const {
  if (image.rank() != 2 || image.dim(1) != 3 ||
      static_cast<std::size_t>(image.dim(0)) != static_cast<std::size_t>(height) * width) {
    throw InputError("lift expects an (H*W) x 3 image tensor");
  }
  if (config_.lift_kernel == 3) return apply(lift_, ad::im2col_3x3(image, height, width));
  return apply(lift_, image);
}

template <typename T>
ad::Tensor<T> FaorModel<T>::atfm(int block, const Tensor& f_ln, const Tensor& priors) const {
  if (priors.rank() != 2 || priors.dim(1) != 2 || priors.dim(0) != f_ln.dim(0)) {
    throw InputError("ATFM priors " + ad::shape_string(priors.shape()) +
                     " do not match features " + ad::shape_string(f_ln.shape()));
  }
  const Block& b = blocks_.at(block);
  const int d = config_.channels;
  const Tensor affine = mlp(b.atfm_fc1, b.atfm_fc2, priors);
  const Tensor alpha = ad::add_scalar(ad::slice_last(affine, 0, d), T(1));
  const Tensor beta = ad::slice_last(affine, d, 2 * d);
  return ad::add(ad::mul(alpha, f_ln), beta);
}

template <typename T>
ad::Tensor<T> FaorModel<T>::attention_matrix(int block, const Tensor& f_ln,
                                             const Tensor& f_at) const {
  if (f_ln.shape() != f_at.shape()) throw InputError("cross-attention inputs differ in shape");
  const Block& b = blocks_.at(block);
  const Tensor q = apply(b.q, f_ln);
  const Tensor k = apply(b.k, f_at);
  const double n = f_ln.dim(0);
  const T factor = static_cast<T>(1.0 / (n * std::sqrt(config_.d_k())));
  return ad::softmax(ad::scale(ad::matmul(ad::transpose(q), k), factor));
}

template <typename T>
ad::Tensor<T> FaorModel<T>::cross_attention(int block, const Tensor& f_ln,
                                            const Tensor& f_at) const {
  const Block& b = blocks_.at(block);
  const Tensor a = attention_matrix(block, f_ln, f_at);
  const Tensor v = apply(b.v, f_at);
  return mlp(b.ca_fc1, b.ca_fc2, ad::matmul(v, ad::transpose(a)));
}

template <typename T>
ad::Tensor<T> FaorModel<T>::encoder_block(int block, const Tensor& f_l,
                                          const Tensor& priors) const {
  const Block& b = blocks_.at(block);
  const Tensor f_ln = ad::layer_norm(f_l, b.ln1_gain, b.ln1_bias);
  const Tensor f_at = atfm(block, f_ln, priors);
  const Tensor f_ca = cross_attention(block, f_ln, f_at);
  const Tensor f_tilde = ad::add(f_l, f_ca);
  const Tensor h = ad::layer_norm(f_tilde, b.ln2_gain, b.ln2_bias);
  return ad::add(f_tilde, mlp(b.mlp_fc1, b.mlp_fc2, h));
}

template <typename T>
ad::Tensor<T> FaorModel<T>::encode(const Tensor& image, const Tensor& priors, int height,
                                   int width) const {
  Tensor f = lift(image, height, width);
  for (int b = 0; b < config_.num_blocks; ++b) f = encoder_block(b, f, priors);
  return f;
}

template <typename T>
ad::Tensor<T> FaorModel<T>::coord_features(std::span<const SphericalCoord> coords) const {
  const int e = config_.coord_features();
  std::vector<T> f(coords.size() * e);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    T* row = f.data() + i * e;
    const double lat = coords[i].lat;
    const double lon = coords[i].lon;
    if (config_.coord_encoding == CoordEncoding::kRaw) {
      row[0] = static_cast<T>(lat / kPi * 2.0);
      row[1] = static_cast<T>(lon / kPi);
    } else {
      for (int k = 0; k < config_.coord_frequencies; ++k) {
        const double m = std::ldexp(1.0, k);
        row[4 * k + 0] = static_cast<T>(std::sin(m * lat));
        row[4 * k + 1] = static_cast<T>(std::cos(m * lat));
        row[4 * k + 2] = static_cast<T>(std::sin(m * lon));
        row[4 * k + 3] = static_cast<T>(std::cos(m * lon));
      }
    }
  }
  return Tensor::from({static_cast<int>(coords.size()), e}, std::move(f));
}

template <typename T>
ad::Tensor<T> FaorModel<T>::sgif(const Tensor& z_hat, std::span<const SphericalCoord> coords) const {
  if (z_hat.rank() != 2 || z_hat.dim(1) != config_.channels ||
      static_cast<std::size_t>(z_hat.dim(0)) != coords.size()) {
    throw InputError("SGIF expects M x D latents with M coordinates");
  }
  Tensor h = ad::concat_last(z_hat, coord_features(coords));
  h = ad::gelu(apply(sgif_[0], h));
  h = ad::gelu(apply(sgif_[1], h));
  h = ad::gelu(apply(sgif_[2], h));
  return apply(sgif_[3], h);
}

template <typename T>
ad::Tensor<T> FaorModel<T>::prior_tensor(const PriorMaps& priors) const {
  const std::size_t n = static_cast<std::size_t>(priors.height) * priors.width;
  if (priors.m_d.size() != n || priors.m_s.size() != n) {
    throw InputError("prior maps are inconsistent with their dimensions");
  }
  if (!config_.use_priors) return Tensor::zeros({static_cast<int>(n), 2});
  const std::vector<double> stacked = priors.stacked();
  return to_tensor<T>({static_cast<int>(n), 2}, stacked);
}

ad::Tensor<double> image_tensor(const ErpImage& image) {
  if (image.channels() != 3) throw InputError("expected a 3-channel image");
  return ad::Tensor<double>::from({static_cast<int>(image.pixel_count()), 3}, image.values());
}

template <typename T>
LatentGrid safe_encode(const FaorModel<T>& model, const ErpImage& x, const PriorMaps& priors) {
  if (x.channels() != 3) throw InputError("super-resolution input must have 3 channels");
  if (priors.height != x.height() || priors.width != x.width()) {
    throw InputError("prior maps do not match the input image size");
  }
  ad::NoGradGuard no_grad;
  const auto image = to_tensor<T>({static_cast<int>(x.pixel_count()), 3}, x.values());
  const auto z = model.encode(image, model.prior_tensor(priors), x.height(), x.width());
  return LatentGrid(x.height(), x.width(), model.config().channels,
                    std::vector<double>(z.data().begin(), z.data().end()));
}

template <typename T>
std::array<double, 3> sgif_predict(const FaorModel<T>& model, std::span<const double> z_hat,
                                   const SphericalCoord& coord) {
  if (z_hat.size() != static_cast<std::size_t>(model.config().channels)) {
    throw InputError("latent vector length differs from the model's channel count");
  }
  ad::NoGradGuard no_grad;
  const auto z = to_tensor<T>({1, model.config().channels}, z_hat);
  const auto y = model.sgif(z, std::span<const SphericalCoord>(&coord, 1));
  return {static_cast<double>(y.data()[0]), static_cast<double>(y.data()[1]),
          static_cast<double>(y.data()[2])};
}

template <typename T>
ErpImage render_from_latent(const FaorModel<T>& model, const LatentGrid& z, double scale,
                            InferenceStats* stats) {
  if (z.channels() != model.config().channels) {
    throw InputError("latent grid channel count differs from the model");
  }
  ad::NoGradGuard no_grad;
  const ErpGrid src = z.erp();
  const CoordGrid targets = hr_coordinate_grid(src, scale);
  ErpImage out(targets.rows(), targets.cols(), 3);
  const int band_rows = std::max(1, 32768 / targets.cols());
  std::vector<SphericalCoord> coords;
  for (int r0 = 0; r0 < targets.rows(); r0 += band_rows) {
    const int r1 = std::min(targets.rows(), r0 + band_rows);
    const CoordGrid band = targets.row_band(r0, r1);

    auto t0 = std::chrono::steady_clock::now();
    const LatentGrid z_hat = resample(model.config().resampler, z, src, band);
    if (stats) stats->resample_ms += elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    coords.clear();
    for (double lat : band.lats) {
      for (double lon : band.lons) coords.push_back(SphericalCoord{lat, lon});
    }
    const auto zt = to_tensor<T>({static_cast<int>(coords.size()), z.channels()}, z_hat.values());
    const auto y = model.sgif(zt, coords);
    if (stats) {
      stats->sgif_ms += elapsed_ms(t0);
      stats->sgif_evaluations += coords.size();
    }
    const auto yv = y.data();
    for (std::size_t i = 0; i < coords.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        out.values()[(static_cast<std::size_t>(r0) * targets.cols()) * 3 + i * 3 + c] =
            std::clamp(static_cast<double>(yv[i * 3 + c]), 0.0, 1.0);
      }
    }
  }
  return out;
}

template <typename T>
ErpImage super_resolve(const FaorModel<T>& model, const ErpImage& x, double scale,
                       const PriorMaps& priors, InferenceStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  const LatentGrid z = safe_encode(model, x, priors);
  if (stats) stats->encode_ms += elapsed_ms(t0);
  return render_from_latent(model, z, scale, stats);
}

template <typename T>
void save_model(const FaorModel<T>& model, const std::filesystem::path& path) {
  write_checkpoint(path, make_checkpoint(model.config().to_text(), model.params()));
}

template <typename T>
FaorModel<T> load_model(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  FaorModel<T> model(ModelConfig::from_config(KeyValueConfig::parse(ckpt.config_text)), 0);
  load_parameters(ckpt, model.params());
  return model;
}

template class FaorModel<float>;
template class FaorModel<double>;

#define FAOR_INSTANTIATE_INFERENCE(T)                                                        \
  template LatentGrid safe_encode<T>(const FaorModel<T>&, const ErpImage&, const PriorMaps&); \
  template std::array<double, 3> sgif_predict<T>(const FaorModel<T>&,                        \
                                                 std::span<const double>,                    \
                                                 const SphericalCoord&);                     \
  template ErpImage render_from_latent<T>(const FaorModel<T>&, const LatentGrid&, double,    \
                                          InferenceStats*);                                  \
  template ErpImage super_resolve<T>(const FaorModel<T>&, const ErpImage&, double,           \
                                     const PriorMaps&, InferenceStats*);                   \
  template void save_model<T>(const FaorModel<T>&, const std::filesystem::path&);            \
  template FaorModel<T> load_model<T>(const std::filesystem::path&);

FAOR_INSTANTIATE_INFERENCE(float)
FAOR_INSTANTIATE_INFERENCE(double)

}  // namespace faor
