#include "bench_main.hpp"
#include "faor/model.hpp"
#include "faor/synthetic.hpp"
#include "faor/training.hpp"

namespace {

faor::ModelConfig toy_config() {
  faor::ModelConfig c;
  c.num_blocks = 4;
  c.channels = 32;
  c.lift_kernel = 3;
  return c;
}

const faor::TrainImage& sample_image() {
  static const faor::TrainImage img = [] {
    faor::SyntheticOptions opts;
    opts.height = 256;
    opts.width = 512;
    return faor::make_synthetic_odi(3, opts);
  }();
  return img;
}

// Arg: LR rows. Rate is LR pixels per second.
void BM_Encode(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const faor::FaorModel<float> model(toy_config(), 1);
  const faor::ErpImage x = faor::degrade(sample_image().image, 256.0 / h);
  const faor::PriorMaps priors = faor::PriorMaps::for_grid(x.erp());
  for (auto _ : state) {
    faor::LatentGrid z = faor::safe_encode(model, x, priors);
    benchmark::DoNotOptimize(z.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.pixel_count()));
}
BENCHMARK(BM_Encode)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// Arg: scale x 10 from a 64 x 128 latent. Rate is HR pixels per second.
void BM_Render(benchmark::State& state) {
  const double scale = state.range(0) / 10.0;
  const faor::FaorModel<float> model(toy_config(), 1);
  const faor::ErpImage x = faor::degrade(sample_image().image, 4.0);
  const faor::LatentGrid z = faor::safe_encode(model, x, faor::PriorMaps::for_grid(x.erp()));
  std::int64_t pixels = 0;
  for (auto _ : state) {
    faor::InferenceStats stats;
    faor::ErpImage y = faor::render_from_latent(model, z, scale, &stats);
    benchmark::DoNotOptimize(y.values().data());
    pixels = static_cast<std::int64_t>(stats.sgif_evaluations);
    state.counters["sgif_ms"] = stats.sgif_ms;
    state.counters["resample_ms"] = stats.resample_ms;
  }
  state.SetItemsProcessed(state.iterations() * pixels);
}
BENCHMARK(BM_Render)->Arg(20)->Arg(37)->Unit(benchmark::kMillisecond);

// One optimizer step on a 48-pixel patch; Arg: ground-truth pixels per step.
void BM_TrainStep(benchmark::State& state) {
  const faor::FaorModel<float> model(toy_config(), 1);
  faor::TrainConfig config;
  config.base_patch = 48;
  config.pixels_per_patch = static_cast<int>(state.range(0));
  config.lr0 = 1e-4;
  config.max_iters = 1;
  config.log_every = 1;
  const std::vector<faor::TrainImage> data{sample_image()};
  for (auto _ : state) {
    faor::TrainResult r = faor::train_loop(data, model, config, {});
    benchmark::DoNotOptimize(r.history.data());
  }
}
BENCHMARK(BM_TrainStep)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

}  // namespace

FAOR_BENCHMARK_MAIN();
