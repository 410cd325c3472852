#include <random>
#include <vector>

#include "bench_main.hpp"
#include "faor/erp_geometry.hpp"
#include "faor/resampling.hpp"

namespace {

faor::LatentGrid random_latent(int h, int w, int c) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  faor::LatentGrid g(h, w, c);
  for (double& v : g.values()) v = u(rng);
  return g;
}

// Args: source rows, channels, scale x 10. Rate is HR pixels per second.
void BM_Resample(benchmark::State& state, faor::ResamplerKind kind) {
  const int h = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const double scale = state.range(2) / 10.0;
  const faor::LatentGrid z = random_latent(h, 2 * h, c);
  const faor::ErpGrid src(h, 2 * h);
  const faor::CoordGrid targets = faor::hr_coordinate_grid(src, scale);
  for (auto _ : state) {
    faor::LatentGrid out = faor::resample(kind, z, src, targets);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(targets.size()));
  state.counters["HR_MP"] = static_cast<double>(targets.size()) / 1e6;
}

BENCHMARK_CAPTURE(BM_Resample, geodesic, faor::ResamplerKind::kGeodesic)
    ->Args({128, 3, 20})
    ->Args({128, 32, 20})
    ->Args({128, 32, 37})
    ->Args({256, 3, 80})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Resample, bilinear, faor::ResamplerKind::kBilinear)
    ->Args({128, 3, 20})
    ->Args({128, 32, 20})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Resample, bicubic, faor::ResamplerKind::kBicubic)
    ->Args({128, 3, 20})
    ->Args({128, 32, 20})
    ->Unit(benchmark::kMillisecond);

void BM_BuildStencil(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const faor::ErpGrid src(h, 2 * h);
  const faor::SourceLattice lattice = faor::SourceLattice::full(src);
  const faor::CoordGrid grid = faor::hr_coordinate_grid(src, 2.0);
  std::vector<faor::SphericalCoord> targets;
  targets.reserve(grid.size());
  for (double lat : grid.lats) {
    for (double lon : grid.lons) targets.push_back({lat, lon});
  }
  for (auto _ : state) {
    faor::Stencil s = faor::build_stencil(lattice, targets, faor::ResamplerKind::kGeodesic);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(targets.size()));
}
BENCHMARK(BM_BuildStencil)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

FAOR_BENCHMARK_MAIN();
