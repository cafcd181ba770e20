#include <benchmark/benchmark.h>

#include <random>

#include "raw2raw/calibration.hpp"
#include "raw2raw/metrics.hpp"
#include "raw2raw/noise.hpp"
#include "raw2raw/pairing.hpp"
#include "raw2raw/raw.hpp"

using namespace raw2raw;

namespace {

RawFrame random_frame(int w, int h, uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RawFrame f;
  for (auto& p : f.channels) {
    p = Plane(w, h);
    for (auto& v : p.data) v = u(rng);
  }
  return f;
}

void BM_SobelGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RawFrame f = random_frame(n, n, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sobel_gradient_magnitude(f.channels[0]));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_SobelGradient)->Arg(256)->Arg(512);

void BM_BuildNoiseProfile(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RawFrame f = random_frame(n, n, 2);
  NoiseProfileConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(build_noise_profile(f, cfg));
}
BENCHMARK(BM_BuildNoiseProfile)->Arg(256)->Arg(512);

void BM_SynthesizeNoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RawFrame f = random_frame(n, n, 3);
  PoissonGaussianParams p;
  p.alpha.fill(0.01);
  p.beta.fill(1e-4);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_noise(f, p, 7));
  state.SetItemsProcessed(state.iterations() * n * n * 4);
}
BENCHMARK(BM_SynthesizeNoise)->Arg(256);

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RawFrame a = random_frame(n, n, 4);
  const RawFrame b = random_frame(n, n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(128);

void BM_QuadFit(benchmark::State& state) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Pixel4> src(512), tgt(512);
  for (size_t i = 0; i < src.size(); ++i) {
    for (int c = 0; c < 4; ++c) {
      src[i][c] = u(rng);
      tgt[i][c] = u(rng);
    }
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_calibration(src, tgt, CalibrationKind::Quad14));
}
BENCHMARK(BM_QuadFit);

void BM_RansacHomography(benchmark::State& state) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::vector<Match> matches;
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng);
    if (i % 5 == 0)
      matches.push_back({x, y, u(rng), u(rng), 1.0});  // outlier
    else
      matches.push_back({x, y, x + 10.0, y - 4.0, 1.0});
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(ransac_homography(matches, 1.0, 500, 11));
}
BENCHMARK(BM_RansacHomography);

}  // namespace

BENCHMARK_MAIN();
