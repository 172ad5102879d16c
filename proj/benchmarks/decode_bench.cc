#include <benchmark/benchmark.h>

#include "sedic/decoder.h"
#include "sedic/encoder.h"
#include "sedic/fixtures.h"
#include "sedic/mock_backends.h"

namespace {

using namespace sedic;

container::SemanticContainer scene_container(double target_bpp) {
  models::MockFixture f = models::MockFixture::default_scene();
  models::MockCaptioner cap(f.caption);
  models::MockDetector det(f.boxes, f.reject);
  models::MockSegmenter seg;
  return encoder::encode(fixtures::coastal_scene(768, 512), target_bpp, {cap, det, seg}).container;
}

void BM_MockEncode(benchmark::State& state) {
  const Image img = fixtures::coastal_scene(768, 512);
  models::MockFixture f = models::MockFixture::default_scene();
  models::MockCaptioner cap(f.caption);
  models::MockDetector det(f.boxes, f.reject);
  models::MockSegmenter seg;
  for (auto _ : state) benchmark::DoNotOptimize(encoder::encode(img, 0.045, {cap, det, seg}));
}
BENCHMARK(BM_MockEncode)->Unit(benchmark::kMillisecond);

// Full multi-stage decode on the mock denoiser; the argument is T.
void BM_MockDecode(benchmark::State& state) {
  const container::SemanticContainer c = scene_container(0.045);
  decoder::DecodeConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.record_trace = false;
  models::MockDenoiser den({.seed = 1});
  for (auto _ : state) benchmark::DoNotOptimize(decoder::decode(c, cfg, den));
}
BENCHMARK(BM_MockDecode)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
