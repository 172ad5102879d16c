#include <benchmark/benchmark.h>

#include <random>

#include "sedic/container.h"
#include "sedic/fixtures.h"
#include "sedic/mask_codec.h"
#include "sedic/ref_codec.h"
#include "sedic/text_codec.h"

namespace {

using namespace sedic;

void BM_TextEncode(benchmark::State& state) {
  const std::string& prose = fixtures::english_prose().front();
  for (auto _ : state) benchmark::DoNotOptimize(text::text_encode(prose));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * prose.size()));
}
BENCHMARK(BM_TextEncode);

void BM_TextDecode(benchmark::State& state) {
  const std::string& prose = fixtures::english_prose().front();
  const text::TextBlob blob = text::text_encode(prose);
  for (auto _ : state) benchmark::DoNotOptimize(text::text_decode(blob));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * prose.size()));
}
BENCHMARK(BM_TextDecode);

mask::SemanticMask box_mask(std::uint32_t w, std::uint32_t h) {
  mask::SemanticMask m(w, h);
  for (std::uint32_t y = h / 4; y < 3 * h / 4; ++y)
    for (std::uint32_t x = w / 3; x < 2 * w / 3; ++x) m.set(x, y, true);
  return m;
}

void BM_MaskEncode(benchmark::State& state) {
  const auto w = static_cast<std::uint32_t>(state.range(0));
  const mask::SemanticMask m = box_mask(w, w * 2 / 3);
  for (auto _ : state) benchmark::DoNotOptimize(mask::mask_encode(m));
}
BENCHMARK(BM_MaskEncode)->Arg(96)->Arg(768);

void BM_MaskDecode(benchmark::State& state) {
  const auto w = static_cast<std::uint32_t>(state.range(0));
  const mask::MaskBlob blob = mask::mask_encode(box_mask(w, w * 2 / 3));
  for (auto _ : state) benchmark::DoNotOptimize(mask::mask_decode(blob));
}
BENCHMARK(BM_MaskDecode)->Arg(96)->Arg(768);

void BM_TinyEncode(benchmark::State& state) {
  const Image img = fixtures::coastal_scene(768, 512);
  const ref::Quality q(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ref::ref_encode(img, q));
}
BENCHMARK(BM_TinyEncode)->Arg(1)->Arg(10)->Arg(31)->Unit(benchmark::kMillisecond);

void BM_TinyDecode(benchmark::State& state) {
  const ref::RefPayload p = ref::ref_encode(fixtures::coastal_scene(768, 512), ref::Quality(10));
  for (auto _ : state) benchmark::DoNotOptimize(ref::ref_decode(p));
}
BENCHMARK(BM_TinyDecode)->Unit(benchmark::kMillisecond);

void BM_FitQuality(benchmark::State& state) {
  const Image img = fixtures::coastal_scene(768, 512);
  for (auto _ : state) benchmark::DoNotOptimize(ref::fit_quality(img, 8000));
}
BENCHMARK(BM_FitQuality)->Unit(benchmark::kMillisecond);

void BM_ContainerParse(benchmark::State& state) {
  container::SemanticContainer c;
  c.width = 768;
  c.height = 512;
  c.reference = ref::ref_encode(fixtures::coastal_scene(768, 512), ref::Quality(10));
  c.overall_text = text::text_encode(fixtures::english_prose().front());
  for (int j = 0; j < 3; ++j) c.objects.push_back({text::text_encode("a detail"), mask::mask_encode(box_mask(96, 64))});
  const Bytes stream = container::serialize(c);
  for (auto _ : state) benchmark::DoNotOptimize(container::parse(stream));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * stream.size()));
}
BENCHMARK(BM_ContainerParse);

}  // namespace
