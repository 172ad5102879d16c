#include "sedic/selftest.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "sedic/container.h"
#include "sedic/decoder.h"
#include "sedic/encoder.h"
#include "sedic/fixtures.h"
#include "sedic/guidance.h"
#include "sedic/mask_codec.h"
#include "sedic/mock_backends.h"
#include "sedic/ref_codec.h"
#include "sedic/text_codec.h"

namespace sedic::selftest {

namespace {

class Checker {
 public:
  explicit Checker(SuiteResult& r) : r_(r) {}
  void expect(bool ok, std::string_view property, const std::string& detail = {}) {
    ++r_.checks;
    if (!ok && r_.passed) {
      r_.passed = false;
      r_.first_failure = detail.empty() ? std::string(property) : fmt::format("{}: {}", property, detail);
    }
  }

 private:
  SuiteResult& r_;
};

void text_suite(Checker& check) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    std::string s(rng() % 300, '\0');
    for (char& ch : s) ch = static_cast<char>(rng() & 0xFF);
    check.expect(text::text_decode(text::parse_text_blob(text::serialize_text_blob(text::text_encode(s)))) == s,
                 "text.roundtrip_random");
  }
  for (const auto& p : fixtures::english_prose()) {
    const double ratio = static_cast<double>(text::serialize_text_blob(text::text_encode(p)).size()) / p.size();
    check.expect(text::text_decode(text::text_encode(p)) == p, "text.roundtrip_prose");
    check.expect(ratio <= 0.75, "text.prose_ratio", fmt::format("{:.3f} > 0.75", ratio));
  }
}

void mask_suite(Checker& check) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto w = static_cast<std::uint32_t>(1 + rng() % 64), h = static_cast<std::uint32_t>(1 + rng() % 64);
    mask::SemanticMask m(w, h);
    const auto density = rng() % 100;
    for (std::uint32_t y = 0; y < h; ++y)
      for (std::uint32_t x = 0; x < w; ++x) m.set(x, y, rng() % 100 < density);
    const mask::MaskBlob blob = mask::mask_encode(m);
    check.expect(mask::mask_decode(blob) == m, "mask.roundtrip");
    const std::size_t other =
        blob.encoding == mask::MaskEncoding::kRaw ? mask::encode_rle(m).size() : mask::encode_raw(m).size();
    check.expect(blob.data.size() <= other, "mask.chosen_not_larger");
  }
  const mask::MaskBlob zero = mask::mask_encode(mask::SemanticMask(768, 512));
  check.expect(zero.data.size() <= 6, "mask.zero_mask_size", fmt::format("{} bytes", zero.data.size()));
}

void container_suite(Checker& check) {
  container::SemanticContainer c;
  c.width = 64;
  c.height = 48;
  c.reference = ref::ref_encode(Image(64, 48, 0.5f), ref::Quality(31));
  c.overall_text = text::text_encode("a quiet harbour at dawn");
  mask::SemanticMask m(8, 6);
  m.set(2, 3, true);
  c.objects.push_back({text::text_encode("red boat"), mask::mask_encode(m)});
  const Bytes stream = container::serialize(c);
  check.expect(container::parse(stream) == c, "container.roundtrip");
  bool threw = false;
  try {
    container::parse(ByteView(stream).first(stream.size() - 1));
  } catch (const container::ContainerError&) {
    threw = true;
  }
  check.expect(threw, "container.truncated_rejected");
  const container::SizeReport rep = container::size_report(c);
  std::uint64_t sum = rep.header_bytes;
  for (const auto& row : rep.rows) sum += row.bytes;
  check.expect(sum == stream.size(), "container.size_report_sum");
}

void ref_suite(Checker& check) {
  const Image flat(64, 64, 0.3f);
  const double p = psnr(flat, ref::ref_decode(ref::ref_encode(flat, ref::Quality(31))));
  check.expect(p >= 18.0, "ref.flat_psnr_q31", fmt::format("{:.2f} dB", p));
  const Image scene = fixtures::coastal_scene(128, 96, 3);
  std::size_t prev = 0;
  for (int q = 31; q >= 1; q -= 6) {
    const std::size_t size = ref::ref_encode(scene, ref::Quality(q)).bytes.size();
    check.expect(size >= prev, "ref.rate_monotone", fmt::format("q={} {} < {}", q, size, prev));
    prev = size;
  }
  const ref::FitResult fit = ref::fit_quality(scene, 8 * 400);
  check.expect(8 * fit.payload.bytes.size() <= 8 * 400, "ref.fit_within_budget");
}

void guidance_suite(Checker& check) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  for (int i = 0; i < 20; ++i) {
    const std::uint32_t w = 4, h = 3;
    const std::size_t tokens = 1 + rng() % 3;
    guidance::AttentionMap a(w * h, tokens);
    for (double& v : a.values()) v = uni(rng);
    mask::SemanticMask m(w, h);
    for (std::size_t k = 0; k < w * h; ++k) m.set(k, rng() % 2 == 0);
    m.set(static_cast<std::size_t>(rng() % (w * h)), false);
    const std::size_t k = rng() % tokens;
    const guidance::AttentionMap g = guidance::attention_energy_grad(a, m, k);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
      const double hstep = 1e-6;
      guidance::AttentionMap ap = a, am = a;
      ap.values()[idx] += hstep;
      am.values()[idx] -= hstep;
      const double fd = (guidance::attention_energy(ap, m, k) - guidance::attention_energy(am, m, k)) / (2 * hstep);
      const double err = std::fabs(fd - g.values()[idx]) / std::max(1e-8, std::max(std::fabs(fd), std::fabs(g.values()[idx])));
      worst = std::max(worst, std::fabs(fd - g.values()[idx]) < 1e-10 ? 0.0 : err);
    }
    check.expect(worst <= 1e-5, "guidance.fd_gradient", fmt::format("rel err {:.3g}", worst));
  }
  guidance::LatentGrid cur(6, 4, 1.0), prev(6, 4, -1.0);
  mask::SemanticMask ones(3, 2, true), zeros(3, 2, false);
  check.expect(guidance::blend_latents(cur, prev, ones) == cur, "guidance.blend_all_ones");
  check.expect(guidance::blend_latents(cur, prev, zeros) == prev, "guidance.blend_all_zeros");
}

void policy_suite(Checker& check) {
  const auto p1 = encoder::rate_control(0.025);
  check.expect(p1.objects == 1 && p1.detail_words == 20 && p1.overall_words == 30, "policy.row_0.025");
  const auto p3 = encoder::rate_control(0.045);
  check.expect(p3.objects == 3 && p3.detail_words == 30 && p3.overall_words == 50, "policy.row_0.045");
  const auto p0 = encoder::rate_control(0.01);
  check.expect(p0.objects == 0 && p0.overall_words == 20, "policy.row_0.01");
  for (double t : {0.001, 0.02, 0.035, 0.036, 1.0}) {
    const auto p = encoder::rate_control(t);
    check.expect(p.name_words == 3 && p.detail_words <= 50 && p.overall_words <= 50, "policy.word_caps");
  }
}

void decoder_suite(Checker& check) {
  container::SemanticContainer c;
  c.width = 64;
  c.height = 64;
  c.reference = ref::ref_encode(fixtures::coastal_scene(64, 64, 2), ref::Quality(20));
  c.overall_text = text::text_encode("a lighthouse above the sea");
  mask::SemanticMask m(8, 8);
  for (std::uint32_t y = 2; y < 6; ++y)
    for (std::uint32_t x = 3; x < 7; ++x) m.set(x, y, true);
  c.objects.push_back({text::text_encode("white tower with red stripes"), mask::mask_encode(m)});
  decoder::DecodeConfig cfg;
  cfg.steps = 8;
  cfg.t_threshold = 4;
  cfg.seed = 9;
  models::MockDenoiser den({.seed = 9});
  const auto a = decoder::decode(c, cfg, den);
  const auto b = decoder::decode(c, cfg, den);
  check.expect(a.trace.stages.size() == 2, "decoder.stage_count");
  check.expect(a.trace.stages[0].guided_updates == 4, "decoder.guided_updates",
               fmt::format("{}", a.trace.stages[0].guided_updates));
  check.expect(a.trace.stages[1].guided_updates == 0, "decoder.final_unguided");
  check.expect(a.image.samples() == b.image.samples(), "decoder.deterministic");
}

struct Suite {
  std::string name;
  std::function<void(Checker&)> body;
};

const std::vector<Suite>& suites() {
  static const std::vector<Suite> all = {
      {"text", text_suite},         {"mask", mask_suite},         {"container", container_suite},
      {"ref", ref_suite},           {"guidance", guidance_suite}, {"policy", policy_suite},
      {"decoder", decoder_suite},
  };
  return all;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& s : suites()) n.push_back(s.name);
    return n;
  }();
  return names;
}

std::vector<SuiteResult> run(const Options& options) {
  if (options.suite && std::find(suite_names().begin(), suite_names().end(), *options.suite) == suite_names().end()) {
    throw std::invalid_argument(fmt::format("unknown suite '{}'", *options.suite));
  }
  std::vector<SuiteResult> results;
  for (const auto& s : suites()) {
    if (options.suite && *options.suite != s.name) continue;
    SuiteResult r;
    r.name = s.name;
    Checker check(r);
    try {
      s.body(check);
    } catch (const std::exception& e) {
      check.expect(false, s.name + ".no_exception", e.what());
    }
    if (options.inject_fault && *options.inject_fault == s.name) check.expect(false, s.name + ".injected_fault");
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace sedic::selftest
