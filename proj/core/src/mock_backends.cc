#include "sedic/mock_backends.h"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sedic/rng.h"

namespace sedic::models {

using guidance::AttentionMap;
using guidance::LatentGrid;

MockFixture MockFixture::default_scene() {
  MockFixture f;
  f.caption.objects = {
      {"lighthouse",
       "tall white lighthouse tower with a red lantern room on top, weathered stone base, narrow black railing "
       "around the gallery and small arched windows facing the sea under bright afternoon sun"},
      {"fishing boat",
       "small wooden fishing boat with a blue hull and white cabin, coils of orange rope and two buoys on the "
       "deck, resting on calm water near the old pier"},
      {"rocky shore",
       "dark wet granite boulders along the shore with patches of green moss and seaweed, white foam where "
       "gentle waves break against the rocks"},
      {"seagull", "white seagull with grey wings gliding low above the water"},
  };
  f.caption.overall =
      "A sunny coastal landscape photograph showing a white lighthouse on a rocky headland, a small blue "
      "fishing boat on calm turquoise water, dark boulders along the shore and a clear blue sky with a few "
      "thin clouds, rendered in a natural realistic style with soft afternoon light, gentle shadows and "
      "distant green hills along the horizon.";
  f.boxes = {
      {"lighthouse", {{0.62, 0.10, 0.78, 0.70, 0.92}}},
      {"fishing boat", {{0.15, 0.55, 0.42, 0.78, 0.88}}},
      {"rocky shore", {{0.0, 0.72, 1.0, 1.0, 0.81}}},
      {"seagull", {{0.30, 0.12, 0.36, 0.18, 0.41}}},
  };
  return f;
}

MockFixture MockFixture::from_json(const std::string& json_text) {
  MockFixture f;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto& cap = j.at("caption");
    for (const auto& o : cap.value("objects", nlohmann::json::array())) {
      f.caption.objects.push_back({o.at("name").get<std::string>(), o.value("detail", std::string{})});
    }
    f.caption.overall = cap.value("overall", std::string{});
    if (j.contains("boxes")) {
      for (const auto& [name, list] : j.at("boxes").items()) {
        auto& boxes = f.boxes[name];
        for (const auto& b : list) {
          boxes.push_back({b.at("x0").get<double>(), b.at("y0").get<double>(), b.at("x1").get<double>(),
                           b.at("y1").get<double>(), b.value("confidence", 1.0)});
        }
      }
    }
    for (const auto& name : j.value("reject", nlohmann::json::array())) f.reject.insert(name.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendErrc::kMalformedResponse, std::string("MalformedResponse: mock fixture: ") + e.what());
  }
  return f;
}

CaptionResult MockCaptioner::caption(const Image&, const CaptionBudgets& budgets) {
  CaptionResult out = fixture_;
  out.budget_corrected = false;
  enforce_budgets(out, budgets);
  // A mock never "violates" the caps; truncation of a long fixture is the
  // normal way budgets apply to it.
  out.budget_corrected = false;
  return out;
}

std::vector<DetectionBox> MockDetector::detect(const Image&, std::string_view name) {
  const std::string key(name);
  if (reject_.contains(key)) return {};
  auto it = boxes_.find(key);
  if (it == boxes_.end()) return {DetectionBox{0.0, 0.0, 1.0, 1.0, 1.0}};
  std::vector<DetectionBox> boxes = it->second;
  sort_by_confidence(boxes);
  return boxes;
}

mask::SemanticMask MockSegmenter::segment(const Image& image, const DetectionBox& box) {
  const double w = image.width(), h = image.height();
  const auto x0 = static_cast<std::uint32_t>(std::clamp(std::floor(box.x0 * w), 0.0, w));
  const auto x1 = static_cast<std::uint32_t>(std::clamp(std::ceil(box.x1 * w), 0.0, w));
  const auto y0 = static_cast<std::uint32_t>(std::clamp(std::floor(box.y0 * h), 0.0, h));
  const auto y1 = static_cast<std::uint32_t>(std::clamp(std::ceil(box.y1 * h), 0.0, h));
  if (x1 <= x0 || y1 <= y0) throw BackendError(BackendErrc::kEmptyMask, "EmptyMask: box has no pixels after clipping");
  mask::SemanticMask m(image.width(), image.height());
  for (std::uint32_t y = y0; y < y1; ++y)
    for (std::uint32_t x = x0; x < x1; ++x) m.set(x, y, true);
  return m;
}

LatentGrid MockDenoiser::encode_condition(const Image& image) {
  const std::uint32_t lw = latent_extent(image.width()), lh = latent_extent(image.height());
  LatentGrid cf(std::size_t{lw} * lh, kLatentChannels);
  for (std::uint32_t ly = 0; ly < lh; ++ly) {
    for (std::uint32_t lx = 0; lx < lw; ++lx) {
      double sum[3] = {0, 0, 0};
      std::size_t n = 0;
      for (std::uint32_t y = ly * kLatentFactor; y < std::min(image.height(), (ly + 1) * kLatentFactor); ++y) {
        for (std::uint32_t x = lx * kLatentFactor; x < std::min(image.width(), (lx + 1) * kLatentFactor); ++x) {
          for (int c = 0; c < 3; ++c) sum[c] += image.at(x, y, c);
          ++n;
        }
      }
      const std::size_t m = std::size_t{ly} * lw + lx;
      for (int c = 0; c < 3; ++c) cf(m, c) = sum[c] / static_cast<double>(n);
      cf(m, 3) = 0.299 * cf(m, 0) + 0.587 * cf(m, 1) + 0.114 * cf(m, 2);
    }
  }
  return cf;
}

TextEmbedding MockDenoiser::text_embed(const std::string& text) {
  TextEmbedding e;
  e.text = text;
  for (auto w : split_words(text)) e.tokens.emplace_back(w);
  if (e.tokens.empty()) e.tokens.emplace_back();
  e.vectors.reserve(e.tokens.size() * kLatentChannels);
  for (const auto& tok : e.tokens) {
    NormalSampler rng(seed_combine(options_.seed, fnv1a(tok)));
    for (std::uint32_t c = 0; c < kLatentChannels; ++c) e.vectors.push_back(options_.attention_scale * rng.next());
  }
  return e;
}

namespace {

AttentionMap softmax_attention(const LatentGrid& z, const TextEmbedding& e) {
  const std::size_t s = z.locations(), c = z.channels(), k = e.token_count();
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c));
  AttentionMap a(s, k);
  std::vector<double> logits(s);
  for (std::size_t t = 0; t < k; ++t) {
    double max_logit = -INFINITY;
    for (std::size_t m = 0; m < s; ++m) {
      double dot = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) dot += e.vectors[t * c + ch] * z(m, ch);
      logits[m] = dot * inv_sqrt_c;
      max_logit = std::max(max_logit, logits[m]);
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < s; ++m) sum += (logits[m] = std::exp(logits[m] - max_logit));
    for (std::size_t m = 0; m < s; ++m) a(m, t) = logits[m] / sum;
  }
  return a;
}

}  // namespace

LatentGrid MockDenoiser::softmax_backward(const LatentGrid& z, const TextEmbedding& e, const AttentionMap& a,
                                          const AttentionMap& grad_a) {
  const std::size_t s = z.locations(), c = z.channels(), k = e.token_count();
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c));
  LatentGrid grad_z(s, c);
  for (std::size_t t = 0; t < k; ++t) {
    double weighted = 0.0;
    for (std::size_t m = 0; m < s; ++m) weighted += grad_a(m, t) * a(m, t);
    for (std::size_t m = 0; m < s; ++m) {
      const double dlogit = a(m, t) * (grad_a(m, t) - weighted);
      if (dlogit == 0.0) continue;
      for (std::size_t ch = 0; ch < c; ++ch) grad_z(m, ch) += dlogit * e.vectors[t * c + ch] * inv_sqrt_c;
    }
  }
  return grad_z;
}

AttentionResult MockDenoiser::attention(const LatentGrid& z, const TextEmbedding& embedding) {
  if (embedding.vectors.size() != embedding.token_count() * z.channels()) {
    throw guidance::GuidanceError(guidance::GuidanceErrc::kDimMismatch,
                                  "DimMismatch: embedding does not match latent channels");
  }
  AttentionResult r;
  r.map = softmax_attention(z, embedding);
  r.backward = [z, embedding, map = r.map](const AttentionMap& grad_a) {
    return softmax_backward(z, embedding, map, grad_a);
  };
  return r;
}

LatentGrid MockDenoiser::perturbation(const TextEmbedding& embedding, std::size_t locations) const {
  LatentGrid psi(locations, kLatentChannels);
  NormalSampler rng(seed_combine(options_.seed ^ 0x5073690000000000ull, fnv1a(embedding.text)));
  double norm2 = 0.0;
  for (double& v : psi.values()) {
    v = rng.next();
    norm2 += v * v;
  }
  const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (double& v : psi.values()) v *= inv;
  return psi;
}

LatentGrid MockDenoiser::target(const LatentGrid& condition, const TextEmbedding& embedding) const {
  LatentGrid t = condition;
  const LatentGrid psi = perturbation(embedding, condition.locations());
  auto tv = t.values();
  auto pv = psi.values();
  for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += pv[i];
  return t;
}

LatentGrid MockDenoiser::denoise_step(const LatentGrid& z, int t, const LatentGrid& condition,
                                      const TextEmbedding& embedding) {
  if (!z.same_shape(condition)) {
    throw guidance::GuidanceError(guidance::GuidanceErrc::kDimMismatch, "DimMismatch: latent vs condition");
  }
  const double gamma = 1.0 / (static_cast<double>(t) + 1.0);
  const LatentGrid goal = target(condition, embedding);
  LatentGrid out(z.locations(), z.channels());
  auto ov = out.values();
  auto zv = z.values();
  auto gv = goal.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = (1.0 - gamma) * zv[i] + gamma * gv[i];
  return out;
}

Image MockDenoiser::decode(const LatentGrid& z, std::uint32_t width, std::uint32_t height) {
  const std::uint32_t lw = latent_extent(width);
  if (z.locations() != std::size_t{lw} * latent_extent(height) || z.channels() < 3) {
    throw guidance::GuidanceError(guidance::GuidanceErrc::kDimMismatch, "DimMismatch: latent does not match image");
  }
  Image img(width, height);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::size_t m = std::size_t{y / kLatentFactor} * lw + x / kLatentFactor;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(std::clamp(z(m, c), 0.0, 1.0));
    }
  }
  return img;
}

LatentGrid MockDenoiser::noised_reference(const LatentGrid& condition, int t, std::uint64_t seed) {
  const double signal = std::sqrt(1.0 / (1.0 + t));
  const double noise = std::sqrt(static_cast<double>(t) / (1.0 + t));
  NormalSampler rng(seed_combine(seed_combine(options_.seed, seed), static_cast<std::uint64_t>(t)));
  LatentGrid out = condition;
  for (double& v : out.values()) v = signal * v + noise * rng.next();
  return out;
}

}  // namespace sedic::models
