#include "sedic/encoder.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sedic/ref_codec.h"
#include "sedic/text_codec.h"

namespace sedic::encoder {

const char* to_string(EncodeErrc code) {
  switch (code) {
    case EncodeErrc::kNonPositiveTarget: return "NonPositiveTarget";
    case EncodeErrc::kBudgetInfeasible: return "BudgetInfeasible";
    case EncodeErrc::kInvalidImage: return "InvalidImage";
  }
  return "unknown";
}

BudgetInfeasibleError::BudgetInfeasibleError(double target_bpp, double minimum_bpp)
    : EncodeError(EncodeErrc::kBudgetInfeasible,
                  fmt::format("BudgetInfeasible: target {:.6f} bpp cannot hold text, masks and the coarsest "
                              "reference image; minimum is {:.6f} bpp",
                              target_bpp, minimum_bpp)),
      target_bpp_(target_bpp),
      minimum_bpp_(minimum_bpp) {}

RatePolicy rate_control(double target_bpp) {
  if (!(target_bpp > 0.0) || !std::isfinite(target_bpp)) {
    throw EncodeError(EncodeErrc::kNonPositiveTarget, fmt::format("NonPositiveTarget: target bpp {} must be > 0", target_bpp));
  }
  RatePolicy p;
  p.target_bpp = target_bpp;
  if (target_bpp < 0.02) {
    p.objects = 0;
    p.detail_words = 0;
    p.overall_words = 20;
  } else if (target_bpp <= 0.035) {
    p.objects = 1;
    p.detail_words = 20;
    p.overall_words = 30;
  } else {
    p.objects = 3;
    p.detail_words = 30;
    p.overall_words = 50;
  }
  return p;
}

FilterResult filter_hallucinations(const std::vector<models::ObjectDescription>& objects, const Image& image,
                                   models::Detector& detector, double threshold) {
  FilterResult out;
  for (const auto& obj : objects) {
    std::vector<models::DetectionBox> boxes;
    if (!obj.name.empty()) boxes = detector.detect(image, obj.name);
    models::sort_by_confidence(boxes);
    auto best = std::find_if(boxes.begin(), boxes.end(), [&](const models::DetectionBox& b) {
      return b.confidence >= threshold;
    });
    if (best == boxes.end()) {
      spdlog::info("Hallucination: \"{}\" not found by the detector, removed", obj.name);
      out.dropped.push_back(obj.name);
    } else {
      out.kept.push_back({obj, *best});
    }
  }
  return out;
}

std::string scrub_phrases(std::string_view text, const std::vector<std::string>& phrases) {
  std::string s(text);
  auto lower = [](std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    return v;
  };
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (const auto& phrase : phrases) {
    if (phrase.empty()) continue;
    const std::string needle = lower(phrase);
    std::size_t pos = 0;
    while (true) {
      const std::string hay = lower(s);
      pos = hay.find(needle, pos);
      if (pos == std::string::npos) break;
      const bool left_ok = pos == 0 || !is_word(s[pos - 1]);
      const bool right_ok = pos + needle.size() >= s.size() || !is_word(s[pos + needle.size()]);
      if (left_ok && right_ok) {
        s.erase(pos, needle.size());
      } else {
        ++pos;
      }
    }
  }
  // Collapse runs of spaces and spaces before punctuation.
  std::string out;
  for (char c : s) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    if ((c == ',' || c == '.' || c == ';' || c == ':') && !out.empty() && out.back() == ' ') out.pop_back();
    out += c;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

mask::SemanticMask to_latent_mask(const mask::SemanticMask& full) {
  const std::uint32_t f = models::kLatentFactor;
  const std::uint32_t pw = models::latent_extent(full.width()) * f;
  const std::uint32_t ph = models::latent_extent(full.height()) * f;
  if (pw == full.width() && ph == full.height()) return mask::downsample_mask(full, f);
  mask::SemanticMask padded(pw, ph);
  for (std::uint32_t y = 0; y < full.height(); ++y)
    for (std::uint32_t x = 0; x < full.width(); ++x) padded.set(x, y, full.at(x, y));
  return mask::downsample_mask(padded, f);
}

BuildResult build_objects(const Image& image, const RatePolicy& policy, const std::vector<DetectedObject>& candidates,
                          models::Segmenter& segmenter) {
  struct Candidate {
    std::string name;
    PlannedObject plan;
    std::size_t area;
  };
  BuildResult out;
  if (policy.objects == 0) return out;
  std::vector<Candidate> ok;
  for (const auto& c : candidates) {
    try {
      mask::SemanticMask m = segmenter.segment(image, c.box);
      if (m.area() == 0) throw models::BackendError(models::BackendErrc::kEmptyMask, "EmptyMask");
      const std::size_t area = m.area();
      ok.push_back({c.description.name,
                    {models::truncate_words(c.description.detail, policy.detail_words), std::move(m)}, area});
    } catch (const models::BackendError& e) {
      if (e.code() != models::BackendErrc::kEmptyMask) throw;
      spdlog::warn("EmptyMask for \"{}\", skipping", c.description.name);
      out.skipped.push_back(c.description.name);
    }
  }
  std::stable_sort(ok.begin(), ok.end(), [](const Candidate& a, const Candidate& b) { return a.area > b.area; });
  if (ok.size() > policy.objects) ok.resize(policy.objects);
  for (auto& c : ok) {
    out.object_names.push_back(c.name);
    out.objects.push_back(std::move(c.plan));
  }
  return out;
}

std::uint64_t EncodeReport::total_bits() const {
  std::uint64_t sum = framing_bits + reference_bits + overall_text_bits;
  for (auto b : object_text_bits) sum += b;
  for (auto b : object_mask_bits) sum += b;
  return sum;
}

std::string EncodeReport::to_json() const {
  nlohmann::json j = {
      {"width", width},
      {"height", height},
      {"target_bpp", target_bpp},
      {"final_bpp", final_bpp},
      {"total_bits", total_bits()},
      {"policy",
       {{"J", policy.objects}, {"l_d", policy.detail_words}, {"l_all", policy.overall_words}, {"l_n", policy.name_words}}},
      {"quality", quality},
      {"bits",
       {{"framing", framing_bits},
        {"reference", reference_bits},
        {"overall_text", overall_text_bits},
        {"object_text", object_text_bits},
        {"object_mask", object_mask_bits}}},
      {"objects", object_names},
      {"dropped_hallucinations", dropped_hallucinations},
      {"skipped_empty_masks", skipped_empty_masks},
      {"caption_budget_corrected", caption_budget_corrected},
  };
  return j.dump(2);
}

std::string EncodeReport::to_text() const {
  const double px = static_cast<double>(width) * height;
  auto row = [&](const std::string& label, std::uint64_t bits) {
    return fmt::format("  {:<22} {:>8} bits  {:.6f} bpp\n", label, bits, bits / px);
  };
  std::string s = fmt::format("{}x{}  target {:.4f} bpp  achieved {:.6f} bpp  J={} l_d={} l_all={} q={}\n", width,
                              height, target_bpp, final_bpp, policy.objects, policy.detail_words,
                              policy.overall_words, quality);
  s += row("framing", framing_bits);
  s += row("reference", reference_bits);
  s += row("overall text", overall_text_bits);
  for (std::size_t j = 0; j < object_text_bits.size(); ++j) {
    s += row(fmt::format("object {} text", j), object_text_bits[j]);
    s += row(fmt::format("object {} mask", j), object_mask_bits[j]);
  }
  for (const auto& name : dropped_hallucinations) s += fmt::format("  dropped (hallucination): {}\n", name);
  for (const auto& name : skipped_empty_masks) s += fmt::format("  skipped (empty mask): {}\n", name);
  return s;
}

EncodeResult encode(const Image& image, double target_bpp, Backends backends, const EncoderConfig& config) {
  const RatePolicy policy = rate_control(target_bpp);
  if (image.width() < ref::kMinDimension || image.height() < ref::kMinDimension || !image.valid()) {
    throw EncodeError(EncodeErrc::kInvalidImage, "InvalidImage: image must be at least 16x16 with samples in [0, 1]");
  }

  models::CaptionBudgets budgets;
  budgets.max_objects = policy.objects == 0 ? 0 : policy.objects + config.extra_candidates;
  budgets.name_words = policy.name_words;
  budgets.detail_words = policy.detail_words;
  budgets.overall_words = policy.overall_words;
  models::CaptionResult caption = backends.captioner.caption(image, budgets);
  models::enforce_budgets(caption, budgets);

  FilterResult filtered;
  if (policy.objects > 0) {
    filtered = filter_hallucinations(caption.objects, image, backends.detector, config.detection_threshold);
  }
  BuildResult built = build_objects(image, policy, filtered.kept, backends.segmenter);

  container::SemanticContainer c;
  c.width = image.width();
  c.height = image.height();
  const std::string overall = scrub_phrases(caption.overall, filtered.dropped);
  c.overall_text = text::text_encode(overall);
  for (const auto& obj : built.objects) {
    const mask::SemanticMask m = config.mask_resolution == MaskResolution::kLatent ? to_latent_mask(obj.mask) : obj.mask;
    c.objects.push_back({text::text_encode(scrub_phrases(obj.detail, filtered.dropped)), mask::mask_encode(m)});
  }

  // Everything except the reference codec bitstream is a fixed commitment.
  c.reference = ref::RefPayload{ref::kTinyCodecId, {}};
  const std::uint64_t fixed_bits = 8 * std::uint64_t{container::serialize(c).size()};
  const double pixels = static_cast<double>(image.width()) * image.height();
  const auto total_budget = static_cast<std::uint64_t>(std::floor(target_bpp * pixels));
  if (total_budget <= fixed_bits) {
    const auto min_ref = 8 * ref::ref_encode(image, ref::Quality(ref::Quality::kMax)).bytes.size();
    throw BudgetInfeasibleError(target_bpp, static_cast<double>(fixed_bits + min_ref) / pixels);
  }
  ref::FitResult fit = [&] {
    try {
      return ref::fit_quality(image, total_budget - fixed_bits);
    } catch (const ref::BudgetInfeasibleError& e) {
      throw BudgetInfeasibleError(target_bpp, static_cast<double>(fixed_bits + e.minimum_bits()) / pixels);
    }
  }();
  c.reference = fit.payload;

  EncodeResult result;
  result.stream = container::serialize(c);
  result.container = std::move(c);

  EncodeReport& rep = result.report;
  rep.policy = policy;
  rep.target_bpp = target_bpp;
  rep.width = image.width();
  rep.height = image.height();
  rep.quality = fit.quality.value();
  rep.final_bpp = container::bpp(result.stream.size(), image.width(), image.height());
  const auto& rc = result.container;
  const std::size_t n_sections = 2 + rc.objects.size();
  rep.framing_bits = 8 * (container::kHeaderSize + container::kSectionHeaderSize * n_sections);
  rep.reference_bits = 8 * (1 + rc.reference->bytes.size());
  rep.overall_text_bits = 8 * text::serialized_size(*rc.overall_text);
  for (const auto& obj : rc.objects) {
    rep.object_text_bits.push_back(8 * text::serialized_size(obj.detail));
    rep.object_mask_bits.push_back(8 * mask::serialized_size(obj.mask));
  }
  rep.object_names = built.object_names;
  rep.dropped_hallucinations = filtered.dropped;
  rep.skipped_empty_masks = built.skipped;
  rep.caption_budget_corrected = caption.budget_corrected;
  return result;
}

}  // namespace sedic::encoder
