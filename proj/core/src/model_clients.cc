#include "sedic/model_clients.h"

#include <algorithm>
#include <cctype>

namespace sedic::models {

const char* to_string(BackendErrc code) {
  switch (code) {
    case BackendErrc::kBackendUnavailable: return "BackendUnavailable";
    case BackendErrc::kMalformedResponse: return "MalformedResponse";
    case BackendErrc::kEmptyMask: return "EmptyMask";
    case BackendErrc::kInvalidConfig: return "InvalidConfig";
  }
  return "unknown";
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

std::string truncate_words(std::string_view text, std::size_t max_words) {
  const auto words = split_words(text);
  if (words.size() <= max_words) return std::string(text);
  std::string out;
  for (std::size_t i = 0; i < max_words; ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

bool enforce_budgets(CaptionResult& result, const CaptionBudgets& budgets) {
  bool cut = false;
  if (result.objects.size() > budgets.max_objects) {
    result.objects.resize(budgets.max_objects);
    cut = true;
  }
  auto cap = [&](std::string& s, std::size_t n) {
    if (word_count(s) > n) {
      s = truncate_words(s, n);
      cut = true;
    }
  };
  for (auto& obj : result.objects) {
    cap(obj.name, budgets.name_words);
    cap(obj.detail, budgets.detail_words);
  }
  cap(result.overall, budgets.overall_words);
  result.budget_corrected |= cut;
  return cut;
}

bool DetectionBox::valid() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in_unit(x0) && in_unit(y0) && in_unit(x1) && in_unit(y1) && x0 < x1 && y0 < y1 &&
         confidence >= 0.0 && confidence <= 1.0;
}

void sort_by_confidence(std::vector<DetectionBox>& boxes) {
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const DetectionBox& a, const DetectionBox& b) { return a.confidence > b.confidence; });
}

void BackendConfig::validate() const {
  if (endpoint.empty()) throw BackendError(BackendErrc::kInvalidConfig, "InvalidConfig: endpoint is required");
  if (!(timeout_seconds > 0.0)) throw BackendError(BackendErrc::kInvalidConfig, "InvalidConfig: timeout must be positive");
  if (retries < 0) throw BackendError(BackendErrc::kInvalidConfig, "InvalidConfig: retries must be non-negative");
}

}  // namespace sedic::models
