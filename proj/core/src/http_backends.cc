#include "sedic/http_backends.h"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "httplib.h"

namespace sedic::models {

using guidance::AttentionMap;
using guidance::LatentGrid;
using nlohmann::json;

namespace {

[[noreturn]] void fail(BackendErrc code, const std::string& msg) {
  throw BackendError(code, std::string(to_string(code)) + ": " + msg);
}

// Replaces image payloads with a size marker before logging.
json elide_images(json j) {
  if (j.is_object()) {
    for (auto& [key, value] : j.items()) {
      if (value.is_string() && (key == "image_b64" || key == "url")) {
        value = "<elided " + std::to_string(value.get_ref<const std::string&>().size()) + " bytes>";
      } else {
        value = elide_images(std::move(value));
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) v = elide_images(std::move(v));
  }
  return j;
}

// "http://host:8000/api" -> {"http://host:8000", "/api"}
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, path_start), prefix};
}

json post_json(const BackendConfig& config, const std::string& route, const json& body) {
  config.validate();
  const auto [host, prefix] = split_endpoint(config.endpoint);
  const std::string path = prefix + route;
  const std::string payload = body.dump();
  if (spdlog::should_log(spdlog::level::debug)) {
    spdlog::debug("POST {}{} {}", host, path, elide_images(body).dump());
  }
  httplib::Headers headers;
  if (const char* token = std::getenv(config.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const double half = config.timeout_seconds / 2.0;
  const auto sec = static_cast<time_t>(half);
  const auto usec = static_cast<time_t>((half - std::floor(half)) * 1e6);

  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    httplib::Client client(host);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) fail(BackendErrc::kBackendUnavailable, path + " returned HTTP " + std::to_string(res->status));
    spdlog::debug("{} -> {} bytes", path, res->body.size());
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      fail(BackendErrc::kMalformedResponse, path + " reply is not JSON: " + e.what());
    }
  }
  fail(BackendErrc::kBackendUnavailable,
       path + " failed after " + std::to_string(config.retries + 1) + " attempts (" + last_error + ")");
}

template <typename F>
auto reading(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(BackendErrc::kMalformedResponse, what + ": " + e.what());
  }
}

std::string image_b64(const Image& image) { return base64_encode(encode_png(image)); }

json grid_json(const guidance::Grid& g) {
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"data", std::vector<double>(g.values().begin(), g.values().end())}};
}

template <typename G>
G grid_from(const json& reply, const char* key, const std::string& what) {
  return reading(what, [&] {
    const json& j = reply.at(key);
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) fail(BackendErrc::kMalformedResponse, what + ": data size does not match shape");
    return G(rows, cols, std::move(data));
  });
}

json embedding_json(const TextEmbedding& e) {
  return e.opaque.empty() ? json{{"text", e.text}} : json::parse(e.opaque);
}

json box_json(const DetectionBox& b) {
  return {{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"confidence", b.confidence}};
}

std::string strip_code_fence(std::string s) {
  const auto first = s.find('{');
  const auto last = s.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first) return s;
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string base64_encode(ByteView bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(BackendErrc::kMalformedResponse, "base64 length is not a multiple of 4");
  Bytes out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) fail(BackendErrc::kMalformedResponse, "invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string caption_system_prompt(const CaptionBudgets& b) {
  return "You describe photographs for a semantic image codec. Reply with strict JSON only, no markdown and no "
         "prose outside the JSON, using exactly this schema: "
         "{\"objects\": [{\"name\": string, \"detail\": string}], \"overall\": string}. "
         "List at most " + std::to_string(b.max_objects) +
         " salient objects, most important first. Each name has at most " + std::to_string(b.name_words) +
         " words. Each detail has at most " + std::to_string(b.detail_words) +
         " words and describes the object's shape, colour, condition and other visible attributes. "
         "The overall description has at most " + std::to_string(b.overall_words) +
         " words and covers the image content, style, lighting and scene context. "
         "Only mention objects that are clearly visible.";
}

HttpCaptioner::HttpCaptioner(BackendConfig config, std::string path) : config_(std::move(config)), path_(std::move(path)) {
  config_.validate();
}

CaptionResult HttpCaptioner::caption(const Image& image, const CaptionBudgets& budgets) {
  json body = {
      {"model", config_.model.empty() ? "gpt-4o" : config_.model},
      {"temperature", 0},
      {"response_format", {{"type", "json_object"}}},
      {"messages",
       json::array({{{"role", "system"}, {"content", caption_system_prompt(budgets)}},
                    {{"role", "user"},
                     {"content", json::array({{{"type", "text"}, {"text", "Describe this image."}},
                                              {{"type", "image_url"},
                                               {"image_url", {{"url", "data:image/png;base64," + image_b64(image)}}}}})}}})}};
  const json reply = post_json(config_, path_, body);
  CaptionResult result = reading("caption reply", [&] {
    const std::string content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    json parsed;
    try {
      parsed = json::parse(strip_code_fence(content));
    } catch (const json::exception&) {
      fail(BackendErrc::kMalformedResponse, "caption content is not JSON");
    }
    CaptionResult r;
    for (const auto& o : parsed.at("objects")) {
      r.objects.push_back({o.at("name").get<std::string>(), o.value("detail", std::string{})});
    }
    r.overall = parsed.at("overall").get<std::string>();
    return r;
  });
  if (word_count(result.overall) == 0) fail(BackendErrc::kMalformedResponse, "empty overall description");
  if (enforce_budgets(result, budgets)) {
    spdlog::warn("BudgetViolationCorrected: captioner exceeded word or object caps; truncated client-side");
  }
  return result;
}

HttpDetector::HttpDetector(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

std::vector<DetectionBox> HttpDetector::detect(const Image& image, std::string_view name) {
  if (name.empty()) fail(BackendErrc::kInvalidConfig, "detector query must be nonempty");
  const json reply = post_json(config_, "/detect", {{"image_b64", image_b64(image)}, {"query", name}});
  auto boxes = reading("detect reply", [&] {
    std::vector<DetectionBox> out;
    for (const auto& b : reply.at("boxes")) {
      DetectionBox box{b.at("x0").get<double>(), b.at("y0").get<double>(), b.at("x1").get<double>(),
                       b.at("y1").get<double>(), b.value("confidence", 1.0)};
      if (!box.valid()) fail(BackendErrc::kMalformedResponse, "detector returned an invalid box");
      out.push_back(box);
    }
    return out;
  });
  sort_by_confidence(boxes);
  return boxes;
}

HttpSegmenter::HttpSegmenter(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

mask::SemanticMask HttpSegmenter::segment(const Image& image, const DetectionBox& box) {
  const json reply = post_json(config_, "/segment", {{"image_b64", image_b64(image)}, {"box", box_json(box)}});
  mask::MaskBlob blob = reading("segment reply", [&] {
    const auto& m = reply.at("mask_rle");
    mask::MaskBlob b{m.at("width").get<std::uint32_t>(), m.at("height").get<std::uint32_t>(), mask::MaskEncoding::kRle, {}};
    for (const auto& run : m.at("runs")) put_varint(b.data, run.get<std::uint64_t>());
    return b;
  });
  if (blob.width != image.width() || blob.height != image.height()) {
    fail(BackendErrc::kMalformedResponse, "segment mask dimensions differ from the image");
  }
  mask::SemanticMask mask;
  try {
    mask = mask::mask_decode(blob);
  } catch (const mask::MaskCodecError& e) {
    fail(BackendErrc::kMalformedResponse, std::string("segment mask: ") + e.what());
  }
  if (mask.area() == 0) fail(BackendErrc::kEmptyMask, "segmenter returned an empty mask");
  return mask;
}

HttpDenoiser::HttpDenoiser(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

LatentGrid HttpDenoiser::encode_condition(const Image& image) {
  return grid_from<LatentGrid>(post_json(config_, "/encode_condition", {{"image_b64", image_b64(image)}}), "latent",
                               "encode_condition reply");
}

TextEmbedding HttpDenoiser::text_embed(const std::string& text) {
  const json reply = post_json(config_, "/text_embed", {{"text", text}});
  return reading("text_embed reply", [&] {
    TextEmbedding e;
    e.text = text;
    e.tokens = reply.at("tokens").get<std::vector<std::string>>();
    if (e.tokens.empty()) fail(BackendErrc::kMalformedResponse, "embedding has no tokens");
    e.opaque = reply.at("embedding").dump();
    return e;
  });
}

AttentionResult HttpDenoiser::attention(const LatentGrid& z, const TextEmbedding& embedding) {
  const json zj = grid_json(z);
  const json ej = embedding_json(embedding);
  AttentionResult r;
  r.map = grid_from<AttentionMap>(post_json(config_, "/attention", {{"z", zj}, {"embedding", ej}}), "attention",
                                  "attention reply");
  r.backward = [config = config_, zj, ej](const AttentionMap& grad_a) {
    return grid_from<LatentGrid>(
        post_json(config, "/attention_backward", {{"z", zj}, {"embedding", ej}, {"grad_attention", grid_json(grad_a)}}),
        "grad_z", "attention_backward reply");
  };
  return r;
}

LatentGrid HttpDenoiser::denoise_step(const LatentGrid& z, int t, const LatentGrid& condition,
                                      const TextEmbedding& embedding) {
  const json reply = post_json(config_, "/denoise_step",
                               {{"z", grid_json(z)}, {"t", t}, {"condition", grid_json(condition)},
                                {"embedding", embedding_json(embedding)}});
  return grid_from<LatentGrid>(reply, "z", "denoise_step reply");
}

Image HttpDenoiser::decode(const LatentGrid& z, std::uint32_t width, std::uint32_t height) {
  const json reply =
      post_json(config_, "/decode", {{"z", grid_json(z)}, {"width", width}, {"height", height}});
  Image img = reading("decode reply", [&] {
    try {
      return decode_png(base64_decode(reply.at("image_b64").get<std::string>()));
    } catch (const ImageIoError& e) {
      fail(BackendErrc::kMalformedResponse, std::string("decode reply: ") + e.what());
    }
  });
  if (img.width() != width || img.height() != height) fail(BackendErrc::kMalformedResponse, "decoded image has wrong size");
  return img;
}

LatentGrid HttpDenoiser::noised_reference(const LatentGrid& condition, int t, std::uint64_t seed) {
  const json reply =
      post_json(config_, "/noised_reference", {{"condition", grid_json(condition)}, {"t", t}, {"seed", seed}});
  return grid_from<LatentGrid>(reply, "z", "noised_reference reply");
}

}  // namespace sedic::models
