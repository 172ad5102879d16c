// sedic: encode, decode and inspect semantic containers.
//
// Exit codes: 0 ok, 1 usage or I/O, 2 budget infeasible, 3 backend,
// 4 container parse, 5 selftest failure.

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>

#include "sedic/container.h"
#include "sedic/decoder.h"
#include "sedic/encoder.h"
#include "sedic/http_backends.h"
#include "sedic/image.h"
#include "sedic/mock_backends.h"
#include "sedic/selftest.h"

namespace fs = std::filesystem;
using namespace sedic;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kBudget = 2,
  kBackend = 3,
  kParse = 4,
  kSelftest = 5,
};

struct BackendOptions {
  std::string mode = "mock";
  std::uint64_t seed = 0;
  std::string mock_fixture;
  std::string captioner_url, detector_url, segmenter_url, denoiser_url;
  std::string model = "gpt-4o";
  std::string token_env = "SEDIC_API_TOKEN";
  double timeout = 60.0;
  int retries = 2;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--backend", mode, "Backend mode")->check(CLI::IsMember({"mock", "http"}))->capture_default_str();
    cmd.add_option("--seed", seed, "Seed for the mock backends and sampling")->capture_default_str();
    cmd.add_option("--mock-fixture", mock_fixture, "JSON scene for the mock captioner/detector")
        ->check(CLI::ExistingFile);
    cmd.add_option("--captioner-url", captioner_url, "Captioner endpoint (http mode)");
    cmd.add_option("--detector-url", detector_url, "Detector endpoint (http mode)");
    cmd.add_option("--segmenter-url", segmenter_url, "Segmenter endpoint (http mode)");
    cmd.add_option("--denoiser-url", denoiser_url, "Denoiser endpoint (http mode)");
    cmd.add_option("--model", model, "Captioner model name")->capture_default_str();
    cmd.add_option("--token-env", token_env, "Environment variable holding the bearer token")
        ->capture_default_str();
    cmd.add_option("--timeout", timeout, "Per-request timeout in seconds")->capture_default_str();
    cmd.add_option("--retries", retries, "Retries on transport errors and 5xx")->capture_default_str();
  }

  models::BackendConfig http(const std::string& url, const char* what) const {
    if (url.empty()) throw CLI::ValidationError(fmt::format("--backend http requires --{}-url", what));
    models::BackendConfig c;
    c.endpoint = url;
    c.token_env = token_env;
    c.timeout_seconds = timeout;
    c.retries = retries;
    c.model = model;
    c.validate();
    return c;
  }

  models::MockFixture fixture() const {
    return mock_fixture.empty() ? models::MockFixture::default_scene()
                                : models::MockFixture::from_json(std::string(
                                      [&] {
                                        const Bytes b = read_file(mock_fixture);
                                        return std::string(b.begin(), b.end());
                                      }()));
  }
};

struct EncoderBackends {
  std::unique_ptr<models::Captioner> captioner;
  std::unique_ptr<models::Detector> detector;
  std::unique_ptr<models::Segmenter> segmenter;
};

EncoderBackends make_encoder_backends(const BackendOptions& o) {
  EncoderBackends b;
  if (o.mode == "http") {
    b.captioner = std::make_unique<models::HttpCaptioner>(o.http(o.captioner_url, "captioner"));
    b.detector = std::make_unique<models::HttpDetector>(o.http(o.detector_url, "detector"));
    b.segmenter = std::make_unique<models::HttpSegmenter>(o.http(o.segmenter_url, "segmenter"));
  } else {
    models::MockFixture f = o.fixture();
    b.captioner = std::make_unique<models::MockCaptioner>(std::move(f.caption));
    b.detector = std::make_unique<models::MockDetector>(std::move(f.boxes), std::move(f.reject));
    b.segmenter = std::make_unique<models::MockSegmenter>();
  }
  return b;
}

std::unique_ptr<models::Denoiser> make_denoiser(const BackendOptions& o) {
  if (o.mode == "http") return std::make_unique<models::HttpDenoiser>(o.http(o.denoiser_url, "denoiser"));
  return std::make_unique<models::MockDenoiser>(models::MockDenoiser::Options{.seed = o.seed});
}

container::SemanticContainer load_container(const fs::path& path) {
  const Bytes stream = read_file(path);
  return container::parse(stream);
}

struct EncodeArgs {
  std::string input, output, report;
  double target_bpp = 0.0;
  double threshold = 0.35;
  bool full_res_masks = false;
  bool json = false;
};

int cmd_encode(const EncodeArgs& a, const BackendOptions& b) {
  const Image image = read_image(a.input);
  EncoderBackends be = make_encoder_backends(b);
  encoder::EncoderConfig cfg;
  cfg.detection_threshold = a.threshold;
  cfg.mask_resolution = a.full_res_masks ? encoder::MaskResolution::kFull : encoder::MaskResolution::kLatent;
  const encoder::EncodeResult r = encoder::encode(image, a.target_bpp, {*be.captioner, *be.detector, *be.segmenter}, cfg);
  write_file(a.output, r.stream);
  const std::string report_path = a.report.empty() ? a.output + ".json" : a.report;
  const std::string report = r.report.to_json();
  write_file(report_path, as_bytes(report + "\n"));
  if (a.json) {
    std::cout << report << "\n";
  } else {
    std::cout << fmt::format("{} bytes, {:.6f} bpp (target {:.6f})\n", r.stream.size(), r.report.final_bpp,
                             a.target_bpp);
  }
  std::cerr << r.report.to_text();
  return kOk;
}

struct DecodeArgs {
  std::string input, output, trace_dir;
  int steps = 50;
  std::optional<int> threshold;
  double eta = 1.0;
  int token_index = -1;
};

int cmd_decode(const DecodeArgs& a, const BackendOptions& b) {
  const container::SemanticContainer c = load_container(a.input);
  decoder::DecodeConfig cfg;
  cfg.steps = a.steps;
  cfg.t_threshold = a.threshold;
  cfg.eta = a.eta;
  cfg.seed = b.seed;
  cfg.token_index = a.token_index;
  cfg.record_trace = !a.trace_dir.empty();
  auto denoiser = make_denoiser(b);
  const decoder::DecodeResult r = decoder::decode(c, cfg, *denoiser);
  write_png(a.output, r.image);
  if (!a.trace_dir.empty()) {
    fs::create_directories(a.trace_dir);
    for (const auto& st : r.trace.stages) {
      write_png(fs::path(a.trace_dir) / fmt::format("stage_{:02}.png", st.stage), st.image);
    }
    write_file(fs::path(a.trace_dir) / "trace.json", as_bytes(r.trace.to_json() + "\n"));
  }
  std::cout << fmt::format("{} stages, {:.3f} s\n", c.objects.size() + 1, r.trace.seconds);
  return kOk;
}

const char* section_name(container::SectionType t) {
  switch (t) {
    case container::SectionType::kReference: return "REFERENCE";
    case container::SectionType::kOverallText: return "OVERALL_TEXT";
    case container::SectionType::kObject: return "OBJECT";
    case container::SectionType::kMetadata: return "METADATA";
  }
  return "UNKNOWN";
}

int cmd_inspect(const std::string& input, bool json) {
  const container::SemanticContainer c = load_container(input);
  const container::SizeReport rep = container::size_report(c);
  if (json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows) {
      nlohmann::json r = {{"type", section_name(row.type)}, {"bytes", row.bytes}, {"bpp", row.bpp}, {"share", row.share}};
      if (row.type == container::SectionType::kObject) r["object_index"] = row.object_index;
      rows.push_back(r);
    }
    nlohmann::json j = {{"width", rep.width},         {"height", rep.height},       {"header_bytes", rep.header_bytes},
                        {"header_bpp", rep.header_bpp}, {"sections", rows},          {"total_bytes", rep.total_bytes},
                        {"total_bpp", rep.total_bpp}};
    if (c.reference) j["reference_codec"] = c.reference->codec_id;
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  std::cout << fmt::format("{}x{}  {} bytes  {:.6f} bpp\n", rep.width, rep.height, rep.total_bytes, rep.total_bpp);
  std::cout << fmt::format("{:<14} {:>8} {:>10} {:>7}\n", "section", "bytes", "bpp", "share");
  std::cout << fmt::format("{:<14} {:>8} {:>10.6f} {:>7}\n", "header", rep.header_bytes, rep.header_bpp, "");
  for (const auto& row : rep.rows) {
    const std::string name = row.type == container::SectionType::kObject
                                 ? fmt::format("OBJECT[{}]", row.object_index)
                                 : std::string(section_name(row.type));
    std::cout << fmt::format("{:<14} {:>8} {:>10.6f} {:>6.1f}%\n", name, row.bytes, row.bpp, 100.0 * row.share);
  }
  std::cout << fmt::format("{:<14} {:>8} {:>10.6f}\n", "total", rep.total_bytes, rep.total_bpp);
  return kOk;
}

int cmd_selftest(const selftest::Options& options) {
  const auto results = selftest::run(options);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << fmt::format("{:<10} {:>5} checks  {}\n", r.name, r.checks, r.passed ? "ok" : "FAIL");
    if (!r.passed) {
      std::cerr << fmt::format("selftest: {} failed: {}\n", r.name, r.first_failure);
      ++failed;
    }
  }
  return failed == 0 ? kOk : kSelftest;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const encoder::BudgetInfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << fmt::format("hint: try --target-bpp {:.4f} or higher\n", e.suggested_minimum_bpp());
    return kBudget;
  } catch (const encoder::EncodeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const models::BackendError& e) {
    std::cerr << "error: backend: " << e.what() << "\n";
    return kBackend;
  } catch (const container::ContainerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const decoder::DecodeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == decoder::DecodeErrc::kInvalidConfig ? kUsage : kParse;
  } catch (const ref::RefCodecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("sedic"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Semantic image compression at extremely low bitrates"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value / TOML file");
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More logging (repeatable)");

  BackendOptions backend;

  EncodeArgs enc;
  CLI::App* encode = app.add_subcommand("encode", "Compress an image into a .sdc container");
  encode->add_option("-i,--input", enc.input, "Input image (PNG or PPM)")->required();
  encode->add_option("-o,--output", enc.output, "Output container")->required();
  encode->add_option("--target-bpp", enc.target_bpp, "Target bits per pixel")->required();
  encode->add_option("--report", enc.report, "JSON report path (default: OUTPUT.json)");
  encode->add_option("--detection-threshold", enc.threshold, "Minimum detector confidence")->capture_default_str();
  encode->add_flag("--full-res-masks", enc.full_res_masks, "Transmit masks at image resolution");
  encode->add_flag("--json", enc.json, "Print the report as JSON");
  backend.add_to(*encode);

  DecodeArgs dec;
  CLI::App* decode = app.add_subcommand("decode", "Reconstruct an image from a .sdc container");
  decode->add_option("-i,--input", dec.input, "Input container")->required();
  decode->add_option("-o,--output", dec.output, "Output PNG")->required();
  decode->add_option("--steps", dec.steps, "Denoising steps T")->capture_default_str();
  decode->add_option("--guidance-threshold", dec.threshold, "Guide while t > this (default T/2)");
  decode->add_option("--eta", dec.eta, "Guidance step size")->capture_default_str();
  decode->add_option("--token", dec.token_index, "Guide a single token (default: all)");
  decode->add_option("--trace", dec.trace_dir, "Write per-stage PNGs and energies here");
  backend.add_to(*decode);

  std::string inspect_input;
  bool inspect_json = false;
  CLI::App* inspect = app.add_subcommand("inspect", "Show the section table and bpp breakdown");
  inspect->add_option("-i,--input,input", inspect_input, "Container")->required();
  inspect->add_flag("--json", inspect_json, "Machine-readable output");

  selftest::Options st;
  CLI::App* self = app.add_subcommand("selftest", "Run the built-in property suites");
  self->add_option("--suite", st.suite, "Run one suite")->check(CLI::IsMember(selftest::suite_names()));
  self->add_option("--inject-fault", st.inject_fault, "Break a suite on purpose")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (verbosity == 1) spdlog::set_level(spdlog::level::info);
  if (verbosity >= 2) spdlog::set_level(spdlog::level::debug);

  if (*encode) return guarded([&] { return cmd_encode(enc, backend); });
  if (*decode) return guarded([&] { return cmd_decode(dec, backend); });
  if (*inspect) return guarded([&] { return cmd_inspect(inspect_input, inspect_json); });
  return guarded([&] { return cmd_selftest(st); });
}
