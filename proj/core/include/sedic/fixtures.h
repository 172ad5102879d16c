#pragma once

// Synthetic inputs shared by the self-test, the test suite and benchmarks.

#include <cstdint>
#include <string>
#include <vector>

#include "sedic/image.h"

namespace sedic::fixtures {

// Coastal scene: sky gradient, sea, shore, a lighthouse and a boat with mild
// seeded texture. Layout matches MockFixture::default_scene() boxes.
Image coastal_scene(std::uint32_t width = 768, std::uint32_t height = 512, std::uint64_t seed = 1);

// Short English paragraphs, each at least 200 bytes.
const std::vector<std::string>& english_prose();

}  // namespace sedic::fixtures
