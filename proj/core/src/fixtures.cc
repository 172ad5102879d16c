#include "sedic/fixtures.h"

#include <algorithm>
#include <cmath>

#include "sedic/rng.h"

namespace sedic::fixtures {

namespace {

struct Rgb {
  float r, g, b;
};

Rgb mix(Rgb a, Rgb b, float t) { return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t}; }

bool inside(double u, double v, double x0, double y0, double x1, double y1) {
  return u >= x0 && u < x1 && v >= y0 && v < y1;
}

}  // namespace

Image coastal_scene(std::uint32_t width, std::uint32_t height, std::uint64_t seed) {
  Image img(width, height);
  NormalSampler noise(seed);
  const Rgb sky_top{0.35f, 0.55f, 0.85f}, sky_low{0.75f, 0.85f, 0.95f};
  const Rgb sea_far{0.10f, 0.35f, 0.55f}, sea_near{0.05f, 0.25f, 0.40f};
  const Rgb rock{0.40f, 0.36f, 0.30f}, tower{0.92f, 0.90f, 0.86f}, stripe{0.75f, 0.12f, 0.10f};
  const Rgb hull{0.55f, 0.20f, 0.15f}, cabin{0.90f, 0.88f, 0.80f}, gull{0.95f, 0.95f, 0.95f};
  for (std::uint32_t y = 0; y < height; ++y) {
    const double v = (y + 0.5) / height;
    for (std::uint32_t x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width;
      Rgb c;
      if (v < 0.5) {
        c = mix(sky_top, sky_low, static_cast<float>(v / 0.5));
      } else {
        c = mix(sea_far, sea_near, static_cast<float>((v - 0.5) / 0.5));
        c.b += 0.03f * static_cast<float>(std::sin(u * 90.0 + v * 40.0));
      }
      const double shore_line = 0.72 + 0.04 * std::sin(u * 7.0);
      if (v > shore_line) c = mix(rock, Rgb{0.30f, 0.27f, 0.22f}, static_cast<float>(std::fabs(std::sin(u * 31.0))));
      if (inside(u, v, 0.66, 0.10, 0.74, 0.70)) {
        const int band = static_cast<int>((v - 0.10) / 0.12);
        c = band % 2 == 0 ? tower : stripe;
      }
      if (inside(u, v, 0.62, 0.06, 0.78, 0.10)) c = Rgb{0.20f, 0.20f, 0.22f};
      if (inside(u, v, 0.15, 0.66, 0.42, 0.78)) c = hull;
      if (inside(u, v, 0.24, 0.55, 0.33, 0.66)) c = cabin;
      if (inside(u, v, 0.30, 0.14, 0.36, 0.16)) c = gull;
      const float n = 0.02f * static_cast<float>(noise.next());
      img.at(x, y, 0) = std::clamp(c.r + n, 0.0f, 1.0f);
      img.at(x, y, 1) = std::clamp(c.g + n, 0.0f, 1.0f);
      img.at(x, y, 2) = std::clamp(c.b + n, 0.0f, 1.0f);
    }
  }
  return img;
}

const std::vector<std::string>& english_prose() {
  static const std::vector<std::string> prose = {
      "A white lighthouse with red stripes stands on a rocky point above the harbour. Waves break against the dark "
      "stones at its base, and a narrow path climbs from the beach to the small wooden door of the keeper's cottage.",
      "The fishing boat rests low in the water with its nets piled on the stern deck. Two men in yellow coats sort "
      "the morning catch while gulls circle overhead, waiting for scraps to be thrown back into the grey sea.",
      "In the evening the town square fills with people walking slowly between the market stalls. Children chase "
      "each other around the fountain, and the smell of roasted chestnuts drifts across the old cobblestones.",
      "The kitchen was quiet except for the ticking of the clock above the stove. She poured the tea into two "
      "chipped cups, set them on the table by the window, and watched the rain run down the glass in long lines.",
      "A red bicycle leans against the fence of an overgrown garden, its basket full of wild flowers. Behind it "
      "the house has green shutters, a sagging porch, and a cat sleeping in the one patch of afternoon sunlight.",
  };
  return prose;
}

}  // namespace sedic::fixtures
