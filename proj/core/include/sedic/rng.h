#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sedic {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t fnv1a(std::string_view s);

// Standard normal draws from mt19937_64 via Box-Muller. Unlike
// std::normal_distribution the sequence is identical on every standard
// library.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform();  // (0, 1]
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sedic
