#include "ghk/noise.hpp"

#include <cmath>
#include <numbers>

#include "ghk/error.hpp"

namespace ghk {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on the open interval (0,1).
double to_unit(std::uint64_t u) { return (double(u >> 11) + 0.5) * 0x1.0p-53; }

std::uint64_t stream_key(const NoiseSpec& s) { return mix64(mix64(s.seed) ^ (s.stream_id * 0xd1b54a32d192ed03ULL)); }

double value_with_key(NoiseLaw law, std::uint64_t key, std::int64_t index) {
  const std::uint64_t ctr = std::uint64_t(index) * 2;
  const std::uint64_t w1 = mix64(key ^ mix64(ctr));
  switch (law) {
    case NoiseLaw::Rademacher:
      return (w1 >> 63) ? 1.0 : -1.0;
    case NoiseLaw::CenteredUniform:
      return std::sqrt(3.0) * (2.0 * to_unit(w1) - 1.0);
    case NoiseLaw::Gaussian: {
      const std::uint64_t w2 = mix64(key ^ mix64(ctr + 1));
      return std::sqrt(-2.0 * std::log(to_unit(w1))) * std::cos(2.0 * std::numbers::pi * to_unit(w2));
    }
  }
  return 0.0;
}

}  // namespace

NoiseSpec substream(NoiseSpec base, std::uint64_t stream_id) {
  base.stream_id = stream_id;
  return base;
}

double noise_value(const NoiseSpec& spec, std::int64_t index) {
  return value_with_key(spec.law, stream_key(spec), index);
}

Eigen::VectorXd noise_block(const NoiseSpec& spec, std::int64_t first, Eigen::Index count) {
  Eigen::VectorXd out(count);
  const std::uint64_t key = stream_key(spec);
  for (Eigen::Index j = 0; j < count; ++j) out[j] = value_with_key(spec.law, key, first + j);
  return out;
}

std::string to_string(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::Gaussian:
      return "gaussian";
    case NoiseLaw::Rademacher:
      return "rademacher";
    case NoiseLaw::CenteredUniform:
      return "uniform";
  }
  return "gaussian";
}

NoiseLaw noise_law_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseLaw::Gaussian;
  if (name == "rademacher") return NoiseLaw::Rademacher;
  if (name == "uniform") return NoiseLaw::CenteredUniform;
  throw SpecError("unknown noise law '" + name + "'");
}

}  // namespace ghk
