#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace ghk {

enum class NoiseLaw { Gaussian, Rademacher, CenteredUniform };

/// I.i.d. mean-0, variance-1 noise. The value at integer index j is a pure
/// function of (seed, stream_id, j): eps_j = F(seed, stream_id, j). Replication
/// r of an ensemble uses stream_id = r, so paths do not depend on evaluation
/// order, thread count, or the truncation of the process that consumes them.
struct NoiseSpec {
  NoiseLaw law = NoiseLaw::Gaussian;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  bool operator==(const NoiseSpec&) const = default;
};

NoiseSpec substream(NoiseSpec base, std::uint64_t stream_id);

double noise_value(const NoiseSpec& spec, std::int64_t index);
// eps_first, ..., eps_{first+count-1}
Eigen::VectorXd noise_block(const NoiseSpec& spec, std::int64_t first, Eigen::Index count);

std::string to_string(NoiseLaw law);
NoiseLaw noise_law_from_string(const std::string& name);

}  // namespace ghk
