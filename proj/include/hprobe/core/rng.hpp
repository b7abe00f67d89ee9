#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hprobe::rng {

std::uint64_t splitmix64(std::uint64_t x);

// Independent engine for (seed, stream, substream). Results never depend on the order
// in which streams are created or consumed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream = 0);

// Pairwise summation; fixed association order for a given length.
double pairwise_sum(std::span<const double> values);

}  // namespace hprobe::rng
