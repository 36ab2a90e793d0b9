#pragma once

#include <cstdint>
#include <random>

namespace rcgrid {

using Rng = std::mt19937_64;

/// Independent generator for replication `stream` of a run seeded with `seed`.
/// The state is a pure function of (seed, stream), so replications can be
/// executed in any order or on any thread.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace rcgrid
