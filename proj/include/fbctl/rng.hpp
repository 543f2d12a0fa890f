#pragma once

#include <cstdint>
#include <random>

namespace fbctl {

using Rng = std::mt19937_64;

/**
 * Derives an independent generator from a master seed and a stream label.
 *
 * Every consumer of randomness (channel trajectory, initial beamformer,
 * transition estimation, codebook training, ...) owns a distinct stream so
 * that changing how much one consumer draws never shifts another.
 */
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

// Stream labels used across the library.
namespace streams {
inline constexpr std::uint64_t channel = 1;
inline constexpr std::uint64_t beamformer = 2;
inline constexpr std::uint64_t g_transitions = 11;
inline constexpr std::uint64_t z_idle = 12;
inline constexpr std::uint64_t z_feedback = 13;
inline constexpr std::uint64_t z_quantized = 14;
inline constexpr std::uint64_t codebook = 21;
inline constexpr std::uint64_t eps_stats = 22;
} // namespace streams

} // namespace fbctl
