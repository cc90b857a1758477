#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tkmx {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& digest);
std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

// Stable 64-bit hashes. These values are persisted implicitly (split
// membership, oversampling draws), so they must not depend on the platform.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t seeded_hash(std::uint64_t seed, std::string_view bytes);

// Maps a hash to [0, 1) using its top 53 bits.
double unit_interval(std::uint64_t h);

std::string base64_encode(std::string_view bytes);
// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);

} // namespace tkmx
