#pragma once

// Small encoding helpers shared by the checkpoint/profile file writers:
// base64 for binary float payloads and locale-independent number formatting.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace actprof::util {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string format_double(double v);
std::string format_float(float v);

/// Serialize floats as little-endian 32-bit payloads regardless of host order.
std::vector<std::uint8_t> floats_to_le_bytes(std::span<const float> values);
std::vector<float> le_bytes_to_floats(std::span<const std::uint8_t> bytes);

} // namespace actprof::util
