#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace srckt {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Hex digest of a byte string; used for config and model checksums in manifests.
std::string crc32_hex(std::span<const std::uint8_t> bytes);
std::string crc32_hex(const std::string& text);

} // namespace srckt
