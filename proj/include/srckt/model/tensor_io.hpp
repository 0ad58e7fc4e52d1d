#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "srckt/model/weights.hpp"

namespace srckt {

inline constexpr std::string_view kWeightsMagic = "SRCKT1";
inline constexpr std::string_view kPatchMagic = "SRPCH1";
inline constexpr std::uint32_t kTensorFileVersion = 1;

struct NamedTensor {
    std::string name;
    Mat value;
};

struct TensorFile {
    nlohmann::json header;
    std::vector<NamedTensor> tensors;
};

// Layout: 6-byte magic, u32 version, u32 header length, header JSON, then
// records [u16 name length, name, u8 dtype (0 = f32), u8 rank, u32 dims...,
// little-endian f32 payload], then CRC32 of everything before it.
std::vector<std::uint8_t> encode_tensor_file(std::string_view magic, const TensorFile& file);
// Throws BadMagic, VersionMismatch, ChecksumFail.
TensorFile decode_tensor_file(std::string_view magic, std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::string& path, std::string_view magic, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path, std::string_view magic);

void save_weights(const Weights& w, const std::string& path);
// Throws BadMagic, VersionMismatch, ChecksumFail, ShapeMismatch, IoError.
Weights load_weights(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
// CRC32 of the serialized weight file, used to tie artifacts to a model.
std::string weights_checksum(const Weights& w);

} // namespace srckt
