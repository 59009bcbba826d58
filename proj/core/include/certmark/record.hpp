#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "certmark/tensor.hpp"

namespace certmark {

// Binary tensor record:
//   "CMRK" | u32 version | u64 entry count
//   per entry: u32 name length | name | u8 dtype (0 = f32) | u32 ndim | u64 dims...
//   u64 metadata length | metadata bytes (UTF-8 JSON)
//   per entry, in manifest order: u64 payload bytes | little-endian f32 values
// The manifest is fully validated before any payload is read.
struct Record {
  ParameterSet<float> tensors;
  std::string metadata;
};

inline constexpr std::uint32_t kRecordVersion = 1;

std::vector<std::uint8_t> encode_record(const Record& record);
Record decode_record(const std::vector<std::uint8_t>& bytes);

void save_record(const std::filesystem::path& path, const Record& record);
Record load_record(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace certmark
