#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bytegan/error.hpp"

namespace bytegan::corpus {

enum class EntryKind { DexCode, Manifest, Raw };

const char* entry_kind_name(EntryKind k);

struct ByteStream {
  std::vector<uint8_t> bytes;
  std::string source_id;
  EntryKind entry_kind = EntryKind::Raw;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major, width*height

  bool operator==(const GrayImage&) const = default;
};

enum class Resample { Linear, Nearest };

// The 1xL byte vector is resampled to 1xW^2 and reshaped row-major. Target
// position j maps to source position j*(L-1)/(T-1); interpolated values are
// rounded half-up. A length-1 stream broadcasts its single value.
GrayImage bytes_to_image(const ByteStream& stream, int width,
                         Resample method = Resample::Linear);

// Binary PGM ("P5", maxval 255), bit-exact round trip.
void write_image(const GrayImage& img, const std::filesystem::path& path);
GrayImage read_image(const std::filesystem::path& path);

std::vector<uint8_t> encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::vector<uint8_t>& bytes, const std::string& origin);

}  // namespace bytegan::corpus
