#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bytegan/corpus/image.hpp"

namespace bytegan::corpus {

struct ZipEntry {
  std::string name;
  std::vector<uint8_t> data;
};

bool looks_like_zip(const std::vector<uint8_t>& bytes);

// Reads every entry of a ZIP container (stored and deflate methods).
std::vector<ZipEntry> read_zip(const std::vector<uint8_t>& bytes, const std::string& origin);

// Entry selection per source kind: DexCode concatenates classes.dex,
// classes2.dex, ... in natural numeric order; Manifest takes the raw
// AndroidManifest.xml; Raw passes the whole container through untouched.
std::vector<ByteStream> extract_streams(const std::vector<uint8_t>& archive_bytes,
                                        EntryKind selector, const std::string& source_id);

}  // namespace bytegan::corpus
