#pragma once

#include <zlib.h>

#include <cstdint>
#include <string>
#include <vector>

namespace bytegan::testing {

// Minimal deterministic ZIP writer (stored entries only) for building test
// archives in memory.
class ZipWriter {
 public:
  void add(const std::string& name, const std::vector<uint8_t>& data) {
    Entry e;
    e.name = name;
    e.data = data;
    e.crc = static_cast<uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
    entries_.push_back(std::move(e));
  }

  std::vector<uint8_t> finish() const {
    std::vector<uint8_t> out;
    std::vector<uint32_t> offsets;
    for (const auto& e : entries_) {
      offsets.push_back(static_cast<uint32_t>(out.size()));
      put32(out, 0x04034b50);
      put16(out, 20);  // version needed
      put16(out, 0);   // flags
      put16(out, 0);   // method: stored
      put16(out, 0);   // mod time
      put16(out, 0);   // mod date
      put32(out, e.crc);
      put32(out, static_cast<uint32_t>(e.data.size()));
      put32(out, static_cast<uint32_t>(e.data.size()));
      put16(out, static_cast<uint16_t>(e.name.size()));
      put16(out, 0);  // extra len
      out.insert(out.end(), e.name.begin(), e.name.end());
      out.insert(out.end(), e.data.begin(), e.data.end());
    }
    uint32_t cd_start = static_cast<uint32_t>(out.size());
    for (size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      put32(out, 0x02014b50);
      put16(out, 20);
      put16(out, 20);
      put16(out, 0);
      put16(out, 0);
      put16(out, 0);
      put16(out, 0);
      put32(out, e.crc);
      put32(out, static_cast<uint32_t>(e.data.size()));
      put32(out, static_cast<uint32_t>(e.data.size()));
      put16(out, static_cast<uint16_t>(e.name.size()));
      put16(out, 0);
      put16(out, 0);
      put16(out, 0);
      put16(out, 0);
      put32(out, 0);
      put32(out, offsets[i]);
      out.insert(out.end(), e.name.begin(), e.name.end());
    }
    uint32_t cd_size = static_cast<uint32_t>(out.size()) - cd_start;
    put32(out, 0x06054b50);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<uint16_t>(entries_.size()));
    put16(out, static_cast<uint16_t>(entries_.size()));
    put32(out, cd_size);
    put32(out, cd_start);
    put16(out, 0);  // comment len
    return out;
  }

 private:
  struct Entry {
    std::string name;
    std::vector<uint8_t> data;
    uint32_t crc = 0;
  };
  std::vector<Entry> entries_;

  static void put16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xff));
    b.push_back(static_cast<uint8_t>(v >> 8));
  }
  static void put32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
  }
};

}  // namespace bytegan::testing
