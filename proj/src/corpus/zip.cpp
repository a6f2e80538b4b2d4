#include "bytegan/corpus/zip.hpp"

#include <zlib.h>

#include <algorithm>
#include <optional>

namespace bytegan::corpus {

namespace {

uint16_t u16(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint16_t>(b[off] | (b[off + 1] << 8));
}

uint32_t u32(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

std::vector<uint8_t> inflate_raw(const uint8_t* src, size_t src_len, size_t out_len,
                                 const std::string& origin) {
  std::vector<uint8_t> out(out_len);
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) fail(Errc::MalformedArchive, origin + ": inflate init");
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = static_cast<uInt>(src_len);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out_len);
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != out_len) {
    fail(Errc::MalformedArchive, origin + ": deflate stream corrupt");
  }
  return out;
}

}  // namespace

bool looks_like_zip(const std::vector<uint8_t>& bytes) {
  return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
         (bytes[2] == 3 || bytes[2] == 5) && (bytes[3] == 4 || bytes[3] == 6);
}

std::vector<ZipEntry> read_zip(const std::vector<uint8_t>& bytes, const std::string& origin) {
  // end-of-central-directory record, scanned backwards over a possible comment
  constexpr size_t kEocdMin = 22;
  if (bytes.size() < kEocdMin) fail(Errc::MalformedArchive, origin + ": too small for a ZIP");
  std::optional<size_t> eocd;
  size_t scan_limit = bytes.size() >= kEocdMin + 65535 ? bytes.size() - kEocdMin - 65535 : 0;
  for (size_t i = bytes.size() - kEocdMin + 1; i-- > scan_limit;) {
    if (bytes[i] == 'P' && bytes[i + 1] == 'K' && bytes[i + 2] == 5 && bytes[i + 3] == 6) {
      eocd = i;
      break;
    }
  }
  if (!eocd) fail(Errc::MalformedArchive, origin + ": no end-of-central-directory");

  uint16_t count = u16(bytes, *eocd + 10);
  uint32_t cd_size = u32(bytes, *eocd + 12);
  uint32_t cd_off = u32(bytes, *eocd + 16);
  if (cd_off == 0xFFFFFFFFu || count == 0xFFFFu) {
    fail(Errc::MalformedArchive, origin + ": zip64 archives not supported");
  }
  if (static_cast<size_t>(cd_off) + cd_size > bytes.size()) {
    fail(Errc::MalformedArchive, origin + ": central directory out of range");
  }

  std::vector<ZipEntry> entries;
  size_t p = cd_off;
  for (uint16_t i = 0; i < count; ++i) {
    if (p + 46 > bytes.size() || u32(bytes, p) != 0x02014b50u) {
      fail(Errc::MalformedArchive, origin + ": bad central directory entry");
    }
    uint16_t method = u16(bytes, p + 10);
    uint32_t crc = u32(bytes, p + 16);
    uint32_t csize = u32(bytes, p + 20);
    uint32_t usize = u32(bytes, p + 24);
    uint16_t name_len = u16(bytes, p + 28);
    uint16_t extra_len = u16(bytes, p + 30);
    uint16_t comment_len = u16(bytes, p + 32);
    uint32_t lho = u32(bytes, p + 42);
    if (p + 46 + name_len > bytes.size()) fail(Errc::MalformedArchive, origin + ": bad name");
    std::string name(bytes.begin() + static_cast<int64_t>(p) + 46,
                     bytes.begin() + static_cast<int64_t>(p) + 46 + name_len);
    p += 46 + static_cast<size_t>(name_len) + extra_len + comment_len;

    // local header: name/extra lengths may differ from the central copy
    if (static_cast<size_t>(lho) + 30 > bytes.size() || u32(bytes, lho) != 0x04034b50u) {
      fail(Errc::MalformedArchive, origin + ": bad local header for " + name);
    }
    uint16_t lname = u16(bytes, lho + 26);
    uint16_t lextra = u16(bytes, lho + 28);
    size_t data_off = static_cast<size_t>(lho) + 30 + lname + lextra;
    if (data_off + csize > bytes.size()) {
      fail(Errc::MalformedArchive, origin + ": entry data out of range for " + name);
    }

    ZipEntry e;
    e.name = std::move(name);
    if (method == 0) {
      if (csize != usize) fail(Errc::MalformedArchive, origin + ": stored size mismatch");
      e.data.assign(bytes.begin() + static_cast<int64_t>(data_off),
                    bytes.begin() + static_cast<int64_t>(data_off + csize));
    } else if (method == 8) {
      e.data = inflate_raw(bytes.data() + data_off, csize, usize, origin + "/" + e.name);
    } else {
      fail(Errc::MalformedArchive, origin + ": unsupported compression method for " + e.name);
    }
    uint32_t got = static_cast<uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), e.data.data(), static_cast<uInt>(e.data.size())));
    if (got != crc) fail(Errc::MalformedArchive, origin + ": CRC mismatch for " + e.name);
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

// classes.dex -> 1, classes2.dex -> 2, ... ; nullopt if not a root dex entry
std::optional<int> dex_index(const std::string& name) {
  constexpr std::string_view prefix = "classes";
  constexpr std::string_view suffix = ".dex";
  if (name.size() < prefix.size() + suffix.size()) return std::nullopt;
  if (name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) return std::nullopt;
  std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
  if (digits.empty()) return 1;
  int idx = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    idx = idx * 10 + (c - '0');
    if (idx > 1'000'000) return std::nullopt;
  }
  return idx >= 2 ? std::optional<int>(idx) : std::nullopt;
}

}  // namespace

std::vector<ByteStream> extract_streams(const std::vector<uint8_t>& archive_bytes,
                                        EntryKind selector, const std::string& source_id) {
  if (selector == EntryKind::Raw) {
    if (archive_bytes.empty()) fail(Errc::EmptyStream, source_id + ": empty input");
    ByteStream s;
    s.bytes = archive_bytes;
    s.source_id = source_id;
    s.entry_kind = EntryKind::Raw;
    return {std::move(s)};
  }

  auto entries = read_zip(archive_bytes, source_id);

  if (selector == EntryKind::Manifest) {
    for (auto& e : entries) {
      if (e.name == "AndroidManifest.xml") {
        if (e.data.empty()) fail(Errc::EmptyStream, source_id + ": empty AndroidManifest.xml");
        ByteStream s;
        s.bytes = std::move(e.data);
        s.source_id = source_id + "!AndroidManifest.xml";
        s.entry_kind = EntryKind::Manifest;
        return {std::move(s)};
      }
    }
    fail(Errc::NoMatchingEntry, source_id + ": no AndroidManifest.xml");
  }

  // DexCode: all classes*.dex concatenated in natural numeric order
  std::vector<std::pair<int, const ZipEntry*>> dex;
  for (const auto& e : entries) {
    if (auto idx = dex_index(e.name)) dex.emplace_back(*idx, &e);
  }
  if (dex.empty()) fail(Errc::NoMatchingEntry, source_id + ": no classes*.dex entries");
  std::sort(dex.begin(), dex.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  ByteStream s;
  s.entry_kind = EntryKind::DexCode;
  std::string names;
  for (const auto& [idx, e] : dex) {
    s.bytes.insert(s.bytes.end(), e->data.begin(), e->data.end());
    names += (names.empty() ? "" : "+") + e->name;
  }
  s.source_id = source_id + "!" + names;
  if (s.bytes.empty()) fail(Errc::EmptyStream, source_id + ": dex entries are empty");
  return {std::move(s)};
}

}  // namespace bytegan::corpus
