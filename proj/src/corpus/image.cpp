#include "bytegan/corpus/image.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

namespace bytegan::corpus {

const char* entry_kind_name(EntryKind k) {
  switch (k) {
    case EntryKind::DexCode: return "dex";
    case EntryKind::Manifest: return "manifest";
    case EntryKind::Raw: return "raw";
  }
  return "?";
}

namespace {

uint8_t round_half_up_byte(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<uint8_t>(r);
}

}  // namespace

GrayImage bytes_to_image(const ByteStream& stream, int width, Resample method) {
  if (stream.bytes.empty()) fail(Errc::EmptyStream, "cannot image an empty stream");
  if (width < 1) fail(Errc::ConfigError, "width must be positive");
  const int64_t len = static_cast<int64_t>(stream.bytes.size());
  const int64_t target = static_cast<int64_t>(width) * width;

  GrayImage img;
  img.width = width;
  img.height = width;
  img.pixels.resize(static_cast<size_t>(target));

  if (len == 1) {
    for (auto& p : img.pixels) p = stream.bytes[0];
    return img;
  }
  if (target == 1) {
    img.pixels[0] = stream.bytes[0];
    return img;
  }

  const double scale = static_cast<double>(len - 1) / static_cast<double>(target - 1);
  for (int64_t j = 0; j < target; ++j) {
    double pos = static_cast<double>(j) * scale;
    if (method == Resample::Nearest) {
      int64_t idx = static_cast<int64_t>(std::floor(pos + 0.5));
      if (idx > len - 1) idx = len - 1;
      img.pixels[static_cast<size_t>(j)] = stream.bytes[static_cast<size_t>(idx)];
      continue;
    }
    int64_t i0 = static_cast<int64_t>(pos);
    if (i0 > len - 2) i0 = len - 2;
    double frac = pos - static_cast<double>(i0);
    double a = stream.bytes[static_cast<size_t>(i0)];
    double b = stream.bytes[static_cast<size_t>(i0 + 1)];
    img.pixels[static_cast<size_t>(j)] = round_half_up_byte(a * (1.0 - frac) + b * frac);
  }
  return img;
}

std::vector<uint8_t> encode_pgm(const GrayImage& img) {
  char header[64];
  int n = snprintf(header, sizeof header, "P5\n%d %d\n255\n", img.width, img.height);
  std::vector<uint8_t> out(header, header + n);
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage decode_pgm(const std::vector<uint8_t>& bytes, const std::string& origin) {
  size_t pos = 0;
  auto token = [&]() -> std::string {
    // whitespace-separated, '#' starts a comment
    while (pos < bytes.size()) {
      char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < bytes.size() && !isspace(bytes[pos])) ++pos;
    if (start == pos) fail(Errc::FormatViolation, origin + ": truncated PGM header");
    return std::string(bytes.begin() + start, bytes.begin() + pos);
  };

  if (token() != "P5") fail(Errc::FormatViolation, origin + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    fail(Errc::FormatViolation, origin + ": malformed PGM header");
  }
  if (w < 1 || h < 1) fail(Errc::FormatViolation, origin + ": bad PGM dimensions");
  if (maxval != 255) fail(Errc::FormatViolation, origin + ": PGM maxval must be 255");
  // exactly one whitespace byte separates header and raster
  if (pos >= bytes.size() || !isspace(bytes[pos])) {
    fail(Errc::FormatViolation, origin + ": missing raster separator");
  }
  ++pos;
  size_t need = static_cast<size_t>(w) * static_cast<size_t>(h);
  if (bytes.size() - pos != need) {
    fail(Errc::FormatViolation, origin + ": raster size mismatch");
  }
  GrayImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(bytes.begin() + static_cast<int64_t>(pos), bytes.end());
  return img;
}

void write_image(const GrayImage& img, const std::filesystem::path& path) {
  auto data = encode_pgm(img);
  std::unique_ptr<FILE, decltype(&fclose)> f(fopen(path.c_str(), "wb"), fclose);
  if (!f || fwrite(data.data(), 1, data.size(), f.get()) != data.size()) {
    fail(Errc::IoFailure, "cannot write image " + path.string());
  }
}

GrayImage read_image(const std::filesystem::path& path) {
  std::unique_ptr<FILE, decltype(&fclose)> f(fopen(path.c_str(), "rb"), fclose);
  if (!f) fail(Errc::IoFailure, "cannot open image " + path.string());
  std::vector<uint8_t> bytes;
  uint8_t buf[1 << 16];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, f.get())) > 0) bytes.insert(bytes.end(), buf, buf + n);
  if (ferror(f.get())) fail(Errc::IoFailure, "read error on " + path.string());
  return decode_pgm(bytes, path.string());
}

}  // namespace bytegan::corpus
