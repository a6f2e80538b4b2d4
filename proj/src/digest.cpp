#include "bytegan/digest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include "bytegan/error.hpp"

namespace bytegan {

Sha256 sha256(const void* data, size_t len) {
  Sha256 out{};
  unsigned int out_len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data, len) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &out_len) != 1 || out_len != out.size()) {
    fail(Errc::IoFailure, "sha256 digest failed");
  }
  return out;
}

Sha256 sha256_file(const std::filesystem::path& path) {
  std::unique_ptr<FILE, decltype(&fclose)> f(fopen(path.c_str(), "rb"), fclose);
  if (!f) fail(Errc::IoFailure, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    fail(Errc::IoFailure, "sha256 init failed");
  }
  char buf[1 << 16];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, f.get())) > 0) {
    if (EVP_DigestUpdate(ctx.get(), buf, n) != 1) fail(Errc::IoFailure, "sha256 update failed");
  }
  if (ferror(f.get())) fail(Errc::IoFailure, "read error on " + path.string());
  Sha256 out{};
  unsigned int out_len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.data(), &out_len) != 1 || out_len != out.size()) {
    fail(Errc::IoFailure, "sha256 final failed");
  }
  return out;
}

std::string hex(const Sha256& d) {
  static const char* k = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : d) {
    s.push_back(k[b >> 4]);
    s.push_back(k[b & 0xf]);
  }
  return s;
}

}  // namespace bytegan
