#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bytegan {

using Sha256 = std::array<uint8_t, 32>;

Sha256 sha256(const void* data, size_t len);
Sha256 sha256_file(const std::filesystem::path& path);
std::string hex(const Sha256& d);

inline Sha256 sha256(const std::vector<uint8_t>& v) { return sha256(v.data(), v.size()); }
inline Sha256 sha256(const std::string& s) { return sha256(s.data(), s.size()); }

}  // namespace bytegan
