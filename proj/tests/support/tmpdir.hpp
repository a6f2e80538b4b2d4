#pragma once

#include <filesystem>
#include <string>

namespace bytegan::testing {

// Fresh directory under the system temp root, removed on destruction.
class TmpDir {
 public:
  explicit TmpDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("bytegan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(next_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  static inline int next_ = 0;
  std::filesystem::path path_;
};

}  // namespace bytegan::testing
