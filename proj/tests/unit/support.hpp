#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unistd.h>

#include "varexp/fixtures.hpp"

namespace testsupport {

/// Removed with its contents on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("varexp-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Scripted repositories, built once per test binary.
inline const std::filesystem::path& scripted_repo(const std::string& name) {
  static TempDir dir("fixtures");
  static std::mutex mu;
  static std::map<std::string, std::filesystem::path> built;
  std::lock_guard lock(mu);
  if (auto it = built.find(name); it != built.end()) return it->second;
  for (const auto& repo : varexp::fixtures::scripted_corpus()) {
    if (repo.name != name) continue;
    auto path = dir / name;
    varexp::fixtures::materialize(repo, path);
    return built.emplace(name, path).first->second;
  }
  throw std::runtime_error("unknown fixture " + name);
}

}  // namespace testsupport
