#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "coevo/coevo.hpp"

namespace coevo_test {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(COEVO_FIXTURE_DIR) / name;
}

inline std::string fixture(const std::string& name) { return coevo::read_file(fixture_path(name)); }

inline const coevo::Grammar& g1() {
  static const coevo::Grammar g = coevo::parse_grammar(fixture("domainmodel_v1.xtext"));
  return g;
}

inline const coevo::Grammar& g2() {
  static const coevo::Grammar g = coevo::parse_grammar(fixture("domainmodel_v2.xtext"));
  return g;
}

inline std::string listing1() { return fixture("listing1.dm"); }
inline std::string listing2() { return fixture("listing2.dm"); }
inline std::string expected_migrated() { return fixture("expected_migrated.dm"); }

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("coevo-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

 private:
  std::filesystem::path path_;
};

}  // namespace coevo_test
