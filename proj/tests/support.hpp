#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "sp/csv.hpp"

namespace test_support {

namespace fs = std::filesystem;

// Fresh, empty directory under the build tree's scratch area.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(SP_TEST_SCRATCH) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline fs::path fixture(const std::string& name) { return fs::path(SP_TEST_FIXTURES) / name; }

inline void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const fs::path& path) { return sp::csv::read_text(path); }

}  // namespace test_support
