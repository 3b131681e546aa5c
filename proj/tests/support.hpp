#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bldg/error.hpp"

namespace bldg::test {

// Scratch directory removed when the fixture goes out of scope.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("bldg-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

template <class F>
::testing::AssertionResult throws_code(F&& f, Errc expected) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == expected) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "threw " << errc_name(e.code()) << ": " << e.what();
  } catch (const std::exception& e) {
    return ::testing::AssertionFailure() << "threw non-bldg exception: " << e.what();
  }
  return ::testing::AssertionFailure() << "did not throw " << errc_name(expected);
}

}  // namespace bldg::test

#define EXPECT_ERRC(stmt, code) EXPECT_TRUE(::bldg::test::throws_code([&] { (void)(stmt); }, ::bldg::Errc::code))
