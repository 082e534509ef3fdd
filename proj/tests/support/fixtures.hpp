#ifndef STGAN_TESTS_FIXTURES_HPP
#define STGAN_TESTS_FIXTURES_HPP

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>

#include "stgan/core_types.hpp"

// Asserts that `expr` throws stgan::Error carrying `errc`.
#define EXPECT_THROW_CODE(expr, errc)                                                   \
  do {                                                                                  \
    try {                                                                               \
      (void)(expr);                                                                     \
      ADD_FAILURE() << #expr " did not throw";                                          \
    } catch (const ::stgan::Error& e_) {                                                \
      EXPECT_EQ(e_.code(), errc) << "got " << ::stgan::errc_name(e_.code()) << ": " << e_.what(); \
    }                                                                                   \
  } while (0)

namespace stgan::testing {

/// 16×16 frames whose pixels encode the frame index (t / T scaled into [-1, 1]).
inline VideoSequence indexed_sequence(int T, Domain d, int size = 16) {
  VideoSequence s;
  s.domain = d;
  for (int t = 0; t < T; ++t) {
    const float value = T > 1 ? -1.0f + 2.0f * t / (T - 1) : 0.0f;
    s.frames.push_back({std::vector<float>(static_cast<std::size_t>(size) * size, value), size, size, t, d});
  }
  return s;
}

inline VideoSequence random_sequence(int T, int size, Domain d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  VideoSequence s;
  s.domain = d;
  for (int t = 0; t < T; ++t) {
    Frame f{std::vector<float>(static_cast<std::size_t>(size) * size), size, size, t, d};
    for (auto& p : f.pixels) p = dist(rng);
    s.frames.push_back(std::move(f));
  }
  return s;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "stgan_test_";
    if (info) name += std::string(info->test_suite_name()) + "_" + info->name() + "_";
    name += std::to_string(::getpid()) + "_" + std::to_string(counter++);
    path_ = std::filesystem::temp_directory_path() / name;
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
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace stgan::testing

#endif  // STGAN_TESTS_FIXTURES_HPP
