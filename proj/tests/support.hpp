#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include "binbeam/audio/buffer.hpp"

namespace testing_support {

inline binbeam::audio::AudioBuffer random_buffer(std::size_t ch, std::size_t n, unsigned seed,
                                                 double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  binbeam::audio::AudioBuffer b(ch, n);
  for (double& v : b.data()) v = d(rng);
  return b;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("binbeam_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
