#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

namespace test_util {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("segaa_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Frequency of the largest-magnitude bin of a direct DFT (DC excluded).
inline double dominant_hz(const std::vector<double>& x, int rate) {
  const std::size_t n = x.size();
  std::vector<double> c(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = std::cos(2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    s[i] = std::sin(2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  std::size_t best = 1;
  double best_mag = -1;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0, im = 0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      re += x[i] * c[idx];
      im -= x[i] * s[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return static_cast<double>(best) * rate / static_cast<double>(n);
}

}  // namespace test_util
