#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace revision {

/// Row-major pixel grid.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  template <typename U>
  bool same_size(const Grid<U>& o) const { return width == o.width && height == o.height; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Grid&) const = default;
};

using GrayImage = Grid<std::uint8_t>;
using LabelGrid = Grid<std::uint8_t>;  // 0 = background
using BinaryMask = Grid<std::uint8_t>;  // 0 or 1

struct DepthMap {
  Grid<double> values;
  double scale = 1e-3;  // scene units per stored 16-bit step
};

void write_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

void write_pgm16(const Grid<std::uint16_t>& img, const std::filesystem::path& path);
Grid<std::uint16_t> read_pgm16(const std::filesystem::path& path);

/// 16-bit PGM plus `<path>.json` sidecar holding the scale.
void write_depth(const DepthMap& depth, const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path);

/// Confidence grid stored as bytes {2,1,0} for triple entries {a,b,c}, with the triple in a
/// `<path>.json` sidecar. Values outside the triple are rejected.
void write_confidence(const Grid<double>& confidence, const std::array<double, 3>& triple,
                      const std::filesystem::path& path);
Grid<double> read_confidence(const std::filesystem::path& path);

}  // namespace revision
