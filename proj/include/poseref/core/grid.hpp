#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace poseref {

/// Dense row-major 2D grid. Pixel (row, col) with row 0 at the top.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, const T& fill = T{})
      : height_(height), width_(width),
        data_(static_cast<size_t>(height) * static_cast<size_t>(width), fill) {
    if (height < 0 || width < 0) throw std::invalid_argument("Grid: negative extent");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int row, int col) {
    assert(contains(row, col));
    return data_[static_cast<size_t>(row) * width_ + col];
  }
  const T& at(int row, int col) const {
    assert(contains(row, col));
    return data_[static_cast<size_t>(row) * width_ + col];
  }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  bool contains(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }
  bool same_shape(int h, int w) const { return height_ == h && width_ == w; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

}  // namespace poseref
