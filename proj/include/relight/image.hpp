#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "relight/error.hpp"

namespace relight {

// Dense H x W x C buffer, interleaved (channels fastest).
template <class T>
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, T fill = T{})
      : height_(height),
        width_(width),
        channels_(channels),
        data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                  static_cast<std::size_t>(channels),
              fill) {
    if (height < 0 || width < 0 || channels < 0) throw ShapeError("negative image dimension");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  // Flat pixel index access.
  T& at(std::size_t pixel, int c = 0) {
    return data_[pixel * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)];
  }
  const T& at(std::size_t pixel, int c = 0) const {
    return data_[pixel * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool same_extent(int h, int w) const { return height_ == h && width_ == w; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

// Linear radiance, 3 channels, nonnegative.
using LinearImage = Image<double>;
// Single-channel real-valued map (luminance, masks, weights, scalar material channels).
using Map = Image<double>;
// Binary foreground mask, 1 = covered.
using Coverage = Image<unsigned char>;

inline void require_same_extent(int h0, int w0, int h1, int w1, const char* what) {
  if (h0 != h1 || w0 != w1)
    throw ShapeError(std::string(what) + ": extent mismatch " + std::to_string(h0) + "x" +
                     std::to_string(w0) + " vs " + std::to_string(h1) + "x" +
                     std::to_string(w1));
}

template <class A, class B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  require_same_extent(a.height(), a.width(), b.height(), b.width(), what);
  if (a.channels() != b.channels())
    throw ShapeError(std::string(what) + ": channel mismatch " + std::to_string(a.channels()) +
                     " vs " + std::to_string(b.channels()));
}

inline Coverage full_coverage(int h, int w) { return Coverage(h, w, 1, 1); }

}  // namespace relight
