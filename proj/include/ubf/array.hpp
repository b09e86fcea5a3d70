#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ubf {

/// Dense row-major 2-D array. Axis 0 is axial (or samples), axis 1 lateral (or channels).
template <class T>
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Array2& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const Array2&, const Array2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Dense row-major 3-D array indexed (axial, lateral, channel); channel is contiguous.
template <class T>
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t nx, std::size_t ny, std::size_t nc, T fill = T{})
      : nx_(nx), ny_(ny), nc_(nc), data_(nx * ny * nc, fill) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nc() const noexcept { return nc_; }
  std::size_t pixels() const noexcept { return nx_ * ny_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t e) { return data_[(i * ny_ + j) * nc_ + e]; }
  const T& operator()(std::size_t i, std::size_t j, std::size_t e) const {
    return data_[(i * ny_ + j) * nc_ + e];
  }

  /// Channel vector of one pixel, by flat pixel index i*ny + j.
  std::span<T> pixel(std::size_t p) noexcept { return {data_.data() + p * nc_, nc_}; }
  std::span<const T> pixel(std::size_t p) const noexcept { return {data_.data() + p * nc_, nc_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Array3& o) const noexcept { return nx_ == o.nx_ && ny_ == o.ny_ && nc_ == o.nc_; }
  friend bool operator==(const Array3&, const Array3&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::size_t nc_ = 0;
  std::vector<T> data_;
};

}  // namespace ubf
