#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stablemv/core.hpp"

namespace stablemv {

/// Row-major block of n points in R^dim.
class Points {
 public:
  Points() = default;
  Points(std::size_t n, std::size_t dim) : dim_(dim), data_(n * dim, 0.0) {
    require(dim >= 1, "point dimension must be >= 1");
  }
  Points(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    require(dim >= 1, "point dimension must be >= 1");
    require(data_.size() % dim == 0, "flat point data is not a multiple of the dimension");
  }

  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return data_.empty(); }

  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  const std::vector<double>& flat() const { return data_; }
  std::vector<double>& flat() { return data_; }

  /// Column j as a vector (e.g. the first coordinate for 1-D statistics).
  std::vector<double> coordinate(std::size_t j) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * dim_ + j];
    return out;
  }

  friend bool operator==(const Points&, const Points&) = default;

 private:
  std::size_t dim_ = 1;
  std::vector<double> data_;
};

}  // namespace stablemv
