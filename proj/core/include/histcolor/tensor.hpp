// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "histcolor/error.hpp"

namespace histcolor {

using Shape = std::vector<std::int64_t>;

/// 64-byte aligned allocation. Vectorized kernels peel differently depending
/// on buffer alignment, so a fixed alignment keeps results reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array. Four-dimensional tensors are laid out as
/// [N, C, H, W]; frames travel along N.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}
  template <typename Alloc>
  Tensor(Shape shape, const std::vector<T, Alloc>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_size();
  }
  Tensor(Shape shape, AlignedVector<T>&& data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_size();
  }
  Tensor(Shape shape, std::vector<T>&& data) : Tensor(std::move(shape), static_cast<const std::vector<T>&>(data)) {}

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  AlignedVector<T>& storage() noexcept { return data_; }
  const AlignedVector<T>& storage() const noexcept { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T& operator()(std::int64_t i, std::int64_t j) { return data_[idx(i, j)]; }
  const T& operator()(std::int64_t i, std::int64_t j) const { return data_[idx(i, j)]; }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[idx(i, j, k)]; }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[idx(i, j, k)];
  }
  T& operator()(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[idx(n, c, h, w)];
  }
  const T& operator()(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[idx(n, c, h, w)];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor reshaped(Shape shape) const& {
    Tensor out(*this);
    out.reshape(std::move(shape));
    return out;
  }
  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }
  void reshape(Shape shape) {
    require(shape_numel(shape) == numel(), ErrorCode::kContract,
            "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
  }

  template <typename U>
  Tensor<U> cast() const {
    AlignedVector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  void check_size() const {
    require(static_cast<std::int64_t>(data_.size()) == shape_numel(shape_), ErrorCode::kContract,
            "tensor data size does not match shape " + shape_string(shape_));
  }
  std::size_t idx(std::int64_t i, std::int64_t j) const {
    return static_cast<std::size_t>(i * shape_[1] + j);
  }
  std::size_t idx(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k);
  }
  std::size_t idx(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w);
  }

  Shape shape_;
  AlignedVector<T> data_;
};

/// Copy of slice `index` along the leading axis ([N, ...] -> [...]).
template <typename T>
Tensor<T> take_leading(const Tensor<T>& t, std::int64_t index) {
  require(t.rank() >= 1 && index >= 0 && index < t.dim(0), ErrorCode::kContract,
          "leading index out of range");
  Shape inner(t.shape().begin() + 1, t.shape().end());
  const std::int64_t n = shape_numel(inner);
  AlignedVector<T> data(t.data() + index * n, t.data() + (index + 1) * n);
  return Tensor<T>(std::move(inner), std::move(data));
}

/// Stacks equally shaped tensors along a new leading axis.
template <typename T>
Tensor<T> stack_leading(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), ErrorCode::kContract, "cannot stack zero tensors");
  Shape shape = parts.front().shape();
  shape.insert(shape.begin(), static_cast<std::int64_t>(parts.size()));
  Tensor<T> out(shape);
  const std::int64_t n = parts.front().numel();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require(parts[i].shape() == parts.front().shape(), ErrorCode::kContract,
            "stack: shape mismatch");
    std::copy(parts[i].data(), parts[i].data() + n, out.data() + static_cast<std::int64_t>(i) * n);
  }
  return out;
}

/// Writes `part` into slice `index` of the leading axis.
template <typename T>
void put_leading(Tensor<T>& t, std::int64_t index, const Tensor<T>& part) {
  const std::int64_t n = part.numel();
  require(t.rank() >= 1 && index >= 0 && index < t.dim(0) && n * t.dim(0) == t.numel(),
          ErrorCode::kContract, "put_leading: shape mismatch");
  std::copy(part.data(), part.data() + n, t.data() + index * n);
}

}  // namespace histcolor
