#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "canopose/error.hpp"

namespace canopose {

/// Dense row-major (C-order) array with a runtime shape.
template <typename T>
class NdArray {
public:
    NdArray() = default;
    explicit NdArray(std::vector<std::size_t> shape, T fill = T{})
        : shape_(std::move(shape)), data_(count(shape_), fill) {}
    NdArray(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_)) {
            throw Error(ErrorKind::ShapeMismatch, "payload size does not match shape");
        }
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t ndim() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> flat() noexcept { return data_; }
    std::span<const T> flat() const noexcept { return data_; }
    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t i, std::size_t j) noexcept { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const noexcept { return data_[i * shape_[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Contiguous slab for a fixed leading index.
    std::span<T> slab(std::size_t i) noexcept {
        const std::size_t n = data_.size() / shape_[0];
        return {data_.data() + i * n, n};
    }
    std::span<const T> slab(std::size_t i) const noexcept {
        const std::size_t n = data_.size() / shape_[0];
        return {data_.data() + i * n, n};
    }

    bool operator==(const NdArray&) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

}  // namespace canopose
