// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "dvdlens/error.hpp"

namespace dvdlens {

/// Dense row-major tensor with a fixed rank. The last axis is contiguous, so
/// `row()` hands out a span over it without copying.
template <typename T, std::size_t Rank>
class Tensor {
    static_assert(Rank >= 1);

public:
    using value_type = T;
    using Shape = std::array<std::size_t, Rank>;

    Tensor() { shape_.fill(0); }

    explicit Tensor(const Shape& shape, T fill = T{})
        : shape_(shape), data_(element_count(shape), fill) {}

    Tensor(const Shape& shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != element_count(shape_)) {
            fail(ErrorCode::DimMismatch, "tensor payload size does not match its shape");
        }
    }

    static std::size_t element_count(const Shape& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    template <typename... I>
        requires(sizeof...(I) == Rank)
    T& operator()(I... idx) {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    template <typename... I>
        requires(sizeof...(I) == Rank)
    const T& operator()(I... idx) const {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    /// Contiguous slice along the last axis; takes Rank-1 leading indices.
    template <typename... I>
        requires(sizeof...(I) == Rank - 1)
    std::span<const T> row(I... idx) const {
        const std::size_t n = shape_[Rank - 1];
        return std::span<const T>(data_).subspan(row_offset({static_cast<std::size_t>(idx)...}), n);
    }

    template <typename... I>
        requires(sizeof...(I) == Rank - 1)
    std::span<T> row(I... idx) {
        const std::size_t n = shape_[Rank - 1];
        return std::span<T>(data_).subspan(row_offset({static_cast<std::size_t>(idx)...}), n);
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    std::size_t offset(const std::array<std::size_t, Rank>& idx) const {
        std::size_t off = 0;
        for (std::size_t a = 0; a < Rank; ++a) {
            off = off * shape_[a] + idx[a];
        }
        return off;
    }

    std::size_t row_offset(const std::array<std::size_t, Rank - 1>& idx) const {
        std::size_t off = 0;
        for (std::size_t a = 0; a + 1 < Rank; ++a) {
            off = off * shape_[a] + idx[a];
        }
        return off * shape_[Rank - 1];
    }

    Shape shape_;
    std::vector<T> data_;
};

}  // namespace dvdlens
