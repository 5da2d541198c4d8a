#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssd/errors.hpp"

namespace ssd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape);

/// Dense row-major multi-axis array.
///
/// Axis labels are optional single characters (T, S, N, P, H, G, Q...) used by
/// `contract` to report which axis failed a shape check. They carry no
/// semantics beyond that.
template <std::floating_point T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_size(shape_) != data_.size()) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    /// Rank-2 tensor from nested rows, e.g. `Tensor::matrix({{1, 2}, {3, 4}})`.
    static BasicTensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<T> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged rows in matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return BasicTensor({r, c}, std::move(data));
    }

    static BasicTensor vector(std::initializer_list<T> values) {
        return BasicTensor({values.size()}, std::vector<T>(values));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    const std::string& axes() const noexcept { return axes_; }
    BasicTensor& set_axes(std::string axes) {
        if (!axes.empty() && axes.size() != shape_.size()) {
            throw DimensionError("axis labels '" + axes + "' do not match rank " +
                                 std::to_string(shape_.size()));
        }
        axes_ = std::move(axes);
        return *this;
    }

    template <std::integral... I>
    T& operator()(I... idx) noexcept {
        return data_[offset(idx...)];
    }
    template <std::integral... I>
    const T& operator()(I... idx) const noexcept {
        return data_[offset(idx...)];
    }

    /// Same data, new shape with an equal element count.
    BasicTensor reshaped(Shape shape) const {
        return BasicTensor(std::move(shape), data_);
    }

    template <std::floating_point U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        BasicTensor<U> t(shape_, std::move(out));
        t.set_axes(axes_);
        return t;
    }

    bool operator==(const BasicTensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    template <std::integral... I>
    std::size_t offset(I... idx) const noexcept {
        assert(sizeof...(I) == shape_.size());
        std::size_t off = 0;
        std::size_t axis = 0;
        ((off = off * shape_[axis++] + static_cast<std::size_t>(idx)), ...);
        return off;
    }

    Shape shape_;
    std::vector<T> data_;
    std::string axes_;
};

using Tensor = BasicTensor<double>;
using Tensor32 = BasicTensor<float>;

/// max |a - b| over all elements; shapes must match.
template <std::floating_point T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    }
    return m;
}

/// Norm-relative error: max |actual - expected| / max |expected|.
/// Falls back to the absolute error when `expected` is identically zero.
template <std::floating_point T>
double max_rel_err(const BasicTensor<T>& actual, const BasicTensor<T>& expected) {
    const double diff = max_abs_diff(actual, expected);
    double scale = 0.0;
    for (T v : expected.data()) scale = std::max(scale, std::abs(static_cast<double>(v)));
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace ssd
