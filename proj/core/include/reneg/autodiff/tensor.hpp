// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reneg::ad {

class Tape;

using Shape = std::vector<std::size_t>;
using NodeId = std::int64_t;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Storage is shared and immutable, so copies are cheap. A tensor that was
/// produced on a Tape (or registered as a leaf) carries a handle to its node
/// and reports requires_grad() == true; every other tensor is a constant.
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t numel() const noexcept { return data_->size(); }
    std::size_t dim(std::size_t axis) const;
    /// Rows/cols of a rank-2 tensor; a rank-1 tensor is treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return *data_; }
    const std::vector<double>& values() const noexcept { return *data_; }
    double operator[](std::size_t i) const { return (*data_)[i]; }
    double at(std::size_t r, std::size_t c) const { return (*data_)[r * cols() + c]; }
    /// Value of a single-element tensor.
    double item() const;

    bool requires_grad() const noexcept { return tape_ != nullptr; }
    std::optional<NodeId> node_id() const;
    Tape* tape() const noexcept { return tape_; }

    /// Same values, no tape attachment.
    Tensor detach() const;
    Tensor reshaped(Shape shape) const;

    bool all_finite() const;

private:
    friend class Tape;

    Shape shape_;
    std::shared_ptr<const std::vector<double>> data_;
    Tape* tape_ = nullptr;
    NodeId node_ = -1;
};

/// Bitwise equality of shape and values.
bool bit_equal(const Tensor& a, const Tensor& b);

/// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace reneg::ad
