// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "reneg/autodiff/tensor.hpp"

namespace reneg::ad {

/// Accumulation buffers handed to a backward rule, one per op input. An entry
/// is null when that input is a constant.
using GradBuffers = std::span<std::vector<double>* const>;

/// Adds the vector-Jacobian product of `grad_out` into each non-null buffer.
using BackwardFn = std::function<void(std::span<const double> grad_out, GradBuffers grad_in)>;

/// Gradient of a scalar root with respect to each registered leaf.
using GradientMap = std::map<NodeId, Tensor>;

/// Records operations for one reverse-mode pass.
///
/// Nodes are appended in execution order, which is a topological order of
/// the computation. backward() does not mutate the tape, so it can be replayed
/// (and replayed concurrently from different threads). A tape is not
/// thread-safe while recording.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a differentiable leaf holding a copy of `value`'s data.
    Tensor leaf(const Tensor& value);

    /// Appends an op node. Inputs without a node on this tape are treated as
    /// constants. Used by the op library; callers normally never need it.
    Tensor record(Tensor value, std::span<const Tensor* const> inputs, BackwardFn backward);

    /// d(root)/d(leaf) for every leaf registered on this tape. Leaves that the
    /// root does not depend on map to zeros. A root that is not on this tape
    /// (a constant) yields an empty map.
    GradientMap backward(const Tensor& root) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    bool is_leaf(NodeId id) const;

private:
    struct Node {
        std::vector<NodeId> inputs;  // -1 for constant inputs
        std::size_t numel = 0;
        Shape shape;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::vector<NodeId> leaves_;
};

/// Tape shared by a set of inputs, or null if none requires grad. Mixing
/// tensors from two different tapes is rejected.
Tape* common_tape(std::span<const Tensor* const> inputs);

}  // namespace reneg::ad
