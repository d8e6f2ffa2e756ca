// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/autodiff/tape.hpp"

#include <algorithm>

#include "reneg/error.hpp"

namespace reneg::ad {

Tensor Tape::leaf(const Tensor& value) {
    Node node;
    node.numel = value.numel();
    node.shape = value.shape();
    nodes_.push_back(std::move(node));

    Tensor out = value.detach();
    out.tape_ = this;
    out.node_ = static_cast<NodeId>(nodes_.size() - 1);
    leaves_.push_back(out.node_);
    return out;
}

Tensor Tape::record(Tensor value, std::span<const Tensor* const> inputs, BackwardFn backward) {
    Node node;
    node.numel = value.numel();
    node.shape = value.shape();
    node.backward = std::move(backward);
    node.inputs.reserve(inputs.size());
    for (const Tensor* in : inputs) {
        if (in->tape_ == this) {
            node.inputs.push_back(in->node_);
        } else if (in->tape_ == nullptr) {
            node.inputs.push_back(-1);
        } else {
            throw InvalidArgument("op mixes tensors recorded on different tapes");
        }
    }
    nodes_.push_back(std::move(node));

    value.tape_ = this;
    value.node_ = static_cast<NodeId>(nodes_.size() - 1);
    return value;
}

bool Tape::is_leaf(NodeId id) const {
    return std::find(leaves_.begin(), leaves_.end(), id) != leaves_.end();
}

GradientMap Tape::backward(const Tensor& root) const {
    if (root.numel() != 1) {
        throw InvalidArgument("backward needs a scalar root, got shape " + shape_string(root.shape()));
    }
    GradientMap result;
    if (root.tape_ == nullptr) return result;
    if (root.tape_ != this) throw InvalidArgument("backward root belongs to a different tape");

    const auto root_id = static_cast<std::size_t>(root.node_);
    std::vector<std::vector<double>> grads(root_id + 1);
    grads[root_id].assign(1, 1.0);

    std::vector<std::vector<double>*> buffers;
    for (std::size_t i = root_id + 1; i-- > 0;) {
        const Node& node = nodes_[i];
        if (grads[i].empty() || !node.backward) continue;
        buffers.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            const NodeId in = node.inputs[k];
            if (in < 0) continue;
            auto& g = grads[static_cast<std::size_t>(in)];
            if (g.empty()) g.assign(nodes_[static_cast<std::size_t>(in)].numel, 0.0);
            buffers[k] = &g;
        }
        node.backward(grads[i], buffers);
        if (i != root_id) {
            grads[i].clear();
            grads[i].shrink_to_fit();
        }
    }

    for (NodeId id : leaves_) {
        const auto idx = static_cast<std::size_t>(id);
        const Node& node = nodes_[idx];
        if (idx < grads.size() && !grads[idx].empty()) {
            result.emplace(id, Tensor(node.shape, std::move(grads[idx])));
        } else {
            result.emplace(id, Tensor::zeros(node.shape.empty() ? Shape{} : node.shape));
        }
    }
    return result;
}

Tape* common_tape(std::span<const Tensor* const> inputs) {
    Tape* tape = nullptr;
    for (const Tensor* in : inputs) {
        Tape* t = in->tape();
        if (t == nullptr) continue;
        if (tape != nullptr && tape != t) throw InvalidArgument("op mixes tensors recorded on different tapes");
        tape = t;
    }
    return tape;
}

}  // namespace reneg::ad
