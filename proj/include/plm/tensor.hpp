// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense float64 tensor with reverse-mode gradient tracking.
//
// A Tensor is a shared handle: copies alias the same storage and graph
// node. Use clone() for an independent copy. Storage is row-major.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace plm {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape &shape);
std::string shape_str(const Shape &shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = true;
    std::vector<std::shared_ptr<Node>> inputs;
    // Adds this node's grad into the grads of `inputs`.
    std::function<void(Node &)> backward;

    std::vector<double> &ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

} // namespace detail

class Tensor {
  public:
    Tensor();
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(const Shape &shape, bool requires_grad = false);
    static Tensor ones(const Shape &shape, bool requires_grad = false);
    static Tensor full(const Shape &shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    const Shape &shape() const { return node_->shape; }
    std::size_t dim() const { return node_->shape.size(); }
    std::size_t size(int axis) const;
    std::size_t numel() const { return node_->value.size(); }

    std::span<const double> data() const { return node_->value; }
    // Direct write access. Only meaningful on leaves (parameters, inputs).
    std::span<double> mutable_data() { return node_->value; }
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool flag);
    bool is_leaf() const { return node_->leaf; }

    bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad();

    // Reverse pass from a scalar. Leaf grads accumulate across calls until
    // zero_grad(); interior grads are recomputed on every call.
    void backward() const;

    Tensor detach() const;
    Tensor clone() const;

    bool same_storage(const Tensor &other) const { return node_ == other.node_; }

    const detail::NodePtr &node() const { return node_; }
    static Tensor from_node(detail::NodePtr node);

  private:
    detail::NodePtr node_;
};

// While alive, ops on this thread do not record a graph.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard &) = delete;
    NoGradGuard &operator=(const NoGradGuard &) = delete;

  private:
    bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds a result node; wires `backward` only when some input tracks grad
// and recording is enabled.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> inputs,
                   std::function<void(Node &)> backward);

} // namespace detail

} // namespace plm
