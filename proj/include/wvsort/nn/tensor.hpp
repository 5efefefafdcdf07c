#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wvsort::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Graph node. `backward` reads this node's grad and accumulates into the
/// parents' grads.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad();
};

/// Dense row-major double tensor with an optional gradient slot. Copies
/// share the underlying node, so a Tensor behaves like a handle.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }

    std::span<double> data() { return node_->value; }
    std::span<const double> data() const { return node_->value; }
    /// Gradient buffer, allocated as zeros on first access.
    std::span<double> grad() { return node_->ensure_grad(); }
    bool has_grad() const { return !node_->grad.empty(); }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad();
    double item() const;

    /// Reverse sweep from this scalar. Leaf gradients accumulate.
    void backward();

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& handle() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;

    friend Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> parents,
                              std::function<void(Node&)> backward);
};

/// Creates an op output. The node records parents and the backward closure
/// only when some parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> parents,
                   std::function<void(Node&)> backward);

}  // namespace wvsort::nn
