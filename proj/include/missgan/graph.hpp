#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "missgan/tensor.hpp"

namespace missgan {

// Reverse-mode tape. A VarT is a handle to a node holding the forward
// value; each op records a closure that routes the node's gradient to its
// parents. Leaves with requires_grad accumulate into .grad until
// zero_grad.
template <typename T>
struct NodeT {
    TensorT<T> value;
    TensorT<T> grad; // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backprop; // null for leaves

    void accum_grad(const TensorT<T>& g) {
        if (grad.empty())
            grad = TensorT<T>::zeros(value.shape());
        grad.add_(g);
    }
};

template <typename T>
class VarT {
public:
    VarT() = default;

    static VarT leaf(TensorT<T> v, bool requires_grad) {
        VarT var;
        var.node_ = std::make_shared<NodeT<T>>();
        var.node_->value = std::move(v);
        var.node_->requires_grad = requires_grad;
        return var;
    }

    static VarT constant(TensorT<T> v) { return leaf(std::move(v), false); }

    bool defined() const { return node_ != nullptr; }
    const TensorT<T>& value() const { return node_->value; }
    TensorT<T>& value_mut() { return node_->value; }
    const TensorT<T>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    void zero_grad() {
        if (node_) node_->grad = TensorT<T>();
    }

    // New leaf sharing this node's value, cut from the graph.
    VarT detach() const { return constant(node_->value); }

    std::shared_ptr<NodeT<T>> node() const { return node_; }

private:
    std::shared_ptr<NodeT<T>> node_;
};

template <typename T>
VarT<T> make_op(TensorT<T> value, std::vector<VarT<T>> parents,
                std::function<void(NodeT<T>&)> backprop) {
    bool needs = false;
    for (const auto& p : parents)
        if (p.requires_grad()) needs = true;
    VarT<T> out = VarT<T>::leaf(std::move(value), needs);
    if (needs) {
        auto n = out.node();
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backprop = std::move(backprop);
    }
    return out;
}

// Backpropagate from a scalar root. Multiple calls on the same graph keep
// accumulating; callers zero leaf grads between passes.
template <typename T>
void backward(const VarT<T>& root) {
    if (!root.defined() || root.value().numel() != 1)
        fail(ErrorCategory::Internal, "backward: root must be a defined scalar");
    if (!root.requires_grad()) return;

    // iterative topological order over the reachable grad-requiring subgraph
    std::vector<NodeT<T>*> order;
    std::unordered_set<NodeT<T>*> seen;
    std::vector<std::pair<NodeT<T>*, size_t>> stack;
    stack.push_back({root.node().get(), 0});
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            NodeT<T>* p = n->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    root.node()->accum_grad(TensorT<T>::scalar(T(1)));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT<T>* n = *it;
        if (n->backprop && !n->grad.empty())
            n->backprop(*n);
    }
    // non-leaf grads are transient; release them so a second backward over
    // the same graph starts clean
    for (NodeT<T>* n : order)
        if (n->backprop) n->grad = TensorT<T>();
}

using Var = VarT<float>;
using VarD = VarT<double>;

} // namespace missgan
