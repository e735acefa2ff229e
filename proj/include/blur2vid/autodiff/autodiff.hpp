#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "blur2vid/core/error.hpp"
#include "blur2vid/core/tensor.hpp"

namespace blur2vid::ad {

// Reverse-mode tape. Each forward op appends a node holding its value and
// a closure that routes the node's gradient to its parents. Graphs are
// per-forward-pass and per-thread; nothing here is shared mutable state.
template <typename S>
class Variable {
 public:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;  // allocated lazily on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    void accumulate(const Tensor<S>& g) {
      if (grad.empty())
        grad = g;
      else
        grad.array() += g.array();
    }
  };

  Variable() = default;

  static Variable leaf(Tensor<S> value, bool requires_grad) {
    Variable v;
    v.n_ = std::make_shared<Node>();
    v.n_->value = std::move(value);
    v.n_->requires_grad = requires_grad;
    return v;
  }

  static Variable constant(Tensor<S> value) { return leaf(std::move(value), false); }

  static Variable op(Tensor<S> value, std::vector<Variable> parents,
                     std::function<void(Node&)> backprop) {
    Variable v;
    v.n_ = std::make_shared<Node>();
    v.n_->value = std::move(value);
    for (const auto& p : parents) v.n_->requires_grad |= p.requires_grad();
    if (v.n_->requires_grad) {
      for (auto& p : parents) v.n_->parents.push_back(p.n_);
      v.n_->backprop = std::move(backprop);
    }
    return v;
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor<S>& value() const { return n_->value; }
  const Tensor<S>& grad() const { return n_->grad; }
  bool has_grad() const { return !n_->grad.empty(); }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  std::shared_ptr<Node> node() const { return n_; }

  S item() const {
    if (n_->value.size() != 1) throw validation_error("Variable::item on non-scalar");
    return n_->value.at(0);
  }

  // Backpropagates from this node. Scalar outputs are seeded with 1.
  void backward() const {
    if (n_->value.size() != 1)
      throw validation_error("Variable::backward without seed requires a scalar");
    backward(Tensor<S>::constant(n_->value.shape(), S(1)));
  }

  void backward(const Tensor<S>& seed) const {
    if (!n_->requires_grad) return;
    n_->accumulate(seed);
    std::vector<Node*> order = topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* nd = *it;
      if (nd->backprop && !nd->grad.empty()) nd->backprop(*nd);
    }
  }

 private:
  // Iterative post-order DFS; graphs can be deep enough that recursion
  // would overflow the stack.
  std::vector<Node*> topo_order() const {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(n_.get(), 0);
    visited.insert(n_.get());
    while (!stack.empty()) {
      auto& [nd, idx] = stack.back();
      if (idx < nd->parents.size()) {
        Node* p = nd->parents[idx++].get();
        if (p->requires_grad && !visited.count(p)) {
          visited.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(nd);
        stack.pop_back();
      }
    }
    return order;
  }

  std::shared_ptr<Node> n_;
};

template <typename S>
using Node = typename Variable<S>::Node;

// ---- elementwise / reduction ops ----

template <typename S>
Variable<S> add(const Variable<S>& a, const Variable<S>& b) {
  if (!a.value().same_shape(b.value())) throw validation_error("add: shape mismatch");
  Tensor<S> out = a.value();
  out.array() += b.value().array();
  auto pa = a.node();
  auto pb = b.node();
  return Variable<S>::op(std::move(out), {a, b}, [pa, pb](Node<S>& n) {
    if (pa->requires_grad) pa->accumulate(n.grad);
    if (pb->requires_grad) pb->accumulate(n.grad);
  });
}

template <typename S>
Variable<S> sub(const Variable<S>& a, const Variable<S>& b) {
  if (!a.value().same_shape(b.value())) throw validation_error("sub: shape mismatch");
  Tensor<S> out = a.value();
  out.array() -= b.value().array();
  auto pa = a.node();
  auto pb = b.node();
  return Variable<S>::op(std::move(out), {a, b}, [pa, pb](Node<S>& n) {
    if (pa->requires_grad) pa->accumulate(n.grad);
    if (pb->requires_grad) {
      Tensor<S> g = n.grad;
      g.array() = -g.array();
      pb->accumulate(g);
    }
  });
}

template <typename S>
Variable<S> scale(const Variable<S>& a, S factor) {
  Tensor<S> out = a.value();
  out.array() *= factor;
  auto pa = a.node();
  return Variable<S>::op(std::move(out), {a}, [pa, factor](Node<S>& n) {
    Tensor<S> g = n.grad;
    g.array() *= factor;
    pa->accumulate(g);
  });
}

template <typename S>
Variable<S> leaky_relu(const Variable<S>& a, S slope) {
  Tensor<S> out = a.value();
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out.at(i) < S(0)) out.at(i) *= slope;
  auto pa = a.node();
  const Tensor<S> input = a.value();
  return Variable<S>::op(std::move(out), {a}, [pa, input, slope](Node<S>& n) {
    Tensor<S> g = n.grad;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (input.at(i) < S(0)) g.at(i) *= slope;
    pa->accumulate(g);
  });
}

// Sum of all elements, as a {1} scalar.
template <typename S>
Variable<S> sum_all(const Variable<S>& a) {
  Tensor<S> out({1});
  out.at(0) = a.value().array().sum();
  auto pa = a.node();
  const Shape shape = a.value().shape();
  return Variable<S>::op(std::move(out), {a}, [pa, shape](Node<S>& n) {
    pa->accumulate(Tensor<S>::constant(shape, n.grad.at(0)));
  });
}

// mean(|a - target|) against a constant target, as a {1} scalar.
template <typename S>
Variable<S> mean_abs_diff(const Variable<S>& a, const Tensor<S>& target) {
  if (!a.value().same_shape(target)) throw validation_error("mean_abs_diff: shape mismatch");
  Tensor<S> diff = a.value();
  diff.array() -= target.array();
  Tensor<S> out({1});
  out.at(0) = diff.array().abs().mean();
  auto pa = a.node();
  return Variable<S>::op(std::move(out), {a}, [pa, diff](Node<S>& n) {
    const S g0 = n.grad.at(0) / static_cast<S>(diff.size());
    Tensor<S> g = diff;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      g.at(i) = g.at(i) > S(0) ? g0 : (g.at(i) < S(0) ? -g0 : S(0));
    pa->accumulate(g);
  });
}

// Squared L2 distance between two variables, as a {1} scalar.
template <typename S>
Variable<S> sum_sq_diff(const Variable<S>& a, const Variable<S>& b) {
  if (!a.value().same_shape(b.value())) throw validation_error("sum_sq_diff: shape mismatch");
  Tensor<S> diff = a.value();
  diff.array() -= b.value().array();
  Tensor<S> out({1});
  out.at(0) = diff.array().square().sum();
  auto pa = a.node();
  auto pb = b.node();
  return Variable<S>::op(std::move(out), {a, b}, [pa, pb, diff](Node<S>& n) {
    Tensor<S> g = diff;
    g.array() *= S(2) * n.grad.at(0);
    if (pa->requires_grad) pa->accumulate(g);
    if (pb->requires_grad) {
      g.array() = -g.array();
      pb->accumulate(g);
    }
  });
}

// Channel-wise (last dim) concatenation of (H, W, C_i) maps.
template <typename S>
Variable<S> concat_channels(const std::vector<Variable<S>>& parts) {
  if (parts.empty()) throw validation_error("concat_channels: empty list");
  const Eigen::Index h = parts[0].value().dim(0), w = parts[0].value().dim(1);
  Eigen::Index c_total = 0;
  for (const auto& p : parts) {
    if (p.value().rank() != 3 || p.value().dim(0) != h || p.value().dim(1) != w)
      throw validation_error("concat_channels: spatial dims differ");
    c_total += p.value().dim(2);
  }
  Tensor<S> out({h, w, c_total});
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const Eigen::Index c = p.value().dim(2);
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x)
        for (Eigen::Index ch = 0; ch < c; ++ch) out(y, x, off + ch) = p.value()(y, x, ch);
    off += c;
  }
  std::vector<std::shared_ptr<Node<S>>> nodes;
  std::vector<Eigen::Index> channels;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    channels.push_back(p.value().dim(2));
  }
  return Variable<S>::op(std::move(out), parts, [nodes, channels, offsets, h, w](Node<S>& n) {
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->requires_grad) continue;
      Tensor<S> g({h, w, channels[i]});
      for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
          for (Eigen::Index ch = 0; ch < channels[i]; ++ch)
            g(y, x, ch) = n.grad(y, x, offsets[i] + ch);
      nodes[i]->accumulate(g);
    }
  });
}

template <typename S>
Variable<S> add_scalars(const std::vector<Variable<S>>& terms) {
  if (terms.empty()) throw validation_error("add_scalars: empty list");
  Variable<S> acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace blur2vid::ad
