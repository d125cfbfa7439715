#pragma once

#include <functional>
#include <vector>

#include "armrl/tensor.hpp"

namespace armrl::nn {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records one forward pass. backward() may run once; a second call throws.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is added into *sink by backward().
  Var leaf(const Tensor& value, Tensor* sink);

  /// Seeds d(output) with `seed` (ones when omitted) and propagates.
  void backward(Var output);
  void backward(Var output, const Tensor& seed);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  /// Gradient accumulated for a node after backward(); zeros if none reached it.
  Tensor gradient(Var v) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by operation implementations.
  Var record(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backward);
  Tensor& grad(int id);
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Tensor* sink = nullptr;
    std::function<void(Tape&, int)> backward;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise, same-shape operations.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var relu(Var a);
Var tanh(Var a);
/// Gradient passes where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);

// Reductions.
Var sum(Var a);
Var mean(Var a);
/// [B, K] -> [B].
Var row_sum(Var a);

// Shape.
Var reshape(Var a, Shape shape);
/// [B, ...] -> [B, prod(...)].
Var flatten(Var a);

// Layers.
/// x [B, in], w [out, in], b [out] -> [B, out].
Var dense(Var x, Var w, Var b);
/// x [B, C, H, W], w [O, C, k, k], b [O]; no padding.
Var conv2d(Var x, Var w, Var b, int stride);

// Classification heads.
/// Row-wise log-softmax over [B, K].
Var log_softmax(Var logits);
Var softmax(Var logits);
/// out[i] = a[i, index[i]] for a [B, K].
Var gather(Var a, const std::vector<int>& index);
/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

}  // namespace armrl::nn
