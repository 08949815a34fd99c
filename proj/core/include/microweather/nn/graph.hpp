#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "microweather/nn/matrix.hpp"
#include "microweather/nn/parameters.hpp"

namespace mw::nn {

class Graph;

struct Node {
  Matrix value;
  Matrix grad;  // allocated on first accumulation
  std::function<void(Node&)> backward;
  std::vector<std::shared_ptr<Node>> parents;  // kept alive for the backward rule
  bool requires_grad = false;

  Matrix& grad_buffer();
};

/// Handle to a value in a Graph.
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node> node, Graph* graph) : node_(std::move(node)), graph_(graph) {}

  [[nodiscard]] const Matrix& value() const noexcept { return node_->value; }
  [[nodiscard]] std::size_t rows() const noexcept { return node_->value.rows(); }
  [[nodiscard]] std::size_t cols() const noexcept { return node_->value.cols(); }
  [[nodiscard]] bool requires_grad() const noexcept { return node_->requires_grad; }
  /// Gradient after Graph::backward; empty if nothing flowed here.
  [[nodiscard]] const Matrix& grad() const noexcept { return node_->grad; }
  [[nodiscard]] Node* node() const noexcept { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node>& shared() const noexcept { return node_; }
  [[nodiscard]] Graph* graph() const noexcept { return graph_; }
  [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
  Graph* graph_ = nullptr;
};

/// Eager computation graph. When recording, every op appends a node carrying its backward rule;
/// Graph::backward then runs the tape in reverse. A non-recording graph only computes values.
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  [[nodiscard]] bool recording() const noexcept { return record_; }

  /// Value that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf that receives a gradient (for input Jacobians).
  Var input(Matrix value);
  /// Leaf bound to `store[name]`. Repeated calls within a graph return the same leaf.
  Var param(const ParameterStore& store, const std::string& name);

  /// Creates a node from `value` whose backward rule is `backward` if any parent needs a gradient.
  Var make(Matrix value, std::span<const Var> parents, std::function<void(Node&)> backward);
  Var make(Matrix value, std::initializer_list<Var> parents, std::function<void(Node&)> backward) {
    return make(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
  }

  /// Seeds d(loss)/d(loss) = seed and propagates. `loss` must be 1x1.
  void backward(const Var& loss, double seed = 1.0);

  /// Parameter gradients by name (zero-filled for params that received nothing).
  [[nodiscard]] Gradients parameter_gradients() const;

  /// Test hook for finite-difference checks: while set, relu appends one entry per input element
  /// (1 when positive), so callers can tell whether two evaluations share an activation pattern.
  void set_relu_probe(std::vector<std::uint8_t>* probe) noexcept { relu_probe_ = probe; }
  [[nodiscard]] std::vector<std::uint8_t>* relu_probe() const noexcept { return relu_probe_; }

 private:
  bool record_;
  std::vector<std::uint8_t>* relu_probe_ = nullptr;
  std::vector<std::shared_ptr<Node>> tape_;
  std::map<std::string, Var> params_;
};

// ---- ops ----------------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_bt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds a 1 x n row vector to every row of a.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
/// Elementwise product with a constant matrix of the same shape.
Var mul_const(const Var& a, const Matrix& m);
Var relu(const Var& a);
Var sin(const Var& a);
/// a * w + bias
Var linear(const Var& a, const Var& w, const Var& bias);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, std::size_t start, std::size_t width);
Var gather_rows(const Var& a, std::vector<std::size_t> indices);

/// Row-wise softmax over entries with mask != 0; masked entries are exactly 0. Scores are
/// max-shifted over the allowed entries. Throws std::domain_error on a row with nothing allowed.
/// `mask` is row-major with the same shape as `scores` and must outlive the graph's backward pass.
Var masked_softmax(const Var& scores, std::shared_ptr<const std::vector<unsigned char>> mask);

/// Row-wise layer normalization with learned gain and bias (both 1 x n).
Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);

/// sum(weight * (pred - target)^2) / sum(weight), as a 1 x 1 value. Throws std::domain_error if
/// the weights sum to zero.
Var weighted_mse(const Var& pred, const Matrix& target, const Matrix& weight);

/// Sum of all entries, 1 x 1.
Var sum_all(const Var& a);

// ---- chip-encoder ops. Images are stored one per row: row (loc * bands + b) holds band b of
// location loc, flattened row-major.

/// Learned per-band transposed convolution with stride = kernel = factor (non-overlapping
/// blocks): out[factor*i + a][factor*j + c] = x[i][j] * k[b][a*factor + c] + bias[b].
Var upsample_blocks(const Var& x, const Var& kernel, const Var& bias, std::size_t bands, std::size_t side,
                    std::size_t factor);
/// Per-band 3x3 convolution with zero padding; kernel is bands x 9, bias 1 x bands.
Var depthwise_conv3x3(const Var& x, const Var& kernel, const Var& bias, std::size_t bands, std::size_t side);
/// Mixes bands at each pixel: out[loc*C + c] = sum_b w[c][b] * x[loc*B + b] + bias[c].
/// weight is C x B, bias 1 x C.
Var pointwise_conv(const Var& x, const Var& weight, const Var& bias, std::size_t bands);
/// Spatial mean of each image; returns locations x channels.
Var spatial_mean(const Var& x, std::size_t channels);
/// Value of pixel (side/2, side/2) of each image; returns locations x bands.
Var center_pixels(const Var& x, std::size_t bands, std::size_t side);

}  // namespace mw::nn
