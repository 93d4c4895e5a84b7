#pragma once

#include "treebert/rng.hpp"

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace treebert::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;  // subject to weight decay

  Eigen::Index size() const noexcept { return value.size(); }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Parameters in registration order. Addresses are stable.
class ParameterStore {
 public:
  Parameter& add(std::string name, Matrix init, bool decay = true);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::deque<Parameter>& all() noexcept { return params_; }
  const std::deque<Parameter>& all() const noexcept { return params_; }
  void zero_grad();
  Eigen::Index scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

/// Records one forward computation; backward() replays it in reverse and
/// accumulates into Parameter::grad. Nodes are only ever appended, so
/// creation order is a topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  /// Adds the 1 x n row `bias` to every row of `a`.
  Var add_row(Var a, Var bias);
  Var scale(Var a, double s);
  /// wa * a + wb * b
  Var combine(Var a, double wa, Var b, double wb);
  Var gelu(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var dropout(Var a, double p, Rng& rng);
  Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
  Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
  /// Row r of the result is the sum of table rows listed in bags[r] (zero for an empty bag).
  Var embedding_bag(Var table, const std::vector<std::vector<int>>& bags);

  struct AttentionMask {
    std::vector<bool> key_valid;  // empty: every key valid
    bool causal = false;
  };
  /// Multi-head scaled dot-product attention; q is n x d, k and v are m x d.
  Var attention(Var q, Var k, Var v, int heads, const AttentionMask& mask);
  /// Attention probabilities of the most recent attention() call, one n x m matrix per head.
  const std::vector<Matrix>& last_attention() const noexcept { return last_attention_; }

  /// Mean negative log-softmax probability of targets[r] in row r; rows whose
  /// target equals `ignore` are excluded from sum and count.
  Var cross_entropy(Var logits, std::span<const int> targets, int ignore = -1);
  /// Binary cross-entropy of sigmoid(z) against label y, for a 1 x 1 logit.
  Var bce_with_logit(Var z, double y);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every parameter.
  void backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix value, bool requires_grad);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  Matrix& grad(Var v);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  std::deque<Node> nodes_;
  std::vector<Matrix> last_attention_;
};

}  // namespace treebert::ad
