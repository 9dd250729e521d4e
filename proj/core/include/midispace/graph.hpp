#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace midispace::nn {

/// Named tensor with externally owned value and gradient storage. Matrices
/// are row-major; vectors have cols == 1.
struct Param {
  std::string name;
  int rows = 0;
  int cols = 1;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string name_, int rows_, int cols_)
      : name(std::move(name_)),
        rows(rows_),
        cols(cols_),
        value(static_cast<std::size_t>(rows_) * cols_, 0.0),
        grad(static_cast<std::size_t>(rows_) * cols_, 0.0) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Reverse-mode tape over vector-valued nodes. Values are computed eagerly
/// at op creation; backward() runs the adjoint sweep and accumulates into
/// each touched Param's grad. Node ids and value pointers are valid until
/// clear(). Param pointers must stay stable for the tape's lifetime.
class Tape {
 public:
  using NodeId = int;

  void clear();

  int size(NodeId id) const;
  const double* value(NodeId id) const;
  std::vector<double> value_vec(NodeId id) const;

  NodeId constant(const std::vector<double>& v);
  NodeId leaf(Param& p);                      // whole tensor, flattened
  NodeId col(Param& w, int j);                // column j of a matrix param
  NodeId matvec(Param& w, NodeId x);          // w (r x c) * x (c)
  NodeId affine(Param& w, NodeId x, Param& b);  // w * x + b

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);                       // elementwise
  NodeId cmul(NodeId a, const std::vector<double>& k);  // elementwise constant
  NodeId scale(NodeId a, double k);
  NodeId shift(NodeId a, double k);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, int offset, int len);
  NodeId sigmoid(NodeId a);
  NodeId tanh_(NodeId a);
  NodeId softplus(NodeId a);
  NodeId log_(NodeId a);
  NodeId relu(NodeId a);
  NodeId sum(NodeId a);  // length-1

  /// Fused LSTM cell. `gates` holds the 4H pre-activations in i, f, g, o
  /// order; `c_prev` the H-dim cell state. Output is [h; c] of length 2H.
  NodeId lstm_cell(NodeId gates, NodeId c_prev);

  /// Fused softmax + cross-entropy against one target index; length-1 output
  /// in nats. The softmax distribution is kept and readable via probs().
  NodeId softmax_xent(NodeId logits, int target);
  const double* probs(NodeId xent_node) const;

  /// Adjoint sweep from a scalar node, seeding its gradient with `seed`.
  void backward(NodeId root, double seed = 1.0);

 private:
  enum class Op : std::uint8_t {
    Constant, Leaf, Col, MatVec, Affine, Add, Sub, Mul, CMul, Scale, Shift,
    Concat, Slice, Sigmoid, Tanh, Softplus, Log, Relu, Sum, LstmCell,
    SoftmaxXent,
  };
  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    int n = 0;            // output length
    int i0 = 0;           // col index / slice offset / xent target
    double k = 0.0;
    Param* w = nullptr;
    Param* bias = nullptr;
    std::size_t val = 0;  // offsets into buf_
    std::size_t grd = 0;
    std::size_t aux = 0;
    int aux_n = 0;
  };

  NodeId push(Node node);
  double* val_ptr(NodeId id) { return buf_.data() + nodes_[id].val; }
  double* grd_ptr(NodeId id) { return buf_.data() + nodes_[id].grd; }

  std::vector<Node> nodes_;
  std::vector<double> buf_;
};

using NodeId = Tape::NodeId;

}  // namespace midispace::nn
