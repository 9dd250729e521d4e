#include "midispace/graph.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace midispace::nn {

namespace {

using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

void Tape::clear() {
  nodes_.clear();
  buf_.clear();
}

int Tape::size(NodeId id) const { return nodes_[id].n; }

const double* Tape::value(NodeId id) const { return buf_.data() + nodes_[id].val; }

std::vector<double> Tape::value_vec(NodeId id) const {
  const Node& nd = nodes_[id];
  return std::vector<double>(buf_.begin() + nd.val, buf_.begin() + nd.val + nd.n);
}

Tape::NodeId Tape::push(Node node) {
  node.val = buf_.size();
  node.grd = node.val + node.n;
  node.aux = node.grd + node.n;
  buf_.resize(node.aux + node.aux_n, 0.0);
  nodes_.push_back(node);
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::constant(const std::vector<double>& v) {
  Node nd;
  nd.op = Op::Constant;
  nd.n = static_cast<int>(v.size());
  const NodeId id = push(nd);
  std::copy(v.begin(), v.end(), val_ptr(id));
  return id;
}

Tape::NodeId Tape::leaf(Param& p) {
  Node nd;
  nd.op = Op::Leaf;
  nd.n = static_cast<int>(p.size());
  nd.w = &p;
  const NodeId id = push(nd);
  std::copy(p.value.begin(), p.value.end(), val_ptr(id));
  return id;
}

Tape::NodeId Tape::col(Param& w, int j) {
  assert(j >= 0 && j < w.cols);
  Node nd;
  nd.op = Op::Col;
  nd.n = w.rows;
  nd.i0 = j;
  nd.w = &w;
  const NodeId id = push(nd);
  double* out = val_ptr(id);
  for (int i = 0; i < w.rows; ++i) out[i] = w.value[static_cast<std::size_t>(i) * w.cols + j];
  return id;
}

Tape::NodeId Tape::matvec(Param& w, NodeId x) {
  assert(nodes_[x].n == w.cols);
  Node nd;
  nd.op = Op::MatVec;
  nd.a = x;
  nd.n = w.rows;
  nd.w = &w;
  const NodeId id = push(nd);
  ConstMatMap wm(w.value.data(), w.rows, w.cols);
  ConstVecMap xm(value(x), w.cols);
  VecMap(val_ptr(id), w.rows) = wm * xm;
  return id;
}

Tape::NodeId Tape::affine(Param& w, NodeId x, Param& b) {
  assert(nodes_[x].n == w.cols && static_cast<int>(b.size()) == w.rows);
  Node nd;
  nd.op = Op::Affine;
  nd.a = x;
  nd.n = w.rows;
  nd.w = &w;
  nd.bias = &b;
  const NodeId id = push(nd);
  ConstMatMap wm(w.value.data(), w.rows, w.cols);
  ConstVecMap xm(value(x), w.cols);
  ConstVecMap bm(b.value.data(), w.rows);
  VecMap(val_ptr(id), w.rows) = wm * xm + bm;
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  assert(nodes_[a].n == nodes_[b].n);
  Node nd;
  nd.op = Op::Add;
  nd.a = a;
  nd.b = b;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n) + ConstVecMap(value(b), nd.n);
  return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  assert(nodes_[a].n == nodes_[b].n);
  Node nd;
  nd.op = Op::Sub;
  nd.a = a;
  nd.b = b;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n) - ConstVecMap(value(b), nd.n);
  return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  assert(nodes_[a].n == nodes_[b].n);
  Node nd;
  nd.op = Op::Mul;
  nd.a = a;
  nd.b = b;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n).cwiseProduct(ConstVecMap(value(b), nd.n));
  return id;
}

Tape::NodeId Tape::cmul(NodeId a, const std::vector<double>& k) {
  assert(nodes_[a].n == static_cast<int>(k.size()));
  Node nd;
  nd.op = Op::CMul;
  nd.a = a;
  nd.n = nodes_[a].n;
  nd.aux_n = nd.n;
  const NodeId id = push(nd);
  std::copy(k.begin(), k.end(), buf_.data() + nodes_[id].aux);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n)
                                  .cwiseProduct(ConstVecMap(buf_.data() + nodes_[id].aux, nd.n));
  return id;
}

Tape::NodeId Tape::scale(NodeId a, double k) {
  Node nd;
  nd.op = Op::Scale;
  nd.a = a;
  nd.n = nodes_[a].n;
  nd.k = k;
  const NodeId id = push(nd);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n) * k;
  return id;
}

Tape::NodeId Tape::shift(NodeId a, double k) {
  Node nd;
  nd.op = Op::Shift;
  nd.a = a;
  nd.n = nodes_[a].n;
  nd.k = k;
  const NodeId id = push(nd);
  VecMap(val_ptr(id), nd.n) = ConstVecMap(value(a), nd.n).array() + k;
  return id;
}

Tape::NodeId Tape::concat(NodeId a, NodeId b) {
  Node nd;
  nd.op = Op::Concat;
  nd.a = a;
  nd.b = b;
  nd.n = nodes_[a].n + nodes_[b].n;
  const NodeId id = push(nd);
  double* out = val_ptr(id);
  std::copy(value(a), value(a) + nodes_[a].n, out);
  std::copy(value(b), value(b) + nodes_[b].n, out + nodes_[a].n);
  return id;
}

Tape::NodeId Tape::slice(NodeId a, int offset, int len) {
  assert(offset >= 0 && offset + len <= nodes_[a].n);
  Node nd;
  nd.op = Op::Slice;
  nd.a = a;
  nd.n = len;
  nd.i0 = offset;
  const NodeId id = push(nd);
  std::copy(value(a) + offset, value(a) + offset + len, val_ptr(id));
  return id;
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Node nd;
  nd.op = Op::Sigmoid;
  nd.a = a;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  const double* in = value(a);
  double* out = val_ptr(id);
  for (int i = 0; i < nd.n; ++i) out[i] = stable_sigmoid(in[i]);
  return id;
}

Tape::NodeId Tape::tanh_(NodeId a) {
  Node nd;
  nd.op = Op::Tanh;
  nd.a = a;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  const double* in = value(a);
  double* out = val_ptr(id);
  for (int i = 0; i < nd.n; ++i) out[i] = std::tanh(in[i]);
  return id;
}

Tape::NodeId Tape::softplus(NodeId a) {
  Node nd;
  nd.op = Op::Softplus;
  nd.a = a;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  const double* in = value(a);
  double* out = val_ptr(id);
  for (int i = 0; i < nd.n; ++i) out[i] = stable_softplus(in[i]);
  return id;
}

Tape::NodeId Tape::log_(NodeId a) {
  Node nd;
  nd.op = Op::Log;
  nd.a = a;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  const double* in = value(a);
  double* out = val_ptr(id);
  for (int i = 0; i < nd.n; ++i) out[i] = std::log(in[i]);
  return id;
}

Tape::NodeId Tape::relu(NodeId a) {
  Node nd;
  nd.op = Op::Relu;
  nd.a = a;
  nd.n = nodes_[a].n;
  const NodeId id = push(nd);
  const double* in = value(a);
  double* out = val_ptr(id);
  for (int i = 0; i < nd.n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return id;
}

Tape::NodeId Tape::sum(NodeId a) {
  Node nd;
  nd.op = Op::Sum;
  nd.a = a;
  nd.n = 1;
  const NodeId id = push(nd);
  *val_ptr(id) = ConstVecMap(value(a), nodes_[a].n).sum();
  return id;
}

Tape::NodeId Tape::lstm_cell(NodeId gates, NodeId c_prev) {
  const int h = nodes_[c_prev].n;
  assert(nodes_[gates].n == 4 * h);
  Node nd;
  nd.op = Op::LstmCell;
  nd.a = gates;
  nd.b = c_prev;
  nd.n = 2 * h;
  nd.aux_n = 5 * h;  // i, f, g, o activations and tanh(c)
  const NodeId id = push(nd);
  const double* gp = value(gates);
  const double* cp = value(c_prev);
  double* out = val_ptr(id);
  double* aux = buf_.data() + nodes_[id].aux;
  for (int j = 0; j < h; ++j) {
    const double i_g = stable_sigmoid(gp[j]);
    const double f_g = stable_sigmoid(gp[h + j]);
    const double g_g = std::tanh(gp[2 * h + j]);
    const double o_g = stable_sigmoid(gp[3 * h + j]);
    const double c = f_g * cp[j] + i_g * g_g;
    const double tc = std::tanh(c);
    aux[j] = i_g;
    aux[h + j] = f_g;
    aux[2 * h + j] = g_g;
    aux[3 * h + j] = o_g;
    aux[4 * h + j] = tc;
    out[j] = o_g * tc;
    out[h + j] = c;
  }
  return id;
}

Tape::NodeId Tape::softmax_xent(NodeId logits, int target) {
  const int v = nodes_[logits].n;
  assert(target >= 0 && target < v);
  Node nd;
  nd.op = Op::SoftmaxXent;
  nd.a = logits;
  nd.n = 1;
  nd.i0 = target;
  nd.aux_n = v;
  const NodeId id = push(nd);
  const double* lp = value(logits);
  double* probs = buf_.data() + nodes_[id].aux;
  double m = lp[0];
  for (int i = 1; i < v; ++i) m = std::max(m, lp[i]);
  double z = 0.0;
  for (int i = 0; i < v; ++i) {
    probs[i] = std::exp(lp[i] - m);
    z += probs[i];
  }
  for (int i = 0; i < v; ++i) probs[i] /= z;
  *val_ptr(id) = std::log(z) - (lp[target] - m);
  return id;
}

const double* Tape::probs(NodeId xent_node) const {
  assert(nodes_[xent_node].op == Op::SoftmaxXent);
  return buf_.data() + nodes_[xent_node].aux;
}

void Tape::backward(NodeId root, double seed) {
  assert(nodes_[root].n == 1);
  *grd_ptr(root) = seed;

  for (NodeId id = root; id >= 0; --id) {
    const Node& nd = nodes_[id];
    const double* g = grd_ptr(id);
    switch (nd.op) {
      case Op::Constant:
        break;
      case Op::Leaf:
        for (int i = 0; i < nd.n; ++i) nd.w->grad[i] += g[i];
        break;
      case Op::Col:
        for (int i = 0; i < nd.w->rows; ++i)
          nd.w->grad[static_cast<std::size_t>(i) * nd.w->cols + nd.i0] += g[i];
        break;
      case Op::MatVec: {
        ConstMatMap wm(nd.w->value.data(), nd.w->rows, nd.w->cols);
        ConstVecMap gm(g, nd.w->rows);
        VecMap(grd_ptr(nd.a), nd.w->cols).noalias() += wm.transpose() * gm;
        MatMap wg(nd.w->grad.data(), nd.w->rows, nd.w->cols);
        wg.noalias() += gm * ConstVecMap(value(nd.a), nd.w->cols).transpose();
        break;
      }
      case Op::Affine: {
        ConstMatMap wm(nd.w->value.data(), nd.w->rows, nd.w->cols);
        ConstVecMap gm(g, nd.w->rows);
        VecMap(grd_ptr(nd.a), nd.w->cols).noalias() += wm.transpose() * gm;
        MatMap wg(nd.w->grad.data(), nd.w->rows, nd.w->cols);
        wg.noalias() += gm * ConstVecMap(value(nd.a), nd.w->cols).transpose();
        VecMap(nd.bias->grad.data(), nd.w->rows) += gm;
        break;
      }
      case Op::Add:
        VecMap(grd_ptr(nd.a), nd.n) += ConstVecMap(g, nd.n);
        VecMap(grd_ptr(nd.b), nd.n) += ConstVecMap(g, nd.n);
        break;
      case Op::Sub:
        VecMap(grd_ptr(nd.a), nd.n) += ConstVecMap(g, nd.n);
        VecMap(grd_ptr(nd.b), nd.n) -= ConstVecMap(g, nd.n);
        break;
      case Op::Mul:
        VecMap(grd_ptr(nd.a), nd.n) +=
            ConstVecMap(g, nd.n).cwiseProduct(ConstVecMap(value(nd.b), nd.n));
        VecMap(grd_ptr(nd.b), nd.n) +=
            ConstVecMap(g, nd.n).cwiseProduct(ConstVecMap(value(nd.a), nd.n));
        break;
      case Op::CMul:
        VecMap(grd_ptr(nd.a), nd.n) +=
            ConstVecMap(g, nd.n).cwiseProduct(ConstVecMap(buf_.data() + nd.aux, nd.n));
        break;
      case Op::Scale:
        VecMap(grd_ptr(nd.a), nd.n) += ConstVecMap(g, nd.n) * nd.k;
        break;
      case Op::Shift:
        VecMap(grd_ptr(nd.a), nd.n) += ConstVecMap(g, nd.n);
        break;
      case Op::Concat: {
        const int na = nodes_[nd.a].n;
        VecMap(grd_ptr(nd.a), na) += ConstVecMap(g, na);
        VecMap(grd_ptr(nd.b), nd.n - na) += ConstVecMap(g + na, nd.n - na);
        break;
      }
      case Op::Slice:
        VecMap(grd_ptr(nd.a) + nd.i0, nd.n) += ConstVecMap(g, nd.n);
        break;
      case Op::Sigmoid: {
        const double* y = value(id);
        double* ga = grd_ptr(nd.a);
        for (int i = 0; i < nd.n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::Tanh: {
        const double* y = value(id);
        double* ga = grd_ptr(nd.a);
        for (int i = 0; i < nd.n; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::Softplus: {
        const double* x = value(nd.a);
        double* ga = grd_ptr(nd.a);
        for (int i = 0; i < nd.n; ++i) ga[i] += g[i] * stable_sigmoid(x[i]);
        break;
      }
      case Op::Log: {
        const double* x = value(nd.a);
        double* ga = grd_ptr(nd.a);
        for (int i = 0; i < nd.n; ++i) ga[i] += g[i] / x[i];
        break;
      }
      case Op::Relu: {
        const double* x = value(nd.a);
        double* ga = grd_ptr(nd.a);
        for (int i = 0; i < nd.n; ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
        break;
      }
      case Op::Sum: {
        double* ga = grd_ptr(nd.a);
        const int na = nodes_[nd.a].n;
        for (int i = 0; i < na; ++i) ga[i] += g[0];
        break;
      }
      case Op::LstmCell: {
        const int h = nd.n / 2;
        const double* aux = buf_.data() + nd.aux;
        const double* cp = value(nd.b);
        double* ggates = grd_ptr(nd.a);
        double* gcprev = grd_ptr(nd.b);
        for (int j = 0; j < h; ++j) {
          const double i_g = aux[j], f_g = aux[h + j], g_g = aux[2 * h + j],
                       o_g = aux[3 * h + j], tc = aux[4 * h + j];
          const double dh = g[j];
          const double dc = g[h + j] + dh * o_g * (1.0 - tc * tc);
          ggates[3 * h + j] += dh * tc * o_g * (1.0 - o_g);
          ggates[h + j] += dc * cp[j] * f_g * (1.0 - f_g);
          ggates[j] += dc * g_g * i_g * (1.0 - i_g);
          ggates[2 * h + j] += dc * i_g * (1.0 - g_g * g_g);
          gcprev[j] += dc * f_g;
        }
        break;
      }
      case Op::SoftmaxXent: {
        const int v = nodes_[nd.a].n;
        const double* probs = buf_.data() + nd.aux;
        double* ga = grd_ptr(nd.a);
        const double g0 = g[0];
        for (int i = 0; i < v; ++i) ga[i] += g0 * probs[i];
        ga[nd.i0] -= g0;
        break;
      }
    }
  }
}

}  // namespace midispace::nn
