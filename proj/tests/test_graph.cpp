#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "midispace/graph.hpp"
#include "midispace/rng.hpp"

using namespace midispace;
using nn::Param;
using nn::Tape;

namespace {

void randomize(Param& p, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& v : p.value) v = lo + (hi - lo) * rng.uniform();
}

/// Central-difference check of d(scalar)/d(param) for every element.
void check_grads(std::vector<Param*> params,
                 const std::function<nn::NodeId(Tape&)>& build, double h = 1e-5,
                 double tol = 1e-6) {
  Tape tape;
  const auto root = build(tape);
  REQUIRE(tape.size(root) == 1);
  for (Param* p : params) p->zero_grad();
  tape.backward(root);

  for (Param* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double keep = p->value[i];
      Tape plus;
      p->value[i] = keep + h;
      const double f_plus = plus.value(build(plus))[0];
      Tape minus;
      p->value[i] = keep - h;
      const double f_minus = minus.value(build(minus))[0];
      p->value[i] = keep;
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double got = p->grad[i];
      const double err = std::fabs(fd - got) / (1.0 + std::fabs(fd) + std::fabs(got));
      INFO(p->name, "[", i, "] fd=", fd, " grad=", got);
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("affine chain with tanh and sum") {
  Rng rng(0x61);
  Param w("w", 3, 4), b("b", 3, 1), x("x", 4, 1);
  randomize(w, rng);
  randomize(b, rng);
  randomize(x, rng);
  check_grads({&w, &b, &x}, [&](Tape& t) {
    return t.sum(t.tanh_(t.affine(w, t.leaf(x), b)));
  });
}

TEST_CASE("matvec, sigmoid, softplus, log") {
  Rng rng(0x62);
  Param w("w", 4, 3), x("x", 3, 1);
  randomize(w, rng);
  randomize(x, rng);
  check_grads({&w, &x}, [&](Tape& t) {
    const auto y = t.matvec(w, t.leaf(x));
    // softplus keeps log's argument positive
    return t.sum(t.log_(t.softplus(t.sigmoid(y))));
  });
}

TEST_CASE("elementwise add, sub, mul and constants") {
  Rng rng(0x63);
  Param a("a", 5, 1), b("b", 5, 1);
  randomize(a, rng);
  randomize(b, rng);
  const std::vector<double> k = {0.5, -1.5, 2.0, 0.25, -0.75};
  check_grads({&a, &b}, [&](Tape& t) {
    const auto av = t.leaf(a);
    const auto bv = t.leaf(b);
    const auto s = t.add(t.mul(av, bv), t.sub(av, bv));
    return t.sum(t.cmul(s, k));
  });
}

TEST_CASE("scale, shift, relu away from the kink") {
  Rng rng(0x64);
  Param a("a", 6, 1);
  for (auto& v : a.value) {
    v = 0.2 + rng.uniform();        // keep |scaled value| well off zero
    if (rng.uniform() < 0.5) v = -v;
  }
  check_grads({&a}, [&](Tape& t) {
    return t.sum(t.relu(t.shift(t.scale(t.leaf(a), 1.7), 0.05)));
  });
}

TEST_CASE("concat and slice route gradients to the right segments") {
  Rng rng(0x65);
  Param a("a", 3, 1), b("b", 4, 1);
  randomize(a, rng);
  randomize(b, rng);
  check_grads({&a, &b}, [&](Tape& t) {
    const auto joined = t.concat(t.leaf(a), t.leaf(b));
    // keep a middle window spanning the boundary
    return t.sum(t.tanh_(t.slice(joined, 1, 5)));
  });

  Tape t;
  const auto joined = t.concat(t.leaf(a), t.leaf(b));
  a.zero_grad();
  b.zero_grad();
  t.backward(t.sum(t.slice(joined, 0, 2)));
  CHECK(a.grad[0] == 1.0);
  CHECK(a.grad[1] == 1.0);
  CHECK(a.grad[2] == 0.0);
  for (double g : b.grad) CHECK(g == 0.0);
}

TEST_CASE("col selects one matrix column") {
  Rng rng(0x66);
  Param w("w", 4, 6);
  randomize(w, rng);
  check_grads({&w}, [&](Tape& t) { return t.sum(t.tanh_(t.col(w, 2))); });

  Tape t;
  const auto c = t.col(w, 2);
  REQUIRE(t.size(c) == 4);
  for (int r = 0; r < 4; ++r)
    CHECK(t.value(c)[r] == w.value[static_cast<std::size_t>(r) * 6 + 2]);
  w.zero_grad();
  t.backward(t.sum(c));
  for (int r = 0; r < 4; ++r)
    for (int j = 0; j < 6; ++j)
      CHECK(w.grad[static_cast<std::size_t>(r) * 6 + j] == (j == 2 ? 1.0 : 0.0));
}

TEST_CASE("fan-out accumulates gradients") {
  Param x("x", 3, 1);
  x.value = {0.5, -1.0, 2.0};
  Tape t;
  const auto xv = t.leaf(x);
  x.zero_grad();
  t.backward(t.sum(t.mul(xv, xv)));
  for (int i = 0; i < 3; ++i) CHECK(x.grad[i] == doctest::Approx(2.0 * x.value[i]));
}

TEST_CASE("backward seed scales the sweep") {
  Param x("x", 2, 1);
  x.value = {1.0, 2.0};
  Tape t;
  const auto s = t.sum(t.leaf(x));
  x.zero_grad();
  t.backward(s, 0.25);
  CHECK(x.grad[0] == 0.25);
  CHECK(x.grad[1] == 0.25);
}

TEST_CASE("lstm cell matches its unfused composition") {
  const int H = 5;
  Rng rng(0x67);
  Param gates("gates", 4 * H, 1), c_prev("c", H, 1);
  randomize(gates, rng, -1.5, 1.5);
  randomize(c_prev, rng);
  const std::vector<double> mix = {0.3, -0.7, 1.1, 0.9, -0.2,
                                   0.6, -1.3, 0.4, 1.7, -0.5};

  auto fused = [&](Tape& t) {
    const auto out = t.lstm_cell(t.leaf(gates), t.leaf(c_prev));
    return t.sum(t.cmul(out, mix));
  };
  auto unfused = [&](Tape& t) {
    const auto g = t.leaf(gates);
    const auto i = t.sigmoid(t.slice(g, 0, H));
    const auto f = t.sigmoid(t.slice(g, H, H));
    const auto cand = t.tanh_(t.slice(g, 2 * H, H));
    const auto o = t.sigmoid(t.slice(g, 3 * H, H));
    const auto c = t.add(t.mul(f, t.leaf(c_prev)), t.mul(i, cand));
    const auto h = t.mul(o, t.tanh_(c));
    return t.sum(t.cmul(t.concat(h, c), mix));
  };

  Tape tf, tu;
  const auto rf = fused(tf);
  const auto ru = unfused(tu);
  CHECK(tf.value(rf)[0] == doctest::Approx(tu.value(ru)[0]).epsilon(1e-12));

  gates.zero_grad();
  c_prev.zero_grad();
  tf.backward(rf);
  const auto g_fused = gates.grad;
  const auto c_fused = c_prev.grad;
  gates.zero_grad();
  c_prev.zero_grad();
  tu.backward(ru);
  for (std::size_t i = 0; i < gates.size(); ++i)
    CHECK(g_fused[i] == doctest::Approx(gates.grad[i]).epsilon(1e-9));
  for (std::size_t i = 0; i < c_prev.size(); ++i)
    CHECK(c_fused[i] == doctest::Approx(c_prev.grad[i]).epsilon(1e-9));

  check_grads({&gates, &c_prev}, fused);
}

TEST_CASE("softmax cross-entropy value, probabilities and gradient") {
  const int n = 7;
  const int target = 3;
  Rng rng(0x68);
  Param logits("logits", n, 1);
  randomize(logits, rng, -2.0, 2.0);

  // plain reference softmax
  std::vector<double> p(n);
  double zmax = logits.value[0];
  for (double v : logits.value) zmax = std::max(zmax, v);
  double zsum = 0.0;
  for (int i = 0; i < n; ++i) zsum += std::exp(logits.value[static_cast<std::size_t>(i)] - zmax);
  for (int i = 0; i < n; ++i)
    p[static_cast<std::size_t>(i)] =
        std::exp(logits.value[static_cast<std::size_t>(i)] - zmax) / zsum;

  Tape t;
  const auto node = t.softmax_xent(t.leaf(logits), target);
  REQUIRE(t.size(node) == 1);
  CHECK(t.value(node)[0] ==
        doctest::Approx(-std::log(p[static_cast<std::size_t>(target)])).epsilon(1e-12));
  const double* probs = t.probs(node);
  for (int i = 0; i < n; ++i)
    CHECK(probs[i] == doctest::Approx(p[static_cast<std::size_t>(i)]).epsilon(1e-12));

  logits.zero_grad();
  t.backward(node);
  for (int i = 0; i < n; ++i) {
    const double want = p[static_cast<std::size_t>(i)] - (i == target ? 1.0 : 0.0);
    CHECK(logits.grad[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-9));
  }

  check_grads({&logits}, [&](Tape& tt) {
    return tt.softmax_xent(tt.leaf(logits), target);
  });
}

TEST_CASE("constants carry no gradient and clear resets the tape") {
  Param x("x", 2, 1);
  x.value = {1.0, -1.0};
  Tape t;
  const auto c = t.constant({2.0, 3.0});
  const auto s = t.sum(t.mul(t.leaf(x), c));
  CHECK(t.value(s)[0] == doctest::Approx(2.0 - 3.0));
  x.zero_grad();
  t.backward(s);
  CHECK(x.grad[0] == 2.0);
  CHECK(x.grad[1] == 3.0);

  t.clear();
  const auto fresh = t.constant({5.0});
  CHECK(t.value(fresh)[0] == 5.0);
}
