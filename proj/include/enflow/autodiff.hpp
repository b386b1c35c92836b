#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "enflow/tensor.hpp"

namespace enflow::ad {

// Reverse-mode automatic differentiation over Tensor values.
//
// Ops build an immutable DAG of Node records eagerly (values are computed at
// op call time). backward() walks the DAG and emits gradient expressions that
// are themselves built from the same primitive ops, so gradients stay
// differentiable: a scalar derived from a gradient (a trace of a Jacobian,
// say) can be differentiated again by a later backward() call. Every
// derivative rule is an analytic closed form; nothing falls back to numeric
// differencing.
//
// Graph construction is per-thread (the grad-mode flag is thread_local) and
// nodes are immutable once created, so independent evaluations may run
// concurrently on different threads.

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kScale,      // a0 * x
  kAddConst,   // x + a0
  kClamp,      // clamp to [a0, a1]; gradient is zero outside the open range
  kMatmul,
  kTranspose,
  kSumAll,
  kSumRows,    // (r,c) -> (1,c)
  kSumCols,    // (r,c) -> (r,1)
  kBroadcast,  // to (i0, i1) from a shape with 1s in the expanded dims
  kConcatCols,
  kSliceCols,  // columns [i0, i1)
  kPadCols,    // place into zeros of width i1 starting at column i0
  kGatherRows,
  kScatterAddRows,  // i0 = output row count
  kTanh,
  kSigmoid,
  kSilu,
  kSoftplus,
  kExp,
  kLog,
  kSqrt,
  kPowConst,  // x^a0, requires x > 0 unless a0 is a non-negative integer
  kBoundary,  // identity marker; backward() can stop its sweep here
};

const char* op_name(Op op);

struct Node;

// Value handle. Copies share the underlying node.
class Var {
 public:
  Var() = default;
  // Leaf carrying a constant (requires_grad false) or a differentiable
  // input such as a parameter or a state (requires_grad true).
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  bool requires_grad() const;

  // Replaces the value of a leaf in place (optimizer updates). Graphs built
  // afterwards see the new value; graphs built before keep their results.
  void set_value(Tensor v);

  const Node* node() const { return node_.get(); }

  static Var from_node(std::shared_ptr<Node> n) {
    Var v;
    v.node_ = std::move(n);
    return v;
  }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Tensor value;
  Op op = Op::kLeaf;
  std::vector<Var> parents;
  bool requires_grad = false;
  double a0 = 0.0;
  double a1 = 0.0;
  int i0 = 0;
  int i1 = 0;
  // Row index list for gather/scatter, shared with the vjp nodes.
  std::shared_ptr<const std::vector<int>> index;

  ~Node();  // iterative teardown; long op chains must not recurse
};

// While a guard is alive on this thread, ops compute values but record no
// parents, so results are constants and backward() cannot see through them.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

bool grad_enabled();

// Elementwise binary ops. Shapes must match after implicit broadcast: a
// dimension of size 1 stretches to the other operand's size.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var neg(const Var& x);
Var scale(const Var& x, double s);
Var add_const(const Var& x, double c);
Var clamp(const Var& x, double lo, double hi);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);

Var sum_all(const Var& x);   // 1x1
Var sum_rows(const Var& x);  // 1xC
Var sum_cols(const Var& x);  // Rx1
Var mean_all(const Var& x);

Var broadcast_to(const Var& x, int rows, int cols);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& x, int from, int to);

// Rows of x selected by index (out has index->size() rows).
Var gather_rows(const Var& x, std::shared_ptr<const std::vector<int>> index);
// Rows of x accumulated into out_rows rows at positions given by index.
Var scatter_add_rows(const Var& x,
                     std::shared_ptr<const std::vector<int>> index,
                     int out_rows);

Var tanh_(const Var& x);
Var sigmoid_(const Var& x);
Var silu(const Var& x);
Var softplus(const Var& x);
Var exp_(const Var& x);
Var log_(const Var& x);
Var sqrt_(const Var& x);
Var square(const Var& x);
Var pow_const(const Var& x, double p);

// Identity whose node marks a backward() stopping point.
Var boundary(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }

Var constant(Tensor t);
Var constant_scalar(double v);

// Gradients of one scalar output with respect to every reachable node that
// requires grad. Entries are Vars: with grad mode on they are differentiable
// expressions, under NoGradGuard they are plain values.
class Gradients {
 public:
  void set(const Node* n, Var g) { by_node_[n] = std::move(g); }
  const Var* find(const Var& v) const;
  // Gradient of the output with respect to v; zeros_like(v) when no path.
  Tensor value_or_zero(const Var& v) const;
  Var var_or_zero(const Var& v) const;

 private:
  std::unordered_map<const Node*, Var> by_node_;
};

// Reverse sweep from a scalar output. Nodes listed in stop_at have their
// gradient recorded but their parents are not visited, which scopes the
// sweep to a subgraph (used to differentiate a dynamics evaluation with
// respect to its own inputs without touching their history). Throws if
// output is not 1x1. Each call is independent; accumulators are fresh.
Gradients backward(const Var& output, std::span<const Var> stop_at = {});

}  // namespace enflow::ad
