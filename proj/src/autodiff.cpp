#include "enflow/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace enflow::ad {

namespace {

thread_local bool g_grad_enabled = true;

[[noreturn]] void fail(const char* op, const std::string& msg) {
  throw std::invalid_argument(std::string(op) + ": " + msg);
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

Tensor unary_map(const Tensor& x, double (*f)(double)) {
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < x.size(); ++i) out.data()[i] = f(x.data()[i]);
  return out;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kScale: return "scale";
    case Op::kAddConst: return "add_const";
    case Op::kClamp: return "clamp";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kSumAll: return "sum_all";
    case Op::kSumRows: return "sum_rows";
    case Op::kSumCols: return "sum_cols";
    case Op::kBroadcast: return "broadcast_to";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kPadCols: return "pad_cols";
    case Op::kGatherRows: return "gather_rows";
    case Op::kScatterAddRows: return "scatter_add_rows";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSilu: return "silu";
    case Op::kSoftplus: return "softplus";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kPowConst: return "pow_const";
    case Op::kBoundary: return "boundary";
  }
  return "unknown";
}

Node::~Node() {
  // Drop the parent chain iteratively; a deep graph released through
  // recursive shared_ptr destruction would overflow the stack.
  std::vector<Var> work;
  work.swap(parents);
  while (!work.empty()) {
    Var v = std::move(work.back());
    work.pop_back();
    std::shared_ptr<Node> sp = v.node_ptr();
    v = Var();
    if (sp && sp.use_count() == 1) {
      for (auto& p : sp->parents) work.push_back(std::move(p));
      sp->parents.clear();
    }
  }
}

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

bool grad_enabled() { return g_grad_enabled; }

Var::Var(Tensor value, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw std::logic_error("var: value() on undefined handle");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

void Var::set_value(Tensor v) {
  if (!node_) throw std::logic_error("var: set_value() on undefined handle");
  if (node_->op != Op::kLeaf) {
    throw std::logic_error("var: set_value() is only valid on leaves");
  }
  if (!node_->value.same_shape(v)) {
    throw std::invalid_argument("var: set_value() shape " + v.shape_str() +
                                " does not match " + node_->value.shape_str());
  }
  node_->value = std::move(v);
}

namespace {

Var make_node(Tensor value, Op op, std::vector<Var> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    if (rg) {
      n->op = op;
      n->requires_grad = true;
      n->parents = std::move(parents);
    }
  }
  return Var::from_node(std::move(n));
}

void check_defined(const char* op, std::initializer_list<const Var*> vs) {
  for (const Var* v : vs) {
    if (!v->defined()) fail(op, "undefined operand");
  }
}

// numpy-style paired dimension: equal, or a size-1 side stretches (also to 0)
bool combine_dim(int a, int b, int* out) {
  if (a == b) {
    *out = a;
  } else if (a == 1) {
    *out = b;
  } else if (b == 1) {
    *out = a;
  } else {
    return false;
  }
  return true;
}

Tensor broadcast_value(const Tensor& x, int rows, int cols) {
  Tensor out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int sr = x.rows() == 1 ? 0 : r;
    for (int c = 0; c < cols; ++c) {
      out.at(r, c) = x.at(sr, x.cols() == 1 ? 0 : c);
    }
  }
  return out;
}

using BinFn = double (*)(double, double);

Var binary_op(const char* opn, Op op, const Var& a, const Var& b, BinFn f) {
  check_defined(opn, {&a, &b});
  int rows = 0, cols = 0;
  if (!combine_dim(a.rows(), b.rows(), &rows) ||
      !combine_dim(a.cols(), b.cols(), &cols)) {
    fail(opn, "incompatible shapes " + a.value().shape_str() + " vs " +
                  b.value().shape_str());
  }
  const Var& ab = (a.rows() == rows && a.cols() == cols)
                      ? a
                      : broadcast_to(a, rows, cols);
  const Var& bb = (b.rows() == rows && b.cols() == cols)
                      ? b
                      : broadcast_to(b, rows, cols);
  Tensor out(rows, cols);
  const Tensor& av = ab.value();
  const Tensor& bv = bb.value();
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = f(av.data()[i], bv.data()[i]);
  }
  return make_node(std::move(out), op, {ab, bb});
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_op("add", Op::kAdd, a, b,
                   [](double x, double y) { return x + y; });
}

Var sub(const Var& a, const Var& b) {
  return binary_op("sub", Op::kSub, a, b,
                   [](double x, double y) { return x - y; });
}

Var mul(const Var& a, const Var& b) {
  return binary_op("mul", Op::kMul, a, b,
                   [](double x, double y) { return x * y; });
}

Var div(const Var& a, const Var& b) {
  return binary_op("div", Op::kDiv, a, b,
                   [](double x, double y) { return x / y; });
}

Var neg(const Var& x) {
  check_defined("neg", {&x});
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = -x.value().data()[i];
  }
  return make_node(std::move(out), Op::kNeg, {x});
}

Var scale(const Var& x, double s) {
  check_defined("scale", {&x});
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = s * x.value().data()[i];
  }
  Var v = make_node(std::move(out), Op::kScale, {x});
  v.node_ptr()->a0 = s;
  return v;
}

Var add_const(const Var& x, double c) {
  check_defined("add_const", {&x});
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = c + x.value().data()[i];
  }
  Var v = make_node(std::move(out), Op::kAddConst, {x});
  v.node_ptr()->a0 = c;
  return v;
}

Var clamp(const Var& x, double lo, double hi) {
  check_defined("clamp", {&x});
  if (!(lo <= hi)) fail("clamp", "empty range");
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::clamp(x.value().data()[i], lo, hi);
  }
  Var v = make_node(std::move(out), Op::kClamp, {x});
  v.node_ptr()->a0 = lo;
  v.node_ptr()->a1 = hi;
  return v;
}

Var matmul(const Var& a, const Var& b) {
  check_defined("matmul", {&a, &b});
  if (a.cols() != b.rows()) {
    fail("matmul", "inner dimensions " + a.value().shape_str() + " vs " +
                       b.value().shape_str());
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  const double* ad = a.value().data();
  const double* bd = b.value().data();
  double* od = out.data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = ad[static_cast<std::size_t>(i) * k + p];
      const double* brow = bd + static_cast<std::size_t>(p) * n;
      double* orow = od + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_node(std::move(out), Op::kMatmul, {a, b});
}

Var transpose(const Var& x) {
  check_defined("transpose", {&x});
  Tensor out(x.cols(), x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out.at(c, r) = x.value().at(r, c);
  }
  return make_node(std::move(out), Op::kTranspose, {x});
}

Var sum_all(const Var& x) {
  check_defined("sum_all", {&x});
  double s = 0.0;
  for (std::int64_t i = 0; i < x.value().size(); ++i) {
    s += x.value().data()[i];
  }
  return make_node(Tensor::scalar(s), Op::kSumAll, {x});
}

Var sum_rows(const Var& x) {
  check_defined("sum_rows", {&x});
  Tensor out(1, x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out.at(0, c) += x.value().at(r, c);
  }
  return make_node(std::move(out), Op::kSumRows, {x});
}

Var sum_cols(const Var& x) {
  check_defined("sum_cols", {&x});
  Tensor out(x.rows(), 1);
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out.at(r, 0) += x.value().at(r, c);
  }
  return make_node(std::move(out), Op::kSumCols, {x});
}

Var mean_all(const Var& x) {
  check_defined("mean_all", {&x});
  if (x.value().size() == 0) fail("mean_all", "empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size()));
}

Var broadcast_to(const Var& x, int rows, int cols) {
  check_defined("broadcast_to", {&x});
  const bool rows_ok = x.rows() == rows || x.rows() == 1;
  const bool cols_ok = x.cols() == cols || x.cols() == 1;
  if (!rows_ok || !cols_ok) {
    fail("broadcast_to", x.value().shape_str() + " to " +
                             std::to_string(rows) + "x" +
                             std::to_string(cols));
  }
  if (x.rows() == rows && x.cols() == cols) return x;
  Var v = make_node(broadcast_value(x.value(), rows, cols), Op::kBroadcast,
                    {x});
  v.node_ptr()->i0 = rows;
  v.node_ptr()->i1 = cols;
  return v;
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail("concat_cols", "no operands");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    check_defined("concat_cols", {&p});
    if (p.rows() != rows) {
      fail("concat_cols", "row mismatch " + p.value().shape_str() + " vs " +
                              std::to_string(rows) + " rows");
    }
    cols += p.cols();
  }
  Tensor out(rows, cols);
  int off = 0;
  for (const Var& p : parts) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < p.cols(); ++c) {
        out.at(r, off + c) = p.value().at(r, c);
      }
    }
    off += p.cols();
  }
  return make_node(std::move(out), Op::kConcatCols,
                   std::vector<Var>(parts.begin(), parts.end()));
}

Var slice_cols(const Var& x, int from, int to) {
  check_defined("slice_cols", {&x});
  if (from < 0 || to < from || to > x.cols()) {
    fail("slice_cols", "range [" + std::to_string(from) + ", " +
                           std::to_string(to) + ") of " +
                           x.value().shape_str());
  }
  Tensor out(x.rows(), to - from);
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = from; c < to; ++c) out.at(r, c - from) = x.value().at(r, c);
  }
  Var v = make_node(std::move(out), Op::kSliceCols, {x});
  v.node_ptr()->i0 = from;
  v.node_ptr()->i1 = to;
  return v;
}

namespace {

// Columns of x placed into a zero tensor of width total at column at.
Var pad_cols(const Var& x, int at, int total) {
  Tensor out(x.rows(), total);
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out.at(r, at + c) = x.value().at(r, c);
  }
  Var v = make_node(std::move(out), Op::kPadCols, {x});
  v.node_ptr()->i0 = at;
  v.node_ptr()->i1 = total;
  return v;
}

}  // namespace

Var gather_rows(const Var& x, std::shared_ptr<const std::vector<int>> index) {
  check_defined("gather_rows", {&x});
  if (!index) fail("gather_rows", "null index");
  Tensor out(static_cast<int>(index->size()), x.cols());
  for (std::size_t p = 0; p < index->size(); ++p) {
    const int r = (*index)[p];
    if (r < 0 || r >= x.rows()) {
      fail("gather_rows", "index " + std::to_string(r) + " out of " +
                              std::to_string(x.rows()) + " rows");
    }
    for (int c = 0; c < x.cols(); ++c) {
      out.at(static_cast<int>(p), c) = x.value().at(r, c);
    }
  }
  Var v = make_node(std::move(out), Op::kGatherRows, {x});
  v.node_ptr()->index = std::move(index);
  return v;
}

Var scatter_add_rows(const Var& x,
                     std::shared_ptr<const std::vector<int>> index,
                     int out_rows) {
  check_defined("scatter_add_rows", {&x});
  if (!index) fail("scatter_add_rows", "null index");
  if (static_cast<int>(index->size()) != x.rows()) {
    fail("scatter_add_rows", "index length " + std::to_string(index->size()) +
                                 " vs " + std::to_string(x.rows()) + " rows");
  }
  Tensor out(out_rows, x.cols());
  for (std::size_t p = 0; p < index->size(); ++p) {
    const int r = (*index)[p];
    if (r < 0 || r >= out_rows) {
      fail("scatter_add_rows", "index " + std::to_string(r) + " out of " +
                                   std::to_string(out_rows) + " rows");
    }
    for (int c = 0; c < x.cols(); ++c) {
      out.at(r, c) += x.value().at(static_cast<int>(p), c);
    }
  }
  Var v = make_node(std::move(out), Op::kScatterAddRows, {x});
  v.node_ptr()->index = std::move(index);
  v.node_ptr()->i0 = out_rows;
  return v;
}

Var tanh_(const Var& x) {
  check_defined("tanh", {&x});
  return make_node(unary_map(x.value(), [](double v) { return std::tanh(v); }),
                   Op::kTanh, {x});
}

Var sigmoid_(const Var& x) {
  check_defined("sigmoid", {&x});
  return make_node(unary_map(x.value(), &sigmoid_scalar), Op::kSigmoid, {x});
}

Var silu(const Var& x) {
  check_defined("silu", {&x});
  return make_node(
      unary_map(x.value(), [](double v) { return v * sigmoid_scalar(v); }),
      Op::kSilu, {x});
}

Var softplus(const Var& x) {
  check_defined("softplus", {&x});
  return make_node(unary_map(x.value(), &softplus_scalar), Op::kSoftplus, {x});
}

Var exp_(const Var& x) {
  check_defined("exp", {&x});
  return make_node(unary_map(x.value(), [](double v) { return std::exp(v); }),
                   Op::kExp, {x});
}

Var log_(const Var& x) {
  check_defined("log", {&x});
  return make_node(unary_map(x.value(), [](double v) { return std::log(v); }),
                   Op::kLog, {x});
}

Var sqrt_(const Var& x) {
  check_defined("sqrt", {&x});
  return make_node(unary_map(x.value(), [](double v) { return std::sqrt(v); }),
                   Op::kSqrt, {x});
}

Var square(const Var& x) { return mul(x, x); }

Var pow_const(const Var& x, double p) {
  check_defined("pow_const", {&x});
  Tensor out(x.rows(), x.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::pow(x.value().data()[i], p);
  }
  Var v = make_node(std::move(out), Op::kPowConst, {x});
  v.node_ptr()->a0 = p;
  return v;
}

Var boundary(const Var& x) {
  check_defined("boundary", {&x});
  return make_node(x.value(), Op::kBoundary, {x});
}

Var constant(Tensor t) { return Var(std::move(t), false); }

Var constant_scalar(double v) { return Var(Tensor::scalar(v), false); }

const Var* Gradients::find(const Var& v) const {
  auto it = by_node_.find(v.node());
  return it == by_node_.end() ? nullptr : &it->second;
}

Tensor Gradients::value_or_zero(const Var& v) const {
  const Var* g = find(v);
  return g ? g->value() : Tensor::zeros(v.rows(), v.cols());
}

Var Gradients::var_or_zero(const Var& v) const {
  const Var* g = find(v);
  return g ? *g : constant(Tensor::zeros(v.rows(), v.cols()));
}

namespace {

// Gradient expressions with respect to each parent, given upstream grad g.
// Rules are built from primitive ops so they remain differentiable when grad
// mode is on.
std::vector<Var> vjp(const std::shared_ptr<Node>& n, const Var& g) {
  const std::vector<Var>& ps = n->parents;
  const Var self = Var::from_node(n);
  switch (n->op) {
    case Op::kAdd:
      return {g, g};
    case Op::kSub:
      return {g, neg(g)};
    case Op::kMul:
      return {mul(g, ps[1]), mul(g, ps[0])};
    case Op::kDiv:
      // out = a/b: da = g/b, db = -g*out/b
      return {div(g, ps[1]), neg(div(mul(g, self), ps[1]))};
    case Op::kNeg:
      return {neg(g)};
    case Op::kScale:
      return {scale(g, n->a0)};
    case Op::kAddConst:
      return {g};
    case Op::kClamp: {
      const Tensor& x = ps[0].value();
      Tensor mask(x.rows(), x.cols());
      for (std::int64_t i = 0; i < x.size(); ++i) {
        mask.data()[i] =
            (x.data()[i] > n->a0 && x.data()[i] < n->a1) ? 1.0 : 0.0;
      }
      return {mul(g, constant(std::move(mask)))};
    }
    case Op::kMatmul:
      return {matmul(g, transpose(ps[1])), matmul(transpose(ps[0]), g)};
    case Op::kTranspose:
      return {transpose(g)};
    case Op::kSumAll:
    case Op::kSumRows:
    case Op::kSumCols:
      return {broadcast_to(g, ps[0].rows(), ps[0].cols())};
    case Op::kBroadcast: {
      const int pr = ps[0].rows(), pc = ps[0].cols();
      Var r = g;
      if (pr == 1 && n->i0 != 1) r = sum_rows(r);
      if (pc == 1 && n->i1 != 1) r = sum_cols(r);
      return {r};
    }
    case Op::kConcatCols: {
      std::vector<Var> out;
      int off = 0;
      for (const Var& p : ps) {
        out.push_back(slice_cols(g, off, off + p.cols()));
        off += p.cols();
      }
      return out;
    }
    case Op::kSliceCols:
      return {pad_cols(g, n->i0, ps[0].cols())};
    case Op::kPadCols:
      return {slice_cols(g, n->i0, n->i0 + ps[0].cols())};
    case Op::kGatherRows:
      return {scatter_add_rows(g, n->index, ps[0].rows())};
    case Op::kScatterAddRows:
      return {gather_rows(g, n->index)};
    case Op::kTanh:
      // 1 - y^2
      return {mul(g, add_const(neg(square(self)), 1.0))};
    case Op::kSigmoid:
      // y(1 - y)
      return {mul(g, mul(self, add_const(neg(self), 1.0)))};
    case Op::kSilu: {
      // s(1 + x(1 - s)) with s = sigmoid(x)
      Var s = sigmoid_(ps[0]);
      Var d = mul(s, add_const(mul(ps[0], add_const(neg(s), 1.0)), 1.0));
      return {mul(g, d)};
    }
    case Op::kSoftplus:
      return {mul(g, sigmoid_(ps[0]))};
    case Op::kExp:
      return {mul(g, self)};
    case Op::kLog:
      return {div(g, ps[0])};
    case Op::kSqrt:
      return {div(g, scale(self, 2.0))};
    case Op::kPowConst:
      return {mul(g, scale(pow_const(ps[0], n->a0 - 1.0), n->a0))};
    case Op::kBoundary:
      return {g};
    case Op::kLeaf:
      break;
  }
  throw std::logic_error("vjp: leaf reached");
}

}  // namespace

Gradients backward(const Var& output, std::span<const Var> stop_at) {
  if (!output.defined()) fail("backward", "undefined output");
  if (output.value().size() != 1) {
    fail("backward",
         "output must be scalar, got shape " + output.value().shape_str());
  }

  std::unordered_set<const Node*> stops;
  for (const Var& v : stop_at) stops.insert(v.node());

  // Post-order of the requires-grad ancestry; reversed it is a topological
  // order with consumers before producers.
  struct Frame {
    Var v;
    std::size_t next = 0;
  };
  std::vector<Var> order;
  std::vector<Frame> stack;
  std::unordered_set<const Node*> visited;
  if (output.requires_grad()) {
    stack.push_back({output});
    visited.insert(output.node());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Node* n = f.v.node();
    const bool expand = !stops.contains(n);
    if (expand && f.next < n->parents.size()) {
      const Var& p = n->parents[f.next++];
      if (p.requires_grad() && !visited.contains(p.node())) {
        visited.insert(p.node());
        stack.push_back({p});
      }
    } else {
      order.push_back(f.v);
      stack.pop_back();
    }
  }

  Gradients result;
  std::unordered_map<const Node*, Var> acc;
  acc.emplace(output.node(), constant(Tensor::ones(1, 1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto found = acc.find(it->node());
    if (found == acc.end()) continue;
    Var g = found->second;
    result.set(it->node(), g);
    const std::shared_ptr<Node>& n = it->node_ptr();
    if (n->op == Op::kLeaf || stops.contains(n.get())) continue;
    std::vector<Var> pgs = vjp(n, g);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      const Var& p = n->parents[i];
      if (!p.requires_grad()) continue;
      auto [pit, inserted] = acc.try_emplace(p.node(), pgs[i]);
      if (!inserted) pit->second = add(pit->second, pgs[i]);
    }
  }
  return result;
}

}  // namespace enflow::ad
