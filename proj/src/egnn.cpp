#include "enflow/egnn.hpp"

#include <array>
#include <stdexcept>

namespace enflow::egnn {

using ad::Var;

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("egnn: " + msg);
}

void check_inputs(const Var& x, const Var& h, int nf) {
  if (!x.defined() || !h.defined()) fail("undefined input");
  if (x.rows() != h.rows()) {
    fail("x has " + std::to_string(x.rows()) + " rows but h has " +
         std::to_string(h.rows()));
  }
  if (h.cols() != nf) {
    fail("h has " + std::to_string(h.cols()) + " features, layer expects " +
         std::to_string(nf));
  }
  if (!x.value().all_finite()) fail("non-finite values in x");
  if (!h.value().all_finite()) fail("non-finite values in h");
}

Var cat2(const Var& a, const Var& b) {
  std::array<Var, 2> parts{a, b};
  return ad::concat_cols(parts);
}

Var cat3(const Var& a, const Var& b, const Var& c) {
  std::array<Var, 3> parts{a, b, c};
  return ad::concat_cols(parts);
}

}  // namespace

EdgeMode edge_mode_from_name(const std::string& name) {
  if (name == "fully_connected") return EdgeMode::kFullyConnected;
  if (name == "inferred") return EdgeMode::kInferred;
  throw std::invalid_argument("egnn: unknown edge mode '" + name + "'");
}

const char* edge_mode_name(EdgeMode mode) {
  return mode == EdgeMode::kFullyConnected ? "fully_connected" : "inferred";
}

EgclParams make_egcl(int nf, int hidden, Rng& rng) {
  if (nf < 0 || hidden <= 0) {
    throw std::invalid_argument("make_egcl: bad sizes nf=" +
                                std::to_string(nf) +
                                " hidden=" + std::to_string(hidden));
  }
  EgclParams p;
  p.nf = nf;
  p.hidden = hidden;

  const std::array<int, 3> e_dims{2 * nf + 1, hidden, hidden};
  const std::array<Activation, 2> e_acts{Activation::kSiLU, Activation::kSiLU};
  p.phi_e = make_mlp(e_dims, e_acts, rng);

  const std::array<int, 3> x_dims{hidden, hidden, 1};
  const std::array<Activation, 2> x_acts{Activation::kSiLU, Activation::kTanh};
  p.phi_x = make_mlp(x_dims, x_acts, rng);
  zero_final_layer(p.phi_x);

  if (nf > 0) {
    const std::array<int, 3> h_dims{nf + hidden, hidden, nf};
    const std::array<Activation, 2> h_acts{Activation::kSiLU,
                                           Activation::kIdentity};
    p.phi_h = make_mlp(h_dims, h_acts, rng);
  }

  const std::array<int, 2> inf_dims{hidden, 1};
  const std::array<Activation, 1> inf_acts{Activation::kSigmoid};
  p.phi_inf = make_mlp(inf_dims, inf_acts, rng);
  return p;
}

EgnnParams make_egnn(int n_layers, int nf, int hidden, Rng& rng) {
  if (n_layers < 0) throw std::invalid_argument("make_egnn: negative layers");
  EgnnParams p;
  p.nf = nf;
  p.hidden = hidden;
  p.layers.reserve(static_cast<std::size_t>(n_layers));
  for (int i = 0; i < n_layers; ++i) p.layers.push_back(make_egcl(nf, hidden, rng));
  return p;
}

void collect_params(const EgclParams& p, const std::string& prefix,
                    ParamSet& out) {
  out.add_mlp(prefix + ".phi_e", p.phi_e);
  out.add_mlp(prefix + ".phi_x", p.phi_x);
  if (!p.phi_h.layers.empty()) out.add_mlp(prefix + ".phi_h", p.phi_h);
  out.add_mlp(prefix + ".phi_inf", p.phi_inf);
}

void collect_params(const EgnnParams& p, const std::string& prefix,
                    ParamSet& out) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    collect_params(p.layers[i], prefix + ".layer" + std::to_string(i), out);
  }
}

PairIndex ordered_pairs(int m) {
  if (m < 0) throw std::invalid_argument("ordered_pairs: negative m");
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  src->reserve(static_cast<std::size_t>(m) * (m > 0 ? m - 1 : 0));
  dst->reserve(src->capacity());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      src->push_back(i);
      dst->push_back(j);
    }
  }
  PairIndex idx;
  idx.count = static_cast<int>(src->size());
  idx.src = std::move(src);
  idx.dst = std::move(dst);
  return idx;
}

std::pair<Var, Var> egcl_forward(const EgclParams& p, const Var& x,
                                 const Var& h, EdgeMode mode) {
  check_inputs(x, h, p.nf);
  const int m = x.rows();
  const PairIndex pairs = ordered_pairs(m);

  Var x_out = x;
  Var agg;
  if (pairs.count == 0) {
    agg = ad::constant(Tensor::zeros(m, p.hidden));
  } else {
    const Var xi = ad::gather_rows(x, pairs.src);
    const Var xj = ad::gather_rows(x, pairs.dst);
    const Var diff = xi - xj;
    const Var d2 = ad::sum_cols(ad::square(diff));
    const Var hi = ad::gather_rows(h, pairs.src);
    const Var hj = ad::gather_rows(h, pairs.dst);

    const Var msg = mlp_apply(p.phi_e, cat3(hi, hj, d2));

    // Dividing the displacement by |x_i - x_j| + C rather than using it raw
    // keeps each pair's contribution bounded near coincident points.
    const Var dirs = diff / ad::add_const(ad::sqrt_(d2), p.softening);
    const Var pair_upd = dirs * mlp_apply(p.phi_x, msg);
    x_out = x + ad::scatter_add_rows(pair_upd, pairs.src, m);

    Var weighted = msg;
    if (mode == EdgeMode::kInferred) {
      weighted = msg * mlp_apply(p.phi_inf, msg);
    }
    agg = ad::scatter_add_rows(weighted, pairs.src, m);
  }

  Var h_out = h;
  if (p.nf > 0) {
    h_out = h + mlp_apply(p.phi_h, cat2(h, agg));
  }
  return {x_out, h_out};
}

std::pair<Var, Var> egnn_forward(const EgnnParams& p, Var x, Var h,
                                 EdgeMode mode) {
  for (const EgclParams& layer : p.layers) {
    auto [xn, hn] = egcl_forward(layer, x, h, mode);
    x = std::move(xn);
    h = std::move(hn);
  }
  return {std::move(x), std::move(h)};
}

GnfLayerParams make_gnf_layer(int width, Rng& rng) {
  if (width <= 0) throw std::invalid_argument("make_gnf_layer: bad width");
  GnfLayerParams p;
  p.width = width;

  const std::array<int, 3> e_dims{2 * width, width, width};
  const std::array<Activation, 2> e_acts{Activation::kSiLU, Activation::kSiLU};
  p.phi_e = make_mlp(e_dims, e_acts, rng);

  const std::array<int, 3> h_dims{2 * width, width, width};
  const std::array<Activation, 2> h_acts{Activation::kSiLU,
                                         Activation::kIdentity};
  p.phi_h = make_mlp(h_dims, h_acts, rng);

  const std::array<int, 2> inf_dims{width, 1};
  const std::array<Activation, 1> inf_acts{Activation::kSigmoid};
  p.phi_inf = make_mlp(inf_dims, inf_acts, rng);
  return p;
}

void collect_params(const GnfLayerParams& p, const std::string& prefix,
                    ParamSet& out) {
  out.add_mlp(prefix + ".phi_e", p.phi_e);
  out.add_mlp(prefix + ".phi_h", p.phi_h);
  out.add_mlp(prefix + ".phi_inf", p.phi_inf);
}

Var gnf_layer_forward(const GnfLayerParams& p, const Var& h, bool attention) {
  if (!h.defined()) fail("undefined input");
  if (h.cols() != p.width) {
    fail("h has " + std::to_string(h.cols()) + " features, layer expects " +
         std::to_string(p.width));
  }
  if (!h.value().all_finite()) fail("non-finite values in h");
  const int m = h.rows();
  const PairIndex pairs = ordered_pairs(m);

  Var agg;
  if (pairs.count == 0) {
    agg = ad::constant(Tensor::zeros(m, p.width));
  } else {
    const Var hi = ad::gather_rows(h, pairs.src);
    const Var hj = ad::gather_rows(h, pairs.dst);
    Var msg = mlp_apply(p.phi_e, cat2(hi, hj));
    if (attention) msg = msg * mlp_apply(p.phi_inf, msg);
    agg = ad::scatter_add_rows(msg, pairs.src, m);
  }
  return h + mlp_apply(p.phi_h, cat2(h, agg));
}

}  // namespace enflow::egnn
