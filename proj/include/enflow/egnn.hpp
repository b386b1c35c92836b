#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "enflow/autodiff.hpp"
#include "enflow/mlp.hpp"
#include "enflow/rng.hpp"

namespace enflow::egnn {

// Whether messages are aggregated uniformly over all ordered pairs or scaled
// by an inferred soft edge weight phi_inf(m_ij).
enum class EdgeMode { kFullyConnected, kInferred };

EdgeMode edge_mode_from_name(const std::string& name);
const char* edge_mode_name(EdgeMode mode);

// One equivariant graph convolution layer.
//   m_ij  = phi_e(h_i, h_j, |x_i - x_j|^2)
//   x_i'  = x_i + sum_{j != i} (x_i - x_j) / (|x_i - x_j| + C) * phi_x(m_ij)
//   m_i   = sum_{j != i} e_ij * m_ij
//   h_i'  = h_i + phi_h(h_i, m_i)
// The softening constant C keeps the coordinate update bounded as points
// approach each other.
struct EgclParams {
  Mlp phi_e;    // 2*nf + 1 -> hidden -> hidden, SiLU twice
  Mlp phi_x;    // hidden -> hidden -> 1, SiLU then Tanh
  Mlp phi_h;    // nf + hidden -> hidden -> nf, SiLU then linear (empty when nf == 0)
  Mlp phi_inf;  // hidden -> 1, Sigmoid
  double softening = 1.0;
  int nf = 0;
  int hidden = 0;
};

// phi_x's final layer starts at zero so the initial coordinate update
// vanishes and the flow starts near the identity.
EgclParams make_egcl(int nf, int hidden, Rng& rng);

struct EgnnParams {
  std::vector<EgclParams> layers;
  int nf = 0;
  int hidden = 0;
};

EgnnParams make_egnn(int n_layers, int nf, int hidden, Rng& rng);

void collect_params(const EgclParams& p, const std::string& prefix,
                    ParamSet& out);
void collect_params(const EgnnParams& p, const std::string& prefix,
                    ParamSet& out);

// All ordered pairs (i, j), j != i, of an M-point set. src holds i, dst
// holds j; messages aggregate onto src.
struct PairIndex {
  std::shared_ptr<const std::vector<int>> src;
  std::shared_ptr<const std::vector<int>> dst;
  int count = 0;
};

PairIndex ordered_pairs(int m);

// Returns (x', h'). A single node (no pairs) passes coordinates through
// unchanged and updates h against a zero aggregate. Non-finite inputs fail.
std::pair<ad::Var, ad::Var> egcl_forward(const EgclParams& p,
                                         const ad::Var& x, const ad::Var& h,
                                         EdgeMode mode);

// Layer stack; zero layers is the identity.
std::pair<ad::Var, ad::Var> egnn_forward(const EgnnParams& p, ad::Var x,
                                         ad::Var h, EdgeMode mode);

// Non-equivariant message-passing layer over feature embeddings only;
// coordinates never enter, so this is the baseline building block.
//   m_ij = phi_e(h_i, h_j);  e_ij = 1 or phi_inf(m_ij);  h_i' = h_i + phi_h(h_i, m_i)
struct GnfLayerParams {
  Mlp phi_e;    // 2*width -> width -> width, SiLU twice
  Mlp phi_h;    // 2*width -> width -> width, SiLU then linear
  Mlp phi_inf;  // width -> 1, Sigmoid
  int width = 0;
};

GnfLayerParams make_gnf_layer(int width, Rng& rng);
void collect_params(const GnfLayerParams& p, const std::string& prefix,
                    ParamSet& out);

ad::Var gnf_layer_forward(const GnfLayerParams& p, const ad::Var& h,
                          bool attention);

}  // namespace enflow::egnn
