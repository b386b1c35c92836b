#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "enflow/autodiff.hpp"
#include "enflow/rng.hpp"

namespace enflow {

enum class Activation { kIdentity, kSiLU, kTanh, kSigmoid, kSoftplus };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  ad::Var weight;  // in x out
  ad::Var bias;    // 1 x out
  Activation act = Activation::kIdentity;
};

// Multilayer perceptron; rows of the input are independent samples.
struct Mlp {
  std::vector<DenseLayer> layers;
  int in_dim() const;
  int out_dim() const;
};

// Fan-in scaled uniform init, U(-1/sqrt(in), 1/sqrt(in)), for weight and bias.
DenseLayer make_dense(int in, int out, Activation act, Rng& rng);

// dims has one more entry than acts; layer i maps dims[i] -> dims[i+1].
Mlp make_mlp(std::span<const int> dims, std::span<const Activation> acts,
             Rng& rng);

// Weight and bias of the last layer set to zero (near-identity start).
void zero_final_layer(Mlp& mlp);

ad::Var dense_apply(const DenseLayer& layer, const ad::Var& input);
ad::Var mlp_apply(const Mlp& mlp, const ad::Var& input);

// Named views of trainable leaves. Entries share nodes with the owning
// structures, so set_value on an entry is seen by later forward passes.
struct ParamSet {
  std::vector<std::pair<std::string, ad::Var>> items;

  void add(const std::string& name, const ad::Var& v);
  void add_dense(const std::string& prefix, const DenseLayer& d);
  void add_mlp(const std::string& prefix, const Mlp& m);
  std::size_t count() const { return items.size(); }
  std::int64_t scalar_count() const;
  const ad::Var* find(const std::string& name) const;
};

}  // namespace enflow
