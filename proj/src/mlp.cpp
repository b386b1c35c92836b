#include "enflow/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace enflow {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kSiLU: return "silu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftplus: return "softplus";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "silu") return Activation::kSiLU;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softplus") return Activation::kSoftplus;
  throw std::invalid_argument("activation: unknown name '" + name + "'");
}

int Mlp::in_dim() const {
  return layers.empty() ? 0 : layers.front().weight.rows();
}

int Mlp::out_dim() const {
  return layers.empty() ? 0 : layers.back().weight.cols();
}

DenseLayer make_dense(int in, int out, Activation act, Rng& rng) {
  if (in < 0 || out < 0) {
    throw std::invalid_argument("make_dense: negative dimension");
  }
  const double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 0.0;
  Tensor w(in, out);
  for (std::int64_t i = 0; i < w.size(); ++i) {
    w.data()[i] = rng.uniform(-bound, bound);
  }
  Tensor b(1, out);
  for (std::int64_t i = 0; i < b.size(); ++i) {
    b.data()[i] = rng.uniform(-bound, bound);
  }
  return DenseLayer{ad::Var(std::move(w), true), ad::Var(std::move(b), true),
                    act};
}

Mlp make_mlp(std::span<const int> dims, std::span<const Activation> acts,
             Rng& rng) {
  if (dims.size() != acts.size() + 1 || acts.empty()) {
    throw std::invalid_argument("make_mlp: need N+1 dims for N activations");
  }
  Mlp mlp;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    mlp.layers.push_back(make_dense(dims[i], dims[i + 1], acts[i], rng));
  }
  return mlp;
}

void zero_final_layer(Mlp& mlp) {
  if (mlp.layers.empty()) return;
  DenseLayer& last = mlp.layers.back();
  last.weight.set_value(
      Tensor::zeros(last.weight.rows(), last.weight.cols()));
  last.bias.set_value(Tensor::zeros(1, last.bias.cols()));
}

ad::Var dense_apply(const DenseLayer& layer, const ad::Var& input) {
  ad::Var z = ad::add(ad::matmul(input, layer.weight), layer.bias);
  switch (layer.act) {
    case Activation::kIdentity: return z;
    case Activation::kSiLU: return ad::silu(z);
    case Activation::kTanh: return ad::tanh_(z);
    case Activation::kSigmoid: return ad::sigmoid_(z);
    case Activation::kSoftplus: return ad::softplus(z);
  }
  return z;
}

ad::Var mlp_apply(const Mlp& mlp, const ad::Var& input) {
  if (mlp.layers.empty()) {
    throw std::invalid_argument("mlp_apply: empty network");
  }
  ad::Var h = input;
  for (const DenseLayer& layer : mlp.layers) h = dense_apply(layer, h);
  return h;
}

void ParamSet::add(const std::string& name, const ad::Var& v) {
  for (const auto& [existing, unused] : items) {
    if (existing == name) {
      throw std::invalid_argument("params: duplicate name '" + name + "'");
    }
  }
  items.emplace_back(name, v);
}

void ParamSet::add_dense(const std::string& prefix, const DenseLayer& d) {
  add(prefix + ".weight", d.weight);
  add(prefix + ".bias", d.bias);
}

void ParamSet::add_mlp(const std::string& prefix, const Mlp& m) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    add_dense(prefix + "." + std::to_string(i), m.layers[i]);
  }
}

std::int64_t ParamSet::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : items) n += v.value().size();
  return n;
}

const ad::Var* ParamSet::find(const std::string& name) const {
  for (const auto& [n, v] : items) {
    if (n == name) return &v;
  }
  return nullptr;
}

}  // namespace enflow
