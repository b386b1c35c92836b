#include "enflow/egnn.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "enflow/geometry.hpp"
#include "oracles.hpp"

using enflow::Activation;
using enflow::make_dense;
using enflow::ParamSet;
using enflow::Rng;
using enflow::Tensor;
using enflow::max_abs_diff;
namespace ad = enflow::ad;
namespace egnn = enflow::egnn;
using egnn::EdgeMode;

namespace {

// Plain-loop rigid transform, x_i -> R x_i + t, independent of the library's
// rotation helpers.
Tensor transform_points(const Tensor& x, const Tensor& r, const Tensor& t) {
  Tensor out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int d = 0; d < x.cols(); ++d) {
      double s = 0.0;
      for (int k = 0; k < x.cols(); ++k) s += r.at(d, k) * x.at(i, k);
      out.at(i, d) = s + t.at(0, d);
    }
  }
  return out;
}

Tensor permute_rows(const Tensor& x, const std::vector<int>& perm) {
  Tensor out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int c = 0; c < x.cols(); ++c) out.at(i, c) = x.at(perm[i], c);
  }
  return out;
}

// make_egcl zeroes phi_x's last layer; give it live weights so the
// coordinate update is exercised.
egnn::EgclParams make_active_egcl(int nf, int hidden, Rng& rng) {
  egnn::EgclParams p = egnn::make_egcl(nf, hidden, rng);
  p.phi_x.layers.back() = make_dense(hidden, 1, Activation::kTanh, rng);
  return p;
}

double weighted_sum(const ad::Var& x_out, const ad::Var& h_out,
                    const Tensor& wx, const Tensor& wh) {
  ad::Var s = ad::sum_all(x_out * ad::constant(wx));
  if (h_out.cols() > 0) {
    s = s + ad::sum_all(h_out * ad::constant(wh));
  }
  return s.value().item();
}

}  // namespace

TEST_CASE("ordered pairs enumerate i != j") {
  const egnn::PairIndex idx = egnn::ordered_pairs(3);
  CHECK(idx.count == 6);
  const std::vector<int> want_src{0, 0, 1, 1, 2, 2};
  const std::vector<int> want_dst{1, 2, 0, 2, 0, 1};
  CHECK(*idx.src == want_src);
  CHECK(*idx.dst == want_dst);
  CHECK(egnn::ordered_pairs(0).count == 0);
  CHECK(egnn::ordered_pairs(1).count == 0);
  CHECK(egnn::ordered_pairs(7).count == 42);
  CHECK_THROWS_AS(egnn::ordered_pairs(-1), std::invalid_argument);
}

TEST_CASE("egcl is equivariant to rotation, reflection, translation") {
  Rng rng(101);
  for (const int nf : {0, 2}) {
    for (const EdgeMode mode :
         {EdgeMode::kFullyConnected, EdgeMode::kInferred}) {
      const int m = 5;
      const int n = 3;
      egnn::EgclParams p = make_active_egcl(nf, 8, rng);
      const Tensor x = rng.normal_tensor(m, n);
      const Tensor h = rng.normal_tensor(m, nf);

      auto [x1, h1] = egnn::egcl_forward(p, ad::Var(x), ad::Var(h), mode);

      for (const bool reflect : {false, true}) {
        Tensor r = enflow::geom::random_rotation(n, rng);
        if (reflect) {
          for (int c = 0; c < n; ++c) r.at(0, c) = -r.at(0, c);
        }
        const Tensor t = rng.normal_tensor(1, n);

        auto [x2, h2] = egnn::egcl_forward(
            p, ad::Var(transform_points(x, r, t)), ad::Var(h), mode);

        const Tensor x1_moved = transform_points(x1.value(), r, t);
        INFO("nf=", nf, " mode=", egnn::edge_mode_name(mode),
             " reflect=", reflect);
        CHECK(max_abs_diff(x2.value(), x1_moved) <= 1e-9);
        CHECK(max_abs_diff(h2.value(), h1.value()) <= 1e-9);
      }
    }
  }
}

TEST_CASE("stacked egnn keeps equivariance") {
  Rng rng(202);
  const int m = 4;
  const int n = 2;
  const int nf = 3;
  egnn::EgnnParams p = egnn::make_egnn(3, nf, 8, rng);
  for (auto& layer : p.layers) {
    layer.phi_x.layers.back() = make_dense(8, 1, Activation::kTanh, rng);
  }
  const Tensor x = rng.normal_tensor(m, n);
  const Tensor h = rng.normal_tensor(m, nf);
  const Tensor r = enflow::geom::random_rotation(n, rng);
  const Tensor t = rng.normal_tensor(1, n);

  auto [x1, h1] =
      egnn::egnn_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  auto [x2, h2] = egnn::egnn_forward(p, ad::Var(transform_points(x, r, t)),
                                     ad::Var(h), EdgeMode::kInferred);

  CHECK(max_abs_diff(x2.value(), transform_points(x1.value(), r, t)) <= 1e-9);
  CHECK(max_abs_diff(h2.value(), h1.value()) <= 1e-9);
}

TEST_CASE("egcl is equivariant to point permutations") {
  Rng rng(303);
  const int m = 6;
  const int n = 3;
  const int nf = 2;
  egnn::EgclParams p = make_active_egcl(nf, 8, rng);
  const Tensor x = rng.normal_tensor(m, n);
  const Tensor h = rng.normal_tensor(m, nf);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};

  auto [x1, h1] =
      egnn::egcl_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  auto [x2, h2] = egnn::egcl_forward(p, ad::Var(permute_rows(x, perm)),
                                     ad::Var(permute_rows(h, perm)),
                                     EdgeMode::kInferred);

  // Summation order inside the aggregation differs between the two runs, so
  // allow roundoff-level slack.
  CHECK(max_abs_diff(x2.value(), permute_rows(x1.value(), perm)) <= 1e-12);
  CHECK(max_abs_diff(h2.value(), permute_rows(h1.value(), perm)) <= 1e-12);
}

TEST_CASE("fresh egcl starts as the identity on coordinates") {
  Rng rng(404);
  egnn::EgclParams p = egnn::make_egcl(2, 8, rng);
  const Tensor x = rng.normal_tensor(5, 3);
  const Tensor h = rng.normal_tensor(5, 2);
  auto [x1, h1] =
      egnn::egcl_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  CHECK(max_abs_diff(x1.value(), x) == 0.0);
  CHECK(h1.value().all_finite());
}

TEST_CASE("single point passes coordinates through") {
  Rng rng(505);
  egnn::EgclParams p = make_active_egcl(2, 8, rng);
  const Tensor x = rng.normal_tensor(1, 3);
  const Tensor h = rng.normal_tensor(1, 2);
  auto [x1, h1] =
      egnn::egcl_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  CHECK(max_abs_diff(x1.value(), x) == 0.0);
  CHECK(h1.value().rows() == 1);
  CHECK(h1.value().cols() == 2);
  CHECK(h1.value().all_finite());
}

TEST_CASE("featureless layer leaves h empty and moves x") {
  Rng rng(606);
  egnn::EgclParams p = make_active_egcl(0, 8, rng);
  const Tensor x = rng.normal_tensor(4, 2);
  auto [x1, h1] = egnn::egcl_forward(p, ad::Var(x), ad::Var(Tensor(4, 0)),
                                     EdgeMode::kFullyConnected);
  CHECK(h1.value().rows() == 4);
  CHECK(h1.value().cols() == 0);
  CHECK(max_abs_diff(x1.value(), x) > 0.0);
  CHECK(x1.value().all_finite());
}

TEST_CASE("coincident points produce a finite update") {
  Rng rng(707);
  egnn::EgclParams p = make_active_egcl(2, 8, rng);
  Tensor x = rng.normal_tensor(3, 3);
  for (int c = 0; c < 3; ++c) x.at(1, c) = x.at(0, c);
  const Tensor h = rng.normal_tensor(3, 2);
  auto [x1, h1] =
      egnn::egcl_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  CHECK(x1.value().all_finite());
  CHECK(h1.value().all_finite());
}

TEST_CASE("non-finite inputs are rejected by name") {
  Rng rng(808);
  egnn::EgclParams p = egnn::make_egcl(2, 8, rng);
  Tensor x = rng.normal_tensor(3, 2);
  Tensor h = rng.normal_tensor(3, 2);
  Tensor bad_x = x;
  bad_x.at(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(egnn::egcl_forward(p, ad::Var(bad_x), ad::Var(h),
                                          EdgeMode::kInferred),
                       doctest::Contains("non-finite values in x"),
                       std::runtime_error);
  Tensor bad_h = h;
  bad_h.at(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(egnn::egcl_forward(p, ad::Var(x), ad::Var(bad_h),
                                          EdgeMode::kInferred),
                       doctest::Contains("non-finite values in h"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(egnn::egcl_forward(p, ad::Var(x), ad::Var(Tensor(2, 2)),
                                          EdgeMode::kInferred),
                       doctest::Contains("rows"), std::runtime_error);
}

TEST_CASE("edge modes change the aggregate") {
  Rng rng(909);
  egnn::EgclParams p = make_active_egcl(2, 8, rng);
  const Tensor x = rng.normal_tensor(4, 2);
  const Tensor h = rng.normal_tensor(4, 2);
  auto [x_fc, h_fc] = egnn::egcl_forward(p, ad::Var(x), ad::Var(h),
                                         EdgeMode::kFullyConnected);
  auto [x_inf, h_inf] =
      egnn::egcl_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  CHECK(max_abs_diff(x_fc.value(), x_inf.value()) == 0.0);
  CHECK(max_abs_diff(h_fc.value(), h_inf.value()) > 1e-6);
}

TEST_CASE("zero-layer egnn is the identity") {
  Rng rng(111);
  egnn::EgnnParams p = egnn::make_egnn(0, 2, 8, rng);
  const Tensor x = rng.normal_tensor(3, 2);
  const Tensor h = rng.normal_tensor(3, 2);
  auto [x1, h1] =
      egnn::egnn_forward(p, ad::Var(x), ad::Var(h), EdgeMode::kInferred);
  CHECK(max_abs_diff(x1.value(), x) == 0.0);
  CHECK(max_abs_diff(h1.value(), h) == 0.0);
}

TEST_CASE("egcl gradients match finite differences") {
  Rng rng(4242);
  const int m = 3;
  const int n = 2;
  const int nf = 2;
  egnn::EgclParams p = make_active_egcl(nf, 4, rng);
  ParamSet params;
  egnn::collect_params(p, "egcl", params);

  ad::Var x(rng.normal_tensor(m, n), true);
  ad::Var h(rng.normal_tensor(m, nf), true);
  const Tensor wx = rng.normal_tensor(m, n);
  const Tensor wh = rng.normal_tensor(m, nf);

  std::vector<ad::Var> leaves{x, h};
  for (const auto& [name, v] : params.items) leaves.push_back(v);

  for (const EdgeMode mode :
       {EdgeMode::kFullyConnected, EdgeMode::kInferred}) {
    auto [x1, h1] = egnn::egcl_forward(p, x, h, mode);
    ad::Var loss = ad::sum_all(x1 * ad::constant(wx)) +
                   ad::sum_all(h1 * ad::constant(wh));
    const ad::Gradients grads = ad::backward(loss);

    std::vector<double> flat;
    for (const ad::Var& leaf : leaves) {
      const Tensor& v = leaf.value();
      flat.insert(flat.end(), v.data(), v.data() + v.size());
    }
    auto eval = [&](const std::vector<double>& vals) {
      std::size_t pos = 0;
      for (ad::Var& leaf : leaves) {
        Tensor v(leaf.rows(), leaf.cols());
        for (std::int64_t i = 0; i < v.size(); ++i) v.data()[i] = vals[pos++];
        leaf.set_value(std::move(v));
      }
      ad::NoGradGuard off;
      auto [xo, ho] = egnn::egcl_forward(p, x, h, mode);
      return weighted_sum(xo, ho, wx, wh);
    };
    const std::vector<double> fd = oracle::central_grad(eval, flat, 1e-5);
    eval(flat);  // restore leaf values

    std::size_t pos = 0;
    for (const ad::Var& leaf : leaves) {
      const Tensor g = grads.value_or_zero(leaf);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        INFO("mode=", egnn::edge_mode_name(mode), " flat index ", pos);
        CHECK(oracle::rel_err(g.data()[i], fd[pos]) <= 1e-5);
        ++pos;
      }
    }
  }
}

TEST_CASE("gnf layer runs, differs with attention, permutes with its input") {
  Rng rng(2323);
  const int w = 6;
  const int m = 4;
  egnn::GnfLayerParams p = egnn::make_gnf_layer(w, rng);
  const Tensor h = rng.normal_tensor(m, w);

  const ad::Var plain = egnn::gnf_layer_forward(p, ad::Var(h), false);
  const ad::Var att = egnn::gnf_layer_forward(p, ad::Var(h), true);
  CHECK(plain.value().rows() == m);
  CHECK(plain.value().cols() == w);
  CHECK(max_abs_diff(plain.value(), att.value()) > 1e-6);

  const std::vector<int> perm{2, 0, 3, 1};
  const ad::Var permuted =
      egnn::gnf_layer_forward(p, ad::Var(permute_rows(h, perm)), true);
  CHECK(max_abs_diff(permuted.value(), permute_rows(att.value(), perm)) <=
        1e-12);

  // Single row: no pairs, so the update reduces to phi_h against zeros.
  const ad::Var single =
      egnn::gnf_layer_forward(p, ad::Var(rng.normal_tensor(1, w)), true);
  CHECK(single.value().all_finite());
}

TEST_CASE("gnf layer gradients match finite differences") {
  Rng rng(5151);
  const int w = 4;
  const int m = 3;
  egnn::GnfLayerParams p = egnn::make_gnf_layer(w, rng);
  ParamSet params;
  egnn::collect_params(p, "gnf", params);

  ad::Var h(rng.normal_tensor(m, w), true);
  const Tensor wh = rng.normal_tensor(m, w);

  std::vector<ad::Var> leaves{h};
  for (const auto& [name, v] : params.items) leaves.push_back(v);

  const ad::Var out = egnn::gnf_layer_forward(p, h, true);
  const ad::Var loss = ad::sum_all(out * ad::constant(wh));
  const ad::Gradients grads = ad::backward(loss);

  std::vector<double> flat;
  for (const ad::Var& leaf : leaves) {
    const Tensor& v = leaf.value();
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  }
  auto eval = [&](const std::vector<double>& vals) {
    std::size_t pos = 0;
    for (ad::Var& leaf : leaves) {
      Tensor v(leaf.rows(), leaf.cols());
      for (std::int64_t i = 0; i < v.size(); ++i) v.data()[i] = vals[pos++];
      leaf.set_value(std::move(v));
    }
    ad::NoGradGuard off;
    const ad::Var o = egnn::gnf_layer_forward(p, h, true);
    return ad::sum_all(o * ad::constant(wh)).value().item();
  };
  const std::vector<double> fd = oracle::central_grad(eval, flat, 1e-5);
  eval(flat);

  std::size_t pos = 0;
  for (const ad::Var& leaf : leaves) {
    const Tensor g = grads.value_or_zero(leaf);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      INFO("flat index ", pos);
      CHECK(oracle::rel_err(g.data()[i], fd[pos]) <= 1e-5);
      ++pos;
    }
  }
}

TEST_CASE("edge mode names round trip") {
  CHECK(egnn::edge_mode_from_name("inferred") == EdgeMode::kInferred);
  CHECK(egnn::edge_mode_from_name("fully_connected") ==
        EdgeMode::kFullyConnected);
  CHECK(std::string(egnn::edge_mode_name(EdgeMode::kInferred)) == "inferred");
  CHECK_THROWS_AS(egnn::edge_mode_from_name("nope"), std::invalid_argument);
}
