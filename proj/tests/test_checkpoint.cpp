#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "enflow/checkpoint.hpp"
#include "enflow/rng.hpp"

using enflow::Checkpoint;
using enflow::ParamSet;
using enflow::Rng;
using enflow::Tensor;
namespace ad = enflow::ad;

TEST_CASE("checkpoint round-trips doubles exactly") {
  Checkpoint ck;
  Tensor awkward(1, 8,
                 {0.1, -0.0, 1e-308, 1e308, 3.141592653589793,
                  -2.2250738585072014e-308, 1.0 / 3.0,
                  std::nextafter(1.0, 2.0)});
  ck.tensors.emplace("awkward", awkward);
  Rng rng(31);
  ck.tensors.emplace("blob", rng.normal_tensor(7, 5));
  ck.meta["system"] = "dw4";
  ck.meta["note"] = "value with spaces and = signs";

  std::ostringstream os;
  ck.write(os);
  std::istringstream is(os.str());
  Checkpoint back = Checkpoint::read(is);

  REQUIRE(back.tensors.count("awkward") == 1);
  REQUIRE(back.tensors.count("blob") == 1);
  const Tensor& a = back.tensors.at("awkward");
  for (int i = 0; i < 8; ++i) {
    // bitwise identity, including the sign of zero
    CHECK(std::memcmp(&a.data()[i], &awkward.data()[i], sizeof(double)) == 0);
  }
  CHECK(enflow::max_abs_diff(back.tensors.at("blob"),
                             ck.tensors.at("blob")) == 0.0);
  CHECK(back.meta.at("system") == "dw4");
  CHECK(back.meta.at("note") == "value with spaces and = signs");
}

TEST_CASE("checkpoint read failures are descriptive") {
  {
    std::istringstream is("bogus header\n");
    CHECK_THROWS_WITH_AS(Checkpoint::read(is), doctest::Contains("header"),
                         std::runtime_error);
  }
  {
    std::istringstream is("enflow-checkpoint 1\ntensor t 2 2\n1 2\n");
    CHECK_THROWS(Checkpoint::read(is));
  }
  {
    // no end marker
    std::istringstream is("enflow-checkpoint 1\nmeta a b\n");
    CHECK_THROWS_WITH_AS(Checkpoint::read(is), doctest::Contains("end"),
                         std::runtime_error);
  }
  {
    std::istringstream is("enflow-checkpoint 1\ntensor t 1 2\n1 oops\nend\n");
    CHECK_THROWS_WITH_AS(Checkpoint::read(is), doctest::Contains("oops"),
                         std::runtime_error);
  }
}

TEST_CASE("params round trip through a checkpoint by name") {
  Rng rng(32);
  ParamSet ps;
  ad::Var w(rng.normal_tensor(3, 4), true);
  ad::Var b(rng.normal_tensor(1, 4), true);
  ps.add("layer.weight", w);
  ps.add("layer.bias", b);

  Checkpoint ck = enflow::checkpoint_from_params(ps);
  std::ostringstream os;
  ck.write(os);
  std::istringstream is(os.str());
  Checkpoint back = Checkpoint::read(is);

  Tensor w_orig = w.value();
  w.set_value(Tensor::zeros(3, 4));
  enflow::params_from_checkpoint(ps, back);
  CHECK(enflow::max_abs_diff(w.value(), w_orig) == 0.0);
}

TEST_CASE("param loading rejects missing, extra, and misshapen tensors") {
  Rng rng(33);
  ParamSet ps;
  ad::Var w(rng.normal_tensor(2, 2), true);
  ps.add("w", w);

  Checkpoint missing;
  CHECK_THROWS_WITH_AS(enflow::params_from_checkpoint(ps, missing),
                       doctest::Contains("count"), std::runtime_error);

  Checkpoint wrong_name;
  wrong_name.tensors.emplace("v", Tensor::zeros(2, 2));
  CHECK_THROWS_WITH_AS(enflow::params_from_checkpoint(ps, wrong_name),
                       doctest::Contains("missing"), std::runtime_error);

  Checkpoint bad_shape;
  bad_shape.tensors.emplace("w", Tensor::zeros(2, 3));
  CHECK_THROWS_WITH_AS(enflow::params_from_checkpoint(ps, bad_shape),
                       doctest::Contains("shape"), std::runtime_error);
}
