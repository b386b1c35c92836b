#include <limits>

#include "doctest.h"
#include "enflow/tensor.hpp"

using enflow::Tensor;

TEST_CASE("tensor construction and element access") {
  Tensor t(2, 3);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(t.at(r, c) == 0.0);
  }
  t.at(1, 2) = 5.5;
  CHECK(t.at(1, 2) == 5.5);
  CHECK(t.data()[5] == 5.5);  // row-major layout

  Tensor u(2, 2, {1.0, 2.0, 3.0, 4.0});
  CHECK(u.at(0, 1) == 2.0);
  CHECK(u.at(1, 0) == 3.0);
}

TEST_CASE("tensor factories") {
  CHECK(Tensor::scalar(3.0).item() == 3.0);
  CHECK(Tensor::ones(2, 2).at(1, 1) == 1.0);
  CHECK(Tensor::full(1, 3, -2.5).at(0, 2) == -2.5);
  CHECK(Tensor::zeros(4, 1).size() == 4);
}

TEST_CASE("tensor error contracts") {
  CHECK_THROWS(Tensor(-1, 2));
  CHECK_THROWS(Tensor(2, 2, {1.0, 2.0}));
  CHECK_THROWS(Tensor::ones(2, 2).item());
  CHECK_THROWS(enflow::max_abs_diff(Tensor(2, 2), Tensor(2, 3)));
}

TEST_CASE("tensor empty shapes are legal") {
  Tensor e(0, 3);
  CHECK(e.size() == 0);
  CHECK(e.all_finite());
  Tensor z(3, 0);
  CHECK(z.size() == 0);
  CHECK(enflow::max_abs_diff(e, Tensor(0, 3)) == 0.0);
}

TEST_CASE("tensor finiteness scan") {
  Tensor t(1, 2, {1.0, 2.0});
  CHECK(t.all_finite());
  t.at(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
  t.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}
