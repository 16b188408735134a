#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "mweparse/errors.hpp"
#include "mweparse/tensor.hpp"

using namespace mweparse;
using testutil::grad_check;
using testutil::random_tensor;
using testutil::Rng;

TEST_CASE("matmul identity and 1x2 c 2x1") {
  Tensor id = Tensor::from_rows({{1, 0}, {0, 1}});
  Tensor b = Tensor::from_rows({{2, 3}, {4, 5}});
  Tensor c = matmul(id, b);
  CHECK(c.at(0, 0) == 2);
  CHECK(c.at(0, 1) == 3);
  CHECK(c.at(1, 0) == 4);
  CHECK(c.at(1, 1) == 5);

  Tensor r = matmul(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3}, {4}}));
  CHECK(r.item() == 11);
}

TEST_CASE("matmul shape error names both shapes") {
  Tensor a = Tensor::zeros(2, 3);
  Tensor b = Tensor::zeros(2, 3);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("matmul gradient vs finite differences") {
  Rng rng(7);
  Tensor a = random_tensor(rng, 3, 3, true);
  Tensor b = random_tensor(rng, 3, 3, true);
  double err = grad_check({a, b}, [&] { return sum(matmul(a, b)); });
  CHECK(err < 1e-6);
}

TEST_CASE("elementwise basics") {
  Tensor z = Tensor::zeros(2, 2);
  Tensor t = tanh(z);
  for (double v : t.data()) CHECK(v == 0.0);

  Tensor r = relu(Tensor::from_rows({{-1, 2}}));
  CHECK(r.at(0, 0) == 0);
  CHECK(r.at(0, 1) == 2);

  Tensor a = Tensor::from_rows({{1, 2}});
  CHECK_THROWS_AS(add(a, Tensor::zeros(2, 2)), ShapeError);
  CHECK_THROWS_AS(mul(a, Tensor::zeros(2, 1)), ShapeError);
}

TEST_CASE("tanh derivative at zero is exactly one") {
  Tensor x = Tensor::zeros(1, 1, true);
  Tensor y = tanh(x);
  backward(sum(y));
  CHECK(x.grad()[0] == 1.0);

  double err = grad_check({x}, [&] { return sum(tanh(x)); }, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("elementwise gradients vs finite differences") {
  Rng rng(11);
  Tensor a = random_tensor(rng, 2, 3, true);
  Tensor b = random_tensor(rng, 2, 3, true);
  CHECK(grad_check({a, b}, [&] { return sum(mul(add(a, b), tanh(a))); }) < 1e-6);
  CHECK(grad_check({a}, [&] { return sum(scale(relu(a), 0.7)); }) < 1e-6);
}

TEST_CASE("gather_rows identity and duplicate accumulation") {
  Tensor table = Tensor::from_rows({{1.5, -2.0}});
  Tensor g = gather_rows(table, {0});
  CHECK(g.at(0, 0) == 1.5);
  CHECK(g.at(0, 1) == -2.0);

  Tensor t2 = Tensor::from_rows({{0, 0}, {0, 0}, {3, 4}}, true);
  Tensor out = gather_rows(t2, {2, 2});
  backward(sum(out));
  // both output rows feed the same table row
  CHECK(t2.grad()[2 * 2 + 0] == 2.0);
  CHECK(t2.grad()[2 * 2 + 1] == 2.0);
  CHECK(t2.grad()[0] == 0.0);
}

TEST_CASE("gather_rows rejects out-of-range id") {
  Tensor table = Tensor::zeros(3, 2);
  CHECK_THROWS_WITH_AS(gather_rows(table, {0, 3}), doctest::Contains("3"), IndexError);
}

TEST_CASE("gather_rows gradient vs finite differences") {
  Rng rng(13);
  Tensor table = random_tensor(rng, 4, 3, true);
  std::vector<int> ids{1, 3, 1, 0};
  CHECK(grad_check({table}, [&] { return sum(tanh(gather_rows(table, ids))); }) < 1e-6);
}

TEST_CASE("softmax_cross_entropy uniform logits") {
  Tensor logits = Tensor::zeros(3, 4);
  Tensor loss = softmax_cross_entropy(logits, {0, 1, 3}, {true, true, true});
  CHECK(loss.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy masking") {
  Tensor logits = Tensor::from_rows({{0.3, -1.0, 0.2}, {0.3, -1.0, 0.2}});
  Tensor both = softmax_cross_entropy(logits, {2, 2}, {true, true});
  Tensor one = softmax_cross_entropy(logits, {2, 2}, {true, false});
  CHECK(one.item() == doctest::Approx(both.item()).epsilon(1e-15));

  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 0}, {false, false}),
                  DegenerateInputError);
}

TEST_CASE("softmax_cross_entropy gradient is (softmax - onehot)/k and masked rows stay zero") {
  Rng rng(17);
  Tensor logits = random_tensor(rng, 3, 5, true);
  std::vector<int> targets{4, 0, 2};
  std::vector<bool> mask{true, false, true};
  Tensor loss = softmax_cross_entropy(logits, targets, mask);
  backward(loss);
  for (int j = 0; j < 5; ++j) CHECK(logits.grad()[1 * 5 + j] == 0.0);

  Tensor sm = softmax_rows(logits);
  for (int i : {0, 2}) {
    for (int j = 0; j < 5; ++j) {
      double expect = (sm.at(i, j) - (targets[i] == j ? 1.0 : 0.0)) / 2.0;
      CHECK(logits.grad()[i * 5 + j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(grad_check({logits}, [&] {
          return softmax_cross_entropy(logits, targets, mask);
        }) < 1e-6);
}

TEST_CASE("softmax_rows rows sum to one") {
  Rng rng(19);
  Tensor a = random_tensor(rng, 4, 6, false, -5, 5);
  Tensor s = softmax_rows(a);
  for (int i = 0; i < 4; ++i) {
    double total = 0;
    for (int j = 0; j < 6; ++j) total += s.at(i, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax_rows, transpose, add_row, concat_rows gradients") {
  Rng rng(23);
  Tensor a = random_tensor(rng, 3, 4, true);
  Tensor b = random_tensor(rng, 2, 4, true);
  Tensor row = random_tensor(rng, 1, 4, true);
  CHECK(grad_check({a}, [&] { return sum(mul(softmax_rows(a), a)); }) < 1e-6);
  CHECK(grad_check({a}, [&] { return sum(tanh(transpose(a))); }) < 1e-6);
  CHECK(grad_check({a, row}, [&] { return sum(tanh(add_row(a, row))); }) < 1e-6);
  CHECK(grad_check({a, b}, [&] { return sum(tanh(concat_rows(a, b))); }) < 1e-6);
}

TEST_CASE("backward identity and fan-out accumulation") {
  Tensor x = Tensor::from_rows({{2.5}}, true);
  backward(sum(x));
  CHECK(x.grad()[0] == 1.0);

  Tensor y = Tensor::from_rows({{1, 2, 3}}, true);
  backward(sum(add(y, y)));
  for (double g : y.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward rejects non-scalar root") {
  Tensor x = Tensor::zeros(2, 2, true);
  CHECK_THROWS_AS(backward(add(x, x)), ContractError);
}

TEST_CASE("forward+backward is bit-deterministic") {
  auto run = [] {
    Rng rng(101);
    Tensor a = random_tensor(rng, 4, 4, true);
    Tensor b = random_tensor(rng, 4, 4, true);
    Tensor loss = sum(mul(softmax_rows(matmul(a, tanh(b))), matmul(a, b)));
    backward(loss);
    std::vector<double> flat = a.grad();
    flat.insert(flat.end(), b.grad().begin(), b.grad().end());
    flat.push_back(loss.item());
    return flat;
  };
  auto g1 = run();
  auto g2 = run();
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("forward ops keep finite values on finite inputs") {
  Rng rng(29);
  Tensor a = random_tensor(rng, 5, 5, false, -50, 50);
  for (double v : softmax_rows(a).data()) CHECK(std::isfinite(v));
  for (double v : tanh(a).data()) CHECK(std::isfinite(v));
  Tensor big = Tensor::from_rows({{700.0, -700.0}});
  CHECK(std::isfinite(softmax_cross_entropy(big, {1}, {true}).item()));
}
