#include <cmath>

#include "doctest.h"
#include "openad/error.hpp"
#include "openad/head.hpp"
#include "support.hpp"

using namespace openad;
using openad::testing::check_gradients;
using openad::testing::random_matrix;
using openad::testing::scalar_head;

namespace {

EmbeddingTable table_of(const Matrix& vectors) {
  EmbeddingTable t;
  for (std::size_t j = 0; j < vectors.rows(); ++j) t.labels.push_back("l" + std::to_string(j));
  t.vectors = vectors;
  return t;
}

ClassWeights unit_weights(std::size_t m) {
  ClassWeights w;
  w.weights.assign(m, 1.0);
  w.counts.assign(m, 1);
  return w;
}

}  // namespace

TEST_CASE("correlate by hand") {
  const Matrix p(3, 3, {2, 4, 6, 0, 1, 0, 1, 2, 2});
  const Matrix t(2, 3, {1, 2, 3, 2, 0, 0});
  const Matrix f = correlate(p, table_of(t));
  CHECK(std::abs(f(0, 0) - 1.0) < 1e-9);  // parallel
  CHECK(std::abs(f(1, 1)) < 1e-9);        // orthogonal
  CHECK(f(2, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("correlate matches a direct dot-product oracle") {
  Rng rng(4);
  const Matrix p = random_matrix(rng, 4, 8);
  const Matrix t = random_matrix(rng, 3, 8);
  const Matrix f = correlate(p, table_of(t));
  const auto oracle = scalar_head(p, t, 1.0L, {}, {});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(f(i, j) - double(oracle.correlation[i][j])) < 1e-12);
  }
}

TEST_CASE("correlate ignores feature and text magnitudes") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Matrix p = random_matrix(rng, 5, 6);
    const Matrix t = random_matrix(rng, 4, 6);
    Matrix p2 = p;
    for (double& v : p2.values()) v *= 37.5;
    Matrix t2 = t;
    for (std::size_t k = 0; k < 6; ++k) t2(2, k) *= 0.01;
    const Matrix a = correlate(p, table_of(t));
    const Matrix b = correlate(p2, table_of(t2));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-9);
  }
}

TEST_CASE("correlate errors") {
  CHECK_THROWS_WITH_AS(correlate(Matrix(2, 3), table_of(Matrix(1, 3, 1.0))),
                       doctest::Contains("degenerate point feature"), Error);
  CHECK_THROWS_AS(correlate(Matrix(2, 4, 1.0), table_of(Matrix(1, 3, 1.0))), Error);
}

TEST_CASE("scaled softmax values") {
  const auto uniform = scaled_softmax(Matrix(1, 4, 0.3), LogitScale{std::log(50.0)});
  for (double v : uniform.scores.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  const auto sharp = scaled_softmax(Matrix(1, 3, {0.2, 0.5, 0.4}), LogitScale{std::log(1000.0)});
  CHECK(std::abs(sharp.scores(0, 1) - 1.0) < 1e-6);
  CHECK(sharp.assignment[0] == 1);

  // exp(0.5 / 0.07) / (exp(0.5 / 0.07) + 1), evaluated in long double.
  const long double z = 0.5L / 0.07L;
  const long double expected = std::exp(z) / (std::exp(z) + 1.0L);
  const auto tiny_tau = scaled_softmax(Matrix(1, 2, {0.5, 0.0}), LogitScale{kInitialLogitScale});
  CHECK(std::abs(tiny_tau.scores(0, 0) - double(expected)) < 1e-12);
  // Seven-figure reference values from the same long double evaluation.
  CHECK(std::abs(tiny_tau.scores(0, 0) - 0.9992101) < 1e-7);
  CHECK(std::abs(tiny_tau.scores(0, 1) - 0.0007899) < 1e-7);
  CHECK(kInitialLogitScale == doctest::Approx(std::log(1.0 / 0.07)).epsilon(1e-15));
}

TEST_CASE("literal temperature divides by tau") {
  const LogitScale literal{0.5, TemperatureMode::kLiteral};
  CHECK(literal.scale() == 2.0);
  CHECK(literal.scale_derivative() == -4.0);
  const auto map = scaled_softmax(Matrix(1, 2, {0.5, 0.0}), literal);
  CHECK(map.scores(0, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-14));
}

TEST_CASE("softmax rows are stochastic and the argmax ignores the scale") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Matrix f = random_matrix(rng, 7, 5);
    const auto expected = argmax_rows(f);
    for (double s : {0.01, 1.0, 14.2857, 400.0}) {
      const auto map = scaled_softmax(f, LogitScale{std::log(s)});
      CHECK(map.assignment == expected);
      for (std::size_t i = 0; i < 7; ++i) {
        double total = 0;
        for (std::size_t j = 0; j < 5; ++j) total += map.scores(i, j);
        CHECK(std::abs(total - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax_rows(Matrix(2, 3, {1, 3, 3, 2, 2, 2})) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("class weights") {
  const std::vector<std::uint64_t> equal{5, 5, 5};
  for (double w : class_weights(equal).weights) CHECK(w == 1.0);
  const std::vector<std::uint64_t> cubes{800, 100};
  CHECK(class_weights(cubes).weights == std::vector<double>{1.0, 2.0});
  const std::vector<std::uint64_t> more{1000, 8, 1, 125};
  CHECK(class_weights(more).weights == std::vector<double>{1.0, 5.0, 10.0, 2.0});
  // Every exact-cube ratio gives an exact integer weight.
  for (std::uint64_t k = 1; k <= 200; ++k) {
    for (std::uint64_t base : {1, 3, 7, 100}) {
      const std::vector<std::uint64_t> pair{k * k * k * base, base};
      CHECK(class_weights(pair).weights[1] == static_cast<double>(k));
    }
  }
  const std::vector<std::uint64_t> absent{3, 0};
  CHECK_THROWS_WITH_AS(class_weights(absent), doctest::Contains("absent from training set"), Error);
}

TEST_CASE("weighted NLL special cases") {
  // Perfect prediction: log score 0 on the true class.
  Matrix log_scores(2, 2, {0.0, -1e300, -1e300, 0.0});
  const std::vector<std::uint32_t> labels{0, 1};
  CHECK(weighted_nll(log_scores, labels, unit_weights(2)) == 0.0);

  const auto map = scaled_softmax(Matrix(1, 37, 0.2), LogitScale{});
  const std::vector<std::uint32_t> one{5};
  CHECK(weighted_nll(map.log_scores, one, unit_weights(37)) == doctest::Approx(std::log(37.0)).epsilon(1e-14));
  CHECK(std::log(37.0) == doctest::Approx(3.610918).epsilon(1e-6));
}

TEST_CASE("head loss matches the scalar enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(5), d = 1 + rng.below(8);
    const Matrix p = random_matrix(rng, n, d);
    const Matrix t = random_matrix(rng, m, d);
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(m));
    std::vector<std::uint64_t> counts(m);
    for (auto& c : counts) c = 1 + rng.below(1000);
    const ClassWeights w = class_weights(counts);
    const double rho = rng.uniform(0.0, 3.0);

    const HeadLoss head = head_loss(p, table_of(t), LogitScale{rho}, labels, w);
    const auto oracle = scalar_head(p, t, std::exp(static_cast<long double>(rho)), labels, w.weights);
    CHECK(std::abs(head.loss - double(oracle.loss)) <= 1e-10 * std::max(1.0, double(std::abs(oracle.loss))));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(head.map.scores(i, j) - double(oracle.scores[i][j])) < 1e-10);
    }
  }
}

TEST_CASE("head loss gradients in both temperature modes") {
  for (TemperatureMode mode : {TemperatureMode::kLogScale, TemperatureMode::kLiteral}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const std::size_t n = 5, m = 3, d = 4;
      ParameterStore ps;
      ps.add("features", random_matrix(rng, n, d), true);
      ps.add("scale", Matrix(1, 1, mode == TemperatureMode::kLogScale ? rng.uniform(0, 3) : rng.uniform(0.2, 2)),
             true);
      const EmbeddingTable table = table_of(random_matrix(rng, m, d));
      std::vector<std::uint32_t> labels(n);
      for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(m));
      const std::vector<std::uint64_t> counts{40, 5, 17};
      const ClassWeights w = class_weights(counts);
      const auto report = openad::testing::check_gradients(ps, [&](ParameterStore& s, bool grad, std::uint64_t&) {
        const HeadLoss h = head_loss(s.at(0).value, table, LogitScale{s.at(1).value(0, 0), mode}, labels, w);
        if (grad) {
          s.at(0).grad = h.grad_features;
          s.at(1).grad(0, 0) = h.grad_scale_value;
        }
        return h.loss;
      });
      CHECK(report.max_relative_error() < 1e-4);
    }
  }
}

TEST_CASE("weighted NLL gradient and errors") {
  Rng rng(6);
  ParameterStore ps;
  ps.add("log_scores", random_matrix(rng, 4, 3, -4, -0.1), true);
  const std::vector<std::uint32_t> labels{0, 2, 1, 2};
  const std::vector<std::uint64_t> counts{8, 1, 27};
  const ClassWeights w = class_weights(counts);
  const auto report = check_gradients(ps, [&](ParameterStore& s, bool grad, std::uint64_t&) {
    return weighted_nll(s.at(0).value, labels, w, grad ? &s.at(0).grad : nullptr);
  });
  CHECK(report.max_relative_error() < 1e-6);

  Matrix bad(1, 2, {-std::numeric_limits<double>::infinity(), 0.0});
  const std::vector<std::uint32_t> zero{0};
  CHECK_THROWS_WITH_AS(weighted_nll(bad, zero, unit_weights(2)), doctest::Contains("point 0"), Error);
}

TEST_CASE("embedding table validation and selection") {
  EmbeddingTable t = table_of(Matrix(3, 2, {1, 0, 0, 1, 1, 1}));
  CHECK_NOTHROW(t.validate());
  const auto s = t.select({"l2", "l0"});
  CHECK(s.labels == std::vector<std::string>{"l2", "l0"});
  CHECK(s.vectors == Matrix(2, 2, {1, 1, 1, 0}));
  CHECK_THROWS_AS(t.select({"nope"}), Error);
  t.labels[1] = "l0";
  CHECK_THROWS_AS(t.validate(), Error);
  t.labels[1] = "l1";
  t.vectors(1, 0) = t.vectors(1, 1) = 0.0;
  CHECK_THROWS_AS(t.validate(), Error);
}
