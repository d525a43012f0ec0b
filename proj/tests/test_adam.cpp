#include <cmath>

#include "doctest.h"
#include "openad/adam.hpp"
#include "openad/error.hpp"

using namespace openad;

namespace {

// Scalar Adam in long double, written from the recurrences.
struct ScalarAdam {
  long double lr, b1, b2, eps, decay;
  bool decoupled;
  long double m = 0, v = 0;
  int t = 0;
  long double step(long double theta, long double g) {
    ++t;
    if (!decoupled) g += decay * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const long double mh = m / (1 - std::pow(b1, (long double)t));
    const long double vh = v / (1 - std::pow(b2, (long double)t));
    if (decoupled) theta -= lr * decay * theta;
    return theta - lr * mh / (std::sqrt(vh) + eps);
  }
};

ParameterStore scalar_store(double theta) {
  ParameterStore s;
  s.add("theta", Matrix(1, 1, theta), true);
  return s;
}

}  // namespace

TEST_CASE("first Adam step moves by the learning rate") {
  ParameterStore s = scalar_store(0.0);
  s.at(0).grad(0, 0) = 1.0;
  Adam adam;
  adam.step(s);
  CHECK(s.at(0).value(0, 0) == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(s.at(0).grad(0, 0) == 0.0);
  CHECK(adam.steps() == 1);
}

TEST_CASE("zero gradient at zero is a fixed point") {
  ParameterStore s = scalar_store(0.0);
  s.add("w", Matrix(2, 2), true);
  Adam adam;
  for (int i = 0; i < 5; ++i) adam.step(s);
  CHECK(s.at(0).value(0, 0) == 0.0);
  CHECK(s.at(1).value == Matrix(2, 2));
}

TEST_CASE("Adam on a quadratic matches the scalar recurrences") {
  for (bool decoupled : {false, true}) {
    AdamConfig config;
    config.decoupled_weight_decay = decoupled;
    config.learning_rate = 0.05;
    ParameterStore s = scalar_store(1.0);
    Adam adam(config);
    ScalarAdam oracle{0.05L, 0.9L, 0.999L, 1e-8L, 1e-4L, decoupled};
    long double theta = 1.0L;
    for (int t = 0; t < 3; ++t) {
      s.at(0).grad(0, 0) = s.at(0).value(0, 0);  // d/dθ of θ²/2
      adam.step(s);
      theta = oracle.step(theta, theta);
      CHECK(std::abs(s.at(0).value(0, 0) - double(theta)) < 1e-14);
    }
  }
}

TEST_CASE("Adam skips frozen parameters and rejects bad gradients") {
  ParameterStore s = scalar_store(2.0);
  s.add("frozen", Matrix(1, 2, 3.0), false);
  s.at(0).grad(0, 0) = 0.5;
  Adam adam;
  adam.step(s);
  CHECK(s.at(1).value == Matrix(1, 2, 3.0));

  s.at(0).grad(0, 0) = std::nan("");
  const double before = s.at(0).value(0, 0);
  CHECK_THROWS_WITH_AS(adam.step(s), doctest::Contains("theta"), Error);
  CHECK(s.at(0).value(0, 0) == before);
}
