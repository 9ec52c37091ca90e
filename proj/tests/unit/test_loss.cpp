#include <doctest.h>

#include <cmath>
#include <random>

#include "valunlearn/errors.hpp"
#include "valunlearn/loss.hpp"

using namespace valunlearn;

TEST_CASE("logistic loss values") {
  const LossKind loss = LossKind::logistic();
  CHECK(loss.value(0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(loss.first(0.0, 1.0) == doctest::Approx(-0.5));
  CHECK(loss.first(0.0, -1.0) == doctest::Approx(0.5));
  CHECK(loss.second(0.0, 1.0) == doctest::Approx(0.25));
  // No overflow for large margins in either direction.
  CHECK(loss.value(800.0, 1.0) == doctest::Approx(0.0));
  CHECK(loss.value(-800.0, 1.0) == doctest::Approx(800.0));
  CHECK(std::isfinite(loss.first(-800.0, 1.0)));
  CHECK(loss.second(800.0, 1.0) >= 0.0);
}

TEST_CASE("huberized svm zones") {
  const LossKind loss = LossKind::huberized_svm();
  REQUIRE(loss.gamma == 2.0);
  // Flat zone u > 1.
  CHECK(loss.value(1.5, 1.0) == 0.0);
  CHECK(loss.first(1.5, 1.0) == 0.0);
  CHECK(loss.second(1.5, 1.0) == 0.0);
  // Quadratic zone -1 < u <= 1.
  CHECK(loss.value(0.0, 1.0) == doctest::Approx(0.25));
  CHECK(loss.first(0.0, 1.0) == doctest::Approx(-0.5));
  CHECK(loss.second(0.0, 1.0) == doctest::Approx(0.5));
  // Linear zone u <= -1: derivative of 1 - u - gamma/2 in s is -y.
  CHECK(loss.value(-3.0, 1.0) == doctest::Approx(3.0));
  CHECK(loss.first(-3.0, 1.0) == doctest::Approx(-1.0));
  CHECK(loss.first(3.0, -1.0) == doctest::Approx(1.0));
  CHECK(loss.second(-3.0, 1.0) == 0.0);
  // Continuity at both knots.
  CHECK(loss.value(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(loss.value(-1.0, 1.0) == doctest::Approx(1.0));
  CHECK(loss.value(-1.0 - 1e-12, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("squared surrogate") {
  const LossKind loss = LossKind::squared();
  CHECK(loss.value(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(loss.first(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(loss.second(3.0, -1.0) == 1.0);
  CHECK(loss.beta == 0.0);
}

TEST_CASE("first and second derivatives match central differences in the score") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> score(-4.0, 4.0);
  const double h = 1e-5;
  for (const LossKind& loss : {LossKind::logistic(), LossKind::huberized_svm(), LossKind::squared()}) {
    for (int i = 0; i < 200; ++i) {
      const double s = score(rng);
      const double y = i % 2 ? 1.0 : -1.0;
      if (loss.type == LossType::HuberizedSvm && (std::abs(y * s - 1.0) < 1e-3 || std::abs(y * s + 1.0) < 1e-3)) {
        continue;
      }
      const double fd1 = (loss.value(s + h, y) - loss.value(s - h, y)) / (2 * h);
      const double fd2 = (loss.first(s + h, y) - loss.first(s - h, y)) / (2 * h);
      CHECK(loss.first(s, y) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(loss.second(s, y) == doctest::Approx(fd2).epsilon(1e-6));
    }
  }
}

TEST_CASE("parse and names") {
  CHECK(LossKind::parse("logistic").type == LossType::Logistic);
  CHECK(LossKind::parse("lr").type == LossType::Logistic);
  CHECK(LossKind::parse("huber-svm").type == LossType::HuberizedSvm);
  CHECK(LossKind::parse("svm").type == LossType::HuberizedSvm);
  CHECK(LossKind::parse("squared").type == LossType::Squared);
  CHECK(LossKind::parse(LossKind::huberized_svm().name()).type == LossType::HuberizedSvm);
  CHECK_THROWS_AS(LossKind::parse("hinge"), InvalidArgument);
}

TEST_CASE("validation rejects bad constants") {
  LossKind loss = LossKind::huberized_svm();
  loss.gamma = 0.0;
  CHECK_THROWS_AS(loss.validate(), InvalidArgument);
  loss = LossKind::logistic();
  loss.C = -1.0;
  CHECK_THROWS_AS(loss.validate(), InvalidArgument);
  CHECK_NOTHROW(LossKind::logistic().validate());
}
