#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "support.hpp"
#include "valunlearn/errors.hpp"
#include "valunlearn/model.hpp"

using namespace valunlearn;
using testsupport::random_dataset;
using testsupport::random_vector;

namespace {

// Plain gradient descent with a fixed step, run far past the library tolerance.
Vector gradient_descent_oracle(const Dataset& data, const Objective& objective, double step, double tol) {
  Vector w = Vector::Zero(data.dim());
  for (int it = 0; it < 2'000'000; ++it) {
    Vector g = objective.lambda * w;
    for (Index i = 0; i < data.size(); ++i) {
      g += objective.loss.first(data.row(i).dot(w), data.label(i)) * data.row(i).transpose() /
           static_cast<double>(data.size());
    }
    if (g.norm() <= tol) break;
    w -= step * g;
  }
  return w;
}

}  // namespace

TEST_CASE("per-sample gradient closed forms") {
  const Vector x = (Vector(3) << 0.2, -0.4, 0.1).finished();
  const Vector w0 = Vector::Zero(3);
  const Vector g = per_sample_gradient(w0, LossKind::logistic(), x, 1.0);
  CHECK((g - (-0.5 * x)).norm() < 1e-15);
  const Vector g_neg = per_sample_gradient(w0, LossKind::logistic(), x, -1.0);
  CHECK((g_neg - 0.5 * x).norm() < 1e-15);

  // Linear zone of the huberized hinge: u = y w.x <= -1.
  const Vector w = -10.0 * x;
  REQUIRE(w.dot(x) <= -1.0);
  const Vector gh = per_sample_gradient(w, LossKind::huberized_svm(), x, 1.0);
  CHECK((gh - (-x)).norm() < 1e-15);

  CHECK_THROWS_AS(per_sample_gradient(Vector::Zero(2), LossKind::logistic(), x, 1.0), InvalidArgument);
}

TEST_CASE("per-sample hessian closed forms") {
  const Vector x = (Vector(3) << 0.2, -0.4, 0.1).finished();
  const Matrix h = per_sample_hessian(Vector::Zero(3), LossKind::logistic(), x, 1.0);
  CHECK((h - 0.25 * x * x.transpose()).norm() < 1e-15);
  const Matrix flat = per_sample_hessian(10.0 * x, LossKind::huberized_svm(), x, 1.0);
  CHECK(flat.norm() == 0.0);
  const Matrix quad = per_sample_hessian(Vector::Zero(3), LossKind::huberized_svm(), x, 1.0);
  CHECK((quad - 0.5 * x * x.transpose()).norm() < 1e-15);
}

TEST_CASE("gradients match central differences on random probes") {
  const double h = 1e-5;
  int probes = 0;
  for (const LossKind& loss : {LossKind::logistic(), LossKind::huberized_svm()}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Vector w = random_vector(6, 1000 + seed);
      const Vector x = random_vector(6, 2000 + seed, 0.4);
      const double y = seed % 2 ? 1.0 : -1.0;
      const double u = y * w.dot(x);
      if (loss.type == LossType::HuberizedSvm && (std::abs(u - 1) < 1e-3 || std::abs(u + 1) < 1e-3)) continue;
      const Vector g = per_sample_gradient(w, loss, x, y);
      Vector fd(6);
      for (Index j = 0; j < 6; ++j) {
        Vector wp = w, wm = w;
        wp(j) += h;
        wm(j) -= h;
        fd(j) = (loss.value(wp.dot(x), y) - loss.value(wm.dot(x), y)) / (2 * h);
      }
      CHECK((g - fd).norm() <= 1e-5 * std::max(g.norm(), 1e-8));
      ++probes;
    }
  }
  CHECK(probes >= 190);
}

TEST_CASE("full hessian matches finite differences of the full gradient and is convex") {
  const Dataset data = random_dataset(60, 5, 11);
  Objective objective;
  objective.lambda = 0.01;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector w = random_vector(5, 50 + seed);
    const Matrix H = full_hessian(w, objective, data);
    const double h = 1e-5;
    Matrix fd(5, 5);
    for (Index j = 0; j < 5; ++j) {
      Vector wp = w, wm = w;
      wp(j) += h;
      wm(j) -= h;
      fd.col(j) = (objective_gradient(wp, objective, data) - objective_gradient(wm, objective, data)) / (2 * h);
    }
    CHECK((H - fd).norm() <= 1e-4 * H.norm());
    CHECK((H - H.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    CHECK(eig.eigenvalues().minCoeff() >= objective.lambda - 1e-8);
  }
}

TEST_CASE("full hessian at zero and for one point") {
  const Dataset data = random_dataset(10, 3, 3);
  Objective objective;
  Matrix expect = Matrix::Zero(3, 3);
  for (Index i = 0; i < data.size(); ++i) expect += 0.25 * data.row(i).transpose() * data.row(i);
  expect /= 10.0;
  expect += objective.lambda * Matrix::Identity(3, 3);
  CHECK((full_hessian(Vector::Zero(3), objective, data) - expect).norm() < 1e-14);

  const std::vector<Index> one{4};
  const Dataset single = data.subset(one);
  const Vector w = random_vector(3, 9);
  const Matrix h1 = per_sample_hessian(w, objective.loss, single.row(0).transpose(), single.label(0)) +
                    objective.lambda * Matrix::Identity(3, 3);
  CHECK((full_hessian(w, objective, single) - h1).norm() < 1e-14);
  CHECK_THROWS_AS(full_hessian(w, objective, Dataset(3)), InvalidArgument);
}

TEST_CASE("per-sample gradient norm stays below C on normalized data") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (const LossKind& loss : {LossKind::logistic(), LossKind::huberized_svm()}) {
    for (int i = 0; i < 1000; ++i) {
      Vector x = random_vector(8, 10'000 + static_cast<std::uint64_t>(i));
      x /= std::max(1.0, x.norm());
      const Vector w = random_vector(8, 20'000 + static_cast<std::uint64_t>(i), 5.0);
      const double y = normal(rng) > 0 ? 1.0 : -1.0;
      CHECK(per_sample_gradient(w, loss, x, y).norm() <= loss.C + 1e-12);
    }
  }
}

TEST_CASE("train: symmetric pair gives zero") {
  FeatureMatrix x(2, 2);
  x << 0.3, -0.6, 0.3, -0.6;
  const Dataset data(x, (Vector(2) << 1.0, -1.0).finished());
  const ModelState model = train(data, Objective{});
  CHECK(model.w.norm() < 1e-8);
}

TEST_CASE("train: quadratic surrogate with perturbation solves the normal equations") {
  const Dataset data = random_dataset(80, 4, 21);
  Objective objective;
  objective.loss = LossKind::squared();
  objective.lambda = 0.05;
  objective.perturbation = random_vector(4, 77, 0.1);
  const ModelState model = train(data, objective, TrainOptions{1e-12, 1000, 10});
  const Matrix X = data.features();
  const Matrix A = X.transpose() * X / 80.0 + objective.lambda * Matrix::Identity(4, 4);
  const Vector rhs = X.transpose() * data.labels() / 80.0 - *objective.perturbation;
  const Vector exact = A.llt().solve(rhs);
  CHECK((model.w - exact).norm() <= 1e-10 * exact.norm());
}

TEST_CASE("train matches a long gradient-descent run") {
  const Dataset data = random_dataset(200, 5, 31);
  for (const LossKind& loss : {LossKind::logistic(), LossKind::huberized_svm()}) {
    Objective objective;
    objective.loss = loss;
    objective.lambda = 0.01;
    const ModelState model = train(data, objective, TrainOptions{1e-10, 1000, 10});
    CHECK(objective_gradient(model.w, objective, data).norm() <= 1e-10);
    const Vector oracle = gradient_descent_oracle(data, objective, 1.0, 1e-11);
    CHECK((model.w - oracle).norm() <= 1e-6);
    CHECK((model.H - full_hessian(model.w, objective, data)).norm() < 1e-14);
  }
}

TEST_CASE("train is deterministic and reports non-convergence") {
  const Dataset data = random_dataset(100, 4, 41);
  Objective objective;
  const ModelState a = train(data, objective);
  const ModelState b = train(data, objective);
  CHECK(a.w == b.w);
  try {
    (void)train(data, objective, TrainOptions{1e-14, 1, 10});
    FAIL("expected ConvergenceFailure");
  } catch (const ConvergenceFailure& e) {
    CHECK(e.residual() > 1e-14);
  }
}

TEST_CASE("evaluate: confusion-matrix arithmetic") {
  FeatureMatrix x(4, 1);
  x << 1.0, 2.0, -1.0, -2.0;
  const Dataset perfect(x, (Vector(4) << 1, 1, -1, -1).finished());
  const Metrics m = evaluate((Vector(1) << 1.0).finished(), perfect);
  CHECK(m.accuracy == 1.0);
  CHECK(m.misclassification_cost == 0.0);

  // w = 0 predicts +1 everywhere (tie rule).
  const Metrics all_pos = evaluate(Vector::Zero(1), perfect);
  CHECK(all_pos.accuracy == 0.5);
  CHECK(all_pos.recall == 1.0);
  CHECK(all_pos.precision == 0.5);
  CHECK(evaluate(Vector::Zero(1), perfect, 3.0, 1.0).misclassification_cost == doctest::Approx(1.5));
}

TEST_CASE("evaluate matches direct counting") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset test = random_dataset(97, 4, 300 + seed, 2.0);
    const Vector w = random_vector(4, 400 + seed);
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (Index i = 0; i < test.size(); ++i) {
      const bool pos = test.row(i).dot(w) >= 0;
      const bool truth = test.label(i) > 0;
      tp += pos && truth;
      fp += pos && !truth;
      fn += !pos && truth;
      tn += !pos && !truth;
    }
    const Metrics m = evaluate(w, test, 2.0, 5.0);
    CHECK(m.accuracy == (tp + tn) / 97.0);
    CHECK(m.precision == (tp + fp > 0 ? tp / (tp + fp) : 0.0));
    CHECK(m.recall == (tp + fn > 0 ? tp / (tp + fn) : 0.0));
    CHECK(m.misclassification_cost == doctest::Approx((2.0 * fp + 5.0 * fn) / 97.0).epsilon(1e-15));
  }
}
