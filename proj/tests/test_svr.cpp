#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"
#include "svr.hpp"

using namespace perfmap;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (auto& p : pts)
    for (double& v : p) v = rng.next_normal();
  return pts;
}

// Max violation of the stationarity conditions over admissible biases: the
// intersection of every point's allowed bias interval must be nonempty up to
// tol.
double kkt_violation(const std::vector<std::vector<double>>& points, const std::vector<double>& labels,
                     const SvrHyper& hyper, const std::vector<double>& beta) {
  const double C = hyper.C, eps = hyper.epsilon;
  const double tau = 1e-10 * std::max(1.0, C);
  double lo = -1e300, hi = 1e300;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double g = -labels[i];
    for (std::size_t j = 0; j < points.size(); ++j)
      g += beta[j] * kernel_eval(hyper.kernel, points[i], points[j]);
    double b = beta[i];
    if (b >= C - tau) {
      hi = std::min(hi, -eps - g);
    } else if (b > tau) {
      lo = std::max(lo, -eps - g);
      hi = std::min(hi, -eps - g);
    } else if (b >= -tau) {
      lo = std::max(lo, -eps - g);
      hi = std::min(hi, eps - g);
    } else if (b > -C + tau) {
      lo = std::max(lo, eps - g);
      hi = std::min(hi, eps - g);
    } else {
      lo = std::max(lo, eps - g);
    }
  }
  return lo - hi;  // <= 0 means every condition is satisfiable at once
}

}  // namespace

TEST_CASE("kernel_eval matches hand values and basic identities") {
  KernelSpec k{0.5};
  CHECK(kernel_eval(k, {0.0, 0.0}, {1.0, 1.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(kernel_eval(k, {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 1.0);
  KernelSpec tiny{1e-12};
  CHECK(kernel_eval(tiny, {0.0}, {100.0}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(kernel_eval(k, {1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("kernel is symmetric, bounded and one on the diagonal") {
  Rng rng(5);
  KernelSpec k{0.7};
  auto pts = random_points(rng, 12, 3);
  for (const auto& a : pts)
    for (const auto& b : pts) {
      double kab = kernel_eval(k, a, b);
      CHECK(kab == kernel_eval(k, b, a));
      CHECK(kab > 0.0);
      CHECK(kab <= 1.0);
    }
}

TEST_CASE("gram matrices are positive semidefinite") {
  Rng rng(6);
  for (int it = 0; it < 10; ++it) {
    KernelSpec k{rng.uniform(0.1, 2.0)};
    auto pts = random_points(rng, 8, 2 + rng.next_index(3));
    std::vector<std::vector<double>> gram(8, std::vector<double>(8));
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) gram[i][j] = kernel_eval(k, pts[i], pts[j]);
    CHECK(testing::cholesky_psd(gram, 1e-10));
  }
}

TEST_CASE("constant labels train to an all-zero dual with bias = constant") {
  Rng rng(7);
  auto pts = random_points(rng, 10, 3);
  std::vector<double> labels(10, 0.37);
  SvrHyper hyper{1.0, 0.05, {0.5}};
  TrainResult tr = train(pts, labels, hyper);
  CHECK(tr.converged);
  CHECK(tr.model.support_points.empty());
  CHECK(tr.model.bias == doctest::Approx(0.37).epsilon(1e-9));
  CHECK(predict(tr.model, pts[0]) == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("two points separated by more than 2*epsilon solve the dual in closed form") {
  // beta2 = (y2 - y1 - 2 eps) / (2 (1 - K12)) = -beta1, bias = (y1 + y2) / 2
  std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 1.0}};
  std::vector<double> labels = {0.1, 0.9};
  SvrHyper hyper{100.0, 0.1, {0.5}};
  double k12 = std::exp(-1.0);
  double expected_beta = (0.9 - 0.1 - 0.2) / (2.0 * (1.0 - k12));

  TrainResult tr = train(pts, labels, hyper, {1e-6, 100000, 64});
  REQUIRE(tr.beta.size() == 2);
  CHECK(tr.beta[0] == doctest::Approx(-expected_beta).epsilon(1e-6));
  CHECK(tr.beta[1] == doctest::Approx(expected_beta).epsilon(1e-6));
  CHECK(tr.model.bias == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(tr.model.support_points.size() == 2);
  // free support vectors predict on the tube edge
  CHECK(predict(tr.model, pts[0]) == doctest::Approx(0.1 + 0.1).epsilon(1e-6));
  CHECK(predict(tr.model, pts[1]) == doctest::Approx(0.9 - 0.1).epsilon(1e-6));
}

TEST_CASE("SMO reaches the reference QP optimum on random problems") {
  Rng rng(8);
  for (int it = 0; it < 6; ++it) {
    std::size_t n = 8 + rng.next_index(20);
    auto pts = random_points(rng, n, 2 + rng.next_index(3));
    std::vector<double> labels(n);
    for (double& y : labels) y = rng.uniform(0.0, 1.0);
    SvrHyper hyper{rng.uniform(0.5, 5.0), rng.uniform(0.005, 0.05), {rng.uniform(0.2, 1.5)}};

    TrainResult tr = train(pts, labels, hyper, {1e-8, 200000, 64});
    REQUIRE(tr.converged);
    testing::QpOracleResult ref = testing::qp_reference_solve(pts, labels, hyper);
    CHECK(std::abs(tr.dual_objective - ref.dual_objective) < 1e-6);
    CHECK(kkt_violation(pts, labels, hyper, tr.beta) <= 1e-3);
  }
}

TEST_CASE("trained duals balance to zero and respect the box") {
  Rng rng(9);
  for (int it = 0; it < 5; ++it) {
    std::size_t n = 5 + rng.next_index(30);
    auto pts = random_points(rng, n, 3);
    std::vector<double> labels(n);
    for (double& y : labels) y = rng.uniform(0.0, 1.0);
    SvrHyper hyper{rng.uniform(0.1, 3.0), 0.02, {0.8}};
    TrainResult tr = train(pts, labels, hyper);
    double sum = 0.0;
    for (double b : tr.beta) {
      sum += b;
      CHECK(std::abs(b) <= hyper.C + 1e-12);
    }
    CHECK(std::abs(sum) < 1e-8);
  }
}

TEST_CASE("free support vectors sit on the tube boundary after training") {
  Rng rng(10);
  std::size_t n = 25;
  auto pts = random_points(rng, n, 3);
  std::vector<double> labels(n);
  for (double& y : labels) y = rng.uniform(0.0, 1.0);
  SvrHyper hyper{2.0, 0.05, {0.6}};
  TrainResult tr = train(pts, labels, hyper, {1e-5, 100000, 64});
  REQUIRE(tr.converged);
  double tau = 1e-9;
  for (std::size_t i = 0; i < n; ++i) {
    double err = std::abs(predict(tr.model, pts[i]) - labels[i]);
    double b = std::abs(tr.beta[i]);
    if (b > tau && b < hyper.C - tau) {
      CHECK(std::abs(err - hyper.epsilon) <= 2e-5);
    } else if (b <= tau) {
      CHECK(err <= hyper.epsilon + 1e-5);
    } else {
      CHECK(err >= hyper.epsilon - 1e-5);
    }
  }
}

TEST_CASE("prediction is Lipschitz in the input") {
  Rng rng(11);
  auto pts = random_points(rng, 15, 3);
  std::vector<double> labels(15);
  for (double& y : labels) y = rng.uniform(0.0, 1.0);
  SvrHyper hyper{5.0, 0.01, {0.9}};
  TrainResult tr = train(pts, labels, hyper);
  double sum_abs = 0.0;
  for (double w : tr.model.dual_weights) sum_abs += std::abs(w);
  double lipschitz = sum_abs * std::sqrt(2.0 * hyper.kernel.gamma);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> x(3), dx(3);
    for (double& v : x) v = rng.next_normal();
    double norm = 0.0;
    for (double& v : dx) {
      v = rng.next_normal() * 1e-4;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    std::vector<double> x2 = x;
    for (std::size_t j = 0; j < 3; ++j) x2[j] += dx[j];
    CHECK(std::abs(predict(tr.model, x) - predict(tr.model, x2)) <= lipschitz * norm + 1e-12);
  }
}

TEST_CASE("exhausting the update budget reports non-convergence but stays feasible") {
  Rng rng(12);
  auto pts = random_points(rng, 30, 3);
  std::vector<double> labels(30);
  for (double& y : labels) y = rng.uniform(0.0, 10.0);
  SvrHyper hyper{1000.0, 1e-4, {0.5}};
  TrainResult tr = train(pts, labels, hyper, {1e-10, 3, 64});
  CHECK_FALSE(tr.converged);
  CHECK_FALSE(tr.model.converged);
  double sum = 0.0;
  for (double b : tr.beta) {
    CHECK(std::abs(b) <= hyper.C + 1e-12);
    sum += b;
  }
  CHECK(std::abs(sum) < 1e-8);
}

TEST_CASE("train validates its inputs") {
  CHECK_THROWS_AS(train({{1.0}}, {1.0}, SvrHyper{}), Error);
  CHECK_THROWS_AS(train({{1.0}, {2.0}}, {1.0, std::nan("")}, SvrHyper{}), Error);
  CHECK_THROWS_AS(train({{1.0}, {2.0, 3.0}}, {1.0, 2.0}, SvrHyper{}), Error);
  SvrHyper bad;
  bad.C = -1.0;
  CHECK_THROWS_AS(train({{1.0}, {2.0}}, {1.0, 2.0}, bad), Error);
}

TEST_CASE("predict with an empty expansion returns the bias") {
  SvrModel m;
  m.bias = 0.25;
  m.feature_dim = 2;
  CHECK(predict(m, {5.0, -3.0}) == 0.25);

  SvrModel single;
  single.hyper.kernel.gamma = 1.0;
  single.support_points = {{1.0, 2.0}};
  single.dual_weights = {1.0};
  single.bias = 0.0;
  single.feature_dim = 2;
  CHECK(predict(single, {1.0, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("mae is the sum of absolute errors") {
  CHECK(mae({0.2, 0.5}, {0.2, 0.5}) == 0.0);
  CHECK(mae({0.1, 0.9}, {0.2, 0.5}) == doctest::Approx(0.5));
  CHECK(mae({0.3}, {0.7}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(mae({0.1}, {0.1, 0.2}), Error);
  CHECK_THROWS_AS(mae({}, {}), Error);
}

TEST_CASE("cmae follows the four-case loss exactly") {
  // case 1: p <= delta and prediction above
  double c1 = cmae({0.3}, {0.1}, 0.2);
  double expected = 0.2 * (1.0 + 1.0 / (1.0 + std::exp(0.1 - 0.3)));
  CHECK(c1 == doctest::Approx(expected).epsilon(1e-15));
  CHECK(c1 == doctest::Approx(0.3099672).epsilon(1e-5));
  CHECK(std::abs(c1 - 0.30996679946249556) < 1e-12);

  // case 2 mirrors case 1
  CHECK(cmae({0.7}, {0.9}, 0.2) == doctest::Approx(c1).epsilon(1e-15));

  // case 3 is signed
  CHECK(cmae({0.6}, {0.5}, 0.2) == doctest::Approx(-0.1).epsilon(1e-12));
  // case 4: label near 0 but prediction below it
  CHECK(cmae({0.05}, {0.1}, 0.2) == 0.0);

  // equality gives zero everywhere
  CHECK(cmae({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}, 0.2) == 0.0);

  CHECK_THROWS_AS(cmae({0.5}, {0.5}, 0.0), Error);
  CHECK_THROWS_AS(cmae({0.5}, {0.5}, 0.6), Error);
  CHECK_THROWS_AS(cmae({0.5}, {0.5, 0.6}, 0.2), Error);
}

TEST_CASE("cmae boundary cases amplify but stay below twice the gap") {
  Rng rng(13);
  for (int it = 0; it < 500; ++it) {
    double p = rng.next_double() * 0.2;           // in the low band
    double q = p + rng.next_double() * (1.0 - p); // overestimate
    if (q <= p) continue;
    double loss = cmae({q}, {p}, 0.2);
    CHECK(loss > 0.0);
    CHECK(loss <= 2.0 * (q - p) + 1e-15);
  }
}

TEST_CASE("the absolute-midband variant differs from cmae only in case 3") {
  CHECK(cmae_abs_midband({0.6}, {0.5}, 0.2) == doctest::Approx(0.1));
  CHECK(cmae_abs_midband({0.3}, {0.1}, 0.2) == doctest::Approx(cmae({0.3}, {0.1}, 0.2)));
}

TEST_CASE("model files round-trip to bit-identical predictions") {
  Rng rng(14);
  auto pts = random_points(rng, 20, 4);
  std::vector<double> labels(20);
  for (double& y : labels) y = rng.uniform(0.0, 1.0);
  SvrHyper hyper{3.0, 0.02, {0.4}};
  TrainResult tr = train(pts, labels, hyper);
  tr.model.feature_columns = {"f0", "f1", "f2", "f3"};
  tr.model.scaler_means = {0.0, 0.1, 0.2, 0.3};
  tr.model.scaler_scales = {1.0, 1.1, 1.2, 1.3};

  SvrModel back = SvrModel::from_json_text(tr.model.to_json_text());
  CHECK(back.to_json_text() == tr.model.to_json_text());
  for (int it = 0; it < 100; ++it) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.next_normal();
    double a = predict(tr.model, x);
    double b = predict(back, x);
    CHECK(a == b);  // bit-identical
  }
}

TEST_CASE("training twice produces identical model files") {
  Rng rng(15);
  auto pts = random_points(rng, 15, 3);
  std::vector<double> labels(15);
  for (double& y : labels) y = rng.uniform(0.0, 1.0);
  SvrHyper hyper{2.0, 0.03, {0.7}};
  TrainResult a = train(pts, labels, hyper);
  TrainResult b = train(pts, labels, hyper);
  CHECK(a.model.to_json_text() == b.model.to_json_text());
}
