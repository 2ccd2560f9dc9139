#include "modelfuzz/logistic.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "modelfuzz/rng.hpp"
#include "support/reference_logreg.hpp"

using namespace modelfuzz;

namespace {

struct DenseDataset {
  CsrMatrix X;
  std::vector<std::int8_t> y;
  reffit::Dataset dense;
  std::size_t dim = 0;
};

// Random dataset over small integer features. Every row is mirrored once
// with the opposite label so no separating hyperplane exists and the optimum
// is finite and unique.
DenseDataset random_nonseparable(Rng& rng) {
  DenseDataset data;
  data.dim = 2 + rng.below(7);  // <= 8 features
  const std::size_t pairs = 4 + rng.below(22);  // <= 50 rows total
  for (std::size_t i = 0; i < pairs; ++i) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> row;
    std::vector<double> dense_row(data.dim, 0.0);
    for (std::size_t j = 0; j < data.dim; ++j) {
      const std::uint32_t count = static_cast<std::uint32_t>(rng.below(4));
      if (count > 0) {
        row.emplace_back(static_cast<std::uint32_t>(j), count);
        dense_row[j] = count;
      }
    }
    const std::int8_t label = rng.below(2) ? 1 : -1;
    for (const std::int8_t y : {label, static_cast<std::int8_t>(-label)}) {
      data.X.add_row(row);
      data.y.push_back(y);
      data.dense.x.push_back(dense_row);
      data.dense.y.push_back(y);
    }
    // A few extra copies of the original label tilt the optimum away
    // from zero.
    if (rng.below(2)) {
      data.X.add_row(row);
      data.y.push_back(label);
      data.dense.x.push_back(dense_row);
      data.dense.y.push_back(label);
    }
  }
  data.X.cols = data.dim;
  return data;
}

}  // namespace

TEST_SUITE_BEGIN("logistic");

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(123);
  for (int probe = 0; probe < 20; ++probe) {
    DenseDataset data = random_nonseparable(rng);
    std::vector<double> w(data.dim);
    for (auto& v : w) v = rng.unit_real() * 2.0 - 1.0;
    const double bias = rng.unit_real() - 0.5;

    std::vector<double> grad(data.dim);
    double grad_bias = 0.0;
    logistic_loss_grad(data.X, data.y, w, bias, grad, grad_bias);

    const double h = 1e-6;
    auto check_close = [](double analytic, double numeric) {
      const double scale =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      CHECK(std::abs(analytic - numeric) / scale < 1e-4);
    };
    for (std::size_t j = 0; j < data.dim; ++j) {
      std::vector<double> hi = w, lo = w;
      hi[j] += h;
      lo[j] -= h;
      const double numeric = (logistic_loss(data.X, data.y, hi, bias) -
                              logistic_loss(data.X, data.y, lo, bias)) /
                             (2 * h);
      check_close(grad[j], numeric);
    }
    const double numeric_bias =
        (logistic_loss(data.X, data.y, w, bias + h) -
         logistic_loss(data.X, data.y, w, bias - h)) /
        (2 * h);
    check_close(grad_bias, numeric_bias);
  }
}

TEST_CASE("loss is finite and stable at extreme margins") {
  CsrMatrix X;
  const std::pair<std::uint32_t, std::uint32_t> one_feature{0, 1};
  X.add_row({&one_feature, 1});
  const std::vector<std::int8_t> y{1};

  std::vector<double> w{5000.0};
  CHECK(logistic_loss(X, y, w, 0.0) == doctest::Approx(0.0));
  w[0] = -5000.0;
  CHECK(logistic_loss(X, y, w, 0.0) == doctest::Approx(5000.0));
}

TEST_CASE("fit matches the brute-force reference on small datasets") {
  Rng rng(777);
  for (int round = 0; round < 6; ++round) {
    DenseDataset data = random_nonseparable(rng);

    std::vector<double> weights;
    double bias = 0.0;
    const FitResult result =
        fit_binary_logistic(data.X, data.y, weights, bias);
    CHECK(result.converged);

    const reffit::Fit reference = reffit::ref_fit(data.dense, data.dim);
    for (std::size_t j = 0; j < data.dim; ++j) {
      CHECK(std::abs(weights[j] - reference.weights[j]) < 1e-3);
    }
    CHECK(std::abs(bias - reference.bias) < 1e-3);
  }
}

TEST_CASE("warm starts land on the same optimum as cold fits") {
  Rng rng(555);
  DenseDataset first = random_nonseparable(rng);

  // A tight loss tolerance pins both trajectories to the optimum itself,
  // so any disagreement is the warm start's fault rather than slack in the
  // stopping rule.
  FitOptions tight;
  tight.rel_loss_tol = 1e-12;

  // Fit on the first chunk, then extend the dataset and refit warm.
  std::vector<double> warm_w;
  double warm_b = 0.0;
  fit_binary_logistic(first.X, first.y, warm_w, warm_b, tight);

  DenseDataset more = random_nonseparable(rng);
  CsrMatrix combined = first.X;
  std::vector<std::int8_t> y = first.y;
  const std::size_t dim = std::max(first.dim, more.dim);
  for (std::size_t i = 0; i < more.X.rows(); ++i) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> row;
    for (std::size_t k = more.X.row_start[i]; k < more.X.row_start[i + 1];
         ++k) {
      row.emplace_back(more.X.col[k],
                       static_cast<std::uint32_t>(more.X.val[k]));
    }
    combined.add_row(row);
    y.push_back(more.y[i]);
  }
  combined.cols = dim;

  fit_binary_logistic(combined, y, warm_w, warm_b, tight);

  std::vector<double> cold_w;
  double cold_b = 0.0;
  fit_binary_logistic(combined, y, cold_w, cold_b, tight);

  for (std::size_t j = 0; j < dim; ++j) {
    CHECK(std::abs(warm_w[j] - cold_w[j]) < 1e-3);
  }
  CHECK(std::abs(warm_b - cold_b) < 1e-3);
}

TEST_CASE("refitting a converged model returns quickly") {
  Rng rng(901);
  DenseDataset data = random_nonseparable(rng);
  std::vector<double> w;
  double b = 0.0;
  fit_binary_logistic(data.X, data.y, w, b);
  const FitResult again = fit_binary_logistic(data.X, data.y, w, b);
  CHECK(again.converged);
  CHECK(again.passes <= 2);
}

TEST_SUITE_END();
