#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace modelfuzz {

// Row-compressed sparse feature matrix shared by all per-class fits.
struct CsrMatrix {
  std::vector<std::size_t> row_start{0};
  std::vector<std::uint32_t> col;
  std::vector<float> val;
  std::size_t cols = 0;

  std::size_t rows() const { return row_start.size() - 1; }
  void add_row(std::span<const std::pair<std::uint32_t, std::uint32_t>> entries);
};

struct FitOptions {
  // Converged when |loss - new_loss| / max(|loss|, |new_loss|, 1) drops
  // below this between consecutive passes.
  double rel_loss_tol = 1e-6;
  int max_passes = 500;
  int history = 4;      // L-BFGS memory
  int carry_pairs = 2;  // curvature pairs saved into FitScratch at exit
  // Inverse-curvature estimate scaling the first descent direction before
  // any history exists. Warm restarts pass the previous fit's gamma so the
  // first step is already quasi-Newton sized. The first step length is
  // capped at max(1, |g|) regardless.
  double init_scale = 1.0;
};

struct FitResult {
  int passes = 0;
  int sweeps = 0;  // data passes spent on loss and gradient evaluations
  double loss = 0.0;
  bool converged = false;
  double grad_norm2 = 0.0;  // l2 norm of the mean-loss gradient at exit
  double gamma = 1.0;       // final inverse-curvature scaling
};

// Optimizer state carried across warm-started fits of the same class.
// When `valid`, `loss_sum` and `grad_sum` are the exact summed (not
// mean-normalized) loss and loss gradient (bias first) of the training
// data at the incoming weights, and `grad_norm_sq` is the squared l2 norm
// of `grad_sum`. Keeping sums lets callers fold new rows in by touching
// only those rows' feature entries; the fit divides by the row count on
// entry and leaves the sums describing the exit point.
//
// `hist` carries the newest curvature pairs out of the previous fit
// (oldest first, float to bound per-class memory). A warm refit seeds its
// L-BFGS memory from them: the dataset has only grown slightly since they
// were taken, so they still precondition well, and the line search
// validates every step against the current loss regardless.
struct FitScratch {
  struct CurvaturePair {
    std::vector<float> s, yk;
    double rho = 0.0, sy = 0.0, yy = 0.0;
  };

  bool valid = false;
  double loss_sum = 0.0;
  double grad_norm_sq = 0.0;
  std::vector<double> grad_sum;
  std::vector<CurvaturePair> hist;
};

// log(sigmoid(z)) and log(1 + exp(-t)), computed without overflow.
double log_sigmoid(double z);
double log1p_exp_neg(double t);

// Mean unregularized logistic loss and its gradient. labels are +1/-1.
// grad must have X.cols entries; bias gradient is returned through
// grad_bias.
double logistic_loss_grad(const CsrMatrix& X, std::span<const std::int8_t> y,
                          std::span<const double> weights, double bias,
                          std::span<double> grad, double& grad_bias);

double logistic_loss(const CsrMatrix& X, std::span<const std::int8_t> y,
                     std::span<const double> weights, double bias);

// Full-batch L-BFGS minimization of the unregularized logistic loss,
// warm-started from the weights passed in. Deterministic. `scratch`, when
// given, is both consumed and refreshed; see FitScratch.
FitResult fit_binary_logistic(const CsrMatrix& X,
                              std::span<const std::int8_t> y,
                              std::vector<double>& weights, double& bias,
                              const FitOptions& options = {},
                              FitScratch* scratch = nullptr);

}  // namespace modelfuzz
