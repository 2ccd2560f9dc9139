#include "modelfuzz/logistic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

namespace modelfuzz {

void CsrMatrix::add_row(
    std::span<const std::pair<std::uint32_t, std::uint32_t>> entries) {
  for (const auto& [index, count] : entries) {
    col.push_back(index);
    val.push_back(static_cast<float>(count));
    cols = std::max(cols, static_cast<std::size_t>(index) + 1);
  }
  row_start.push_back(col.size());
}

double log1p_exp_neg(double t) {
  // Past |t| = 12 the expansion log1p(e) = e holds to within 3e-6 relative,
  // far below every accumulation this feeds.
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return t >= 12.0 ? e : std::log1p(e);
  }
  const double e = std::exp(t);
  return -t + (t <= -12.0 ? e : std::log1p(e));
}

double log_sigmoid(double z) { return -log1p_exp_neg(z); }

namespace {

// Loss term log(1 + exp(-t)) and sigmoid(-t) = 1 / (1 + exp(t)) from one
// exponential, without overflow.
void loss_and_sigmoid_neg(double t, double& loss, double& sig) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    loss = t >= 12.0 ? e : std::log1p(e);
    sig = e / (1.0 + e);
  } else {
    const double e = std::exp(t);
    loss = -t + (t <= -12.0 ? e : std::log1p(e));
    sig = 1.0 / (1.0 + e);
  }
}

double row_dot(const CsrMatrix& X, std::size_t row,
               std::span<const double> weights, double bias) {
  const std::size_t begin = X.row_start[row];
  const std::size_t end = X.row_start[row + 1];
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t k = begin;
  for (; k + 4 <= end; k += 4) {
    a0 += static_cast<double>(X.val[k]) * weights[X.col[k]];
    a1 += static_cast<double>(X.val[k + 1]) * weights[X.col[k + 1]];
    a2 += static_cast<double>(X.val[k + 2]) * weights[X.col[k + 2]];
    a3 += static_cast<double>(X.val[k + 3]) * weights[X.col[k + 3]];
  }
  for (; k < end; ++k) {
    a0 += static_cast<double>(X.val[k]) * weights[X.col[k]];
  }
  return bias + ((a0 + a1) + (a2 + a3));
}

}  // namespace

double logistic_loss(const CsrMatrix& X, std::span<const std::int8_t> y,
                     std::span<const double> weights, double bias) {
  assert(y.size() == X.rows());
  const std::size_t n = X.rows();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loss += log1p_exp_neg(y[i] * row_dot(X, i, weights, bias));
  }
  return loss / static_cast<double>(n);
}

double logistic_loss_grad(const CsrMatrix& X, std::span<const std::int8_t> y,
                          std::span<const double> weights, double bias,
                          std::span<double> grad, double& grad_bias) {
  assert(y.size() == X.rows());
  assert(grad.size() >= X.cols);
  const std::size_t n = X.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::fill(grad.begin(), grad.end(), 0.0);
  grad_bias = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = y[i] * row_dot(X, i, weights, bias);
    double term, sig;
    loss_and_sigmoid_neg(t, term, sig);
    loss += term;
    if (t >= 30.0) continue;
    const double dz = -static_cast<double>(y[i]) * sig * inv_n;
    for (std::size_t k = X.row_start[i]; k < X.row_start[i + 1]; ++k) {
      grad[X.col[k]] += static_cast<double>(X.val[k]) * dz;
    }
    grad_bias += dz;
  }
  return loss * inv_n;
}

FitResult fit_binary_logistic(const CsrMatrix& X,
                              std::span<const std::int8_t> y,
                              std::vector<double>& weights, double& bias,
                              const FitOptions& options, FitScratch* scratch) {
  const std::size_t d = X.cols;
  const std::size_t n = X.rows();
  if (weights.size() < d) weights.resize(d, 0.0);
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;

  // The bias rides along as coordinate 0 so every working vector covers it
  // and cached gradient sums extend at the back when new features appear.
  std::vector<double> w(d + 1), w_trial(d + 1);
  w[0] = bias;
  std::copy(weights.begin(), weights.begin() + d, w.begin() + 1);

  std::vector<double> g(d + 1), g_new(d + 1), p(d + 1);

  // One data pass accumulating the mean loss and, when `grad` is given, the
  // mean gradient. Rows with margin t >= 30 pull the gradient by less than
  // 1e-13 and are skipped in the scatter.
  const auto sweep = [&](const std::vector<double>& wvec,
                         std::vector<double>* grad) {
    const std::span<const double> feat{wvec.data() + 1, d};
    double loss = 0.0;
    if (grad == nullptr) {
      for (std::size_t i = 0; i < n; ++i) {
        loss += log1p_exp_neg(y[i] * row_dot(X, i, feat, wvec[0]));
      }
      return loss * inv_n;
    }
    std::fill(grad->begin(), grad->end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = y[i] * row_dot(X, i, feat, wvec[0]);
      double term, sig;
      loss_and_sigmoid_neg(t, term, sig);
      loss += term;
      if (t >= 30.0) continue;
      const double dz = -static_cast<double>(y[i]) * sig * inv_n;
      (*grad)[0] += dz;
      for (std::size_t k = X.row_start[i]; k < X.row_start[i + 1]; ++k) {
        (*grad)[X.col[k] + 1] += static_cast<double>(X.val[k]) * dz;
      }
    }
    return loss * inv_n;
  };

  FitResult result;
  double loss;
  bool warm = scratch && scratch->valid && scratch->grad_sum.size() == d + 1;
  double base_scale = options.init_scale > 0.0 ? options.init_scale : 1.0;
  if (warm && scratch->loss_sum * inv_n > std::numbers::ln2 + 1e-12) {
    // The warm point predicts worse than all-zero weights do, so it is no
    // head start at all; discard it and restart cold.
    warm = false;
    std::fill(w.begin(), w.end(), 0.0);
    base_scale = 1.0;
  }
  if (warm) {
    loss = scratch->loss_sum * inv_n;
    for (std::size_t j = 0; j <= d; ++j) g[j] = scratch->grad_sum[j] * inv_n;
  } else {
    loss = sweep(w, &g);
    result.sweeps = 2;
  }

  result.loss = loss;
  result.gamma = base_scale;

  // Curvature pairs live in a fixed ring of preallocated vectors; a pass
  // allocates nothing.
  const std::size_t m = options.history > 0
                            ? static_cast<std::size_t>(options.history)
                            : 0;
  std::vector<std::vector<double>> s_ring(m), y_ring(m);
  for (std::size_t i = 0; i < m; ++i) {
    s_ring[i].resize(d + 1);
    y_ring[i].resize(d + 1);
  }
  std::vector<double> rho(m), sy_ring(m), yy_ring(m);
  std::vector<double> alpha(m > 0 ? m : 1);
  std::size_t hist_count = 0;
  std::size_t hist_next = 0;  // ring slot the next pair lands in

  if (warm) {
    for (const FitScratch::CurvaturePair& pair : scratch->hist) {
      if (hist_count >= m || pair.s.size() > d + 1) continue;
      std::vector<double>& s = s_ring[hist_next];
      std::vector<double>& yk = y_ring[hist_next];
      for (std::size_t j = 0; j < pair.s.size(); ++j) {
        s[j] = pair.s[j];
        yk[j] = pair.yk[j];
      }
      std::fill(s.begin() + pair.s.size(), s.end(), 0.0);
      std::fill(yk.begin() + pair.yk.size(), yk.end(), 0.0);
      rho[hist_next] = pair.rho;
      sy_ring[hist_next] = pair.sy;
      yy_ring[hist_next] = pair.yy;
      hist_next = (hist_next + 1) % m;
      hist_count = std::min(hist_count + 1, m);
    }
  }

  const auto dot_d = [&](const std::vector<double>& a,
                         const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= d; ++j) acc += a[j] * b[j];
    return acc;
  };

  const auto no_history_scale = [&] {
    const double gnorm = std::sqrt(dot_d(g, g));
    return gnorm > 0.0 ? std::min(base_scale, std::max(1.0, gnorm) / gnorm)
                       : base_scale;
  };

  for (int pass = 0; pass < options.max_passes; ++pass) {
    // Two-loop recursion p = -H g over the stored curvature pairs.
    std::copy(g.begin(), g.end(), p.begin());
    for (std::size_t i = 0; i < hist_count; ++i) {
      const std::size_t slot = (hist_next + m - 1 - i) % m;
      const double a = rho[slot] * dot_d(s_ring[slot], p);
      alpha[i] = a;
      const std::vector<double>& yk = y_ring[slot];
      for (std::size_t j = 0; j <= d; ++j) p[j] -= a * yk[j];
    }
    const std::size_t newest = (hist_next + m - 1) % m;
    const double gamma = hist_count > 0 ? sy_ring[newest] / yy_ring[newest]
                                        : no_history_scale();
    for (std::size_t j = 0; j <= d; ++j) p[j] *= gamma;
    for (std::size_t i = hist_count; i-- > 0;) {
      const std::size_t slot = (hist_next + m - 1 - i) % m;
      const double beta = rho[slot] * dot_d(y_ring[slot], p);
      const double coef = alpha[i] - beta;
      const std::vector<double>& s = s_ring[slot];
      for (std::size_t j = 0; j <= d; ++j) p[j] += coef * s[j];
    }
    for (std::size_t j = 0; j <= d; ++j) p[j] = -p[j];
    result.gamma = gamma;

    double dd = dot_d(g, p);
    if (!(dd < 0.0)) {
      // Curvature went bad; fall back to scaled steepest descent.
      hist_count = 0;
      const double scale = no_history_scale();
      for (std::size_t j = 0; j <= d; ++j) p[j] = -scale * g[j];
      dd = dot_d(g, p);
      result.gamma = scale;
      if (!(dd < 0.0)) {
        result.converged = true;
        break;
      }
    }

    // Armijo backtracking from a unit step. Trial points land in w_trial,
    // so a rejected trial costs nothing to undo; the first trial is
    // usually accepted and evaluates the gradient in the same sweep.
    const double c1 = 1e-4;
    double step = 1.0;
    double new_loss = loss;
    bool accepted = false;
    bool have_grad = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j <= d; ++j) w_trial[j] = w[j] + step * p[j];
      if (tries == 0) {
        new_loss = sweep(w_trial, &g_new);
        result.sweeps += 2;
        have_grad = true;
      } else {
        new_loss = sweep(w_trial, nullptr);
        result.sweeps += 1;
        have_grad = false;
      }
      if (std::isfinite(new_loss) && new_loss <= loss + c1 * step * dd) {
        accepted = true;
        break;
      }
      // Quadratic interpolation through f(0), f'(0), f(step), clamped so
      // progress stays geometric.
      double next = step * 0.5;
      if (std::isfinite(new_loss)) {
        const double denom = 2.0 * (new_loss - loss - dd * step);
        if (denom > 0.0) {
          next =
              std::clamp(-dd * step * step / denom, 0.1 * step, 0.5 * step);
        }
      }
      step = next;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    if (!have_grad) {
      new_loss = sweep(w_trial, &g_new);
      result.sweeps += 2;
    }

    if (m > 0) {
      std::vector<double>& s = s_ring[hist_next];
      std::vector<double>& yk = y_ring[hist_next];
      double sy = 0.0;
      double yy = 0.0;
      for (std::size_t j = 0; j <= d; ++j) {
        const double sj = step * p[j];
        const double yj = g_new[j] - g[j];
        s[j] = sj;
        yk[j] = yj;
        sy += sj * yj;
        yy += yj * yj;
      }
      if (sy > 1e-12 && yy > 0.0) {
        rho[hist_next] = 1.0 / sy;
        sy_ring[hist_next] = sy;
        yy_ring[hist_next] = yy;
        hist_next = (hist_next + 1) % m;
        hist_count = std::min(hist_count + 1, m);
      }
    }

    w.swap(w_trial);
    g.swap(g_new);
    result.passes = pass + 1;

    const double rel = std::abs(loss - new_loss) /
                       std::max({std::abs(loss), std::abs(new_loss), 1.0});
    loss = new_loss;
    result.loss = loss;
    if (rel < options.rel_loss_tol) {
      result.converged = true;
      break;
    }
  }

  std::copy(w.begin() + 1, w.end(), weights.begin());
  bias = w[0];
  const double gg = dot_d(g, g);
  result.grad_norm2 = std::sqrt(gg);
  if (scratch) {
    const double nn = static_cast<double>(n);
    scratch->valid = true;
    scratch->loss_sum = loss * nn;
    scratch->grad_norm_sq = gg * nn * nn;
    scratch->grad_sum.resize(d + 1);
    for (std::size_t j = 0; j <= d; ++j) scratch->grad_sum[j] = g[j] * nn;
    scratch->hist.clear();
    const std::size_t carry = std::min(
        hist_count, options.carry_pairs > 0
                        ? static_cast<std::size_t>(options.carry_pairs)
                        : 0);
    for (std::size_t i = carry; i-- > 0;) {
      const std::size_t slot = (hist_next + m - 1 - i) % m;
      FitScratch::CurvaturePair pair;
      pair.s.assign(s_ring[slot].begin(), s_ring[slot].end());
      pair.yk.assign(y_ring[slot].begin(), y_ring[slot].end());
      pair.rho = rho[slot];
      pair.sy = sy_ring[slot];
      pair.yy = yy_ring[slot];
      scratch->hist.push_back(std::move(pair));
    }
  }
  return result;
}

}  // namespace modelfuzz
