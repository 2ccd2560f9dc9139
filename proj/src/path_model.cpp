#include "modelfuzz/path_model.hpp"

#ifdef MF_TRACE_FITS
#include <cstdio>
#endif

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace modelfuzz {

FeatureVector featurize(const Bytes& input) {
  FeatureVector features;
  if (input.size() < 2) return features;
  std::vector<std::uint32_t> indices;
  indices.reserve(input.size() - 1);
  for (std::size_t i = 0; i + 1 < input.size(); ++i) {
    indices.push_back(static_cast<std::uint32_t>(input[i]) * 256u +
                      static_cast<std::uint32_t>(input[i + 1]));
  }
  std::sort(indices.begin(), indices.end());
  for (std::size_t i = 0; i < indices.size();) {
    std::size_t j = i;
    while (j < indices.size() && indices[j] == indices[i]) ++j;
    features.emplace_back(indices[i], static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return features;
}

double entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<std::size_t> rank_scores(std::span<const double> scores,
                                     Rng& rng) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

PathModel::PathModel() { feature_slot_.fill(-1); }

void PathModel::append_example(const FeatureVector& features, PathId path) {
  auto [it, inserted] = class_index_.try_emplace(
      path, static_cast<std::uint32_t>(class_labels_.size()));
  if (inserted) {
    class_labels_.push_back(path);
    class_weights_.emplace_back();
    class_bias_.push_back(0.0);
    class_fit_.emplace_back();
  }
  row_class_.push_back(it->second);

  FeatureVector row;
  row.reserve(features.size());
  for (const auto& [index, count] : features) {
    std::int32_t& slot = feature_slot_[index];
    if (slot < 0) {
      slot = static_cast<std::int32_t>(slot_feature_.size());
      slot_feature_.push_back(index);
    }
    row.emplace_back(static_cast<std::uint32_t>(slot), count);
  }
  store_.add_row(row);
}

TrainStats PathModel::append_and_fit(
    std::span<const std::pair<Bytes, PathId>> new_examples) {
  const std::size_t old_classes = class_labels_.size();
  std::vector<FeatureVector> rows;
  rows.reserve(new_examples.size());
  for (const auto& [input, path] : new_examples) {
    rows.push_back(featurize(input));
    append_example(rows.back(), path);
  }

  const std::size_t n = store_.rows();

  // Fold the new rows into each pre-existing class's cached loss and
  // gradient sums; appending did not change any weights, so the cached
  // sums stay exact once extended. Only the new rows' entries are touched,
  // and the squared gradient norm is adjusted in the same walk.
  for (std::size_t c = 0; c < old_classes; ++c) {
    FitState& state = class_fit_[c];
    if (!state.scratch.valid) continue;
    std::vector<double>& grad = state.scratch.grad_sum;
    grad.resize(slot_feature_.size() + 1, 0.0);
    double norm_sq = state.scratch.grad_norm_sq;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double y =
          class_labels_[c] == new_examples[i].second ? 1.0 : -1.0;
      const double z = raw_score(rows[i], c);
      state.scratch.loss_sum += log1p_exp_neg(y * z);
      const double dz = -y * sigmoid(-y * z);
      norm_sq += dz * (2.0 * grad[0] + dz);
      grad[0] += dz;
      for (const auto& [index, count] : rows[i]) {
        const std::int32_t slot = feature_slot_[index];
        const double delta = dz * static_cast<double>(count);
        norm_sq += delta * (2.0 * grad[1 + slot] + delta);
        grad[1 + slot] += delta;
      }
    }
    state.scratch.grad_norm_sq = norm_sq;
  }

  TrainStats stats;
  stats.classes = static_cast<int>(class_labels_.size());
  stats.examples = n;

  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  std::vector<std::int8_t> y(n);
  for (std::size_t c = 0; c < class_labels_.size(); ++c) {
    FitState& state = class_fit_[c];
    if (state.scratch.valid && state.converged) {
      const double norm_sq =
          std::max(state.scratch.grad_norm_sq, 0.0) * inv_n * inv_n;
      const double gnorm = std::sqrt(norm_sq);
      const double scale =
          gnorm > 0.0 ? std::min(state.gamma, std::max(1.0, gnorm) / gnorm)
                      : state.gamma;
      const double predicted_drop = 0.5 * scale * norm_sq;
      if (predicted_drop < fit_options.rel_loss_tol *
                               std::max(state.scratch.loss_sum * inv_n, 1.0)) {
        continue;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = row_class_[i] == c ? std::int8_t{1} : std::int8_t{-1};
    }
    FitOptions warm = fit_options;
    warm.init_scale = state.gamma;
    const FitResult fit = fit_binary_logistic(
        store_, y, class_weights_[c], class_bias_[c], warm, &state.scratch);
#ifdef MF_TRACE_FITS
    std::fprintf(stderr, "FIT %zu %d %d %.6e %d\n", c, fit.passes,
                 fit.sweeps, fit.loss, fit.converged ? 1 : 0);
#endif
    stats.total_passes += fit.passes;
    state.gamma = fit.gamma;
    state.converged = fit.converged;
  }
  return stats;
}

TrainStats PathModel::train(
    std::span<const std::pair<Bytes, PathId>> examples) {
  feature_slot_.fill(-1);
  slot_feature_.clear();
  store_ = CsrMatrix{};
  row_class_.clear();
  class_labels_.clear();
  class_index_.clear();
  class_weights_.clear();
  class_bias_.clear();
  class_fit_.clear();
  return append_and_fit(examples);
}

TrainStats PathModel::retrain(
    std::span<const std::pair<Bytes, PathId>> new_examples) {
  if (new_examples.empty()) {
    TrainStats stats;
    stats.classes = static_cast<int>(class_labels_.size());
    stats.examples = store_.rows();
    return stats;
  }
  return append_and_fit(new_examples);
}

double PathModel::raw_score(const FeatureVector& features,
                            std::size_t cls) const {
  const std::vector<double>& w = class_weights_[cls];
  double z = class_bias_[cls];
  for (const auto& [index, count] : features) {
    const std::int32_t slot = feature_slot_[index];
    if (slot >= 0 && static_cast<std::size_t>(slot) < w.size()) {
      z += static_cast<double>(count) * w[slot];
    }
  }
  return z;
}

std::vector<double> PathModel::predict(const Bytes& input) const {
  if (class_labels_.empty()) {
    throw std::logic_error("cold start: use cold_start_predict");
  }
  const FeatureVector features = featurize(input);
  std::vector<double> log_p(class_labels_.size());
  for (std::size_t c = 0; c < log_p.size(); ++c) {
    log_p[c] = log_sigmoid(raw_score(features, c));
  }
  const double peak = *std::max_element(log_p.begin(), log_p.end());
  double total = 0.0;
  for (double& v : log_p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : log_p) v /= total;
  return log_p;
}

std::vector<double> PathModel::entropy_scores(
    std::span<const Bytes> candidates) const {
  std::vector<double> scores(candidates.size(), 0.0);
  if (class_labels_.empty()) return scores;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = entropy(predict(candidates[i]));
  }
  return scores;
}

std::vector<std::size_t> PathModel::rank(std::span<const Bytes> candidates,
                                         Rng& rng) const {
  const std::vector<double> scores = entropy_scores(candidates);
  return rank_scores(scores, rng);
}

std::string PathModel::to_json() const {
  nlohmann::json doc;
  doc["feature_dim"] = 65536;
  doc["features"] = slot_feature_;
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < class_labels_.size(); ++c) {
    nlohmann::json entry;
    entry["path"] = path_hex(class_labels_[c]);
    entry["bias"] = class_bias_[c];
    std::vector<double> w = class_weights_[c];
    w.resize(slot_feature_.size(), 0.0);
    entry["weights"] = w;
    classes.push_back(std::move(entry));
  }
  doc["classes"] = std::move(classes);
  doc["examples_seen"] = store_.rows();
  return doc.dump(2);
}

PathModel PathModel::from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  PathModel model;
  for (const auto& index : doc.at("features")) {
    const std::uint32_t feature = index.get<std::uint32_t>();
    model.feature_slot_[feature] =
        static_cast<std::int32_t>(model.slot_feature_.size());
    model.slot_feature_.push_back(feature);
  }
  for (const auto& entry : doc.at("classes")) {
    const PathId path{
        std::stoull(entry.at("path").get<std::string>(), nullptr, 16)};
    model.class_index_.emplace(
        path, static_cast<std::uint32_t>(model.class_labels_.size()));
    model.class_labels_.push_back(path);
    model.class_bias_.push_back(entry.at("bias").get<double>());
    model.class_weights_.push_back(
        entry.at("weights").get<std::vector<double>>());
  }
  return model;
}

}  // namespace modelfuzz
