#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "modelfuzz/logistic.hpp"
#include "modelfuzz/rng.hpp"
#include "modelfuzz/types.hpp"

namespace modelfuzz {

// Sparse byte-bigram counts, sorted by feature index.
// Feature index of the pair (a, b) is a * 256 + b.
using FeatureVector = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

FeatureVector featurize(const Bytes& input);

// Shannon entropy in nats; zero probabilities contribute zero.
double entropy(std::span<const double> distribution);

// Indices of `scores`, highest score first. Ties are broken uniformly at
// random: the index list is shuffled with `rng` before a stable sort.
std::vector<std::size_t> rank_scores(std::span<const double> scores, Rng& rng);

struct TrainStats {
  int classes = 0;
  int total_passes = 0;
  std::size_t examples = 0;
};

// One-vs-all logistic regression from byte bigrams to execution paths.
//
// Classes are execution paths, ordered by first appearance in the training
// data. Each class keeps a dense weight vector over the bigrams observed so
// far; fits are full-batch and unregularized. retrain() appends examples and
// re-optimizes every class over the full store from its previous weights,
// which satisfies the same convergence criterion as a cold fit on the union
// in far fewer passes.
//
// Weights only change inside fits, so each class's exact loss and gradient
// sums are maintained incrementally: appending a batch folds the new rows
// into the cached sums in time proportional to the batch, not the store. A
// converged class is refit only when one quasi-Newton step from its cached
// gradient, about half the curvature scale times the squared mean-gradient
// norm, could still move the loss by the convergence tolerance; below that
// the fit would stop immediately with the weights it already has, so it is
// skipped without touching the data.
class PathModel {
 public:
  PathModel();

  TrainStats train(std::span<const std::pair<Bytes, PathId>> examples);
  TrainStats retrain(std::span<const std::pair<Bytes, PathId>> new_examples);

  // Probability of each known path given the input, in class order.
  // Throws std::logic_error when no classes exist yet.
  std::vector<double> predict(const Bytes& input) const;

  // Distribution to use before any training data exists: a single
  // pseudo-class with probability one.
  static std::vector<double> cold_start_predict() { return {1.0}; }

  // Candidate indices ordered by descending entropy of the predicted path
  // distribution, random among equals. Works before training, where every
  // candidate scores zero.
  std::vector<std::size_t> rank(std::span<const Bytes> candidates,
                                Rng& rng) const;
  std::vector<double> entropy_scores(std::span<const Bytes> candidates) const;

  std::size_t class_count() const { return class_labels_.size(); }
  std::size_t example_count() const { return store_.rows(); }
  std::size_t feature_count() const { return slot_feature_.size(); }
  const std::vector<PathId>& class_labels() const { return class_labels_; }

  std::string to_json() const;
  static PathModel from_json(const std::string& text);

  FitOptions fit_options;

 private:
  TrainStats append_and_fit(
      std::span<const std::pair<Bytes, PathId>> new_examples);
  void append_example(const FeatureVector& features, PathId path);
  double raw_score(const FeatureVector& features, std::size_t cls) const;

  // Bigram index -> dense column, grown as new bigrams appear.
  std::array<std::int32_t, 65536> feature_slot_;
  std::vector<std::uint32_t> slot_feature_;

  CsrMatrix store_;
  std::vector<std::uint32_t> row_class_;

  std::vector<PathId> class_labels_;
  std::unordered_map<PathId, std::uint32_t> class_index_;
  std::vector<std::vector<double>> class_weights_;
  std::vector<double> class_bias_;

  // Per-class optimizer state between refits, driving the skip test above.
  // scratch holds the exact loss and gradient sums at the current weights.
  struct FitState {
    FitScratch scratch;
    double gamma = 1.0;  // inverse-curvature scale at the last fit
    bool converged = false;
  };
  std::vector<FitState> class_fit_;
};

}  // namespace modelfuzz
