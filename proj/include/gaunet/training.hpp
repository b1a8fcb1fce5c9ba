#ifndef GAUNET_TRAINING_HPP
#define GAUNET_TRAINING_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gaunet/data.hpp"
#include "gaunet/mnl.hpp"
#include "gaunet/utility.hpp"

namespace gaunet {

// Estimation recipe. Defaults follow the reference setup: batch 200,
// learning rate 1e-3, [5,5] hidden nodes, regularization magnitudes 1e-3,
// importance threshold 0.1, 100 grid points.
struct TrainConfig {
  int batch_size = 200;
  double learning_rate = 1e-3;
  int max_epochs = 1000;
  int early_stop_patience = 50;
  double validation_fraction = 0.1;
  PenaltyConfig penalties{-1e-3, -1e-3, -1e-3};
  double importance_threshold = 0.1;
  int importance_grid_points = 100;
  // When set, selection compares each main effect's share of the summed
  // magnitude scores against the threshold instead of the raw magnitude.
  bool importance_normalize = false;
  std::uint64_t seed = 0;
  Activation activation = Activation::Tanh;
  std::vector<int> hidden_sizes = {5, 5};
  std::vector<ShareGroup> share_groups;
  double leaky_slope = 0.01;
  // Plateau decay: learning rate multiplied by the factor after
  // lr_decay_patience epochs without validation improvement. 1 disables it.
  double lr_decay_factor = 1.0;
  int lr_decay_patience = 25;

  void validate() const;
};

struct ImportanceEntry {
  int alt;
  int var;
  double raw_score = 0.0;        // grid mean of omega * net(x), signed
  double magnitude_score = 0.0;  // grid mean of |omega * net(x)|
  bool selected = false;         // magnitude_score >= threshold
};

struct InteractionImportanceEntry {
  int alt;
  int var_a;
  int var_b;
  double raw_score = 0.0;
  double magnitude_score = 0.0;
};

struct ImportanceReport {
  std::vector<ImportanceEntry> mains;
  std::vector<InteractionImportanceEntry> interactions;
  double threshold = 0.0;
  int grid_points = 0;
};

// Fold assignment: a seeded permutation cut into contiguous blocks, so fold
// sizes differ by at most one and the partition is determined by (n, folds,
// seed) alone.
struct CvPlan {
  int fold_count = 5;
  std::vector<int> fold_of;
  std::uint64_t seed = 0;
};

CvPlan make_cv_plan(int n_obs, int folds, std::uint64_t seed);

struct EpochRecord {
  int epoch;
  double train_objective;  // sum of batch objectives seen this epoch
  double validation_ll;
  double learning_rate;
};

struct StageTrace {
  std::string stage;
  std::vector<EpochRecord> epochs;
  Objective start_objective;  // full training split, before the stage
  Objective final_objective;  // after best-checkpoint restore
  // Layout-ordered snapshot after the stage (ascs, main omegas, main nets,
  // then interaction blocks); the main-effect prefix is stable across the
  // staged procedure, which makes the stage-3 freeze checkable bitwise.
  std::vector<double> params_after;
};

// A trained model bundled with everything needed to reproduce its
// predictions on raw (unstandardized) data.
struct FittedModel {
  UtilityModel utility;
  Standardizer standardizer;
  TrainConfig config;
  std::uint64_t seed = 0;
  std::string provenance;
};

struct FitResult {
  FittedModel model;
  std::vector<StageTrace> stages;
  Objective final_objective;  // training split, model space
  ImportanceReport importance;
  std::vector<std::vector<std::pair<int, int>>> selected_pairs;  // per alternative (staged fits)
  std::vector<std::string> warnings;
};

// Mini-batch Adam ascent on the penalized log-likelihood with a held-out
// validation split for early stopping; the best-validation checkpoint is
// restored. Deterministic in (data, cfg).
FitResult fit(ModelKind kind, const Dataset& data, const TrainConfig& cfg);

// Staged estimation: (1) main effects under LL + alpha*L1, (2) importance
// thresholding and pair construction, (3) interaction parameters with main
// effects frozen, (4) joint fine-tune. Stages 3 and 4 are skipped when no
// pair passes the threshold, leaving the stage-1 model untouched.
FitResult fit_gaiunet_staged(const Dataset& data, const TrainConfig& cfg);

// Grid-averaged contribution scores. Ranges come from the raw data's
// per-column min/max; grids are evenly spaced including both endpoints and
// are mapped through the model's standardizer before net evaluation.
ImportanceReport importance_scores(const FittedModel& fitted, const Dataset& raw_data, int grid_points,
                                   double threshold, bool normalize = false);

// Model-space variant with explicit [lo, hi] ranges per (alt, var) column.
ImportanceReport importance_scores_model_space(const UtilityModel& model,
                                               std::span<const double> col_min,
                                               std::span<const double> col_max, int grid_points,
                                               double threshold, bool normalize = false);

// All unordered pairs (j < k) of selected variables within each alternative.
std::vector<std::vector<std::pair<int, int>>> select_pairs(const ImportanceReport& report,
                                                           const AlternativeSet& alts);

struct EvalMetrics {
  double log_likelihood = 0.0;
  double accuracy = 0.0;
  int n = 0;
};

// Metrics on raw data, standardized through the fitted model's transform.
EvalMetrics evaluate(const FittedModel& fitted, const Dataset& raw_data);
double accuracy(const FittedModel& fitted, const Dataset& raw_data);

struct CvFoldResult {
  double train_ll = 0.0;
  double test_ll = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct CvResult {
  std::vector<CvFoldResult> folds;
  CvFoldResult mean;
  CvFoldResult stdev;
};

CvResult cross_validate(ModelKind kind, const Dataset& data, const TrainConfig& cfg,
                        const CvPlan& plan);

}  // namespace gaunet

#endif  // GAUNET_TRAINING_HPP
