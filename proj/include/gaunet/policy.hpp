#ifndef GAUNET_POLICY_HPP
#define GAUNET_POLICY_HPP

#include <string>
#include <vector>

#include "gaunet/training.hpp"

namespace gaunet {

// How observations whose shifted variables leave no feasible alternative are
// relabeled. Drop removes them from that delta's accuracy denominator (the
// generator's convention for impossible candidates); UnconstrainedFallback
// labels them from the cap-free utility race; FrozenLabels skips relabeling
// entirely and scores against the original choices.
enum class RelabelMode { Drop, UnconstrainedFallback, FrozenLabels };

RelabelMode relabel_mode_from_string(const std::string& s);
std::string to_string(RelabelMode mode);

struct PolicyShiftSpec {
  std::string alternative;
  std::string variable;
  std::vector<double> deltas;  // added to the target column, original units
  RelabelMode mode = RelabelMode::Drop;
  std::uint64_t seed = 0;  // Gumbel stream for relabeling, mixed per delta
};

struct PolicyPoint {
  double delta = 0.0;
  int n_scored = 0;   // observations in the accuracy denominator
  int n_dropped = 0;  // no feasible alternative (Drop mode only)
  double accuracy = 0.0;
  std::vector<double> predicted_share;  // model argmax share per alternative
  std::vector<double> truth_share;      // relabeled ground-truth share
};

struct PolicyResult {
  PolicyShiftSpec spec;
  std::vector<PolicyPoint> points;
};

// For each delta: shift the target column of every observation, relabel the
// ground truth under the generator's true model (constraints included, fresh
// Gumbel draws seeded per delta), and score the fitted model's predictions on
// the shifted inputs through its stored standardizer.
PolicyResult policy_eval(const FittedModel& fitted, const Dataset& base_data,
                         const SyntheticConfig& truth, const PolicyShiftSpec& spec);

// Ground-truth labels for every row of an (optionally shifted) dataset under
// the generator's constrained model; rows with no feasible alternative get
// label -1. Exposed for tests.
std::vector<int> relabel_synthetic(const Dataset& shifted, const SyntheticConfig& truth,
                                   std::uint64_t seed);

struct CurveSeries {
  int alt = 0;
  int var = 0;
  std::vector<double> grid;    // original units
  std::vector<double> values;  // single-series models: one value per grid point
  // ASU-DNN utilities depend on the other variables, so curves are evaluated
  // conditional on dataset rows; one column per conditioning row plus the
  // pointwise median.
  std::vector<std::vector<double>> conditional;  // [row][grid point]
  std::vector<double> median;
};

struct InteractionSurfaceSeries {
  int alt = 0;
  int var_a = 0;
  int var_b = 0;
  std::vector<double> grid_a;
  std::vector<double> grid_b;
  std::vector<double> values;  // row-major grid_a x grid_b
};

struct CurveTable {
  std::vector<CurveSeries> curves;
  std::vector<InteractionSurfaceSeries> surfaces;
};

// Per-variable utility contributions over [min, max] of the dataset in
// original units. Linear models export their exact line; ASU-DNN exports
// conditional curves over up to max_conditional_rows evenly strided rows.
CurveTable export_curves(const FittedModel& fitted, const Dataset& raw_data, int grid_points,
                         int max_conditional_rows = 100);

// One CSV per (alternative, variable) named <alt>_<var>.csv under dir.
void write_curves_csv(const CurveTable& table, const AlternativeSet& alts, const std::string& dir);

void write_importance_csv(const ImportanceReport& report, const AlternativeSet& alts,
                          const std::string& path);
void write_policy_csv(const PolicyResult& result, const AlternativeSet& alts,
                      const std::string& path);
void write_vif_csv(const std::vector<std::vector<VifEntry>>& per_alt, const AlternativeSet& alts,
                   const std::string& path);

}  // namespace gaunet

#endif  // GAUNET_POLICY_HPP
