#ifndef GAUNET_MNL_HPP
#define GAUNET_MNL_HPP

#include <span>
#include <vector>

#include "gaunet/data.hpp"
#include "gaunet/utility.hpp"

namespace gaunet {

// Regularization magnitudes enter negated (<= 0): the objective is maximized
// and each penalty term is added as coefficient * nonnegative-sum.
struct PenaltyConfig {
  double alpha = 0.0;
  double alpha_interaction = 0.0;
  double beta_clarity = 0.0;

  void validate() const;
};

struct Objective {
  double log_likelihood = 0.0;
  double l1_main = 0.0;
  double l1_interaction = 0.0;
  double marginal_clarity = 0.0;
  double total = 0.0;
};

// Max-subtracted softmax; entries in (0,1), summing to 1.
std::vector<double> softmax(std::span<const double> utilities);

std::vector<double> choice_probabilities(const UtilityModel& model,
                                         const std::vector<std::vector<double>>& x);
void choice_probabilities(const UtilityModel& model, const Dataset& data, int obs,
                          ObsEval& ev);

// Sum over observations of ln P(chosen | x). The unsuffixed kernel runs the
// observations in fixed-size chunks that OpenMP threads pick up and combines
// the chunk partials in index order, so the result is bit-identical across
// runs and thread counts. The _serial variant is the plain reference loop
// kept for tests and the benchmark.
double log_likelihood(const UtilityModel& model, const Dataset& data);
double log_likelihood_serial(const UtilityModel& model, const Dataset& data);

double l1_main(const UtilityModel& model);
double l1_interaction(const UtilityModel& model);

double marginal_clarity(const UtilityModel& model, const Dataset& data);
double marginal_clarity_serial(const UtilityModel& model, const Dataset& data);

Objective objective(const UtilityModel& model, const Dataset& data, const PenaltyConfig& cfg);

// Flat view of every trainable parameter. Slot order is canonical:
// ascs (reference alternative excluded), then the kind's blocks in pool
// order. Weight-sharing falls out naturally: a pooled net or omega occupies
// one slot range no matter how many shape functions reference it.
enum class ParamGroup : std::uint8_t { Asc, MainOmega, MainNet, InterOmega, InterNet, LinearWeight, DenseNet };

struct ModelLayout {
  std::vector<double*> slots;
  std::vector<ParamGroup> groups;

  std::vector<int> asc_slot;          // per alternative, -1 for the pinned reference
  std::vector<int> omega_slot;        // per shapes[] entry
  std::vector<int> net_offset;        // per nets[] pool entry
  std::vector<int> inter_omega_slot;  // per interactions[] entry
  std::vector<int> inter_net_offset;  // per interaction_nets[] pool entry
  std::vector<int> linear_offset;     // per alternative
  std::vector<int> dense_offset;      // per alternative

  size_t size() const { return slots.size(); }
  std::vector<double> snapshot() const;
  void restore(std::span<const double> values) const;
  std::vector<std::uint8_t> mask(bool asc, bool main, bool interaction) const;
};

ModelLayout build_layout(UtilityModel& model);

// Which parameter blocks receive gradients; frozen blocks keep exact zeros
// and their backward passes are skipped.
struct TrainableGroups {
  bool asc = true;
  bool main = true;
  bool interaction = true;
};

// Writes into grad the gradient of
//   sum_{d in obs} [ln P(y_d|x_d) + beta * clarity_d] + penalty_scale * (alpha*L1 + alpha_I*L1_I)
// which is the full objective when obs covers the dataset and penalty_scale
// is 1. Subgradient 0 is used at |w| = 0 and at the clarity kink. When
// value_out is given it receives the objective value of the same expression.
void objective_gradients(const UtilityModel& model, const ModelLayout& layout, const Dataset& data,
                         std::span<const int> obs, const PenaltyConfig& cfg, double penalty_scale,
                         const TrainableGroups& groups, std::span<double> grad,
                         double* value_out = nullptr);
void objective_gradients_serial(const UtilityModel& model, const ModelLayout& layout,
                                const Dataset& data, std::span<const int> obs,
                                const PenaltyConfig& cfg, double penalty_scale,
                                const TrainableGroups& groups, std::span<double> grad,
                                double* value_out = nullptr);

// Objective restricted to a subset of observations with scaled penalties;
// used for batch traces. The spec'd full-data operation is objective().
Objective objective_subset(const UtilityModel& model, const Dataset& data, std::span<const int> obs,
                           const PenaltyConfig& cfg, double penalty_scale);

// Fraction of observations whose argmax-probability alternative matches the
// label; ties resolve to the lowest alternative index.
double accuracy_model_space(const UtilityModel& model, const Dataset& data);

// Per-alternative share of argmax predictions.
std::vector<double> predicted_shares(const UtilityModel& model, const Dataset& data);

}  // namespace gaunet

#endif  // GAUNET_MNL_HPP
