#ifndef GAUNET_UTILITY_HPP
#define GAUNET_UTILITY_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaunet/numcore.hpp"

namespace gaunet {

// The choice set: alternative names and each alternative's ordered variable
// list. Variable columns across the whole set are addressed by
// offset(alt) + var, matching the dataset row layout.
struct AlternativeSet {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> variables;

  int alternative_count() const { return static_cast<int>(names.size()); }
  int variable_count(int alt) const { return static_cast<int>(variables[alt].size()); }
  int total_variable_count() const;
  int offset(int alt) const;

  // -1 when absent.
  int alt_index(std::string_view name) const;
  int var_index(int alt, std::string_view name) const;

  void validate() const;
  bool operator==(const AlternativeSet&) const = default;
};

// One per-variable shape term: omega * net(x). net and omega index shared
// pools, so members of a weight-sharing group alias the same entries.
struct ShapeFunction {
  int alt;
  int var;
  int net;
  int omega;
};

// One pairwise term: omega * net(x_a, x_b), with var_a < var_b.
struct InteractionFunction {
  int alt;
  int var_a;
  int var_b;
  int net;
  int omega;
};

// Cross-alternative pooling request: one variable's shape parameters shared
// across the listed alternatives (all alternatives when the list is empty).
struct ShareGroup {
  std::string variable;
  std::vector<std::string> alternatives;
};

enum class ModelKind { Linear, GAUNet, GAIUNet, AsuDnn };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// Deterministic utility family. Only the fields matching `kind` are
// populated; ascs[0] is pinned to 0 for identification and never trained.
struct UtilityModel {
  ModelKind kind = ModelKind::Linear;
  AlternativeSet alternatives;
  std::vector<double> ascs;

  // GAUNet / GAIUNet
  std::vector<ShapeFunction> shapes;
  std::vector<Mlp> nets;
  std::vector<double> omegas;
  std::vector<InteractionFunction> interactions;
  std::vector<Mlp> interaction_nets;
  std::vector<double> interaction_omegas;
  std::vector<ShareGroup> share_groups;

  // Linear
  std::vector<std::vector<double>> linear_weights;

  // ASU-DNN
  std::vector<Mlp> dense_nets;

  int shape_index(int alt, int var) const;  // -1 when absent
  std::vector<int> shapes_of(int alt) const;
  std::vector<int> interactions_of(int alt) const;
  void validate() const;
};

UtilityModel make_linear_model(const AlternativeSet& alts);
UtilityModel make_gaunet_model(const AlternativeSet& alts, std::span<const int> hidden_sizes,
                               Activation act, const std::vector<ShareGroup>& share, Rng& rng,
                               double leaky_slope = 0.01);
UtilityModel make_asudnn_model(const AlternativeSet& alts, std::span<const int> hidden_sizes,
                               Activation act, Rng& rng, double leaky_slope = 0.01);

// Upgrades a GAUNet model in place: adds the given (var_a < var_b) pairs per
// alternative as interaction terms and switches the kind to GAIUNet.
void add_interactions(UtilityModel& model, const std::vector<std::vector<std::pair<int, int>>>& pairs,
                      std::span<const int> hidden_sizes, Rng& rng);

// Forward-pass scratch for one observation across all alternatives. Keeps the
// raw net outputs and per-net workspaces needed for backpropagation and the
// clarity penalty.
struct ObsEval {
  std::vector<double> utilities;
  std::vector<double> probabilities;
  std::vector<double> shape_out;
  std::vector<double> interaction_out;
  std::vector<MlpWorkspace> shape_ws;
  std::vector<MlpWorkspace> interaction_ws;
  std::vector<MlpWorkspace> dense_ws;
};

void resize_obs_eval(const UtilityModel& model, ObsEval& ev);

// Deterministic utility of one alternative; populates the matching slices of
// ev for nets the alternative owns.
double eval_alternative(const UtilityModel& model, int alt, std::span<const double> x_alt, ObsEval& ev);

// Spec'd per-kind entry points (thin wrappers that also check the kind).
double utility_linear(const UtilityModel& model, int alt, std::span<const double> x_alt);
double utility_gaunet(const UtilityModel& model, int alt, std::span<const double> x_alt);
double utility_gaiunet(const UtilityModel& model, int alt, std::span<const double> x_alt);
double utility_asudnn(const UtilityModel& model, int alt, std::span<const double> x_alt);

// All alternatives' utilities for one observation given per-alternative
// variable vectors.
std::vector<double> utility_vector(const UtilityModel& model, const std::vector<std::vector<double>>& x);

// Single-variable contribution omega * net(x) at each grid point. Grid values
// are in the model's input space; callers exporting in original units map the
// grid through their standardizer first.
std::vector<double> shape_curve(const UtilityModel& model, int alt, int var, std::span<const double> grid);

// Pairwise contribution on the tensor grid (row-major grid_a x grid_b).
std::vector<double> interaction_surface(const UtilityModel& model, int interaction_index,
                                        std::span<const double> grid_a, std::span<const double> grid_b);

}  // namespace gaunet

#endif  // GAUNET_UTILITY_HPP
