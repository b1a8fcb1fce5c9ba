#include "gaunet/utility.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gaunet {

int AlternativeSet::total_variable_count() const {
  int n = 0;
  for (const auto& v : variables) n += static_cast<int>(v.size());
  return n;
}

int AlternativeSet::offset(int alt) const {
  int n = 0;
  for (int i = 0; i < alt; ++i) n += static_cast<int>(variables[i].size());
  return n;
}

int AlternativeSet::alt_index(std::string_view name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

int AlternativeSet::var_index(int alt, std::string_view name) const {
  const auto& vars = variables[alt];
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == name) return static_cast<int>(i);
  return -1;
}

void AlternativeSet::validate() const {
  if (names.empty()) throw std::invalid_argument("alternative set is empty");
  if (names.size() != variables.size())
    throw std::invalid_argument("alternative names and variable lists differ in length");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw std::invalid_argument("duplicate alternative name");
  for (size_t i = 0; i < variables.size(); ++i) {
    std::set<std::string> vs(variables[i].begin(), variables[i].end());
    if (vs.size() != variables[i].size())
      throw std::invalid_argument("duplicate variable name within alternative '" + names[i] + "'");
  }
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "gaunet") return ModelKind::GAUNet;
  if (s == "gaiunet") return ModelKind::GAIUNet;
  if (s == "asudnn") return ModelKind::AsuDnn;
  throw std::invalid_argument("unknown model kind '" + s + "' (expected linear, gaunet, gaiunet, or asudnn)");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::GAUNet: return "gaunet";
    case ModelKind::GAIUNet: return "gaiunet";
    case ModelKind::AsuDnn: return "asudnn";
  }
  return "linear";
}

int UtilityModel::shape_index(int alt, int var) const {
  for (size_t i = 0; i < shapes.size(); ++i)
    if (shapes[i].alt == alt && shapes[i].var == var) return static_cast<int>(i);
  return -1;
}

std::vector<int> UtilityModel::shapes_of(int alt) const {
  std::vector<int> out;
  for (size_t i = 0; i < shapes.size(); ++i)
    if (shapes[i].alt == alt) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> UtilityModel::interactions_of(int alt) const {
  std::vector<int> out;
  for (size_t i = 0; i < interactions.size(); ++i)
    if (interactions[i].alt == alt) out.push_back(static_cast<int>(i));
  return out;
}

void UtilityModel::validate() const {
  alternatives.validate();
  const int K = alternatives.alternative_count();
  if (static_cast<int>(ascs.size()) != K) throw std::invalid_argument("ascs size mismatch");
  if (!ascs.empty() && ascs[0] != 0.0)
    throw std::invalid_argument("asc of the reference alternative must be 0");
  auto finite = [](double v) { return std::isfinite(v); };
  for (double a : ascs)
    if (!finite(a)) throw std::invalid_argument("non-finite asc");
  switch (kind) {
    case ModelKind::Linear:
      if (static_cast<int>(linear_weights.size()) != K)
        throw std::invalid_argument("linear weights missing");
      for (int i = 0; i < K; ++i)
        if (static_cast<int>(linear_weights[i].size()) != alternatives.variable_count(i))
          throw std::invalid_argument("linear weight length mismatch");
      break;
    case ModelKind::GAIUNet:
      for (const auto& it : interactions) {
        if (it.var_a >= it.var_b) throw std::invalid_argument("interaction pair not in canonical order");
        if (it.net < 0 || it.net >= static_cast<int>(interaction_nets.size()) ||
            interaction_nets[it.net].input_width() != 2)
          throw std::invalid_argument("interaction net must have input width 2");
      }
      [[fallthrough]];
    case ModelKind::GAUNet:
      for (const auto& sf : shapes) {
        if (sf.net < 0 || sf.net >= static_cast<int>(nets.size()) || nets[sf.net].input_width() != 1)
          throw std::invalid_argument("shape net must have input width 1");
        if (sf.omega < 0 || sf.omega >= static_cast<int>(omegas.size()))
          throw std::invalid_argument("shape omega index out of range");
      }
      break;
    case ModelKind::AsuDnn:
      if (static_cast<int>(dense_nets.size()) != K) throw std::invalid_argument("dense nets missing");
      for (int i = 0; i < K; ++i)
        if (dense_nets[i].input_width() != alternatives.variable_count(i))
          throw std::invalid_argument("dense net input width mismatch");
      break;
  }
}

UtilityModel make_linear_model(const AlternativeSet& alts) {
  alts.validate();
  UtilityModel m;
  m.kind = ModelKind::Linear;
  m.alternatives = alts;
  m.ascs.assign(alts.alternative_count(), 0.0);
  m.linear_weights.resize(alts.alternative_count());
  for (int i = 0; i < alts.alternative_count(); ++i)
    m.linear_weights[i].assign(alts.variable_count(i), 0.0);
  return m;
}

namespace {

std::vector<int> shape_net_sizes(std::span<const int> hidden, int input_width) {
  std::vector<int> sizes;
  sizes.push_back(input_width);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

UtilityModel make_gaunet_model(const AlternativeSet& alts, std::span<const int> hidden_sizes,
                               Activation act, const std::vector<ShareGroup>& share, Rng& rng,
                               double leaky_slope) {
  alts.validate();
  UtilityModel m;
  m.kind = ModelKind::GAUNet;
  m.alternatives = alts;
  m.ascs.assign(alts.alternative_count(), 0.0);
  m.share_groups = share;
  const auto sizes = shape_net_sizes(hidden_sizes, 1);

  // group id per (alt, var): -1 for an unshared term
  const int K = alts.alternative_count();
  std::vector<std::vector<int>> group_of(K);
  for (int i = 0; i < K; ++i) group_of[i].assign(alts.variable_count(i), -1);
  for (size_t g = 0; g < share.size(); ++g) {
    bool everywhere = share[g].alternatives.empty();
    for (int i = 0; i < K; ++i) {
      bool member = everywhere ||
                    std::find(share[g].alternatives.begin(), share[g].alternatives.end(),
                              alts.names[i]) != share[g].alternatives.end();
      if (!member) continue;
      int v = alts.var_index(i, share[g].variable);
      if (v < 0) {
        if (everywhere) continue;
        throw std::invalid_argument("share group variable '" + share[g].variable +
                                    "' not present for alternative '" + alts.names[i] + "'");
      }
      if (group_of[i][v] != -1) throw std::invalid_argument("variable listed in two share groups");
      group_of[i][v] = static_cast<int>(g);
    }
  }

  std::vector<int> group_net(share.size(), -1);
  for (int i = 0; i < K; ++i) {
    for (int v = 0; v < alts.variable_count(i); ++v) {
      int g = group_of[i][v];
      if (g >= 0 && group_net[g] >= 0) {
        m.shapes.push_back({i, v, group_net[g], group_net[g]});
        continue;
      }
      int idx = static_cast<int>(m.nets.size());
      m.nets.push_back(make_mlp(sizes, act, rng, leaky_slope));
      m.omegas.push_back(1.0);
      if (g >= 0) group_net[g] = idx;
      m.shapes.push_back({i, v, idx, idx});
    }
  }
  return m;
}

UtilityModel make_asudnn_model(const AlternativeSet& alts, std::span<const int> hidden_sizes,
                               Activation act, Rng& rng, double leaky_slope) {
  alts.validate();
  UtilityModel m;
  m.kind = ModelKind::AsuDnn;
  m.alternatives = alts;
  m.ascs.assign(alts.alternative_count(), 0.0);
  for (int i = 0; i < alts.alternative_count(); ++i) {
    auto sizes = shape_net_sizes(hidden_sizes, alts.variable_count(i));
    m.dense_nets.push_back(make_mlp(sizes, act, rng, leaky_slope));
  }
  return m;
}

void add_interactions(UtilityModel& model, const std::vector<std::vector<std::pair<int, int>>>& pairs,
                      std::span<const int> hidden_sizes, Rng& rng) {
  if (model.kind != ModelKind::GAUNet && model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("add_interactions requires a GAUNet or GAIUNet model");
  if (static_cast<int>(pairs.size()) != model.alternatives.alternative_count())
    throw std::invalid_argument("add_interactions: one pair list per alternative expected");
  const auto sizes = shape_net_sizes(hidden_sizes, 2);
  const Activation act = model.nets.empty() ? Activation::Tanh : model.nets.front().activation;
  const double slope = model.nets.empty() ? 0.01 : model.nets.front().leaky_slope;
  for (int i = 0; i < static_cast<int>(pairs.size()); ++i) {
    for (auto [a, b] : pairs[i]) {
      if (a >= b) throw std::invalid_argument("interaction pair must satisfy var_a < var_b");
      int idx = static_cast<int>(model.interaction_nets.size());
      model.interaction_nets.push_back(make_mlp(sizes, act, rng, slope));
      model.interaction_omegas.push_back(1.0);
      model.interactions.push_back({i, a, b, idx, idx});
    }
  }
  model.kind = ModelKind::GAIUNet;
}

void resize_obs_eval(const UtilityModel& model, ObsEval& ev) {
  const int K = model.alternatives.alternative_count();
  ev.utilities.assign(K, 0.0);
  ev.probabilities.assign(K, 0.0);
  ev.shape_out.assign(model.shapes.size(), 0.0);
  ev.interaction_out.assign(model.interactions.size(), 0.0);
  ev.shape_ws.resize(model.shapes.size());
  ev.interaction_ws.resize(model.interactions.size());
  ev.dense_ws.resize(model.dense_nets.size());
}

double eval_alternative(const UtilityModel& model, int alt, std::span<const double> x_alt, ObsEval& ev) {
  if (static_cast<int>(x_alt.size()) != model.alternatives.variable_count(alt))
    throw std::invalid_argument("variable vector length mismatch for alternative '" +
                                model.alternatives.names[alt] + "'");
  double v = model.ascs[alt];
  switch (model.kind) {
    case ModelKind::Linear: {
      const auto& w = model.linear_weights[alt];
      for (size_t j = 0; j < w.size(); ++j) v += w[j] * x_alt[j];
      break;
    }
    case ModelKind::GAUNet:
    case ModelKind::GAIUNet: {
      for (size_t s = 0; s < model.shapes.size(); ++s) {
        const ShapeFunction& sf = model.shapes[s];
        if (sf.alt != alt) continue;
        double out = mlp_forward(model.nets[sf.net], x_alt.subspan(sf.var, 1), ev.shape_ws[s]);
        ev.shape_out[s] = out;
        v += model.omegas[sf.omega] * out;
      }
      for (size_t q = 0; q < model.interactions.size(); ++q) {
        const InteractionFunction& it = model.interactions[q];
        if (it.alt != alt) continue;
        double xpair[2] = {x_alt[it.var_a], x_alt[it.var_b]};
        double out = mlp_forward(model.interaction_nets[it.net], xpair, ev.interaction_ws[q]);
        ev.interaction_out[q] = out;
        v += model.interaction_omegas[it.omega] * out;
      }
      break;
    }
    case ModelKind::AsuDnn:
      v += mlp_forward(model.dense_nets[alt], x_alt, ev.dense_ws[alt]);
      break;
  }
  return v;
}

namespace {

double eval_checked(const UtilityModel& model, ModelKind expected, int alt,
                    std::span<const double> x_alt) {
  if (model.kind != expected)
    throw std::invalid_argument("utility called for kind '" + to_string(expected) +
                                "' on a '" + to_string(model.kind) + "' model");
  ObsEval ev;
  resize_obs_eval(model, ev);
  return eval_alternative(model, alt, x_alt, ev);
}

}  // namespace

double utility_linear(const UtilityModel& m, int alt, std::span<const double> x) {
  return eval_checked(m, ModelKind::Linear, alt, x);
}
double utility_gaunet(const UtilityModel& m, int alt, std::span<const double> x) {
  return eval_checked(m, ModelKind::GAUNet, alt, x);
}
double utility_gaiunet(const UtilityModel& m, int alt, std::span<const double> x) {
  return eval_checked(m, ModelKind::GAIUNet, alt, x);
}
double utility_asudnn(const UtilityModel& m, int alt, std::span<const double> x) {
  return eval_checked(m, ModelKind::AsuDnn, alt, x);
}

std::vector<double> utility_vector(const UtilityModel& model, const std::vector<std::vector<double>>& x) {
  const int K = model.alternatives.alternative_count();
  if (static_cast<int>(x.size()) != K)
    throw std::invalid_argument("utility_vector: one variable vector per alternative expected");
  ObsEval ev;
  resize_obs_eval(model, ev);
  std::vector<double> out(K);
  for (int i = 0; i < K; ++i) out[i] = eval_alternative(model, i, x[i], ev);
  return out;
}

std::vector<double> shape_curve(const UtilityModel& model, int alt, int var,
                                std::span<const double> grid) {
  if (model.kind != ModelKind::GAUNet && model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("shape_curve requires a GAUNet or GAIUNet model");
  if (grid.empty()) throw std::invalid_argument("shape_curve: empty grid");
  int s = model.shape_index(alt, var);
  if (s < 0) throw std::invalid_argument("shape_curve: unknown (alternative, variable)");
  const ShapeFunction& sf = model.shapes[s];
  std::vector<double> out(grid.size());
  MlpWorkspace ws;
  for (size_t i = 0; i < grid.size(); ++i)
    out[i] = model.omegas[sf.omega] * mlp_forward(model.nets[sf.net], grid.subspan(i, 1), ws);
  return out;
}

std::vector<double> interaction_surface(const UtilityModel& model, int interaction_index,
                                        std::span<const double> grid_a, std::span<const double> grid_b) {
  if (interaction_index < 0 || interaction_index >= static_cast<int>(model.interactions.size()))
    throw std::invalid_argument("interaction_surface: index out of range");
  const InteractionFunction& it = model.interactions[interaction_index];
  std::vector<double> out(grid_a.size() * grid_b.size());
  MlpWorkspace ws;
  for (size_t i = 0; i < grid_a.size(); ++i) {
    for (size_t j = 0; j < grid_b.size(); ++j) {
      double xpair[2] = {grid_a[i], grid_b[j]};
      out[i * grid_b.size() + j] =
          model.interaction_omegas[it.omega] * mlp_forward(model.interaction_nets[it.net], xpair, ws);
    }
  }
  return out;
}

}  // namespace gaunet
