#include "gaunet/mnl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaunet {

namespace {

// Observations are processed in fixed-size chunks whose partial results are
// combined in index order. Chunk boundaries do not depend on the thread
// count, so parallel results are bit-identical across runs and machines with
// different core counts.
constexpr int kChunk = 64;

void check_compatible(const UtilityModel& model, const Dataset& data) {
  if (!(model.alternatives == data.alternatives))
    throw std::invalid_argument("model and dataset disagree on alternatives/variables");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Interaction q couples to the main effect of its first variable.
std::vector<int> first_shape_of_interactions(const UtilityModel& model) {
  std::vector<int> first(model.interactions.size(), -1);
  for (size_t q = 0; q < model.interactions.size(); ++q)
    first[q] = model.shape_index(model.interactions[q].alt, model.interactions[q].var_a);
  return first;
}

std::vector<int> interaction_count_per_alt(const UtilityModel& model) {
  std::vector<int> n(model.alternatives.alternative_count(), 0);
  for (const auto& it : model.interactions) ++n[it.alt];
  return n;
}

// Forward pass for one observation: utilities, probabilities, and the
// log-likelihood term, all overflow-safe.
double eval_observation(const UtilityModel& model, const Dataset& data, int obs, ObsEval& ev) {
  const int K = model.alternatives.alternative_count();
  for (int i = 0; i < K; ++i) {
    ev.utilities[i] = eval_alternative(model, i, data.obs_values(obs, i), ev);
    if (!std::isfinite(ev.utilities[i]))
      throw std::runtime_error("non-finite utility for alternative " + std::to_string(i) +
                               " at observation " + std::to_string(obs));
  }
  double vmax = ev.utilities[0];
  for (int i = 1; i < K; ++i) vmax = std::max(vmax, ev.utilities[i]);
  double z = 0.0;
  for (int i = 0; i < K; ++i) {
    ev.probabilities[i] = std::exp(ev.utilities[i] - vmax);
    z += ev.probabilities[i];
  }
  for (int i = 0; i < K; ++i) ev.probabilities[i] /= z;
  return ev.utilities[data.chosen[obs]] - vmax - std::log(z);
}

// Marginal-clarity value for one already-evaluated observation.
double obs_clarity(const UtilityModel& model, const ObsEval& ev, const std::vector<int>& first_shape,
                   const std::vector<int>& pairs_per_alt) {
  if (model.interactions.empty()) return 0.0;
  const int K = model.alternatives.alternative_count();
  std::vector<double> m(K, 0.0);
  for (size_t q = 0; q < model.interactions.size(); ++q) {
    const auto& it = model.interactions[q];
    double v_main = model.omegas[model.shapes[first_shape[q]].omega] * ev.shape_out[first_shape[q]];
    double v_pair = model.interaction_omegas[it.omega] * ev.interaction_out[q];
    m[it.alt] += v_main * v_pair;
  }
  double total = 0.0;
  for (int i = 0; i < K; ++i)
    if (pairs_per_alt[i] > 0) total += std::abs(m[i] / pairs_per_alt[i]);
  return total;
}

struct ObsScratch {
  ObsEval ev;
  std::vector<double> clar_shape;  // clarity factor per shape entry
  std::vector<double> clar_inter;  // clarity factor per interaction entry
  std::vector<double> m;           // per-alternative inner sum

  void resize(const UtilityModel& model) {
    resize_obs_eval(model, ev);
    clar_shape.assign(model.shapes.size(), 0.0);
    clar_inter.assign(model.interactions.size(), 0.0);
    m.assign(model.alternatives.alternative_count(), 0.0);
  }
};

// Gradient of [ln P(y|x) + beta * clarity] for one observation, accumulated
// into grad (layout slot order); returns the same expression's value.
double accumulate_obs_gradient(const UtilityModel& model, const ModelLayout& layout,
                               const Dataset& data, int obs, double beta,
                               const TrainableGroups& groups, const std::vector<int>& first_shape,
                               const std::vector<int>& pairs_per_alt, ObsScratch& ws,
                               std::span<double> grad) {
  double value = eval_observation(model, data, obs, ws.ev);
  const int K = model.alternatives.alternative_count();
  const int y = data.chosen[obs];

  const bool clarity_active = beta != 0.0 && !model.interactions.empty();
  if (clarity_active) {
    std::fill(ws.m.begin(), ws.m.end(), 0.0);
    for (size_t q = 0; q < model.interactions.size(); ++q) {
      const auto& it = model.interactions[q];
      double v_main = model.omegas[model.shapes[first_shape[q]].omega] * ws.ev.shape_out[first_shape[q]];
      double v_pair = model.interaction_omegas[it.omega] * ws.ev.interaction_out[q];
      ws.m[it.alt] += v_main * v_pair;
    }
    for (int i = 0; i < K; ++i)
      if (pairs_per_alt[i] > 0) value += beta * std::abs(ws.m[i] / pairs_per_alt[i]);
    std::fill(ws.clar_shape.begin(), ws.clar_shape.end(), 0.0);
    std::fill(ws.clar_inter.begin(), ws.clar_inter.end(), 0.0);
    for (size_t q = 0; q < model.interactions.size(); ++q) {
      const auto& it = model.interactions[q];
      double c = beta * sign(ws.m[it.alt]) / pairs_per_alt[it.alt];
      double v_main = model.omegas[model.shapes[first_shape[q]].omega] * ws.ev.shape_out[first_shape[q]];
      double v_pair = model.interaction_omegas[it.omega] * ws.ev.interaction_out[q];
      ws.clar_shape[first_shape[q]] += c * v_pair;
      ws.clar_inter[q] = c * v_main;
    }
  }

  for (int i = 0; i < K; ++i) {
    double g = (i == y ? 1.0 : 0.0) - ws.ev.probabilities[i];
    if (groups.asc && layout.asc_slot[i] >= 0) grad[layout.asc_slot[i]] += g;

    switch (model.kind) {
      case ModelKind::Linear: {
        if (!groups.main) break;
        auto x = data.obs_values(obs, i);
        int base = layout.linear_offset[i];
        for (size_t j = 0; j < x.size(); ++j) grad[base + j] += g * x[j];
        break;
      }
      case ModelKind::AsuDnn: {
        if (!groups.main) break;
        int off = layout.dense_offset[i];
        const Mlp& net = model.dense_nets[i];
        mlp_backward(net, data.obs_values(obs, i), ws.ev.dense_ws[i], g,
                     grad.subspan(off, net.param_count()));
        break;
      }
      case ModelKind::GAUNet:
      case ModelKind::GAIUNet:
        break;  // handled below over shape/interaction entries
    }
  }

  if (model.kind == ModelKind::GAUNet || model.kind == ModelKind::GAIUNet) {
    if (groups.main) {
      for (size_t s = 0; s < model.shapes.size(); ++s) {
        const ShapeFunction& sf = model.shapes[s];
        double g = (sf.alt == y ? 1.0 : 0.0) - ws.ev.probabilities[sf.alt];
        double u = g + (clarity_active ? ws.clar_shape[s] : 0.0);
        if (u == 0.0) continue;
        grad[layout.omega_slot[s]] += u * ws.ev.shape_out[s];
        const Mlp& net = model.nets[sf.net];
        auto x = data.obs_values(obs, sf.alt).subspan(sf.var, 1);
        mlp_backward(net, x, ws.ev.shape_ws[s], u * model.omegas[sf.omega],
                     grad.subspan(layout.net_offset[sf.net], net.param_count()));
      }
    }
    if (groups.interaction) {
      for (size_t q = 0; q < model.interactions.size(); ++q) {
        const InteractionFunction& it = model.interactions[q];
        double g = (it.alt == y ? 1.0 : 0.0) - ws.ev.probabilities[it.alt];
        double u = g + (clarity_active ? ws.clar_inter[q] : 0.0);
        if (u == 0.0) continue;
        grad[layout.inter_omega_slot[q]] += u * ws.ev.interaction_out[q];
        const Mlp& net = model.interaction_nets[it.net];
        auto xa = data.obs_values(obs, it.alt);
        double xpair[2] = {xa[it.var_a], xa[it.var_b]};
        mlp_backward(net, xpair, ws.ev.interaction_ws[q], u * model.interaction_omegas[it.omega],
                     grad.subspan(layout.inter_net_offset[it.net], net.param_count()));
      }
    }
  }
  return value;
}

double penalty_value(const UtilityModel& model, const PenaltyConfig& cfg, double penalty_scale) {
  if (model.kind != ModelKind::GAUNet && model.kind != ModelKind::GAIUNet) return 0.0;
  double v = penalty_scale * cfg.alpha * l1_main(model);
  if (model.kind == ModelKind::GAIUNet)
    v += penalty_scale * cfg.alpha_interaction * l1_interaction(model);
  return v;
}

void add_penalty_gradients(const UtilityModel& model, const ModelLayout& layout,
                           const PenaltyConfig& cfg, double penalty_scale,
                           const TrainableGroups& groups, std::span<double> grad) {
  if (model.kind == ModelKind::GAUNet || model.kind == ModelKind::GAIUNet) {
    if (groups.main && cfg.alpha != 0.0) {
      for (size_t s = 0; s < model.shapes.size(); ++s)
        grad[layout.omega_slot[s]] +=
            penalty_scale * cfg.alpha * sign(model.omegas[model.shapes[s].omega]);
    }
    if (groups.interaction && cfg.alpha_interaction != 0.0) {
      for (size_t q = 0; q < model.interactions.size(); ++q)
        grad[layout.inter_omega_slot[q]] +=
            penalty_scale * cfg.alpha_interaction *
            sign(model.interaction_omegas[model.interactions[q].omega]);
    }
  }
}

// Runs fn(chunk_index, first_obs, last_obs) over fixed chunks, catching
// exceptions so they can be rethrown after the parallel region joins.
template <typename Fn>
void run_chunked(int n, Fn&& fn) {
  const int nchunks = (n + kChunk - 1) / kChunk;
  std::atomic<bool> failed{false};
  std::string error;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int c = 0; c < nchunks; ++c) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!failed.exchange(true)) error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error(error);
}

}  // namespace

void PenaltyConfig::validate() const {
  if (alpha > 0 || alpha_interaction > 0 || beta_clarity > 0)
    throw std::invalid_argument("penalty coefficients must be nonpositive");
  if (!std::isfinite(alpha) || !std::isfinite(alpha_interaction) || !std::isfinite(beta_clarity))
    throw std::invalid_argument("penalty coefficients must be finite");
}

std::vector<double> softmax(std::span<const double> utilities) {
  if (utilities.empty()) throw std::invalid_argument("softmax of an empty vector");
  double vmax = utilities[0];
  for (double v : utilities) {
    if (!std::isfinite(v)) throw std::runtime_error("softmax: non-finite utility");
    vmax = std::max(vmax, v);
  }
  std::vector<double> p(utilities.size());
  double z = 0.0;
  for (size_t i = 0; i < utilities.size(); ++i) {
    p[i] = std::exp(utilities[i] - vmax);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> choice_probabilities(const UtilityModel& model,
                                         const std::vector<std::vector<double>>& x) {
  return softmax(utility_vector(model, x));
}

void choice_probabilities(const UtilityModel& model, const Dataset& data, int obs, ObsEval& ev) {
  if (ev.utilities.size() != static_cast<size_t>(model.alternatives.alternative_count()))
    resize_obs_eval(model, ev);
  eval_observation(model, data, obs, ev);
}

double log_likelihood_serial(const UtilityModel& model, const Dataset& data) {
  check_compatible(model, data);
  ObsEval ev;
  resize_obs_eval(model, ev);
  double ll = 0.0;
  for (int obs = 0; obs < data.observation_count(); ++obs) ll += eval_observation(model, data, obs, ev);
  return ll;
}

double log_likelihood(const UtilityModel& model, const Dataset& data) {
  check_compatible(model, data);
  const int n = data.observation_count();
  if (n == 0) return 0.0;
  const int nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks, 0.0);
  run_chunked(n, [&](int c, int lo, int hi) {
    thread_local ObsEval ev;
    resize_obs_eval(model, ev);
    double acc = 0.0;
    for (int obs = lo; obs < hi; ++obs) acc += eval_observation(model, data, obs, ev);
    partial[c] = acc;
  });
  double ll = 0.0;
  for (double v : partial) ll += v;
  return ll;
}

double l1_main(const UtilityModel& model) {
  if (model.kind != ModelKind::GAUNet && model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("l1_main requires a GAUNet or GAIUNet model");
  double s = 0.0;
  for (const auto& sf : model.shapes) s += std::abs(model.omegas[sf.omega]);
  return s;
}

double l1_interaction(const UtilityModel& model) {
  if (model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("l1_interaction requires a GAIUNet model");
  double s = 0.0;
  for (const auto& it : model.interactions) s += std::abs(model.interaction_omegas[it.omega]);
  return s;
}

double marginal_clarity_serial(const UtilityModel& model, const Dataset& data) {
  if (model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("marginal_clarity requires a GAIUNet model");
  check_compatible(model, data);
  if (model.interactions.empty()) return 0.0;
  const auto first_shape = first_shape_of_interactions(model);
  const auto pairs_per_alt = interaction_count_per_alt(model);
  ObsEval ev;
  resize_obs_eval(model, ev);
  double total = 0.0;
  for (int obs = 0; obs < data.observation_count(); ++obs) {
    eval_observation(model, data, obs, ev);
    total += obs_clarity(model, ev, first_shape, pairs_per_alt);
  }
  return total;
}

double marginal_clarity(const UtilityModel& model, const Dataset& data) {
  if (model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("marginal_clarity requires a GAIUNet model");
  check_compatible(model, data);
  if (model.interactions.empty() || data.observation_count() == 0) return 0.0;
  const auto first_shape = first_shape_of_interactions(model);
  const auto pairs_per_alt = interaction_count_per_alt(model);
  const int n = data.observation_count();
  const int nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks, 0.0);
  run_chunked(n, [&](int c, int lo, int hi) {
    thread_local ObsEval ev;
    resize_obs_eval(model, ev);
    double acc = 0.0;
    for (int obs = lo; obs < hi; ++obs) {
      eval_observation(model, data, obs, ev);
      acc += obs_clarity(model, ev, first_shape, pairs_per_alt);
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

Objective objective(const UtilityModel& model, const Dataset& data, const PenaltyConfig& cfg) {
  cfg.validate();
  Objective o;
  o.log_likelihood = log_likelihood(model, data);
  if (model.kind == ModelKind::GAUNet || model.kind == ModelKind::GAIUNet) {
    o.l1_main = l1_main(model);
    if (model.kind == ModelKind::GAIUNet) {
      o.l1_interaction = l1_interaction(model);
      o.marginal_clarity = marginal_clarity(model, data);
    }
    o.total = o.log_likelihood + cfg.alpha * o.l1_main + cfg.alpha_interaction * o.l1_interaction +
              cfg.beta_clarity * o.marginal_clarity;
  } else {
    o.total = o.log_likelihood;
  }
  return o;
}

Objective objective_subset(const UtilityModel& model, const Dataset& data, std::span<const int> obs,
                           const PenaltyConfig& cfg, double penalty_scale) {
  cfg.validate();
  check_compatible(model, data);
  Objective o;
  ObsEval ev;
  resize_obs_eval(model, ev);
  const bool gau = model.kind == ModelKind::GAUNet || model.kind == ModelKind::GAIUNet;
  const auto first_shape = first_shape_of_interactions(model);
  const auto pairs_per_alt = interaction_count_per_alt(model);
  for (int idx : obs) {
    o.log_likelihood += eval_observation(model, data, idx, ev);
    if (model.kind == ModelKind::GAIUNet)
      o.marginal_clarity += obs_clarity(model, ev, first_shape, pairs_per_alt);
  }
  if (gau) {
    o.l1_main = penalty_scale * l1_main(model);
    if (model.kind == ModelKind::GAIUNet) o.l1_interaction = penalty_scale * l1_interaction(model);
    o.total = o.log_likelihood + cfg.alpha * o.l1_main + cfg.alpha_interaction * o.l1_interaction +
              cfg.beta_clarity * o.marginal_clarity;
  } else {
    o.total = o.log_likelihood;
  }
  return o;
}

std::vector<double> ModelLayout::snapshot() const {
  std::vector<double> out(slots.size());
  for (size_t i = 0; i < slots.size(); ++i) out[i] = *slots[i];
  return out;
}

void ModelLayout::restore(std::span<const double> values) const {
  if (values.size() != slots.size()) throw std::invalid_argument("restore: size mismatch");
  for (size_t i = 0; i < slots.size(); ++i) *slots[i] = values[i];
}

std::vector<std::uint8_t> ModelLayout::mask(bool asc, bool main, bool interaction) const {
  std::vector<std::uint8_t> m(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    switch (groups[i]) {
      case ParamGroup::Asc: m[i] = asc; break;
      case ParamGroup::MainOmega:
      case ParamGroup::MainNet:
      case ParamGroup::LinearWeight:
      case ParamGroup::DenseNet: m[i] = main; break;
      case ParamGroup::InterOmega:
      case ParamGroup::InterNet: m[i] = interaction; break;
    }
  }
  return m;
}

namespace {

void push_net_params(Mlp& net, ParamGroup g, ModelLayout& layout) {
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& v : net.weights[l].a) {
      layout.slots.push_back(&v);
      layout.groups.push_back(g);
    }
    for (double& v : net.biases[l]) {
      layout.slots.push_back(&v);
      layout.groups.push_back(g);
    }
  }
}

}  // namespace

ModelLayout build_layout(UtilityModel& model) {
  model.validate();
  ModelLayout layout;
  const int K = model.alternatives.alternative_count();
  layout.asc_slot.assign(K, -1);
  for (int i = 1; i < K; ++i) {
    layout.asc_slot[i] = static_cast<int>(layout.slots.size());
    layout.slots.push_back(&model.ascs[i]);
    layout.groups.push_back(ParamGroup::Asc);
  }
  switch (model.kind) {
    case ModelKind::Linear: {
      layout.linear_offset.assign(K, -1);
      for (int i = 0; i < K; ++i) {
        layout.linear_offset[i] = static_cast<int>(layout.slots.size());
        for (double& w : model.linear_weights[i]) {
          layout.slots.push_back(&w);
          layout.groups.push_back(ParamGroup::LinearWeight);
        }
      }
      break;
    }
    case ModelKind::GAUNet:
    case ModelKind::GAIUNet: {
      std::vector<int> omega_pool_slot(model.omegas.size(), -1);
      for (size_t p = 0; p < model.omegas.size(); ++p) {
        omega_pool_slot[p] = static_cast<int>(layout.slots.size());
        layout.slots.push_back(&model.omegas[p]);
        layout.groups.push_back(ParamGroup::MainOmega);
      }
      layout.omega_slot.resize(model.shapes.size());
      for (size_t s = 0; s < model.shapes.size(); ++s)
        layout.omega_slot[s] = omega_pool_slot[model.shapes[s].omega];
      layout.net_offset.assign(model.nets.size(), -1);
      for (size_t p = 0; p < model.nets.size(); ++p) {
        layout.net_offset[p] = static_cast<int>(layout.slots.size());
        push_net_params(model.nets[p], ParamGroup::MainNet, layout);
      }
      if (model.kind == ModelKind::GAIUNet) {
        std::vector<int> pool_slot(model.interaction_omegas.size(), -1);
        for (size_t p = 0; p < model.interaction_omegas.size(); ++p) {
          pool_slot[p] = static_cast<int>(layout.slots.size());
          layout.slots.push_back(&model.interaction_omegas[p]);
          layout.groups.push_back(ParamGroup::InterOmega);
        }
        layout.inter_omega_slot.resize(model.interactions.size());
        for (size_t q = 0; q < model.interactions.size(); ++q)
          layout.inter_omega_slot[q] = pool_slot[model.interactions[q].omega];
        layout.inter_net_offset.assign(model.interaction_nets.size(), -1);
        for (size_t p = 0; p < model.interaction_nets.size(); ++p) {
          layout.inter_net_offset[p] = static_cast<int>(layout.slots.size());
          push_net_params(model.interaction_nets[p], ParamGroup::InterNet, layout);
        }
      }
      break;
    }
    case ModelKind::AsuDnn: {
      layout.dense_offset.assign(K, -1);
      for (int i = 0; i < K; ++i) {
        layout.dense_offset[i] = static_cast<int>(layout.slots.size());
        push_net_params(model.dense_nets[i], ParamGroup::DenseNet, layout);
      }
      break;
    }
  }
  return layout;
}

void objective_gradients_serial(const UtilityModel& model, const ModelLayout& layout,
                                const Dataset& data, std::span<const int> obs,
                                const PenaltyConfig& cfg, double penalty_scale,
                                const TrainableGroups& groups, std::span<double> grad,
                                double* value_out) {
  cfg.validate();
  check_compatible(model, data);
  if (grad.size() != layout.size()) throw std::invalid_argument("gradient span size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto first_shape = first_shape_of_interactions(model);
  const auto pairs_per_alt = interaction_count_per_alt(model);
  ObsScratch ws;
  ws.resize(model);
  double value = 0.0;
  for (int idx : obs)
    value += accumulate_obs_gradient(model, layout, data, idx, cfg.beta_clarity, groups, first_shape,
                                     pairs_per_alt, ws, grad);
  add_penalty_gradients(model, layout, cfg, penalty_scale, groups, grad);
  if (value_out) *value_out = value + penalty_value(model, cfg, penalty_scale);
}

void objective_gradients(const UtilityModel& model, const ModelLayout& layout, const Dataset& data,
                         std::span<const int> obs, const PenaltyConfig& cfg, double penalty_scale,
                         const TrainableGroups& groups, std::span<double> grad, double* value_out) {
  cfg.validate();
  check_compatible(model, data);
  if (grad.size() != layout.size()) throw std::invalid_argument("gradient span size mismatch");
  const int n = static_cast<int>(obs.size());
  const auto first_shape = first_shape_of_interactions(model);
  const auto pairs_per_alt = interaction_count_per_alt(model);

  const int nchunks = (n + kChunk - 1) / kChunk;
  std::fill(grad.begin(), grad.end(), 0.0);
  double value = 0.0;
  if (nchunks <= 1) {
    ObsScratch ws;
    ws.resize(model);
    for (int idx : obs)
      value += accumulate_obs_gradient(model, layout, data, idx, cfg.beta_clarity, groups,
                                       first_shape, pairs_per_alt, ws, grad);
  } else {
    std::vector<std::vector<double>> partial(nchunks);
    std::vector<double> partial_value(nchunks, 0.0);
    run_chunked(n, [&](int c, int lo, int hi) {
      thread_local ObsScratch ws;
      ws.resize(model);
      partial[c].assign(layout.size(), 0.0);
      double acc = 0.0;
      for (int k = lo; k < hi; ++k)
        acc += accumulate_obs_gradient(model, layout, data, obs[k], cfg.beta_clarity, groups,
                                       first_shape, pairs_per_alt, ws, partial[c]);
      partial_value[c] = acc;
    });
    for (int c = 0; c < nchunks; ++c) {
      value += partial_value[c];
      for (size_t i = 0; i < grad.size(); ++i) grad[i] += partial[c][i];
    }
  }
  add_penalty_gradients(model, layout, cfg, penalty_scale, groups, grad);
  if (value_out) *value_out = value + penalty_value(model, cfg, penalty_scale);
}

double accuracy_model_space(const UtilityModel& model, const Dataset& data) {
  check_compatible(model, data);
  const int n = data.observation_count();
  if (n == 0) throw std::invalid_argument("accuracy of an empty dataset");
  const int K = model.alternatives.alternative_count();
  long correct = 0;
  run_chunked(n, [&](int, int lo, int hi) {
    thread_local ObsEval ev;
    resize_obs_eval(model, ev);
    long local = 0;
    for (int obs = lo; obs < hi; ++obs) {
      eval_observation(model, data, obs, ev);
      int best = 0;
      for (int i = 1; i < K; ++i)
        if (ev.probabilities[i] > ev.probabilities[best]) best = i;
      if (best == data.chosen[obs]) ++local;
    }
#ifdef _OPENMP
#pragma omp atomic
#endif
    correct += local;
  });
  return static_cast<double>(correct) / n;
}

std::vector<double> predicted_shares(const UtilityModel& model, const Dataset& data) {
  check_compatible(model, data);
  const int n = data.observation_count();
  const int K = model.alternatives.alternative_count();
  std::vector<long> counts(K, 0);
  run_chunked(n, [&](int, int lo, int hi) {
    thread_local ObsEval ev;
    resize_obs_eval(model, ev);
    std::vector<long> local(K, 0);
    for (int obs = lo; obs < hi; ++obs) {
      eval_observation(model, data, obs, ev);
      int best = 0;
      for (int i = 1; i < K; ++i)
        if (ev.probabilities[i] > ev.probabilities[best]) best = i;
      ++local[best];
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    {
      for (int i = 0; i < K; ++i) counts[i] += local[i];
    }
  });
  std::vector<double> shares(K, 0.0);
  if (n > 0)
    for (int i = 0; i < K; ++i) shares[i] = static_cast<double>(counts[i]) / n;
  return shares;
}

}  // namespace gaunet
