#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gaunet/mnl.hpp"

using namespace gaunet;

namespace {

AlternativeSet two_alts() {
  AlternativeSet alts;
  alts.names = {"bus", "taxi"};
  alts.variables = {{"cost", "travel_time"}, {"cost", "travel_time"}};
  return alts;
}

Dataset make_dataset(const AlternativeSet& alts, const std::vector<int>& chosen,
                     const std::vector<std::vector<double>>& rows) {
  Dataset d;
  d.alternatives = alts;
  d.chosen = chosen;
  for (const auto& r : rows) d.values.insert(d.values.end(), r.begin(), r.end());
  d.validate();
  return d;
}

Dataset random_dataset(const AlternativeSet& alts, int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.alternatives = alts;
  const int w = alts.total_variable_count();
  for (int i = 0; i < n; ++i) {
    d.chosen.push_back(static_cast<int>(rng.below(alts.alternative_count())));
    for (int c = 0; c < w; ++c) d.values.push_back(rng.uniform(-2, 2));
  }
  return d;
}

// Central differences of the subset objective over every layout slot.
std::vector<double> fd_gradient(UtilityModel& model, const ModelLayout& layout, const Dataset& data,
                                std::span<const int> obs, const PenaltyConfig& cfg, double scale,
                                double h) {
  std::vector<double> g(layout.size());
  for (size_t i = 0; i < layout.size(); ++i) {
    const double saved = *layout.slots[i];
    *layout.slots[i] = saved + h;
    const double fp = objective_subset(model, data, obs, cfg, scale).total;
    *layout.slots[i] = saved - h;
    const double fm = objective_subset(model, data, obs, cfg, scale).total;
    *layout.slots[i] = saved;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

double max_rel_err(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("softmax: symmetry, hand value, overflow safety") {
  auto p = softmax(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));

  p = softmax(std::vector<double>{1.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.73106).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.26894).epsilon(1e-4));

  p = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("softmax: normalization and translation invariance over random utilities") {
  Rng rng(2718);
  for (int rep = 0; rep < 2000; ++rep) {
    int k = 2 + static_cast<int>(rng.below(4));
    std::vector<double> v(k);
    double scale = std::pow(10.0, rng.uniform(0, 3));
    for (double& u : v) u = rng.uniform(-1, 1) * scale;
    auto p = softmax(v);
    double sum = std::accumulate(p.begin(), p.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    double c = rng.uniform(-100, 100);
    std::vector<double> shifted = v;
    for (double& u : shifted) u += c;
    auto q = softmax(shifted);
    for (int i = 0; i < k; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("softmax: increasing one utility strictly increases its probability") {
  auto p = softmax(std::vector<double>{0.3, -0.2, 1.0});
  auto q = softmax(std::vector<double>{0.3, 0.1, 1.0});
  CHECK(q[1] > p[1]);
  CHECK(q[0] < p[0]);
  CHECK(q[2] < p[2]);
}

TEST_CASE("softmax: non-finite utility rejected") {
  CHECK_THROWS_AS(softmax(std::vector<double>{0.0, std::nan("")}), std::runtime_error);
}

TEST_CASE("log_likelihood: symmetric zero model") {
  auto alts = two_alts();
  UtilityModel zero = make_linear_model(alts);
  Dataset one = make_dataset(alts, {0}, {{1, 2, 3, 4}});
  CHECK(log_likelihood(zero, one) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  // N observations under the K-alternative zero model give N * ln(1/K).
  AlternativeSet alts3;
  alts3.names = {"a", "b", "c"};
  alts3.variables = {{"x"}, {"x"}, {"x"}};
  UtilityModel zero3 = make_linear_model(alts3);
  Dataset d3 = random_dataset(alts3, 57, 4);
  CHECK(log_likelihood(zero3, d3) == doctest::Approx(57 * std::log(1.0 / 3)).epsilon(1e-12));
}

TEST_CASE("log_likelihood: empty dataset sums to zero") {
  auto alts = two_alts();
  UtilityModel zero = make_linear_model(alts);
  Dataset empty;
  empty.alternatives = alts;
  CHECK(log_likelihood(zero, empty) == 0.0);
}

TEST_CASE("log_likelihood is never positive") {
  auto alts = two_alts();
  Rng rng(8);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
  Dataset d = random_dataset(alts, 200, 9);
  CHECK(log_likelihood(m, d) <= 0.0);
}

TEST_CASE("l1_main: fixtures and sharing") {
  auto alts = two_alts();
  Rng rng(1);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5}, Activation::Tanh, {}, rng);
  for (double& w : m.omegas) w = 0.0;
  CHECK(l1_main(m) == 0.0);
  m.omegas[m.shapes[0].omega] = -0.5;
  m.omegas[m.shapes[1].omega] = 0.2;
  CHECK(l1_main(m) == doctest::Approx(0.7).epsilon(1e-15));

  // A shared omega pool entry is counted once per shape function instance.
  Rng rng2(1);
  UtilityModel shared =
      make_gaunet_model(alts, std::vector<int>{5}, Activation::Tanh, {{"travel_time", {}}}, rng2);
  for (double& w : shared.omegas) w = 0.0;
  int s = shared.shape_index(0, 1);
  shared.omegas[shared.shapes[s].omega] = 1.0;
  CHECK(l1_main(shared) == doctest::Approx(2.0));

  UtilityModel lin = make_linear_model(alts);
  CHECK_THROWS_AS(l1_main(lin), std::invalid_argument);
}

TEST_CASE("l1_interaction: fixtures") {
  auto alts = two_alts();
  Rng rng(2);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5}, Activation::Tanh, {}, rng);
  CHECK_THROWS_AS(l1_interaction(m), std::invalid_argument);
  add_interactions(m, {{{0, 1}}, {{0, 1}}}, std::vector<int>{5}, rng);
  m.interaction_omegas[0] = 0.3;
  m.interaction_omegas[1] = -0.1;
  CHECK(l1_interaction(m) == doctest::Approx(0.4).epsilon(1e-15));
  for (double& w : m.interaction_omegas) w = 0.0;
  CHECK(l1_interaction(m) == 0.0);
}

TEST_CASE("marginal_clarity: zero nets, hand fixture, and sign symmetry") {
  auto alts = two_alts();
  Rng rng(3);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5}, Activation::Tanh, {}, rng);
  add_interactions(m, {{{0, 1}}, {}}, std::vector<int>{5}, rng);
  Dataset d = make_dataset(alts, {0}, {{1.0, 1.0, 0.0, 0.0}});

  UtilityModel zeroed = m;
  for (auto& net : zeroed.interaction_nets) net = make_zero_mlp(net.layer_sizes, net.activation);
  CHECK(marginal_clarity(zeroed, d) == 0.0);

  // v_main = 2 and v_pair = 3 for the only (observation, pair).
  UtilityModel fix = m;
  int main_shape = fix.shape_index(0, 0);
  int sizes1[] = {1, 1};
  fix.nets[fix.shapes[main_shape].net] = make_zero_mlp(sizes1, Activation::Identity);
  fix.nets[fix.shapes[main_shape].net].biases[0][0] = 2.0;
  fix.omegas[fix.shapes[main_shape].omega] = 1.0;
  int other_shape = fix.shape_index(0, 1);
  fix.nets[fix.shapes[other_shape].net] = make_zero_mlp(sizes1, Activation::Identity);
  int sizes2[] = {2, 1};
  fix.interaction_nets[0] = make_zero_mlp(sizes2, Activation::Identity);
  fix.interaction_nets[0].biases[0][0] = 3.0;
  fix.interaction_omegas[0] = 1.0;
  CHECK(marginal_clarity(fix, d) == doctest::Approx(6.0).epsilon(1e-15));

  UtilityModel flipped = fix;
  flipped.interaction_nets[0].biases[0][0] = -3.0;
  CHECK(marginal_clarity(flipped, d) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("objective: composition law and degenerate kinds") {
  auto alts = two_alts();
  Rng rng(11);
  Dataset d = random_dataset(alts, 64, 12);

  UtilityModel lin = make_linear_model(alts);
  PenaltyConfig pen{-1e-3, -1e-3, -1e-3};
  Objective ol = objective(lin, d, pen);
  CHECK(ol.total == ol.log_likelihood);
  CHECK(ol.l1_main == 0.0);

  UtilityModel gau = make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
  Objective og = objective(gau, d, pen);
  CHECK(og.l1_main >= 0.0);
  CHECK(og.total == doctest::Approx(og.log_likelihood + pen.alpha * og.l1_main).epsilon(1e-15));

  Objective unpen = objective(gau, d, PenaltyConfig{});
  CHECK(unpen.total == unpen.log_likelihood);

  // alpha = -1e-3 with l1 = 0.7: the total shifts by exactly -0.0007.
  UtilityModel fix = gau;
  for (double& w : fix.omegas) w = 0.0;
  fix.omegas[fix.shapes[0].omega] = -0.5;
  fix.omegas[fix.shapes[1].omega] = 0.2;
  Objective of = objective(fix, d, PenaltyConfig{-1e-3, 0, 0});
  CHECK(of.total - of.log_likelihood == doctest::Approx(-0.0007).epsilon(1e-12));

  UtilityModel gai = gau;
  add_interactions(gai, {{}, {}}, std::vector<int>{5, 5}, rng);
  Objective oi = objective(gai, d, pen);
  CHECK(oi.total == doctest::Approx(og.total).epsilon(1e-12));
}

TEST_CASE("penalty config validation") {
  CHECK_THROWS_AS(PenaltyConfig({0.5, 0, 0}).validate(), std::invalid_argument);
  CHECK_NOTHROW(PenaltyConfig({-1, -1, -1}).validate());
}

TEST_CASE("objective_gradients: asc gradient equals share minus probability") {
  auto alts = two_alts();
  // 3 of 4 observations choose taxi; the zero model predicts 1/2 each.
  Dataset d = make_dataset(alts, {1, 1, 1, 0},
                           {{1, 2, 3, 4}, {0, 1, 0, 1}, {2, 2, 2, 2}, {5, 4, 3, 2}});
  UtilityModel zero = make_linear_model(alts);
  ModelLayout layout = build_layout(zero);
  std::vector<int> obs = {0, 1, 2, 3};
  std::vector<double> grad(layout.size());
  objective_gradients(zero, layout, d, obs, PenaltyConfig{}, 1.0, TrainableGroups{}, grad);
  CHECK(layout.asc_slot[0] == -1);
  CHECK(grad[layout.asc_slot[1]] == doctest::Approx(3 - 4 * 0.5).epsilon(1e-12));
}

TEST_CASE("objective_gradients matches central differences: linear") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 40, 21);
  UtilityModel m = make_linear_model(alts);
  Rng rng(5);
  for (auto& w : m.linear_weights)
    for (double& v : w) v = rng.uniform(-1, 1);
  m.ascs[1] = 0.3;
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  std::vector<double> grad(layout.size());
  objective_gradients(m, layout, d, obs, PenaltyConfig{}, 1.0, TrainableGroups{}, grad);
  auto fd = fd_gradient(m, layout, d, obs, PenaltyConfig{}, 1.0, 1e-5);
  CHECK(max_rel_err(grad, fd) < 1e-4);
}

TEST_CASE("objective_gradients matches central differences: gaunet with penalties") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 50, 33);
  Rng rng(100);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  PenaltyConfig pen{-1e-3, 0, 0};
  std::vector<double> grad(layout.size());
  double value = 0.0;
  objective_gradients(m, layout, d, obs, pen, 1.0, TrainableGroups{}, grad, &value);
  CHECK(value == doctest::Approx(objective_subset(m, d, obs, pen, 1.0).total).epsilon(1e-12));
  auto fd = fd_gradient(m, layout, d, obs, pen, 1.0, 1e-5);
  CHECK(max_rel_err(grad, fd) < 1e-4);
}

TEST_CASE("objective_gradients matches central differences: shared-weight gaunet") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 48, 55);
  Rng rng(101);
  UtilityModel m =
      make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {{"travel_time", {}}}, rng);
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  PenaltyConfig pen{-1e-3, 0, 0};
  std::vector<double> grad(layout.size());
  objective_gradients(m, layout, d, obs, pen, 1.0, TrainableGroups{}, grad);
  auto fd = fd_gradient(m, layout, d, obs, pen, 1.0, 1e-5);
  CHECK(max_rel_err(grad, fd) < 1e-4);
}

TEST_CASE("objective_gradients matches central differences: gaiunet with clarity") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 48, 77);
  Rng rng(102);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
  add_interactions(m, {{{0, 1}}, {{0, 1}}}, std::vector<int>{5, 5}, rng);
  for (double& w : m.interaction_omegas) w = 0.4;
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  PenaltyConfig pen{-1e-3, -1e-3, -1e-3};
  std::vector<double> grad(layout.size());
  objective_gradients(m, layout, d, obs, pen, 1.0, TrainableGroups{}, grad);
  auto fd = fd_gradient(m, layout, d, obs, pen, 1.0, 1e-5);
  CHECK(max_rel_err(grad, fd) < 1e-4);
}

TEST_CASE("objective_gradients matches central differences: asudnn") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 40, 88);
  Rng rng(103);
  UtilityModel m = make_asudnn_model(alts, std::vector<int>{5, 5}, Activation::Tanh, rng);
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  std::vector<double> grad(layout.size());
  objective_gradients(m, layout, d, obs, PenaltyConfig{}, 1.0, TrainableGroups{}, grad);
  auto fd = fd_gradient(m, layout, d, obs, PenaltyConfig{}, 1.0, 1e-5);
  CHECK(max_rel_err(grad, fd) < 1e-4);
}

TEST_CASE("frozen groups receive exact zero gradients") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 32, 13);
  Rng rng(104);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5}, Activation::Tanh, {}, rng);
  add_interactions(m, {{{0, 1}}, {}}, std::vector<int>{5}, rng);
  ModelLayout layout = build_layout(m);
  std::vector<int> obs(d.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  std::vector<double> grad(layout.size());
  TrainableGroups frozen_main{.asc = false, .main = false, .interaction = true};
  objective_gradients(m, layout, d, obs, PenaltyConfig{-1e-3, -1e-3, -1e-3}, 1.0, frozen_main, grad);
  for (size_t i = 0; i < layout.size(); ++i) {
    if (layout.groups[i] == ParamGroup::InterOmega || layout.groups[i] == ParamGroup::InterNet)
      continue;
    CHECK(grad[i] == 0.0);
  }
}

TEST_CASE("choice probabilities on dataset rows match the fixture overload") {
  auto alts = two_alts();
  Dataset d = random_dataset(alts, 5, 123);
  Rng rng(9);
  UtilityModel m = make_gaunet_model(alts, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
  ObsEval ev;
  for (int obs = 0; obs < d.observation_count(); ++obs) {
    choice_probabilities(m, d, obs, ev);
    auto r0 = d.obs_values(obs, 0);
    auto r1 = d.obs_values(obs, 1);
    auto p = choice_probabilities(
        m, {std::vector<double>(r0.begin(), r0.end()), std::vector<double>(r1.begin(), r1.end())});
    CHECK(ev.probabilities[0] == doctest::Approx(p[0]).epsilon(1e-15));
    CHECK(ev.probabilities[1] == doctest::Approx(p[1]).epsilon(1e-15));
  }
}

TEST_CASE("accuracy: perfect model and tie-break convention") {
  auto alts = two_alts();
  Dataset d = make_dataset(alts, {0, 1}, {{0, 0, 0, 0}, {1, 1, 1, 1}});
  UtilityModel m = make_linear_model(alts);
  m.linear_weights[1] = {1.0, 1.0};
  // Row 0 ties (both utilities 0) and resolves to bus; row 1 favors taxi.
  CHECK(accuracy_model_space(m, d) == 1.0);

  UtilityModel zero = make_linear_model(alts);
  // The zero model ties everywhere and always predicts index 0.
  CHECK(accuracy_model_space(zero, d) == doctest::Approx(0.5));
}
