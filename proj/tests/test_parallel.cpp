// The OpenMP kernels against their serial references, plus the thread-count
// independence that the deterministic chunked reduction guarantees.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gaunet/data.hpp"
#include "gaunet/mnl.hpp"

using namespace gaunet;

namespace {

struct Fixture {
  Dataset data;
  UtilityModel gaunet_model;
  UtilityModel gaiunet_model;

  Fixture() {
    SyntheticConfig gen;
    gen.n_points = 3000;
    gen.seed = 13;
    data = generate_synthetic(gen);
    Rng rng(21);
    gaunet_model =
        make_gaunet_model(data.alternatives, std::vector<int>{5, 5}, Activation::Tanh, {}, rng);
    gaiunet_model = gaunet_model;
    add_interactions(gaiunet_model, {{{0, 1}, {0, 2}}, {{0, 1}}}, std::vector<int>{5, 5}, rng);
    for (double& w : gaiunet_model.interaction_omegas) w = 0.5;
  }
};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("log_likelihood: parallel kernel agrees with the serial reference") {
  Fixture fx;
  double par = log_likelihood(fx.gaunet_model, fx.data);
  double ser = log_likelihood_serial(fx.gaunet_model, fx.data);
  CHECK(rel_diff(par, ser) < 1e-12);
}

TEST_CASE("marginal_clarity: parallel kernel agrees with the serial reference") {
  Fixture fx;
  double par = marginal_clarity(fx.gaiunet_model, fx.data);
  double ser = marginal_clarity_serial(fx.gaiunet_model, fx.data);
  CHECK(rel_diff(par, ser) < 1e-12);
}

TEST_CASE("objective_gradients: parallel kernel agrees with the serial reference") {
  Fixture fx;
  for (const UtilityModel* model : {&fx.gaunet_model, &fx.gaiunet_model}) {
    UtilityModel m = *model;
    ModelLayout layout = build_layout(m);
    std::vector<int> obs(fx.data.observation_count());
    std::iota(obs.begin(), obs.end(), 0);
    PenaltyConfig pen{-1e-3, -1e-3, -1e-3};
    std::vector<double> gpar(layout.size()), gser(layout.size());
    double vpar = 0, vser = 0;
    objective_gradients(m, layout, fx.data, obs, pen, 1.0, TrainableGroups{}, gpar, &vpar);
    objective_gradients_serial(m, layout, fx.data, obs, pen, 1.0, TrainableGroups{}, gser, &vser);
    CHECK(rel_diff(vpar, vser) < 1e-12);
    double worst = 0.0;
    for (size_t i = 0; i < gpar.size(); ++i) worst = std::max(worst, rel_diff(gpar[i], gser[i]));
    CHECK(worst < 1e-11);
  }
}

#ifdef _OPENMP
TEST_CASE("kernels are bit-identical across thread counts") {
  Fixture fx;
  ModelLayout layout = build_layout(fx.gaunet_model);
  std::vector<int> obs(fx.data.observation_count());
  std::iota(obs.begin(), obs.end(), 0);
  std::vector<double> g1(layout.size()), g2(layout.size());
  const int max_threads = omp_get_max_threads();

  omp_set_num_threads(1);
  double ll1 = log_likelihood(fx.gaunet_model, fx.data);
  objective_gradients(fx.gaunet_model, layout, fx.data, obs, PenaltyConfig{-1e-3, 0, 0}, 1.0,
                      TrainableGroups{}, g1);
  SyntheticConfig gen;
  gen.n_points = 5000;
  gen.seed = 3;
  Dataset d1 = generate_synthetic(gen);

  omp_set_num_threads(max_threads > 1 ? max_threads : 2);
  double ll2 = log_likelihood(fx.gaunet_model, fx.data);
  objective_gradients(fx.gaunet_model, layout, fx.data, obs, PenaltyConfig{-1e-3, 0, 0}, 1.0,
                      TrainableGroups{}, g2);
  Dataset d2 = generate_synthetic(gen);
  omp_set_num_threads(max_threads);

  CHECK(ll1 == ll2);  // bitwise
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
  CHECK(d1.values == d2.values);
  CHECK(d1.chosen == d2.chosen);
}
#endif

TEST_CASE("accuracy and share kernels match a hand loop") {
  Fixture fx;
  const UtilityModel& m = fx.gaunet_model;
  ObsEval ev;
  long correct = 0;
  std::vector<long> counts(2, 0);
  for (int obs = 0; obs < fx.data.observation_count(); ++obs) {
    choice_probabilities(m, fx.data, obs, ev);
    int best = ev.probabilities[1] > ev.probabilities[0] ? 1 : 0;
    ++counts[best];
    if (best == fx.data.chosen[obs]) ++correct;
  }
  CHECK(accuracy_model_space(m, fx.data) ==
        doctest::Approx(static_cast<double>(correct) / fx.data.observation_count()).epsilon(1e-15));
  auto shares = predicted_shares(m, fx.data);
  CHECK(shares[0] ==
        doctest::Approx(static_cast<double>(counts[0]) / fx.data.observation_count()).epsilon(1e-15));
  CHECK(shares[0] + shares[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parallel errors surface as exceptions") {
  Fixture fx;
  UtilityModel broken = fx.gaunet_model;
  broken.ascs[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(log_likelihood(broken, fx.data), std::runtime_error);
}
