#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gaunet/data.hpp"

using namespace gaunet;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Dataset toy_dataset(const std::vector<std::vector<double>>& columns) {
  Dataset d;
  d.alternatives.names = {"a"};
  d.alternatives.variables = {{}};
  for (size_t v = 0; v < columns.size(); ++v)
    d.alternatives.variables[0].push_back("x" + std::to_string(v));
  const int n = static_cast<int>(columns[0].size());
  for (int i = 0; i < n; ++i) {
    d.chosen.push_back(0);
    for (const auto& col : columns) d.values.push_back(col[i]);
  }
  return d;
}

}  // namespace

TEST_CASE("generator: infeasible bus forces taxi") {
  SyntheticConfig cfg;
  std::vector<double> bus = {4.0, 30.0, 8.0, 3.0};    // access 8 > 4
  std::vector<double> taxi = {12.0, 15.0, 1.0, 1.0};  // cost 12 <= 20
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    CHECK(synthetic_true_choice(cfg, bus, taxi, rng) == 1);
  }
  std::vector<double> bad_taxi = {25.0, 15.0, 1.0, 1.0};
  Rng rng(0);
  CHECK(synthetic_true_choice(cfg, bus, bad_taxi, rng) == -1);
  std::vector<double> good_bus = {4.0, 30.0, 3.0, 3.0};
  Rng rng2(0);
  CHECK(synthetic_true_choice(cfg, good_bus, bad_taxi, rng2) == 0);
}

TEST_CASE("generator: equal utilities split choices evenly") {
  SyntheticConfig cfg;
  std::vector<double> bus = {4.0, 20.0, 2.0, 2.0};
  std::vector<double> taxi = {4.0, 20.0, 2.0, 2.0};  // identical values -> equal V
  const int n = 100000;
  int bus_count = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(42, i);
    if (synthetic_true_choice(cfg, bus, taxi, rng) == 0) ++bus_count;
  }
  double share = static_cast<double>(bus_count) / n;
  double sigma3 = 3 * std::sqrt(0.25 / n);
  CHECK(std::abs(share - 0.5) < sigma3 + 1e-12);
}

TEST_CASE("generator: retention rate matches the analytic value") {
  SyntheticConfig cfg;
  cfg.n_points = 200000;
  cfg.seed = 9;
  GenerationStats stats;
  Dataset d = generate_synthetic(cfg, &stats);
  CHECK(stats.n_candidates == cfg.n_points);
  CHECK(stats.n_kept == d.observation_count());
  CHECK(stats.n_kept + stats.both_infeasible == stats.n_candidates);
  // P(keep) = 1 - P(access > 4) * P(cost > 20) = 1 - 0.75 * 0.6 = 0.55
  double rate = static_cast<double>(stats.n_kept) / stats.n_candidates;
  CHECK(std::abs(rate - 0.55) < 0.01);
}

TEST_CASE("generator: no kept observation violates its constraint") {
  SyntheticConfig cfg;
  cfg.n_points = 20000;
  cfg.seed = 4;
  Dataset d = generate_synthetic(cfg);
  for (int i = 0; i < d.observation_count(); ++i) {
    if (d.chosen[i] == 0) CHECK(d.value(i, 0, 2) <= cfg.bus_access_cap);
    if (d.chosen[i] == 1) CHECK(d.value(i, 1, 0) <= cfg.taxi_cost_cap);
  }
}

TEST_CASE("generator: identical config gives identical datasets") {
  SyntheticConfig cfg;
  cfg.n_points = 5000;
  cfg.seed = 77;
  Dataset a = generate_synthetic(cfg);
  Dataset b = generate_synthetic(cfg);
  CHECK(a.chosen == b.chosen);
  CHECK(a.values == b.values);
}

TEST_CASE("generator: binned choice shares follow the logistic of the utility gap") {
  SyntheticConfig cfg;
  cfg.n_points = 200000;
  cfg.seed = 123;
  Dataset d = generate_synthetic(cfg);
  const int bins = 12;
  const double lo = -6, hi = 6;
  std::vector<long> count(bins, 0), bus_hits(bins, 0);
  std::vector<double> dv_sum(bins, 0.0);
  for (int i = 0; i < d.observation_count(); ++i) {
    if (d.value(i, 0, 2) > cfg.bus_access_cap || d.value(i, 1, 0) > cfg.taxi_cost_cap) continue;
    auto v = [&](int alt, int var) { return d.value(i, alt, var); };
    double vb = -0.5 * v(0, 0) - 0.2 * v(0, 1) - 0.3 * v(0, 2) - 0.4 * v(0, 3);
    double vc = -0.5 * v(1, 0) - 0.2 * v(1, 1) - 0.3 * v(1, 2) - 0.4 * v(1, 3);
    double dv = vb - vc;
    int b = static_cast<int>((dv - lo) / (hi - lo) * bins);
    if (b < 0 || b >= bins) continue;
    ++count[b];
    dv_sum[b] += dv;
    if (d.chosen[i] == 0) ++bus_hits[b];
  }
  int tested = 0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] < 200) continue;
    ++tested;
    double p_emp = static_cast<double>(bus_hits[b]) / count[b];
    double p_mod = 1.0 / (1.0 + std::exp(-dv_sum[b] / count[b]));
    double sigma3 = 3 * std::sqrt(p_mod * (1 - p_mod) / count[b]);
    // the bin-mean approximation adds a small curvature bias
    CHECK(std::abs(p_emp - p_mod) < sigma3 + 0.01);
  }
  CHECK(tested >= 6);
}

TEST_CASE("csv: round trip is bit-exact") {
  SyntheticConfig cfg;
  cfg.n_points = 500;
  cfg.seed = 3;
  Dataset d = generate_synthetic(cfg);
  d.values[5] = 1.0 / 3.0;
  d.values[6] = 1e-17;
  d.values[7] = 123456789.123456789;
  const std::string path = temp_path("gaunet_roundtrip.csv");
  write_csv(d, path);
  Dataset back = load_csv(path);
  CHECK(back.alternatives == d.alternatives);
  CHECK(back.chosen == d.chosen);
  REQUIRE(back.values.size() == d.values.size());
  for (size_t i = 0; i < d.values.size(); ++i) CHECK(back.values[i] == d.values[i]);

  const std::string path2 = temp_path("gaunet_roundtrip2.csv");
  write_csv(back, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("csv: well-formed two-row file") {
  const std::string path = temp_path("gaunet_tworow.csv");
  std::ofstream out(path);
  out << "choice,bus:cost,bus:travel_time,taxi:cost,taxi:travel_time\n";
  out << "bus,1.5,20,10,12\n";
  out << "taxi,2.5,30,11,13\n";
  out.close();
  Dataset d = load_csv(path);
  CHECK(d.observation_count() == 2);
  CHECK(d.alternatives.names == std::vector<std::string>{"bus", "taxi"});
  CHECK(d.chosen == std::vector<int>{0, 1});
  CHECK(d.value(1, 1, 1) == 13.0);
}

TEST_CASE("csv: parse error names the row and column") {
  const std::string path = temp_path("gaunet_badcell.csv");
  std::ofstream out(path);
  out << "choice,bus:cost,bus:travel_time\n";
  for (int i = 1; i <= 6; ++i) out << "bus,1,2\n";
  out << "bus,1,oops\n";  // data row 7
  out.close();
  try {
    load_csv(path);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 7") != std::string::npos);
    CHECK(msg.find("bus:travel_time") != std::string::npos);
  }
}

TEST_CASE("csv: structural errors") {
  const std::string path = temp_path("gaunet_badfile.csv");
  {
    std::ofstream out(path);
    out << "choice,bus:cost\nbus,1\ntrain,2\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("unknown alternative"),
                       std::invalid_argument);
  {
    std::ofstream out(path);
    out << "choice,buscost\n";
  }
  CHECK_THROWS_AS(load_csv(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "choice,bus:cost\nbus\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("cells"), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "choice,bus:cost\nbus,\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("missing value"), std::invalid_argument);
}

TEST_CASE("standardizer: hand case, zero variance, inverse round trip") {
  Dataset d = toy_dataset({{0.0, 2.0}, {5.0, 5.0}});
  std::vector<int> all = {0, 1};
  Standardizer st = fit_standardizer(d, all);
  CHECK(st.mean[0] == doctest::Approx(1.0));
  CHECK(st.stdev[0] == doctest::Approx(1.0));  // population stdev of {0, 2}
  Dataset z = transform(st, d);
  CHECK(z.value(0, 0, 0) == doctest::Approx(-1.0));
  CHECK(z.value(1, 0, 0) == doctest::Approx(1.0));

  CHECK(st.zero_variance[1] == 1);
  CHECK(z.value(0, 0, 1) == 0.0);
  CHECK(z.value(1, 0, 1) == 0.0);

  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    double x = rng.uniform(-50, 50);
    CHECK(st.inverse_value(0, st.transform_value(0, x)) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(st.min[0] == 0.0);
  CHECK(st.max[0] == 2.0);
}

TEST_CASE("standardizer: statistics come from the fitting split only") {
  Dataset d = toy_dataset({{0.0, 2.0, 100.0}});
  std::vector<int> fit_on = {0, 1};
  Standardizer st = fit_standardizer(d, fit_on);
  CHECK(st.mean[0] == doctest::Approx(1.0));
  CHECK(st.max[0] == 2.0);
  CHECK_THROWS_AS(fit_standardizer(d, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("vif: independent columns score near one") {
  Rng rng(17);
  const int n = 10000;
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.uniform(0, 1);
    b[i] = rng.uniform(0, 1);
    c[i] = rng.uniform(0, 1);
  }
  Dataset d = toy_dataset({a, b, c});
  auto report = vif(d, 0);
  REQUIRE(report.size() == 3);
  for (const auto& e : report) {
    CHECK(std::abs(e.vif - 1.0) < 0.05);
    CHECK(e.acceptable);
  }
}

TEST_CASE("vif: duplicated column reports infinity") {
  Rng rng(18);
  const int n = 500;
  std::vector<double> a(n);
  for (double& v : a) v = rng.uniform(0, 1);
  Dataset d = toy_dataset({a, a});
  auto report = vif(d, 0);
  CHECK(std::isinf(report[0].vif));
  CHECK(std::isinf(report[1].vif));
  CHECK_FALSE(report[0].acceptable);
}

TEST_CASE("vif: near-duplicate column is flagged") {
  Rng rng(19);
  const int n = 5000;
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.uniform(0, 1);
    b[i] = a[i] + 0.01 * rng.uniform(-0.5, 0.5) * std::sqrt(12.0);
    c[i] = rng.uniform(0, 1);
  }
  Dataset d = toy_dataset({a, b, c});
  auto report = vif(d, 0);
  CHECK(report[0].vif > 10);
  CHECK_FALSE(report[0].acceptable);
  CHECK(report[2].vif < 2);
}

TEST_CASE("vif: invariant under rescaling of the probed column") {
  Rng rng(20);
  const int n = 2000;
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.uniform(0, 1);
    b[i] = 0.7 * a[i] + 0.3 * rng.uniform(0, 1);
    c[i] = rng.uniform(0, 1);
  }
  Dataset d = toy_dataset({a, b, c});
  auto before = vif(d, 0);
  std::vector<double> a1000(n);
  for (int i = 0; i < n; ++i) a1000[i] = 1000.0 * a[i];
  Dataset d2 = toy_dataset({a1000, b, c});
  auto after = vif(d2, 0);
  CHECK(std::abs(before[0].vif - after[0].vif) < 1e-9 * std::max(1.0, before[0].vif));
}

TEST_CASE("vif: preconditions") {
  Dataset d = toy_dataset({{1.0, 2.0, 3.0}});
  CHECK_THROWS_AS(vif(d, 0), std::invalid_argument);
  Dataset small = toy_dataset({{1.0, 2.0}, {2.0, 1.0}});
  CHECK_THROWS_AS(vif(small, 0), std::invalid_argument);
}

TEST_CASE("dataset subset preserves rows") {
  SyntheticConfig cfg;
  cfg.n_points = 100;
  cfg.seed = 21;
  Dataset d = generate_synthetic(cfg);
  std::vector<int> idx = {0, 5, 7};
  Dataset s = d.subset(idx);
  CHECK(s.observation_count() == 3);
  CHECK(s.chosen[1] == d.chosen[5]);
  CHECK(s.value(2, 1, 0) == d.value(7, 1, 0));
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.n_points = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_points = 10;
  cfg.gumbel_scale = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.gumbel_scale = 1;
  cfg.bus_cost_min = 7;
  cfg.bus_cost_max = 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
