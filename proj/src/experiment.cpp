#include "gaunet/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gaunet/model_io.hpp"
#include "gaunet/policy.hpp"
#include "json_helpers.hpp"

namespace gaunet {

namespace {

using nlohmann::json;

constexpr const char* kResultsSchemaVersion = "1.0";
constexpr std::uint64_t kStreamHoldout = 41;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

void read_range(const json& j, const char* alt, const char* var, double& lo, double& hi) {
  if (!j.contains(alt)) return;
  const auto& a = j.at(alt);
  if (!a.contains(var)) return;
  const auto& r = a.at(var);
  if (!r.is_array() || r.size() != 2)
    throw std::invalid_argument(std::string("synthetic.ranges.") + alt + "." + var +
                                " must be a [low, high] pair");
  lo = r.at(0).get<double>();
  hi = r.at(1).get<double>();
}

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::Linear;
  TrainConfig train;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  bool has_synthetic = false;
  SyntheticConfig synthetic;
  std::string csv_path;
  bool write_dataset = true;
  bool vif_screen = false;
  double test_fraction = 0.0;  // holdout when > 0
  int folds = 0;               // cross-validation when >= 2
  TrainConfig base_train;
  std::vector<ModelSpec> models;
  struct PolicySection {
    std::string alternative;
    std::string variable;
    std::vector<double> deltas;
    RelabelMode mode = RelabelMode::Drop;
    std::uint64_t seed = 0;
  };
  std::vector<PolicySection> policies;
  bool export_curve_tables = false;
  int curve_grid_points = 100;
  int curve_conditional_rows = 100;
  bool export_importance = false;
};

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.out_dir = j.value("out_dir", std::string("results"));

  if (!j.contains("dataset")) throw std::invalid_argument("config: missing 'dataset' section");
  const auto& ds = j.at("dataset");
  if (ds.contains("synthetic")) {
    cfg.has_synthetic = true;
    cfg.synthetic = synthetic_config_from_json(ds.at("synthetic"));
  } else if (ds.contains("csv")) {
    cfg.csv_path = ds.at("csv").get<std::string>();
  } else {
    throw std::invalid_argument("config: dataset must specify 'synthetic' or 'csv'");
  }
  cfg.write_dataset = j.value("write_dataset", true);
  cfg.vif_screen = j.value("vif", false);

  if (j.contains("split")) {
    const auto& sp = j.at("split");
    if (sp.contains("test_fraction")) {
      cfg.test_fraction = sp.at("test_fraction").get<double>();
      if (cfg.test_fraction <= 0 || cfg.test_fraction >= 1)
        throw std::invalid_argument("config: split.test_fraction must lie in (0, 1)");
    } else if (sp.contains("folds")) {
      cfg.folds = sp.at("folds").get<int>();
      if (cfg.folds < 2) throw std::invalid_argument("config: split.folds must be at least 2");
    } else {
      throw std::invalid_argument("config: split must specify 'test_fraction' or 'folds'");
    }
  }

  if (j.contains("train")) cfg.base_train = train_config_from_json(j.at("train"));
  cfg.base_train.seed = cfg.base_train.seed ? cfg.base_train.seed : cfg.seed;

  if (j.contains("models")) {
    int index = 0;
    for (const auto& m : j.at("models")) {
      ModelSpec spec;
      spec.kind = model_kind_from_string(m.at("kind").get<std::string>());
      spec.name = m.value("name", to_string(spec.kind));
      json merged = train_config_to_json(cfg.base_train);
      for (auto it = m.begin(); it != m.end(); ++it)
        if (it.key() != "kind" && it.key() != "name") merged[it.key()] = it.value();
      try {
        spec.train = train_config_from_json(merged);
      } catch (const std::exception& e) {
        throw std::invalid_argument("config: models[" + std::to_string(index) + "]: " + e.what());
      }
      if (!spec.train.seed) spec.train.seed = cfg.seed;
      cfg.models.push_back(std::move(spec));
      ++index;
    }
  }

  if (j.contains("policy")) {
    for (const auto& p : j.at("policy")) {
      ExperimentConfig::PolicySection ps;
      ps.alternative = p.at("alternative").get<std::string>();
      ps.variable = p.at("variable").get<std::string>();
      ps.deltas = p.at("deltas").get<std::vector<double>>();
      if (p.contains("relabel")) ps.mode = relabel_mode_from_string(p.at("relabel"));
      ps.seed = p.value("seed", cfg.seed);
      cfg.policies.push_back(std::move(ps));
    }
  }

  if (j.contains("curves")) {
    cfg.export_curve_tables = true;
    const auto& c = j.at("curves");
    cfg.curve_grid_points = c.value("grid_points", 100);
    cfg.curve_conditional_rows = c.value("max_conditional_rows", 100);
  }
  cfg.export_importance = j.value("importance", false);
  return cfg;
}

json fold_to_json(const CvFoldResult& f) {
  return {{"train_ll", f.train_ll},
          {"test_ll", f.test_ll},
          {"train_accuracy", f.train_accuracy},
          {"test_accuracy", f.test_accuracy}};
}

}  // namespace

json synthetic_config_to_json(const SyntheticConfig& cfg) {
  json j;
  j["n_points"] = cfg.n_points;
  j["seed"] = cfg.seed;
  j["gumbel_scale"] = cfg.gumbel_scale;
  j["coefficients"] = {{"cost", cfg.coef_cost},
                       {"travel_time", cfg.coef_time},
                       {"access_time", cfg.coef_access},
                       {"egress_time", cfg.coef_egress}};
  j["caps"] = {{"bus_access_time", cfg.bus_access_cap}, {"taxi_cost", cfg.taxi_cost_cap}};
  j["ranges"] = {{"bus",
                  {{"cost", {cfg.bus_cost_min, cfg.bus_cost_max}},
                   {"travel_time", {cfg.bus_time_min, cfg.bus_time_max}},
                   {"access_time", {cfg.bus_access_min, cfg.bus_access_max}},
                   {"egress_time", {cfg.bus_egress_min, cfg.bus_egress_max}}}},
                 {"taxi",
                  {{"cost", {cfg.taxi_cost_min, cfg.taxi_cost_max}},
                   {"travel_time", {cfg.taxi_time_min, cfg.taxi_time_max}},
                   {"access_time", {cfg.taxi_access_min, cfg.taxi_access_max}},
                   {"egress_time", {cfg.taxi_egress_min, cfg.taxi_egress_max}}}}};
  return j;
}

SyntheticConfig synthetic_config_from_json(const json& j) {
  SyntheticConfig cfg;
  cfg.n_points = j.value("n_points", cfg.n_points);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.gumbel_scale = j.value("gumbel_scale", cfg.gumbel_scale);
  if (j.contains("coefficients")) {
    const auto& c = j.at("coefficients");
    cfg.coef_cost = c.value("cost", cfg.coef_cost);
    cfg.coef_time = c.value("travel_time", cfg.coef_time);
    cfg.coef_access = c.value("access_time", cfg.coef_access);
    cfg.coef_egress = c.value("egress_time", cfg.coef_egress);
  }
  if (j.contains("caps")) {
    const auto& c = j.at("caps");
    cfg.bus_access_cap = c.value("bus_access_time", cfg.bus_access_cap);
    cfg.taxi_cost_cap = c.value("taxi_cost", cfg.taxi_cost_cap);
  }
  if (j.contains("ranges")) {
    const auto& r = j.at("ranges");
    read_range(r, "bus", "cost", cfg.bus_cost_min, cfg.bus_cost_max);
    read_range(r, "bus", "travel_time", cfg.bus_time_min, cfg.bus_time_max);
    read_range(r, "bus", "access_time", cfg.bus_access_min, cfg.bus_access_max);
    read_range(r, "bus", "egress_time", cfg.bus_egress_min, cfg.bus_egress_max);
    read_range(r, "taxi", "cost", cfg.taxi_cost_min, cfg.taxi_cost_max);
    read_range(r, "taxi", "travel_time", cfg.taxi_time_min, cfg.taxi_time_max);
    read_range(r, "taxi", "access_time", cfg.taxi_access_min, cfg.taxi_access_max);
    read_range(r, "taxi", "egress_time", cfg.taxi_egress_min, cfg.taxi_egress_max);
  }
  cfg.validate();
  return cfg;
}

json generation_stats_to_json(const GenerationStats& stats) {
  return {{"n_candidates", stats.n_candidates}, {"n_kept", stats.n_kept},
          {"bus_infeasible", stats.bus_infeasible}, {"taxi_infeasible", stats.taxi_infeasible},
          {"both_infeasible", stats.both_infeasible}, {"seed", stats.seed}};
}

ExperimentResult run_experiment(const std::string& config_text, const std::string& config_origin,
                                const std::string& out_dir_override) {
  json config_json;
  try {
    config_json = json::parse(config_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config '" + config_origin + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig cfg = parse_config(config_json);
  if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  json results;
  results["schema_version"] = kResultsSchemaVersion;
  results["config"] = config_json;
  results["seed"] = cfg.seed;

  // Dataset
  Dataset data;
  if (cfg.has_synthetic) {
    GenerationStats stats;
    data = generate_synthetic(cfg.synthetic, &stats);
    results["generation_stats"] = generation_stats_to_json(stats);
    if (cfg.write_dataset) {
      write_csv(data, cfg.out_dir + "/dataset.csv");
      std::ofstream st(cfg.out_dir + "/generation_stats.json");
      st << generation_stats_to_json(stats).dump(2) << '\n';
    }
  } else {
    data = load_csv(cfg.csv_path);
  }
  results["n_observations"] = data.observation_count();

  // VIF screen
  if (cfg.vif_screen) {
    std::vector<std::vector<VifEntry>> reports;
    json jv = json::array();
    for (int alt = 0; alt < data.alternatives.alternative_count(); ++alt) {
      auto rep = vif(data, alt);
      json je = json::array();
      for (const auto& e : rep)
        je.push_back({{"variable", e.variable},
                      {"r2", e.r2},
                      {"vif", std::isfinite(e.vif) ? json(e.vif) : json("inf")},
                      {"acceptable", e.acceptable}});
      jv.push_back({{"alternative", data.alternatives.names[alt]}, {"entries", je}});
      reports.push_back(std::move(rep));
    }
    results["vif"] = jv;
    write_vif_csv(reports, data.alternatives, cfg.out_dir + "/vif.csv");
  }

  // Train/test split for the table
  std::vector<int> train_idx(data.observation_count());
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::vector<int> test_idx;
  if (cfg.test_fraction > 0) {
    std::vector<int> perm = train_idx;
    Rng rng = Rng::substream(cfg.seed, kStreamHoldout);
    rng.shuffle(perm);
    const int n_test = static_cast<int>(cfg.test_fraction * perm.size());
    test_idx.assign(perm.begin(), perm.begin() + n_test);
    train_idx.assign(perm.begin() + n_test, perm.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }
  Dataset train_data = data.subset(train_idx);
  Dataset test_data = test_idx.empty() ? data : data.subset(test_idx);

  std::ofstream table(cfg.out_dir + "/table.csv");
  table << "model,train_ll,test_ll,train_accuracy,test_accuracy\n";

  json jmodels = json::array();
  for (const auto& spec : cfg.models) {
    json jm;
    jm["name"] = spec.name;
    jm["kind"] = to_string(spec.kind);
    const std::string tag = sanitize(spec.name);

    CvFoldResult row;
    FitResult fr;
    if (cfg.folds >= 2) {
      CvPlan plan = make_cv_plan(data.observation_count(), cfg.folds, cfg.seed);
      CvResult cv = cross_validate(spec.kind, data, spec.train, plan);
      row = cv.mean;
      json jf = json::array();
      for (const auto& f : cv.folds) jf.push_back(fold_to_json(f));
      jm["cv_folds"] = jf;
      jm["cv_mean"] = fold_to_json(cv.mean);
      jm["cv_stdev"] = fold_to_json(cv.stdev);
      fr = fit(spec.kind, data, spec.train);  // full-data fit backs exports
    } else {
      fr = fit(spec.kind, train_data, spec.train);
      EvalMetrics mtrain = evaluate(fr.model, train_data);
      EvalMetrics mtest = evaluate(fr.model, test_data);
      row = {mtrain.log_likelihood, mtest.log_likelihood, mtrain.accuracy, mtest.accuracy};
    }
    jm["metrics"] = fold_to_json(row);
    jm["final_objective"] = {{"log_likelihood", fr.final_objective.log_likelihood},
                             {"l1_main", fr.final_objective.l1_main},
                             {"l1_interaction", fr.final_objective.l1_interaction},
                             {"marginal_clarity", fr.final_objective.marginal_clarity},
                             {"total", fr.final_objective.total}};
    jm["warnings"] = fr.warnings;
    if (!fr.selected_pairs.empty()) {
      json jp = json::array();
      for (int alt = 0; alt < static_cast<int>(fr.selected_pairs.size()); ++alt)
        for (const auto& [a, b] : fr.selected_pairs[alt])
          jp.push_back({{"alternative", data.alternatives.names[alt]},
                        {"variable_a", data.alternatives.variables[alt][a]},
                        {"variable_b", data.alternatives.variables[alt][b]}});
      jm["selected_pairs"] = jp;
    }

    table << spec.name << ',' << fmt(row.train_ll) << ',' << fmt(row.test_ll) << ','
          << fmt(row.train_accuracy) << ',' << fmt(row.test_accuracy) << '\n';

    const std::string model_path = cfg.out_dir + "/model_" + tag + ".json";
    save_model(fr.model, model_path);
    jm["model_file"] = "model_" + tag + ".json";

    if (cfg.export_curve_tables) {
      CurveTable curves = export_curves(fr.model, train_data, cfg.curve_grid_points,
                                        cfg.curve_conditional_rows);
      write_curves_csv(curves, data.alternatives, cfg.out_dir + "/curves_" + tag);
      jm["curves_dir"] = "curves_" + tag;
    }
    if (cfg.export_importance &&
        (spec.kind == ModelKind::GAUNet || spec.kind == ModelKind::GAIUNet)) {
      ImportanceReport rep = importance_scores(fr.model, train_data, spec.train.importance_grid_points,
                                               spec.train.importance_threshold);
      write_importance_csv(rep, data.alternatives, cfg.out_dir + "/importance_" + tag + ".csv");
      json ji = json::array();
      for (const auto& e : rep.mains)
        ji.push_back({{"alternative", data.alternatives.names[e.alt]},
                      {"variable", data.alternatives.variables[e.alt][e.var]},
                      {"raw_score", e.raw_score},
                      {"magnitude_score", e.magnitude_score},
                      {"selected", e.selected}});
      jm["importance"] = ji;
    }

    if (!cfg.policies.empty()) {
      bool needs_truth = false;
      for (const auto& ps : cfg.policies) needs_truth |= ps.mode != RelabelMode::FrozenLabels;
      if (needs_truth && !cfg.has_synthetic && !data.provenance.synthetic)
        throw std::invalid_argument("config: policy relabeling needs a synthetic truth model");
      json jps = json::array();
      for (const auto& ps : cfg.policies) {
        PolicyShiftSpec pspec{ps.alternative, ps.variable, ps.deltas, ps.mode, ps.seed};
        PolicyResult pr = policy_eval(fr.model, data, cfg.synthetic, pspec);
        const std::string ppath =
            cfg.out_dir + "/policy_" + tag + "_" + sanitize(ps.alternative) + "_" +
            sanitize(ps.variable) + ".csv";
        write_policy_csv(pr, data.alternatives, ppath);
        json jpr;
        jpr["alternative"] = ps.alternative;
        jpr["variable"] = ps.variable;
        jpr["relabel"] = to_string(ps.mode);
        json jpoints = json::array();
        for (const auto& pt : pr.points)
          jpoints.push_back({{"delta", pt.delta},
                             {"n_scored", pt.n_scored},
                             {"n_dropped", pt.n_dropped},
                             {"accuracy", pt.accuracy},
                             {"predicted_share", pt.predicted_share},
                             {"truth_share", pt.truth_share}});
        jpr["points"] = jpoints;
        jps.push_back(jpr);
      }
      jm["policy"] = jps;
    }
    jmodels.push_back(jm);
  }
  results["models"] = jmodels;

  ExperimentResult out;
  out.out_dir = cfg.out_dir;
  out.results_json = results.dump(2) + "\n";
  std::ofstream rj(cfg.out_dir + "/results.json");
  if (!rj) throw std::runtime_error("cannot write results to '" + cfg.out_dir + "'");
  rj << out.results_json;
  return out;
}

ExperimentResult run_experiment_file(const std::string& config_path,
                                     const std::string& out_dir_override) {
  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open experiment config '" + config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return run_experiment(ss.str(), config_path, out_dir_override);
}

}  // namespace gaunet
