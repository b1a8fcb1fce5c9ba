// Command-line front end: dataset generation, estimation, evaluation, policy
// sweeps, curve/importance export, VIF screening, and experiment
// orchestration. Exit codes: 0 success, 2 invalid input, 1 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "gaunet/experiment.hpp"
#include "gaunet/model_io.hpp"
#include "gaunet/policy.hpp"
#include "json_helpers.hpp"

using namespace gaunet;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

TrainConfig load_train_config(const std::string& path, std::uint64_t seed_override, bool has_seed) {
  TrainConfig cfg;
  if (!path.empty()) cfg = train_config_from_json(read_json_file(path));
  if (has_seed) cfg.seed = seed_override;
  return cfg;
}

json trace_to_json(const std::vector<StageTrace>& stages) {
  json out = json::array();
  for (const auto& st : stages) {
    json js;
    js["stage"] = st.stage;
    js["epochs_run"] = st.epochs.size();
    js["start_total"] = st.start_objective.total;
    js["final_total"] = st.final_objective.total;
    js["final_log_likelihood"] = st.final_objective.log_likelihood;
    json ep = json::array();
    for (const auto& e : st.epochs)
      ep.push_back({{"epoch", e.epoch},
                    {"train_objective", e.train_objective},
                    {"stopping_metric", e.validation_ll},
                    {"learning_rate", e.learning_rate}});
    js["trace"] = ep;
    out.push_back(js);
  }
  return out;
}

json fit_report_json(const FitResult& fr, const Dataset& data) {
  json j;
  j["final_objective"] = {{"log_likelihood", fr.final_objective.log_likelihood},
                          {"l1_main", fr.final_objective.l1_main},
                          {"l1_interaction", fr.final_objective.l1_interaction},
                          {"marginal_clarity", fr.final_objective.marginal_clarity},
                          {"total", fr.final_objective.total}};
  j["stages"] = trace_to_json(fr.stages);
  j["warnings"] = fr.warnings;
  if (!fr.importance.mains.empty()) {
    json ji = json::array();
    for (const auto& e : fr.importance.mains)
      ji.push_back({{"alternative", data.alternatives.names[e.alt]},
                    {"variable", data.alternatives.variables[e.alt][e.var]},
                    {"raw_score", e.raw_score},
                    {"magnitude_score", e.magnitude_score},
                    {"selected", e.selected}});
    j["importance"] = ji;
  }
  if (!fr.selected_pairs.empty()) {
    json jp = json::array();
    for (int alt = 0; alt < static_cast<int>(fr.selected_pairs.size()); ++alt)
      for (const auto& [a, b] : fr.selected_pairs[alt])
        jp.push_back({{"alternative", data.alternatives.names[alt]},
                      {"variable_a", data.alternatives.variables[alt][a]},
                      {"variable_b", data.alternatives.variables[alt][b]}});
    j["selected_pairs"] = jp;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-choice estimation with additive utility networks"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate the two-mode synthetic dataset");
  std::string synth_config, synth_out, synth_stats;
  std::uint64_t synth_seed = 0;
  int synth_n = 0;
  synth->add_option("--config", synth_config, "SyntheticConfig JSON file");
  synth->add_option("--out", synth_out, "Output dataset CSV")->required();
  synth->add_option("--stats", synth_stats, "Output generation-stats JSON");
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "Override the config seed");
  synth->add_option("--n", synth_n, "Override the candidate count");

  // ---- fit ----
  auto* fitcmd = app.add_subcommand("fit", "Estimate a model on a dataset");
  std::string fit_data, fit_kind, fit_config, fit_out, fit_report;
  std::uint64_t fit_seed = 0;
  fitcmd->add_option("--data", fit_data, "Dataset CSV")->required();
  fitcmd->add_option("--kind", fit_kind, "linear | gaunet | gaiunet | asudnn")->required();
  fitcmd->add_option("--config", fit_config, "TrainConfig JSON file");
  fitcmd->add_option("--out", fit_out, "Output model JSON")->required();
  fitcmd->add_option("--report", fit_report, "Output fit-report JSON");
  auto* fit_seed_opt = fitcmd->add_option("--seed", fit_seed, "Override the config seed");

  // ---- cv ----
  auto* cvcmd = app.add_subcommand("cv", "K-fold cross-validation");
  std::string cv_data, cv_kind, cv_config, cv_out, cv_json;
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
  cvcmd->add_option("--data", cv_data, "Dataset CSV")->required();
  cvcmd->add_option("--kind", cv_kind, "Model kind")->required();
  cvcmd->add_option("--config", cv_config, "TrainConfig JSON file");
  cvcmd->add_option("--folds", cv_folds, "Fold count (default 5)");
  cvcmd->add_option("--out", cv_out, "Output per-fold CSV")->required();
  cvcmd->add_option("--json", cv_json, "Output JSON summary");
  auto* cv_seed_opt = cvcmd->add_option("--seed", cv_seed, "Override the config seed");

  // ---- evaluate ----
  auto* evalcmd = app.add_subcommand("evaluate", "Log-likelihood and accuracy of a saved model");
  std::string eval_model, eval_data, eval_out;
  evalcmd->add_option("--model", eval_model, "Model JSON")->required();
  evalcmd->add_option("--data", eval_data, "Dataset CSV")->required();
  evalcmd->add_option("--out", eval_out, "Output metrics JSON");

  // ---- policy-eval ----
  auto* polcmd = app.add_subcommand("policy-eval", "Accuracy under additive variable shifts");
  std::string pol_model, pol_data, pol_alt, pol_var, pol_truth, pol_out, pol_mode = "drop";
  std::vector<double> pol_deltas;
  std::vector<double> pol_range;
  std::uint64_t pol_seed = 0;
  polcmd->add_option("--model", pol_model, "Model JSON")->required();
  polcmd->add_option("--data", pol_data, "Dataset CSV")->required();
  polcmd->add_option("--alternative", pol_alt, "Target alternative")->required();
  polcmd->add_option("--variable", pol_var, "Target variable")->required();
  polcmd->add_option("--deltas", pol_deltas, "Explicit shift list");
  polcmd->add_option("--delta-range", pol_range, "low high step")->expected(3);
  polcmd->add_option("--truth", pol_truth, "SyntheticConfig JSON for relabeling");
  polcmd->add_option("--relabel", pol_mode, "drop | fallback | frozen (default drop)");
  polcmd->add_option("--seed", pol_seed, "Relabeling seed");
  polcmd->add_option("--out", pol_out, "Output CSV")->required();

  // ---- curves ----
  auto* curvecmd = app.add_subcommand("curves", "Export per-variable utility curves");
  std::string curve_model, curve_data, curve_dir;
  int curve_grid = 100, curve_rows = 100;
  curvecmd->add_option("--model", curve_model, "Model JSON")->required();
  curvecmd->add_option("--data", curve_data, "Dataset CSV")->required();
  curvecmd->add_option("--out-dir", curve_dir, "Output directory")->required();
  curvecmd->add_option("--grid-points", curve_grid, "Grid resolution (default 100)");
  curvecmd->add_option("--max-rows", curve_rows, "Conditioning rows for dense models");

  // ---- importance ----
  auto* impcmd = app.add_subcommand("importance", "Grid-averaged variable importance");
  std::string imp_model, imp_data, imp_out;
  int imp_grid = 0;
  double imp_threshold = -1;
  bool imp_normalize = false;
  impcmd->add_option("--model", imp_model, "Model JSON")->required();
  impcmd->add_option("--data", imp_data, "Dataset CSV")->required();
  impcmd->add_option("--out", imp_out, "Output CSV")->required();
  impcmd->add_option("--grid-points", imp_grid, "Grid resolution (default: model config)");
  impcmd->add_option("--threshold", imp_threshold, "Selection threshold (default: model config)");
  impcmd->add_flag("--normalized", imp_normalize, "Threshold magnitude shares instead of raw magnitudes");

  // ---- vif ----
  auto* vifcmd = app.add_subcommand("vif", "Variance inflation factors per alternative");
  std::string vif_data, vif_out;
  vifcmd->add_option("--data", vif_data, "Dataset CSV")->required();
  vifcmd->add_option("--out", vif_out, "Output CSV")->required();

  // ---- experiment ----
  auto* expcmd = app.add_subcommand("experiment", "Run a full configured study");
  std::string exp_config, exp_out;
  expcmd->add_option("--config", exp_config, "Experiment config JSON")->required();
  expcmd->add_option("--out-dir", exp_out, "Override the config out_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*synth) {
      SyntheticConfig cfg;
      if (!synth_config.empty()) cfg = synthetic_config_from_json(read_json_file(synth_config));
      if (synth_seed_opt->count()) cfg.seed = synth_seed;
      if (synth_n > 0) cfg.n_points = synth_n;
      GenerationStats stats;
      Dataset data = generate_synthetic(cfg, &stats);
      write_csv(data, synth_out);
      if (!synth_stats.empty())
        write_text(synth_stats, generation_stats_to_json(stats).dump(2) + "\n");
      std::cout << "kept " << stats.n_kept << " of " << stats.n_candidates << " candidates -> "
                << synth_out << "\n";
    } else if (*fitcmd) {
      Dataset data = load_csv(fit_data);
      TrainConfig cfg = load_train_config(fit_config, fit_seed, fit_seed_opt->count() > 0);
      FitResult fr = fit(model_kind_from_string(fit_kind), data, cfg);
      save_model(fr.model, fit_out);
      if (!fit_report.empty()) write_text(fit_report, fit_report_json(fr, data).dump(2) + "\n");
      EvalMetrics m = evaluate(fr.model, data);
      std::cout << "fit " << fit_kind << ": LL " << m.log_likelihood << ", accuracy " << m.accuracy
                << " -> " << fit_out << "\n";
    } else if (*cvcmd) {
      Dataset data = load_csv(cv_data);
      TrainConfig cfg = load_train_config(cv_config, cv_seed, cv_seed_opt->count() > 0);
      CvPlan plan = make_cv_plan(data.observation_count(), cv_folds, cfg.seed);
      CvResult res = cross_validate(model_kind_from_string(cv_kind), data, cfg, plan);
      std::ofstream out(cv_out);
      if (!out) throw std::invalid_argument("cannot write '" + cv_out + "'");
      out << "fold,train_ll,test_ll,train_accuracy,test_accuracy\n";
      char buf[160];
      for (size_t f = 0; f < res.folds.size(); ++f) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", f, res.folds[f].train_ll,
                      res.folds[f].test_ll, res.folds[f].train_accuracy, res.folds[f].test_accuracy);
        out << buf;
      }
      std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g,%.17g,%.17g\n", res.mean.train_ll,
                    res.mean.test_ll, res.mean.train_accuracy, res.mean.test_accuracy);
      out << buf;
      std::snprintf(buf, sizeof(buf), "stdev,%.17g,%.17g,%.17g,%.17g\n", res.stdev.train_ll,
                    res.stdev.test_ll, res.stdev.train_accuracy, res.stdev.test_accuracy);
      out << buf;
      if (!cv_json.empty()) {
        json j;
        json jf = json::array();
        for (const auto& f : res.folds)
          jf.push_back({{"train_ll", f.train_ll},
                        {"test_ll", f.test_ll},
                        {"train_accuracy", f.train_accuracy},
                        {"test_accuracy", f.test_accuracy}});
        j["folds"] = jf;
        j["mean"] = {{"train_ll", res.mean.train_ll},
                     {"test_ll", res.mean.test_ll},
                     {"train_accuracy", res.mean.train_accuracy},
                     {"test_accuracy", res.mean.test_accuracy}};
        write_text(cv_json, j.dump(2) + "\n");
      }
      std::cout << "cv mean test LL " << res.mean.test_ll << ", accuracy " << res.mean.test_accuracy
                << " -> " << cv_out << "\n";
    } else if (*evalcmd) {
      FittedModel model = load_model(eval_model);
      Dataset data = load_csv(eval_data);
      EvalMetrics m = evaluate(model, data);
      json j = {{"log_likelihood", m.log_likelihood}, {"accuracy", m.accuracy}, {"n", m.n}};
      if (!eval_out.empty()) write_text(eval_out, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    } else if (*polcmd) {
      FittedModel model = load_model(pol_model);
      Dataset data = load_csv(pol_data);
      PolicyShiftSpec spec;
      spec.alternative = pol_alt;
      spec.variable = pol_var;
      spec.mode = relabel_mode_from_string(pol_mode);
      spec.seed = pol_seed;
      spec.deltas = pol_deltas;
      if (!pol_range.empty()) {
        if (pol_range[2] <= 0) throw std::invalid_argument("--delta-range step must be positive");
        for (double v = pol_range[0]; v <= pol_range[1] + 1e-12; v += pol_range[2])
          spec.deltas.push_back(v);
      }
      if (spec.deltas.empty()) throw std::invalid_argument("no deltas given");
      SyntheticConfig truth;
      if (!pol_truth.empty()) {
        truth = synthetic_config_from_json(read_json_file(pol_truth));
      } else if (spec.mode != RelabelMode::FrozenLabels) {
        throw std::invalid_argument("--truth is required unless --relabel frozen");
      }
      PolicyResult res = policy_eval(model, data, truth, spec);
      write_policy_csv(res, data.alternatives, pol_out);
      std::cout << "policy sweep over " << spec.deltas.size() << " deltas -> " << pol_out << "\n";
    } else if (*curvecmd) {
      FittedModel model = load_model(curve_model);
      Dataset data = load_csv(curve_data);
      CurveTable table = export_curves(model, data, curve_grid, curve_rows);
      write_curves_csv(table, data.alternatives, curve_dir);
      std::cout << "wrote " << table.curves.size() << " curve files to " << curve_dir << "\n";
    } else if (*impcmd) {
      FittedModel model = load_model(imp_model);
      Dataset data = load_csv(imp_data);
      int grid = imp_grid > 0 ? imp_grid : model.config.importance_grid_points;
      double threshold = imp_threshold >= 0 ? imp_threshold : model.config.importance_threshold;
      ImportanceReport rep = importance_scores(model, data, grid, threshold,
                                               imp_normalize || model.config.importance_normalize);
      write_importance_csv(rep, data.alternatives, imp_out);
      std::cout << "importance for " << rep.mains.size() << " terms -> " << imp_out << "\n";
    } else if (*vifcmd) {
      Dataset data = load_csv(vif_data);
      std::vector<std::vector<VifEntry>> reports;
      for (int alt = 0; alt < data.alternatives.alternative_count(); ++alt)
        reports.push_back(vif(data, alt));
      write_vif_csv(reports, data.alternatives, vif_out);
      std::cout << "vif report -> " << vif_out << "\n";
    } else if (*expcmd) {
      ExperimentResult res = run_experiment_file(exp_config, exp_out);
      std::cout << "experiment outputs in " << res.out_dir << "\n";
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
