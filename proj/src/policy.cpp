#include "gaunet/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaunet {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_synthetic_schema(const Dataset& data) {
  if (!(data.alternatives == synthetic_schema()))
    throw std::invalid_argument("policy relabeling requires the two-mode synthetic schema");
}

std::vector<int> predict_indices(const UtilityModel& model, const Dataset& zdata) {
  const int n = zdata.observation_count();
  const int K = model.alternatives.alternative_count();
  std::vector<int> pred(n, 0);
#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    ObsEval ev;
    resize_obs_eval(model, ev);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int obs = 0; obs < n; ++obs) {
      choice_probabilities(model, zdata, obs, ev);
      int best = 0;
      for (int i = 1; i < K; ++i)
        if (ev.probabilities[i] > ev.probabilities[best]) best = i;
      pred[obs] = best;
    }
  }
  return pred;
}

}  // namespace

RelabelMode relabel_mode_from_string(const std::string& s) {
  if (s == "drop") return RelabelMode::Drop;
  if (s == "fallback") return RelabelMode::UnconstrainedFallback;
  if (s == "frozen") return RelabelMode::FrozenLabels;
  throw std::invalid_argument("unknown relabel mode '" + s + "' (expected drop, fallback, or frozen)");
}

std::string to_string(RelabelMode mode) {
  switch (mode) {
    case RelabelMode::Drop: return "drop";
    case RelabelMode::UnconstrainedFallback: return "fallback";
    case RelabelMode::FrozenLabels: return "frozen";
  }
  return "drop";
}

std::vector<int> relabel_synthetic(const Dataset& shifted, const SyntheticConfig& truth,
                                   std::uint64_t seed) {
  check_synthetic_schema(shifted);
  const int n = shifted.observation_count();
  std::vector<int> labels(n, -1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int obs = 0; obs < n; ++obs) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(obs));
    labels[obs] = synthetic_true_choice(truth, shifted.obs_values(obs, 0), shifted.obs_values(obs, 1), rng);
  }
  return labels;
}

PolicyResult policy_eval(const FittedModel& fitted, const Dataset& base_data,
                         const SyntheticConfig& truth, const PolicyShiftSpec& spec) {
  const auto& alts = base_data.alternatives;
  const int alt = alts.alt_index(spec.alternative);
  if (alt < 0) throw std::invalid_argument("policy target alternative '" + spec.alternative + "' not in schema");
  const int var = alts.var_index(alt, spec.variable);
  if (var < 0)
    throw std::invalid_argument("policy target variable '" + spec.variable +
                                "' not present for alternative '" + spec.alternative + "'");
  if (spec.mode != RelabelMode::FrozenLabels) check_synthetic_schema(base_data);
  if (!(fitted.utility.alternatives == base_data.alternatives))
    throw std::invalid_argument("policy_eval: model and dataset schema mismatch");

  const int n = base_data.observation_count();
  const int K = alts.alternative_count();
  PolicyResult result;
  result.spec = spec;

  for (size_t di = 0; di < spec.deltas.size(); ++di) {
    const double delta = spec.deltas[di];
    Dataset shifted = base_data;
    for (int obs = 0; obs < n; ++obs) shifted.value(obs, alt, var) += delta;

    std::vector<int> labels;
    if (spec.mode == RelabelMode::FrozenLabels) {
      labels = shifted.chosen;
    } else {
      // Keyed by the shift value itself, so a given delta always sees the
      // same noise no matter where it sits in the sweep.
      const std::uint64_t delta_seed =
          Rng::substream(spec.seed, std::bit_cast<std::uint64_t>(delta + 0.0)).next_u64();
      labels.assign(n, -1);
      const bool fallback = spec.mode == RelabelMode::UnconstrainedFallback;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (int obs = 0; obs < n; ++obs) {
        Rng rng = Rng::substream(delta_seed, static_cast<std::uint64_t>(obs));
        TrueChoice tc = synthetic_true_choice_detail(truth, shifted.obs_values(obs, 0),
                                                     shifted.obs_values(obs, 1), rng);
        labels[obs] = (tc.constrained < 0 && fallback) ? tc.unconstrained : tc.constrained;
      }
    }

    Dataset z = transform(fitted.standardizer, shifted);
    const std::vector<int> pred = predict_indices(fitted.utility, z);

    PolicyPoint pt;
    pt.delta = delta;
    pt.predicted_share.assign(K, 0.0);
    pt.truth_share.assign(K, 0.0);
    long correct = 0;
    for (int obs = 0; obs < n; ++obs) {
      if (labels[obs] < 0) {
        ++pt.n_dropped;
        continue;
      }
      ++pt.n_scored;
      pt.truth_share[labels[obs]] += 1.0;
      pt.predicted_share[pred[obs]] += 1.0;
      if (pred[obs] == labels[obs]) ++correct;
    }
    if (pt.n_scored > 0) {
      pt.accuracy = static_cast<double>(correct) / pt.n_scored;
      for (int i = 0; i < K; ++i) {
        pt.truth_share[i] /= pt.n_scored;
        pt.predicted_share[i] /= pt.n_scored;
      }
    }
    result.points.push_back(std::move(pt));
  }
  return result;
}

CurveTable export_curves(const FittedModel& fitted, const Dataset& raw_data, int grid_points,
                         int max_conditional_rows) {
  if (grid_points < 2) throw std::invalid_argument("export_curves: need at least two grid points");
  if (!(fitted.utility.alternatives == raw_data.alternatives))
    throw std::invalid_argument("export_curves: dataset schema mismatch");
  if (raw_data.observation_count() == 0) throw std::invalid_argument("export_curves: empty dataset");

  const UtilityModel& model = fitted.utility;
  const auto& alts = model.alternatives;
  const Standardizer& st = fitted.standardizer;
  const int w = raw_data.row_width();
  std::vector<double> lo(w, std::numeric_limits<double>::infinity());
  std::vector<double> hi(w, -std::numeric_limits<double>::infinity());
  for (int obs = 0; obs < raw_data.observation_count(); ++obs) {
    auto r = raw_data.row(obs);
    for (int c = 0; c < w; ++c) {
      lo[c] = std::min(lo[c], r[c]);
      hi[c] = std::max(hi[c], r[c]);
    }
  }
  auto make_grid = [&](int col) {
    std::vector<double> g(grid_points);
    const double step = (hi[col] - lo[col]) / (grid_points - 1);
    for (int t = 0; t < grid_points; ++t) g[t] = lo[col] + step * t;
    g.back() = hi[col];
    return g;
  };

  CurveTable table;
  MlpWorkspace ws;
  for (int alt = 0; alt < alts.alternative_count(); ++alt) {
    for (int var = 0; var < alts.variable_count(alt); ++var) {
      const int col = alts.offset(alt) + var;
      CurveSeries series;
      series.alt = alt;
      series.var = var;
      series.grid = make_grid(col);

      switch (model.kind) {
        case ModelKind::Linear: {
          series.values.resize(grid_points);
          for (int t = 0; t < grid_points; ++t)
            series.values[t] =
                model.linear_weights[alt][var] *
                (st.identity() ? series.grid[t] : st.transform_value(col, series.grid[t]));
          break;
        }
        case ModelKind::GAUNet:
        case ModelKind::GAIUNet: {
          std::vector<double> zgrid(series.grid);
          if (!st.identity())
            for (double& v : zgrid) v = st.transform_value(col, v);
          series.values = shape_curve(model, alt, var, zgrid);
          break;
        }
        case ModelKind::AsuDnn: {
          const int n = raw_data.observation_count();
          const int rows = std::min(max_conditional_rows, n);
          const int stride = std::max(1, n / rows);
          std::vector<double> zvars(alts.variable_count(alt));
          for (int r = 0, taken = 0; r < n && taken < rows; r += stride, ++taken) {
            auto base = raw_data.obs_values(r, alt);
            std::vector<double> line(grid_points);
            for (int t = 0; t < grid_points; ++t) {
              for (int v = 0; v < alts.variable_count(alt); ++v) {
                double raw = (v == var) ? series.grid[t] : base[v];
                int c = alts.offset(alt) + v;
                zvars[v] = st.identity() ? raw : st.transform_value(c, raw);
              }
              line[t] = mlp_forward(model.dense_nets[alt], zvars, ws);
            }
            series.conditional.push_back(std::move(line));
          }
          series.median.resize(grid_points);
          std::vector<double> column(series.conditional.size());
          for (int t = 0; t < grid_points; ++t) {
            for (size_t r = 0; r < series.conditional.size(); ++r) column[r] = series.conditional[r][t];
            std::sort(column.begin(), column.end());
            const size_t m = column.size();
            series.median[t] = (m % 2 == 1) ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
          }
          break;
        }
      }
      table.curves.push_back(std::move(series));
    }
  }

  for (size_t q = 0; q < model.interactions.size(); ++q) {
    const auto& it = model.interactions[q];
    InteractionSurfaceSeries surf;
    surf.alt = it.alt;
    surf.var_a = it.var_a;
    surf.var_b = it.var_b;
    surf.grid_a = make_grid(alts.offset(it.alt) + it.var_a);
    surf.grid_b = make_grid(alts.offset(it.alt) + it.var_b);
    std::vector<double> za(surf.grid_a), zb(surf.grid_b);
    if (!st.identity()) {
      for (double& v : za) v = st.transform_value(alts.offset(it.alt) + it.var_a, v);
      for (double& v : zb) v = st.transform_value(alts.offset(it.alt) + it.var_b, v);
    }
    surf.values = interaction_surface(model, static_cast<int>(q), za, zb);
    table.surfaces.push_back(std::move(surf));
  }
  return table;
}

void write_curves_csv(const CurveTable& table, const AlternativeSet& alts, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& series : table.curves) {
    const std::string path =
        dir + "/" + alts.names[series.alt] + "_" + alts.variables[series.alt][series.var] + ".csv";
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write curve file '" + path + "'");
    if (series.conditional.empty()) {
      out << "grid,value\n";
      for (size_t t = 0; t < series.grid.size(); ++t)
        out << fmt(series.grid[t]) << ',' << fmt(series.values[t]) << '\n';
    } else {
      out << "grid,median";
      for (size_t r = 0; r < series.conditional.size(); ++r) out << ",row_" << r;
      out << '\n';
      for (size_t t = 0; t < series.grid.size(); ++t) {
        out << fmt(series.grid[t]) << ',' << fmt(series.median[t]);
        for (const auto& line : series.conditional) out << ',' << fmt(line[t]);
        out << '\n';
      }
    }
  }
  for (const auto& surf : table.surfaces) {
    const std::string path = dir + "/" + alts.names[surf.alt] + "_" +
                             alts.variables[surf.alt][surf.var_a] + "_x_" +
                             alts.variables[surf.alt][surf.var_b] + ".csv";
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write surface file '" + path + "'");
    out << "grid_a,grid_b,value\n";
    for (size_t i = 0; i < surf.grid_a.size(); ++i)
      for (size_t j = 0; j < surf.grid_b.size(); ++j)
        out << fmt(surf.grid_a[i]) << ',' << fmt(surf.grid_b[j]) << ','
            << fmt(surf.values[i * surf.grid_b.size() + j]) << '\n';
  }
}

void write_importance_csv(const ImportanceReport& report, const AlternativeSet& alts,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write importance file '" + path + "'");
  out << "alternative,variable,variable_b,raw_score,magnitude_score,selected\n";
  for (const auto& e : report.mains)
    out << alts.names[e.alt] << ',' << alts.variables[e.alt][e.var] << ",," << fmt(e.raw_score) << ','
        << fmt(e.magnitude_score) << ',' << (e.selected ? 1 : 0) << '\n';
  for (const auto& e : report.interactions)
    out << alts.names[e.alt] << ',' << alts.variables[e.alt][e.var_a] << ','
        << alts.variables[e.alt][e.var_b] << ',' << fmt(e.raw_score) << ',' << fmt(e.magnitude_score)
        << ",\n";
}

void write_policy_csv(const PolicyResult& result, const AlternativeSet& alts,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write policy file '" + path + "'");
  out << "delta,n_scored,n_dropped,accuracy";
  for (const auto& name : alts.names) out << ",predicted_share_" << name;
  for (const auto& name : alts.names) out << ",truth_share_" << name;
  out << '\n';
  for (const auto& pt : result.points) {
    out << fmt(pt.delta) << ',' << pt.n_scored << ',' << pt.n_dropped << ',' << fmt(pt.accuracy);
    for (double s : pt.predicted_share) out << ',' << fmt(s);
    for (double s : pt.truth_share) out << ',' << fmt(s);
    out << '\n';
  }
}

void write_vif_csv(const std::vector<std::vector<VifEntry>>& per_alt, const AlternativeSet& alts,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write vif file '" + path + "'");
  out << "alternative,variable,r2,vif,acceptable\n";
  for (size_t i = 0; i < per_alt.size(); ++i)
    for (const auto& e : per_alt[i])
      out << alts.names[i] << ',' << e.variable << ',' << fmt(e.r2) << ',' << fmt(e.vif) << ','
          << (e.acceptable ? 1 : 0) << '\n';
}

}  // namespace gaunet
