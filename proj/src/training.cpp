#include "gaunet/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gaunet {

namespace {

// Substream ids: every random decision in a fit draws from its own stream so
// that staged estimation replays stage 1 exactly like a plain fit.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamValSplit = 2;
constexpr std::uint64_t kStreamShuffle = 3;  // + stage number
constexpr std::uint64_t kStreamInterInit = 7;
constexpr std::uint64_t kStreamFold = 100;   // + fold index

UtilityModel build_model(ModelKind kind, const AlternativeSet& alts, const TrainConfig& cfg) {
  Rng rng = Rng::substream(cfg.seed, kStreamInit);
  switch (kind) {
    case ModelKind::Linear: return make_linear_model(alts);
    case ModelKind::GAUNet:
    case ModelKind::GAIUNet:
      // GAIUNet starts from the main-effect model; interactions join later.
      return make_gaunet_model(alts, cfg.hidden_sizes, cfg.activation, cfg.share_groups, rng,
                               cfg.leaky_slope);
    case ModelKind::AsuDnn:
      return make_asudnn_model(alts, cfg.hidden_sizes, cfg.activation, rng, cfg.leaky_slope);
  }
  throw std::invalid_argument("unknown model kind");
}

StageTrace run_stage(UtilityModel& model, const ModelLayout& layout, const Dataset& train,
                     const Dataset& validation, const TrainConfig& cfg,
                     const TrainableGroups& groups, const std::string& stage_name, Rng shuffle_rng) {
  StageTrace trace;
  trace.stage = stage_name;
  trace.start_objective = objective(model, train, cfg.penalties);

  const int n = train.observation_count();
  const int batch = std::min(cfg.batch_size, n);
  const auto mask = layout.mask(groups.asc, groups.main, groups.interaction);

  AdamState adam(layout.size(), {.learning_rate = cfg.learning_rate});
  std::vector<double> grad(layout.size(), 0.0);
  std::vector<double> neg(layout.size(), 0.0);

  const bool use_validation = validation.observation_count() > 0;
  auto metric_now = [&]() {
    return use_validation ? log_likelihood(model, validation)
                          : objective(model, train, cfg.penalties).total;
  };

  double best_metric = metric_now();
  std::vector<double> best_params = layout.snapshot();
  int stale = 0;
  int decay_stale = 0;

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(perm);
    double epoch_objective = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int bsz = std::min(batch, n - start);
      double value = 0.0;
      objective_gradients(model, layout, train, std::span<const int>(perm).subspan(start, bsz),
                          cfg.penalties, static_cast<double>(bsz) / n, groups, grad, &value);
      epoch_objective += value;
      for (size_t i = 0; i < grad.size(); ++i) neg[i] = -grad[i];
      adam.step(layout.slots, neg, &mask);
    }

    const double metric = metric_now();
    trace.epochs.push_back({epoch, epoch_objective, metric, adam.learning_rate()});
    // Microscopic gains should not hold off the decay schedule forever, so
    // the decay counter only resets on a relatively significant improvement.
    const bool significant = metric > best_metric + 1e-7 * (1.0 + std::abs(best_metric));
    if (metric > best_metric) {
      best_metric = metric;
      best_params = layout.snapshot();
      stale = 0;
    } else {
      ++stale;
    }
    if (significant) {
      decay_stale = 0;
    } else {
      ++decay_stale;
    }
    if (stale >= cfg.early_stop_patience) break;
    if (cfg.lr_decay_factor < 1.0 && decay_stale >= cfg.lr_decay_patience) {
      adam.set_learning_rate(adam.learning_rate() * cfg.lr_decay_factor);
      decay_stale = 0;
    }
  }

  layout.restore(best_params);
  trace.final_objective = objective(model, train, cfg.penalties);
  trace.params_after = layout.snapshot();
  return trace;
}

struct FitContext {
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  Standardizer standardizer;
  Dataset ztrain;
  Dataset zval;
  std::vector<std::string> warnings;
};

FitContext prepare(const Dataset& data, const TrainConfig& cfg) {
  FitContext ctx;
  const int n = data.observation_count();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng split_rng = Rng::substream(cfg.seed, kStreamValSplit);
  split_rng.shuffle(perm);
  const int n_val = static_cast<int>(cfg.validation_fraction * n);
  ctx.val_idx.assign(perm.begin(), perm.begin() + n_val);
  ctx.train_idx.assign(perm.begin() + n_val, perm.end());
  std::sort(ctx.val_idx.begin(), ctx.val_idx.end());
  std::sort(ctx.train_idx.begin(), ctx.train_idx.end());
  if (ctx.train_idx.empty()) throw std::invalid_argument("fit: no observations left after validation split");

  ctx.standardizer = fit_standardizer(data, ctx.train_idx);
  for (int c = 0; c < ctx.standardizer.width(); ++c) {
    if (ctx.standardizer.zero_variance[c])
      ctx.warnings.push_back("column " + std::to_string(c) +
                             " has zero variance on the training split; standardized to 0");
  }
  Dataset zall = transform(ctx.standardizer, data);
  ctx.ztrain = zall.subset(ctx.train_idx);
  ctx.zval = zall.subset(ctx.val_idx);
  if (cfg.batch_size > static_cast<int>(ctx.train_idx.size()))
    ctx.warnings.push_back("batch size exceeds the training split; using full batches");
  return ctx;
}

void check_fit_inputs(ModelKind kind, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.observation_count() == 0) throw std::invalid_argument("fit: empty dataset");
  if (data.alternatives.alternative_count() < 2)
    throw std::invalid_argument("fit: at least two alternatives required");
  if (!cfg.share_groups.empty() && kind != ModelKind::GAUNet && kind != ModelKind::GAIUNet)
    throw std::invalid_argument("share groups require per-variable shape functions (gaunet/gaiunet)");
}

FitResult fit_impl(ModelKind kind, const Dataset& data, const TrainConfig& cfg, bool staged) {
  check_fit_inputs(kind, data, cfg);
  FitContext ctx = prepare(data, cfg);

  UtilityModel model = build_model(kind, data.alternatives, cfg);
  ModelLayout layout = build_layout(model);

  FitResult result;
  result.warnings = ctx.warnings;
  result.stages.push_back(run_stage(model, layout, ctx.ztrain, ctx.zval, cfg,
                                    TrainableGroups{}, staged ? "main_effects" : "main",
                                    Rng::substream(cfg.seed, kStreamShuffle)));

  auto finish = [&](UtilityModel&& final_model) {
    result.model.utility = std::move(final_model);
    result.model.standardizer = ctx.standardizer;
    result.model.config = cfg;
    result.model.seed = cfg.seed;
    result.model.provenance = data.provenance.source;
    result.final_objective = objective(result.model.utility, ctx.ztrain, cfg.penalties);
    if (result.model.utility.kind == ModelKind::GAUNet ||
        result.model.utility.kind == ModelKind::GAIUNet) {
      result.importance = importance_scores(result.model, data.subset(ctx.train_idx),
                                            cfg.importance_grid_points, cfg.importance_threshold,
                                            cfg.importance_normalize);
    }
  };

  if (!staged) {
    finish(std::move(model));
    return result;
  }

  // Stage 2: score main effects and build candidate pairs.
  FittedModel stage1{model, ctx.standardizer, cfg, cfg.seed, data.provenance.source};
  ImportanceReport report = importance_scores(stage1, data.subset(ctx.train_idx),
                                              cfg.importance_grid_points, cfg.importance_threshold,
                                              cfg.importance_normalize);
  result.selected_pairs = select_pairs(report, data.alternatives);
  bool any_pair = false;
  for (const auto& p : result.selected_pairs) any_pair |= !p.empty();
  if (!any_pair) {
    finish(std::move(model));
    result.importance = report;
    return result;
  }

  Rng inter_rng = Rng::substream(cfg.seed, kStreamInterInit);
  add_interactions(model, result.selected_pairs, cfg.hidden_sizes, inter_rng);
  layout = build_layout(model);

  // Stage 3: interactions only, main effects frozen bit-for-bit.
  result.stages.push_back(run_stage(model, layout, ctx.ztrain, ctx.zval, cfg,
                                    TrainableGroups{.asc = false, .main = false, .interaction = true},
                                    "interactions", Rng::substream(cfg.seed, kStreamShuffle + 1)));
  // Stage 4: joint fine-tune.
  result.stages.push_back(run_stage(model, layout, ctx.ztrain, ctx.zval, cfg, TrainableGroups{},
                                    "fine_tune", Rng::substream(cfg.seed, kStreamShuffle + 2)));
  finish(std::move(model));
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw std::invalid_argument("train config: batch_size must be positive");
  if (learning_rate <= 0) throw std::invalid_argument("train config: learning_rate must be positive");
  if (max_epochs <= 0) throw std::invalid_argument("train config: max_epochs must be positive");
  if (early_stop_patience <= 0) throw std::invalid_argument("train config: patience must be positive");
  if (validation_fraction < 0 || validation_fraction >= 1)
    throw std::invalid_argument("train config: validation_fraction must lie in [0, 1)");
  penalties.validate();
  if (std::isnan(importance_threshold) || importance_threshold < 0)
    throw std::invalid_argument("train config: importance_threshold must be nonnegative");
  if (importance_grid_points <= 0)
    throw std::invalid_argument("train config: importance_grid_points must be positive");
  for (int h : hidden_sizes)
    if (h <= 0) throw std::invalid_argument("train config: hidden sizes must be positive");
  if (lr_decay_factor <= 0 || lr_decay_factor > 1)
    throw std::invalid_argument("train config: lr_decay_factor must lie in (0, 1]");
  if (lr_decay_patience <= 0) throw std::invalid_argument("train config: lr_decay_patience must be positive");
}

CvPlan make_cv_plan(int n_obs, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
  if (n_obs < folds) throw std::invalid_argument("cross-validation needs at least one observation per fold");
  CvPlan plan;
  plan.fold_count = folds;
  plan.seed = seed;
  plan.fold_of.assign(n_obs, 0);
  std::vector<int> perm(n_obs);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = Rng::substream(seed, kStreamFold);
  rng.shuffle(perm);
  const int base = n_obs / folds;
  const int extra = n_obs % folds;
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    int size = base + (f < extra ? 1 : 0);
    for (int k = 0; k < size; ++k) plan.fold_of[perm[pos++]] = f;
  }
  return plan;
}

FitResult fit(ModelKind kind, const Dataset& data, const TrainConfig& cfg) {
  if (kind == ModelKind::GAIUNet) return fit_gaiunet_staged(data, cfg);
  return fit_impl(kind, data, cfg, false);
}

FitResult fit_gaiunet_staged(const Dataset& data, const TrainConfig& cfg) {
  return fit_impl(ModelKind::GAIUNet, data, cfg, true);
}

namespace {

void importance_grid(double lo, double hi, int points, std::vector<double>& grid) {
  grid.resize(points);
  if (points == 1) {
    grid[0] = lo;
    return;
  }
  const double step = (hi - lo) / (points - 1);
  for (int t = 0; t < points; ++t) grid[t] = lo + step * t;
  grid.back() = hi;  // endpoints exact
}

ImportanceReport importance_impl(const UtilityModel& model, std::span<const double> col_min,
                                 std::span<const double> col_max, int grid_points, double threshold,
                                 bool normalize, const Standardizer* st) {
  if (model.kind != ModelKind::GAUNet && model.kind != ModelKind::GAIUNet)
    throw std::invalid_argument("importance_scores requires a GAUNet or GAIUNet model");
  if (grid_points <= 0) throw std::invalid_argument("importance_scores: empty grid");
  const auto& alts = model.alternatives;
  if (static_cast<int>(col_min.size()) != alts.total_variable_count() ||
      static_cast<int>(col_max.size()) != alts.total_variable_count())
    throw std::invalid_argument("importance_scores: range size mismatch");

  ImportanceReport report;
  report.threshold = threshold;
  report.grid_points = grid_points;

  std::vector<double> grid;
  MlpWorkspace ws;
  for (const auto& sf : model.shapes) {
    const int col = alts.offset(sf.alt) + sf.var;
    importance_grid(col_min[col], col_max[col], grid_points, grid);
    double raw = 0.0, mag = 0.0;
    for (double x : grid) {
      double z = st ? st->transform_value(col, x) : x;
      double v = model.omegas[sf.omega] * mlp_forward(model.nets[sf.net], std::span<const double>(&z, 1), ws);
      raw += v;
      mag += std::abs(v);
    }
    raw /= grid_points;
    mag /= grid_points;
    report.mains.push_back({sf.alt, sf.var, raw, mag, false});
  }
  double mag_total = 0.0;
  for (const auto& e : report.mains) mag_total += e.magnitude_score;
  for (auto& e : report.mains) {
    double score = normalize ? (mag_total > 0 ? e.magnitude_score / mag_total : 0.0)
                             : e.magnitude_score;
    e.selected = score >= threshold;
  }

  std::vector<double> grid_b;
  for (const auto& it : model.interactions) {
    const int col_a = alts.offset(it.alt) + it.var_a;
    const int col_b = alts.offset(it.alt) + it.var_b;
    importance_grid(col_min[col_a], col_max[col_a], grid_points, grid);
    importance_grid(col_min[col_b], col_max[col_b], grid_points, grid_b);
    double raw = 0.0, mag = 0.0;
    for (double xa : grid) {
      double za = st ? st->transform_value(col_a, xa) : xa;
      for (double xb : grid_b) {
        double zb = st ? st->transform_value(col_b, xb) : xb;
        double xpair[2] = {za, zb};
        double v = model.interaction_omegas[it.omega] *
                   mlp_forward(model.interaction_nets[it.net], xpair, ws);
        raw += v;
        mag += std::abs(v);
      }
    }
    const double cells = static_cast<double>(grid_points) * grid_points;
    report.interactions.push_back({it.alt, it.var_a, it.var_b, raw / cells, mag / cells});
  }
  return report;
}

}  // namespace

ImportanceReport importance_scores(const FittedModel& fitted, const Dataset& raw_data,
                                   int grid_points, double threshold, bool normalize) {
  if (!(fitted.utility.alternatives == raw_data.alternatives))
    throw std::invalid_argument("importance_scores: dataset schema mismatch");
  if (raw_data.observation_count() == 0)
    throw std::invalid_argument("importance_scores: empty dataset");
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
  const Standardizer* st = fitted.standardizer.identity() ? nullptr : &fitted.standardizer;
  return importance_impl(fitted.utility, lo, hi, grid_points, threshold, normalize, st);
}

ImportanceReport importance_scores_model_space(const UtilityModel& model,
                                               std::span<const double> col_min,
                                               std::span<const double> col_max, int grid_points,
                                               double threshold, bool normalize) {
  return importance_impl(model, col_min, col_max, grid_points, threshold, normalize, nullptr);
}

std::vector<std::vector<std::pair<int, int>>> select_pairs(const ImportanceReport& report,
                                                           const AlternativeSet& alts) {
  const int K = alts.alternative_count();
  std::vector<std::vector<int>> selected(K);
  for (const auto& e : report.mains)
    if (e.selected) selected[e.alt].push_back(e.var);
  std::vector<std::vector<std::pair<int, int>>> pairs(K);
  for (int i = 0; i < K; ++i) {
    auto& vars = selected[i];
    std::sort(vars.begin(), vars.end());
    for (size_t a = 0; a < vars.size(); ++a)
      for (size_t b = a + 1; b < vars.size(); ++b) pairs[i].emplace_back(vars[a], vars[b]);
  }
  return pairs;
}

EvalMetrics evaluate(const FittedModel& fitted, const Dataset& raw_data) {
  Dataset z = transform(fitted.standardizer, raw_data);
  EvalMetrics m;
  m.n = raw_data.observation_count();
  m.log_likelihood = log_likelihood(fitted.utility, z);
  m.accuracy = accuracy_model_space(fitted.utility, z);
  return m;
}

double accuracy(const FittedModel& fitted, const Dataset& raw_data) {
  return evaluate(fitted, raw_data).accuracy;
}

CvResult cross_validate(ModelKind kind, const Dataset& data, const TrainConfig& cfg,
                        const CvPlan& plan) {
  if (static_cast<int>(plan.fold_of.size()) != data.observation_count())
    throw std::invalid_argument("cross_validate: plan does not match dataset size");
  CvResult result;
  result.folds.resize(plan.fold_count);
  for (int f = 0; f < plan.fold_count; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < data.observation_count(); ++i)
      (plan.fold_of[i] == f ? test_idx : train_idx).push_back(i);
    Dataset train = data.subset(train_idx);
    Dataset test = data.subset(test_idx);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = Rng::substream(cfg.seed, kStreamFold + 1 + f).next_u64();
    FitResult fr = fit(kind, train, fold_cfg);
    EvalMetrics mtrain = evaluate(fr.model, train);
    EvalMetrics mtest = evaluate(fr.model, test);
    result.folds[f] = {mtrain.log_likelihood, mtest.log_likelihood, mtrain.accuracy, mtest.accuracy};
  }
  auto agg = [&](auto member) {
    double mean = 0.0;
    for (const auto& fold : result.folds) mean += fold.*member;
    mean /= plan.fold_count;
    double var = 0.0;
    for (const auto& fold : result.folds) {
      double d = fold.*member - mean;
      var += d * d;
    }
    return std::pair<double, double>(mean, std::sqrt(var / plan.fold_count));
  };
  auto [m1, s1] = agg(&CvFoldResult::train_ll);
  auto [m2, s2] = agg(&CvFoldResult::test_ll);
  auto [m3, s3] = agg(&CvFoldResult::train_accuracy);
  auto [m4, s4] = agg(&CvFoldResult::test_accuracy);
  result.mean = {m1, m2, m3, m4};
  result.stdev = {s1, s2, s3, s4};
  return result;
}

}  // namespace gaunet
