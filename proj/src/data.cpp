#include "gaunet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaunet {

void SyntheticConfig::validate() const {
  if (n_points <= 0) throw std::invalid_argument("synthetic config: n_points must be positive");
  if (gumbel_scale <= 0) throw std::invalid_argument("synthetic config: gumbel scale must be positive");
  auto range_ok = [](double lo, double hi) { return lo <= hi; };
  if (!range_ok(bus_cost_min, bus_cost_max) || !range_ok(bus_time_min, bus_time_max) ||
      !range_ok(bus_access_min, bus_access_max) || !range_ok(bus_egress_min, bus_egress_max) ||
      !range_ok(taxi_cost_min, taxi_cost_max) || !range_ok(taxi_time_min, taxi_time_max) ||
      !range_ok(taxi_access_min, taxi_access_max) || !range_ok(taxi_egress_min, taxi_egress_max))
    throw std::invalid_argument("synthetic config: empty variable range");
}

Dataset Dataset::subset(std::span<const int> obs_indices) const {
  Dataset out;
  out.alternatives = alternatives;
  out.provenance = provenance;
  const int w = row_width();
  out.chosen.reserve(obs_indices.size());
  out.values.reserve(obs_indices.size() * w);
  for (int idx : obs_indices) {
    out.chosen.push_back(chosen[idx]);
    auto r = row(idx);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

void Dataset::validate() const {
  alternatives.validate();
  const int K = alternatives.alternative_count();
  if (values.size() != static_cast<size_t>(observation_count()) * row_width())
    throw std::invalid_argument("dataset value block size mismatch");
  for (int c : chosen)
    if (c < 0 || c >= K) throw std::invalid_argument("chosen alternative out of range");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset contains a non-finite value");
}

Standardizer fit_standardizer(const Dataset& data, std::span<const int> fit_on) {
  if (fit_on.empty()) throw std::invalid_argument("fit_standardizer: empty fitting split");
  const int w = data.row_width();
  Standardizer st;
  st.mean.assign(w, 0.0);
  st.stdev.assign(w, 1.0);
  st.min.assign(w, std::numeric_limits<double>::infinity());
  st.max.assign(w, -std::numeric_limits<double>::infinity());
  st.zero_variance.assign(w, 0);
  const double n = static_cast<double>(fit_on.size());
  for (int obs : fit_on) {
    auto r = data.row(obs);
    for (int c = 0; c < w; ++c) {
      st.mean[c] += r[c];
      st.min[c] = std::min(st.min[c], r[c]);
      st.max[c] = std::max(st.max[c], r[c]);
    }
  }
  for (int c = 0; c < w; ++c) st.mean[c] /= n;
  std::vector<double> var(w, 0.0);
  for (int obs : fit_on) {
    auto r = data.row(obs);
    for (int c = 0; c < w; ++c) {
      double d = r[c] - st.mean[c];
      var[c] += d * d;
    }
  }
  for (int c = 0; c < w; ++c) {
    var[c] /= n;  // population variance
    // A constant column can still show variance at rounding level; the
    // min == max test is the exact notion of zero variance here.
    if (st.min[c] == st.max[c] || var[c] <= 0.0) {
      st.stdev[c] = 1.0;
      st.zero_variance[c] = 1;
    } else {
      st.stdev[c] = std::sqrt(var[c]);
    }
  }
  return st;
}

Dataset transform(const Standardizer& st, const Dataset& data) {
  if (st.width() != data.row_width())
    throw std::invalid_argument("standardizer width does not match dataset");
  Dataset out = data;
  const int w = data.row_width();
  for (int obs = 0; obs < data.observation_count(); ++obs) {
    double* r = out.values.data() + static_cast<size_t>(obs) * w;
    for (int c = 0; c < w; ++c) r[c] = st.transform_value(c, r[c]);
  }
  return out;
}

AlternativeSet synthetic_schema() {
  AlternativeSet alts;
  alts.names = {"bus", "taxi"};
  alts.variables = {{"cost", "travel_time", "access_time", "egress_time"},
                    {"cost", "travel_time", "access_time", "egress_time"}};
  return alts;
}

TrueChoice synthetic_true_choice_detail(const SyntheticConfig& cfg, std::span<const double> bus_vars,
                                        std::span<const double> taxi_vars, Rng& rng) {
  const bool bus_ok = bus_vars[2] <= cfg.bus_access_cap;
  const bool taxi_ok = taxi_vars[0] <= cfg.taxi_cost_cap;
  // Two draws regardless of feasibility keeps the call sequence fixed.
  const double eb = gumbel_sample(rng, 0.0, cfg.gumbel_scale);
  const double et = gumbel_sample(rng, 0.0, cfg.gumbel_scale);
  const double vb = cfg.coef_cost * bus_vars[0] + cfg.coef_time * bus_vars[1] +
                    cfg.coef_access * bus_vars[2] + cfg.coef_egress * bus_vars[3];
  const double vt = cfg.coef_cost * taxi_vars[0] + cfg.coef_time * taxi_vars[1] +
                    cfg.coef_access * taxi_vars[2] + cfg.coef_egress * taxi_vars[3];
  TrueChoice out;
  out.unconstrained = (vb + eb >= vt + et) ? 0 : 1;
  if (!bus_ok && !taxi_ok)
    out.constrained = -1;
  else if (!bus_ok)
    out.constrained = 1;
  else if (!taxi_ok)
    out.constrained = 0;
  else
    out.constrained = out.unconstrained;
  return out;
}

int synthetic_true_choice(const SyntheticConfig& cfg, std::span<const double> bus_vars,
                          std::span<const double> taxi_vars, Rng& rng) {
  return synthetic_true_choice_detail(cfg, bus_vars, taxi_vars, rng).constrained;
}

Dataset generate_synthetic(const SyntheticConfig& cfg, GenerationStats* stats) {
  cfg.validate();
  const int n = cfg.n_points;
  std::vector<double> vars(static_cast<size_t>(n) * 8);
  std::vector<signed char> choice(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
    double* r = vars.data() + static_cast<size_t>(i) * 8;
    r[0] = rng.uniform(cfg.bus_cost_min, cfg.bus_cost_max);
    r[1] = rng.uniform(cfg.bus_time_min, cfg.bus_time_max);
    r[2] = rng.uniform(cfg.bus_access_min, cfg.bus_access_max);
    r[3] = rng.uniform(cfg.bus_egress_min, cfg.bus_egress_max);
    r[4] = rng.uniform(cfg.taxi_cost_min, cfg.taxi_cost_max);
    r[5] = rng.uniform(cfg.taxi_time_min, cfg.taxi_time_max);
    r[6] = rng.uniform(cfg.taxi_access_min, cfg.taxi_access_max);
    r[7] = rng.uniform(cfg.taxi_egress_min, cfg.taxi_egress_max);
    choice[i] = static_cast<signed char>(synthetic_true_choice(
        cfg, std::span<const double>(r, 4), std::span<const double>(r + 4, 4), rng));
  }

  Dataset out;
  out.alternatives = synthetic_schema();
  out.provenance.source = "synthetic";
  out.provenance.synthetic = cfg;
  GenerationStats st;
  st.n_candidates = n;
  st.seed = cfg.seed;
  for (int i = 0; i < n; ++i) {
    const double* r = vars.data() + static_cast<size_t>(i) * 8;
    const bool bus_bad = r[2] > cfg.bus_access_cap;
    const bool taxi_bad = r[4] > cfg.taxi_cost_cap;
    if (bus_bad) ++st.bus_infeasible;
    if (taxi_bad) ++st.taxi_infeasible;
    if (bus_bad && taxi_bad) {
      ++st.both_infeasible;
      continue;
    }
    ++st.n_kept;
    out.chosen.push_back(choice[i]);
    out.values.insert(out.values.end(), r, r + 8);
  }
  if (stats) *stats = st;
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset file '" + path + "' is empty");
  const auto header = split_line(line);
  if (header.empty() || header[0] != "choice")
    throw std::invalid_argument("dataset header must start with a 'choice' column");

  AlternativeSet alts;
  std::vector<std::pair<int, int>> column_target;  // (alt, var) per data column
  for (size_t c = 1; c < header.size(); ++c) {
    const std::string& name = header[c];
    auto colon = name.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == name.size())
      throw std::invalid_argument("column '" + name + "' is not of the form <alternative>:<variable>");
    std::string alt = name.substr(0, colon);
    std::string var = name.substr(colon + 1);
    int ai = alts.alt_index(alt);
    if (ai < 0) {
      ai = alts.alternative_count();
      alts.names.push_back(alt);
      alts.variables.emplace_back();
    }
    if (alts.var_index(ai, var) >= 0)
      throw std::invalid_argument("duplicate column '" + name + "'");
    alts.variables[ai].push_back(var);
    column_target.emplace_back(ai, static_cast<int>(alts.variables[ai].size()) - 1);
  }
  alts.validate();

  Dataset data;
  data.alternatives = alts;
  data.provenance.source = path;
  const int w = alts.total_variable_count();
  int row_no = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_no;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("row " + std::to_string(row_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    int ch = alts.alt_index(cells[0]);
    if (ch < 0)
      throw std::invalid_argument("row " + std::to_string(row_no) + ", column 'choice': unknown alternative '" +
                                  cells[0] + "'");
    std::vector<double> row(w, 0.0);
    for (size_t c = 1; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty())
        throw std::invalid_argument("row " + std::to_string(row_no) + ", column '" + header[c] +
                                    "': missing value");
      const char* begin = cell.c_str();
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end != begin + cell.size() || !std::isfinite(v))
        throw std::invalid_argument("row " + std::to_string(row_no) + ", column '" + header[c] +
                                    "': cannot parse number '" + cell + "'");
      auto [ai, vi] = column_target[c - 1];
      row[alts.offset(ai) + vi] = v;
    }
    data.chosen.push_back(ch);
    data.values.insert(data.values.end(), row.begin(), row.end());
  }
  return data;
}

Dataset load_csv(const std::string& path, const AlternativeSet& expected) {
  Dataset d = load_csv(path);
  if (!(d.alternatives == expected))
    throw std::invalid_argument("dataset schema in '" + path + "' does not match the expected schema");
  return d;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write dataset file '" + path + "'");
  out << "choice";
  const auto& alts = data.alternatives;
  for (int i = 0; i < alts.alternative_count(); ++i)
    for (const auto& v : alts.variables[i]) out << ',' << alts.names[i] << ':' << v;
  out << '\n';
  for (int obs = 0; obs < data.observation_count(); ++obs) {
    out << alts.names[data.chosen[obs]];
    auto r = data.row(obs);
    for (double v : r) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

namespace {

// Gaussian elimination with partial pivoting; a is n x n row-major.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300)
      throw std::invalid_argument("vif: underdetermined regression system");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      std::swap(b[pivot], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = acc / a[r * n + r];
  }
  return x;
}

}  // namespace

std::vector<VifEntry> vif(const Dataset& data, int alt) {
  const int nv = data.alternatives.variable_count(alt);
  const int n = data.observation_count();
  if (nv < 2) throw std::invalid_argument("vif: need at least two variables for alternative '" +
                                          data.alternatives.names[alt] + "'");
  if (n <= nv) throw std::invalid_argument("vif: need more observations than variables");

  std::vector<VifEntry> report;
  report.reserve(nv);
  for (int target = 0; target < nv; ++target) {
    const int p = nv;  // intercept + other variables
    std::vector<double> gram(p * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    double sy = 0.0, syy = 0.0;
    std::vector<double> xrow(p);
    for (int obs = 0; obs < n; ++obs) {
      auto vals = data.obs_values(obs, alt);
      double y = vals[target];
      xrow[0] = 1.0;
      int k = 1;
      for (int v = 0; v < nv; ++v)
        if (v != target) xrow[k++] = vals[v];
      for (int i = 0; i < p; ++i) {
        rhs[i] += xrow[i] * y;
        for (int j = 0; j < p; ++j) gram[i * p + j] += xrow[i] * xrow[j];
      }
      sy += y;
      syy += y * y;
    }
    for (int i = 0; i < p; ++i) gram[i * p + i] += 1e-10;
    const auto beta = solve_linear(gram, rhs);

    // SSR computed in a second pass to avoid catastrophic cancellation.
    double ssr = 0.0;
    for (int obs = 0; obs < n; ++obs) {
      auto vals = data.obs_values(obs, alt);
      double pred = beta[0];
      int k = 1;
      for (int v = 0; v < nv; ++v)
        if (v != target) pred += beta[k++] * vals[v];
      double resid = vals[target] - pred;
      ssr += resid * resid;
    }
    double sst = syy - sy * sy / n;
    VifEntry e;
    e.variable = data.alternatives.variables[alt][target];
    if (sst <= 0.0) {
      e.r2 = 1.0;
    } else {
      e.r2 = 1.0 - ssr / sst;
    }
    if (e.r2 >= 1.0 - 1e-12) {
      e.vif = std::numeric_limits<double>::infinity();
    } else {
      e.vif = 1.0 / (1.0 - e.r2);
    }
    e.acceptable = e.vif < 10.0;
    report.push_back(std::move(e));
  }
  return report;
}

}  // namespace gaunet
