#ifndef GAUNET_DATA_HPP
#define GAUNET_DATA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaunet/utility.hpp"

namespace gaunet {

// Uniform sampling ranges and feasibility caps for the two-mode synthetic
// generator. Feasibility is a hard rule: an alternative whose cap is exceeded
// leaves the choice set entirely.
struct SyntheticConfig {
  int n_points = 10000;
  double coef_cost = -0.5;
  double coef_time = -0.2;
  double coef_access = -0.3;
  double coef_egress = -0.4;
  double bus_access_cap = 4.0;
  double taxi_cost_cap = 20.0;
  double bus_cost_min = 2, bus_cost_max = 6;
  double bus_time_min = 15, bus_time_max = 60;
  double bus_access_min = 2, bus_access_max = 10;
  double bus_egress_min = 2, bus_egress_max = 10;
  double taxi_cost_min = 10, taxi_cost_max = 35;
  double taxi_time_min = 10, taxi_time_max = 20;
  double taxi_access_min = 0, taxi_access_max = 2;
  double taxi_egress_min = 0, taxi_egress_max = 2;
  double gumbel_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Provenance {
  std::string source;
  std::optional<SyntheticConfig> synthetic;
};

// Observations in a flat row-major block: row r holds every alternative's
// variables at offset(alt) + var. Immutable after construction in normal use.
struct Dataset {
  AlternativeSet alternatives;
  std::vector<int> chosen;
  std::vector<double> values;
  Provenance provenance;

  int observation_count() const { return static_cast<int>(chosen.size()); }
  int row_width() const { return alternatives.total_variable_count(); }

  double value(int obs, int alt, int var) const {
    return values[static_cast<size_t>(obs) * row_width() + alternatives.offset(alt) + var];
  }
  double& value(int obs, int alt, int var) {
    return values[static_cast<size_t>(obs) * row_width() + alternatives.offset(alt) + var];
  }
  std::span<const double> obs_values(int obs, int alt) const {
    return std::span<const double>(values)
        .subspan(static_cast<size_t>(obs) * row_width() + alternatives.offset(alt),
                 alternatives.variable_count(alt));
  }
  std::span<const double> row(int obs) const {
    return std::span<const double>(values).subspan(static_cast<size_t>(obs) * row_width(), row_width());
  }

  Dataset subset(std::span<const int> obs_indices) const;
  void validate() const;
};

// Per-column z-score transform. Columns follow the dataset layout; a column
// with zero variance keeps stdev 1 so the transform maps it to all zeros.
// min/max of the fitting split are kept for curve and importance grids.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::uint8_t> zero_variance;

  int width() const { return static_cast<int>(mean.size()); }
  double transform_value(int col, double x) const { return (x - mean[col]) / stdev[col]; }
  double inverse_value(int col, double z) const { return z * stdev[col] + mean[col]; }
  bool identity() const { return mean.empty(); }
};

Standardizer fit_standardizer(const Dataset& data, std::span<const int> fit_on);
Dataset transform(const Standardizer& st, const Dataset& data);

struct GenerationStats {
  long n_candidates = 0;
  long n_kept = 0;
  long bus_infeasible = 0;
  long taxi_infeasible = 0;
  long both_infeasible = 0;
  std::uint64_t seed = 0;
};

AlternativeSet synthetic_schema();
Dataset generate_synthetic(const SyntheticConfig& cfg, GenerationStats* stats = nullptr);

// True-model choice for one candidate row under the generator's rules:
// 0 = bus, 1 = taxi, -1 = no feasible alternative. Used both at generation
// time and when policy sweeps relabel shifted data.
int synthetic_true_choice(const SyntheticConfig& cfg, std::span<const double> bus_vars,
                          std::span<const double> taxi_vars, Rng& rng);

// Same draw, reporting both the constrained choice and the cap-free utility
// race (policy sweeps fall back to the latter when no alternative is
// feasible).
struct TrueChoice {
  int constrained = -1;
  int unconstrained = 0;
};
TrueChoice synthetic_true_choice_detail(const SyntheticConfig& cfg, std::span<const double> bus_vars,
                                        std::span<const double> taxi_vars, Rng& rng);

// CSV contract: header `choice,<alt>:<var>,...`; UTF-8, comma separated,
// '.' decimal point, values written with up to 17 significant digits.
Dataset load_csv(const std::string& path);
Dataset load_csv(const std::string& path, const AlternativeSet& expected);
void write_csv(const Dataset& data, const std::string& path);

struct VifEntry {
  std::string variable;
  double r2 = 0.0;
  double vif = 1.0;      // +inf when r2 == 1 within 1e-12
  bool acceptable = true;  // vif < 10
};

// OLS of each variable on the alternative's remaining variables plus an
// intercept; normal equations with a 1e-10 ridge jitter for rank safety.
std::vector<VifEntry> vif(const Dataset& data, int alt);

}  // namespace gaunet

#endif  // GAUNET_DATA_HPP
