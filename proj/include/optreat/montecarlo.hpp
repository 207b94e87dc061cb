#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "optreat/defaults.hpp"
#include "optreat/dgp.hpp"
#include "optreat/functionals.hpp"

namespace optreat {

enum class EstimatorKind {
  auto_select,      // by model: M1-M7 known-f welfare, M8-M14 sample welfare, M15 known-f value
  welfare_known_f,
  welfare_sample,
  value_known_f,
  value_sample
};

enum class VarianceKind { analytic, sieve };

enum class TrimPolicy { auto_select, off, on };

// Tuning knobs shared by the replication driver and the CLI. Interior knot
// counts of -1 select the default per-arm rule.
struct Tuning {
  int m_points = defaults::kPointBudget;
  int m_band = defaults::kBandBudget;
  double eps = defaults::kBandEps;
  double iota = 0.0;  // if > 0, eps = iota * SD(h_hat over the sample)
  double kde_scale = defaults::kKdeScale;
  int degree = defaults::kDegree;
  int interior1 = -1;
  int interior0 = -1;
  int interior_prop = -1;
  double critical = defaults::kCritical;
};

struct MCConfig {
  std::vector<std::string> models;
  std::vector<int> sample_sizes;
  int reps = 500;
  std::uint64_t seed = 1;
  EstimatorKind estimator = EstimatorKind::auto_select;
  VarianceKind variance = VarianceKind::analytic;
  TrimPolicy trim = TrimPolicy::auto_select;
  Tuning tuning;
  int workers = 1;
  double max_failure_rate = 0.2;
};

struct MCRow {
  std::string model;
  int n = 0;
  double true_value = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  double sd_se = 0.0;
  double coverage = 0.0;
  int reps_used = 0;
  int failures = 0;
};

struct RepResult {
  double point = 0.0;
  double se = 0.0;
  bool hit = false;
  bool failed = false;
  std::string error;
};

// One replication: simulate, (optionally) trim, fit the sieves, estimate,
// attach SE and CI, record whether the CI covers true_value.
RepResult run_replication(const DGPSpec& dgp, int n, std::uint64_t rep_seed, double true_value,
                          EstimatorKind estimator, VarianceKind variance, bool trim,
                          const Tuning& tuning);

// Aggregates per-replication records in index order (scheduling independent).
MCRow aggregate_results(const std::string& model, int n, double true_value,
                        const std::vector<RepResult>& results);

// Runs all replications of one (model, n) cell; replication r uses the
// substream (seed, model index, n, r). Throws if the failure rate exceeds
// config.max_failure_rate.
MCRow run_cell(const DGPSpec& dgp, int n, int reps, std::uint64_t seed, const MCConfig& config);

// All (model, n) cells in catalog-then-n order; deterministic given the seed
// regardless of worker count.
std::vector<MCRow> run_grid(const MCConfig& config);

EstimatorKind resolve_estimator(EstimatorKind requested, const std::string& model_id);
bool resolve_trim(TrimPolicy policy, EstimatorKind estimator);

// CSV with columns: model,n,true,bias,sd,se,sd_se,coverage,failures.
void write_rows_csv(const std::vector<MCRow>& rows, std::ostream& out);
std::vector<MCRow> read_rows_csv(std::istream& in);

// Fixed-width text rendering of the same columns.
std::string render_table(const std::vector<MCRow>& rows);

}  // namespace optreat
