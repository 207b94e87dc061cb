#include "optreat/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "optreat/density.hpp"
#include "optreat/errors.hpp"
#include "optreat/rng.hpp"
#include "optreat/sieve.hpp"

namespace optreat {

namespace {

int model_ordinal(const std::string& id) {
  const auto& catalog = dgp_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i] == id) return static_cast<int>(i);
  }
  throw ConfigError("model_ordinal: unknown model id '" + id + "'");
}

std::uint64_t cell_rep_seed(std::uint64_t master, const std::string& model, int n, int rep) {
  const std::uint64_t key =
      mix64(master) ^ mix64(static_cast<std::uint64_t>(model_ordinal(model)) + 1) ^
      mix64(static_cast<std::uint64_t>(n) * 0x9e3779b9ULL);
  return mix64(key + static_cast<std::uint64_t>(rep));
}

BasisSpec arm_basis(const Rect& domain, int degree, int interior_override, int n_arm) {
  const int interior =
      (interior_override >= 0) ? interior_override : default_interior_knots(n_arm, domain.dim());
  return make_basis(domain, degree, interior);
}

double sd_of_cate(const SieveFit& fit, const Sample& sample) {
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    const double h = fit.cate_at(sample.x.row(i).transpose());
    sum += h;
    sq += h * h;
  }
  const double mean = sum / sample.n();
  return std::sqrt(std::max(sq / sample.n() - mean * mean, 0.0));
}

}  // namespace

EstimatorKind resolve_estimator(EstimatorKind requested, const std::string& model_id) {
  if (requested != EstimatorKind::auto_select) return requested;
  const int ord = model_ordinal(model_id);  // 0-based
  if (ord <= 6) return EstimatorKind::welfare_known_f;
  if (ord <= 13) return EstimatorKind::welfare_sample;
  return EstimatorKind::value_known_f;
}

bool resolve_trim(TrimPolicy policy, EstimatorKind estimator) {
  if (policy != TrimPolicy::auto_select) return policy == TrimPolicy::on;
  return estimator == EstimatorKind::welfare_sample || estimator == EstimatorKind::value_sample;
}

RepResult run_replication(const DGPSpec& dgp, int n, std::uint64_t rep_seed, double true_value,
                          EstimatorKind estimator, VarianceKind variance, bool trim,
                          const Tuning& tuning) {
  RepResult res;
  try {
    Sample sample = simulate_sample(dgp, n, rep_seed);
    if (trim) {
      auto [trimmed, kept] = trim_common_support(sample);
      sample = std::move(trimmed);
    }
    const int n_used = sample.n();

    const BasisSpec spec1 =
        arm_basis(sample.domain, tuning.degree, tuning.interior1, sample.n_treated());
    const BasisSpec spec0 =
        arm_basis(sample.domain, tuning.degree, tuning.interior0, sample.n_control());
    const SieveFit fit = fit_sieve(sample, spec1, spec0);

    const TargetDistribution target = TargetDistribution::uniform(dgp.f);
    const ValueWeight weight{dgp.v0, "v0"};

    double point = 0.0;
    double sigma2 = 0.0;

    switch (estimator) {
      case EstimatorKind::welfare_known_f: {
        point = welfare_known_f(fit, target, tuning.m_points);
        if (variance == VarianceKind::analytic) {
          const BasisSpec pspec =
              arm_basis(sample.domain, tuning.degree, tuning.interior_prop, n_used);
          const PropensityFit pfit = fit_propensity(sample, pspec);
          // lambda = f/f0 for nested uniform rectangles: volume ratio on the
          // target support, zero outside.
          const double ratio = dgp.f0.volume() / dgp.f.volume();
          const Rect f_rect = dgp.f;
          const DensityFn lambda = [ratio, f_rect](const Eigen::Ref<const Eigen::VectorXd>& x) {
            return f_rect.contains(x) ? ratio : 0.0;
          };
          sigma2 = var_welfare_analytic(fit, pfit, sample, lambda, WelfareVarianceMode::known_f);
        } else {
          const DerivVector delta = deriv_welfare_sieve(fit, target, tuning.m_points);
          sigma2 = var_sieve(delta, robust_covariance(fit));
        }
        break;
      }
      case EstimatorKind::welfare_sample: {
        point = welfare_sample_mean(fit, sample);
        if (variance == VarianceKind::analytic) {
          const BasisSpec pspec =
              arm_basis(sample.domain, tuning.degree, tuning.interior_prop, n_used);
          const PropensityFit pfit = fit_propensity(sample, pspec);
          const DensityFn unit = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 1.0; };
          sigma2 = var_welfare_analytic(fit, pfit, sample, unit, WelfareVarianceMode::sample_f);
        } else {
          const DerivVector delta = deriv_welfare_sample(fit, sample);
          double sum = 0.0, sq = 0.0;
          for (int i = 0; i < sample.n(); ++i) {
            const double relu = std::max(fit.cate_at(sample.x.row(i).transpose()), 0.0);
            sum += relu;
            sq += relu * relu;
          }
          const double mean = sum / sample.n();
          sigma2 = (sq / sample.n() - mean * mean) + var_sieve(delta, robust_covariance(fit));
        }
        break;
      }
      case EstimatorKind::value_known_f: {
        if (variance == VarianceKind::analytic) {
          throw ConfigError("run_replication: the value functional has no analytic variance; "
                            "use the sieve variance");
        }
        point = dgp.scale * value_known_f(fit, weight, target, tuning.m_points);
        const ValueWeight scaled{
            [&dgp](const Eigen::Ref<const Eigen::VectorXd>& x) { return dgp.scale * dgp.v0(x); },
            "scale*v0"};
        const double eps =
            (tuning.iota > 0.0) ? tuning.iota * sd_of_cate(fit, sample) : tuning.eps;
        const DerivVector delta =
            deriv_value_band(fit, scaled, target.pdf, target.support, eps, tuning.m_band);
        sigma2 = var_sieve(delta, robust_covariance(fit));
        break;
      }
      case EstimatorKind::value_sample: {
        if (variance == VarianceKind::analytic) {
          throw ConfigError("run_replication: the value functional has no analytic variance; "
                            "use the sieve variance");
        }
        point = dgp.scale * value_sample_mean(fit, weight, sample);
        const ValueWeight scaled{
            [&dgp](const Eigen::Ref<const Eigen::VectorXd>& x) { return dgp.scale * dgp.v0(x); },
            "scale*v0"};
        const KDE kde = fit_kde(sample.x, tuning.kde_scale);
        const double eps =
            (tuning.iota > 0.0) ? tuning.iota * sd_of_cate(fit, sample) : tuning.eps;
        const DerivVector delta = deriv_value_band(
            fit, scaled,
            [&kde](const Eigen::Ref<const Eigen::VectorXd>& x) { return kde_pdf(kde, x); },
            sample.domain, eps, tuning.m_band);
        sigma2 = var_sieve(delta, robust_covariance(fit));
        break;
      }
      case EstimatorKind::auto_select:
        throw ConfigError("run_replication: estimator must be resolved before running");
    }

    const double sigma = std::sqrt(sigma2);
    const auto [lo, hi] = confidence_interval(point, sigma, n_used, tuning.critical);
    res.point = point;
    res.se = sigma / std::sqrt(static_cast<double>(n_used));
    res.hit = (true_value >= lo) && (true_value <= hi);
  } catch (const std::exception& ex) {
    res.failed = true;
    res.error = ex.what();
  }
  return res;
}

MCRow aggregate_results(const std::string& model, int n, double true_value,
                        const std::vector<RepResult>& results) {
  MCRow row;
  row.model = model;
  row.n = n;
  row.true_value = true_value;

  double sum_p = 0.0, sum_se = 0.0;
  int used = 0, hits = 0;
  for (const auto& r : results) {
    if (r.failed) {
      ++row.failures;
      continue;
    }
    ++used;
    sum_p += r.point;
    sum_se += r.se;
    hits += r.hit ? 1 : 0;
  }
  row.reps_used = used;
  if (used == 0) return row;

  const double mean_p = sum_p / used;
  const double mean_se = sum_se / used;
  double ss_p = 0.0, ss_se = 0.0;
  for (const auto& r : results) {
    if (r.failed) continue;
    ss_p += (r.point - mean_p) * (r.point - mean_p);
    ss_se += (r.se - mean_se) * (r.se - mean_se);
  }
  row.bias = mean_p - true_value;
  row.sd = (used > 1) ? std::sqrt(ss_p / (used - 1)) : 0.0;
  row.mean_se = mean_se;
  row.sd_se = (used > 1) ? std::sqrt(ss_se / (used - 1)) : 0.0;
  row.coverage = static_cast<double>(hits) / used;
  return row;
}

MCRow run_cell(const DGPSpec& dgp, int n, int reps, std::uint64_t seed, const MCConfig& config) {
  if (reps < 1) throw ConfigError("run_cell: reps must be >= 1");
  const EstimatorKind estimator = resolve_estimator(config.estimator, dgp.id);
  const bool trim = resolve_trim(config.trim, estimator);
  const TrueFunctionalKind truth_kind = (estimator == EstimatorKind::value_known_f ||
                                         estimator == EstimatorKind::value_sample)
                                            ? TrueFunctionalKind::value
                                            : TrueFunctionalKind::welfare;
  const double true_value = true_functional(dgp, truth_kind, config.tuning.m_points);

  std::vector<RepResult> results(reps);
  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) {
      results[r] = run_replication(dgp, n, cell_rep_seed(seed, dgp.id, n, r), true_value,
                                   estimator, config.variance, trim, config.tuning);
    }
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= reps) return;
        results[r] = run_replication(dgp, n, cell_rep_seed(seed, dgp.id, n, r), true_value,
                                     estimator, config.variance, trim, config.tuning);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MCRow row = aggregate_results(dgp.id, n, true_value, results);
  if (row.failures > config.max_failure_rate * reps) {
    std::string first_error = "(none)";
    for (const auto& r : results) {
      if (r.failed) {
        first_error = r.error;
        break;
      }
    }
    std::ostringstream oss;
    oss << "run_cell " << dgp.id << " n=" << n << ": " << row.failures << "/" << reps
        << " replications failed (limit " << config.max_failure_rate * 100
        << "%); first failure: " << first_error;
    throw DegenerateSampleError(oss.str());
  }
  return row;
}

std::vector<MCRow> run_grid(const MCConfig& config) {
  if (config.models.empty()) throw ConfigError("run_grid: no models requested");
  if (config.sample_sizes.empty()) throw ConfigError("run_grid: no sample sizes requested");
  std::vector<MCRow> rows;
  rows.reserve(config.models.size() * config.sample_sizes.size());
  for (const auto& id : config.models) {
    const DGPSpec dgp = make_dgp(id);
    for (int n : config.sample_sizes) {
      rows.push_back(run_cell(dgp, n, config.reps, config.seed, config));
    }
  }
  return rows;
}

void write_rows_csv(const std::vector<MCRow>& rows, std::ostream& out) {
  out << "model,n,true,bias,sd,se,sd_se,coverage,failures\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.model << ',' << r.n;
    for (double v : {r.true_value, r.bias, r.sd, r.mean_se, r.sd_se, r.coverage}) {
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      out << ',' << buf;
    }
    out << ',' << r.failures << '\n';
  }
}

std::vector<MCRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("read_rows_csv: empty input");
  // tolerate a trailing \r
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "model,n,true,bias,sd,se,sd_se,coverage,failures") {
    throw SchemaError("read_rows_csv: unexpected header '" + line + "'");
  }
  std::vector<MCRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) {
      throw ParseError("read_rows_csv: line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected 9");
    }
    try {
      MCRow r;
      r.model = fields[0];
      r.n = std::stoi(fields[1]);
      r.true_value = std::stod(fields[2]);
      r.bias = std::stod(fields[3]);
      r.sd = std::stod(fields[4]);
      r.mean_se = std::stod(fields[5]);
      r.sd_se = std::stod(fields[6]);
      r.coverage = std::stod(fields[7]);
      r.failures = std::stoi(fields[8]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("read_rows_csv: malformed numeric field at line " +
                       std::to_string(line_no));
    }
  }
  return rows;
}

std::string render_table(const std::vector<MCRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-6s %6s %9s %9s %9s %9s %9s %9s %9s\n", "model", "n", "true",
                "bias", "sd", "se", "sd_se", "coverage", "failures");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-6s %6d %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f %9d\n",
                  r.model.c_str(), r.n, r.true_value, r.bias, r.sd, r.mean_se, r.sd_se, r.coverage,
                  r.failures);
    out << buf;
  }
  return out.str();
}

}  // namespace optreat
