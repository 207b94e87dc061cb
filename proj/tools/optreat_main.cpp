// Command-line front end: Monte Carlo simulation grids, estimation on CSV
// data, and table rendering. All randomness flows from --seed; identical
// command lines produce byte-identical outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optreat/defaults.hpp"
#include "optreat/density.hpp"
#include "optreat/dgp.hpp"
#include "optreat/errors.hpp"
#include "optreat/functionals.hpp"
#include "optreat/montecarlo.hpp"
#include "optreat/sample.hpp"
#include "optreat/sieve.hpp"

namespace {

using nlohmann::ordered_json;
using namespace optreat;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

struct SimulateArgs {
  std::string models = "M1";
  std::string ns = "1500,3000,6000";
  int reps = 500;
  std::uint64_t seed = 1;
  std::string variance = "analytic";
  std::string estimator = "auto";
  std::string trim = "auto";
  int m_points = defaults::kPointBudget;
  int m_band = defaults::kBandBudget;
  double eps = defaults::kBandEps;
  int degree = defaults::kDegree;
  int interior1 = -1;
  int interior0 = -1;
  int interior_prop = -1;
  int workers = 1;
  std::string out_path;
};

int cmd_simulate(const SimulateArgs& args) {
  MCConfig config;
  config.models = split_list(args.models);
  for (const auto& id : config.models) make_dgp(id);  // validate ids up front
  config.sample_sizes = parse_int_list(args.ns, "--n");
  if (args.reps < 1) throw ConfigError("--reps must be >= 1");
  config.reps = args.reps;
  config.seed = args.seed;
  if (args.variance == "analytic") {
    config.variance = VarianceKind::analytic;
  } else if (args.variance == "sieve") {
    config.variance = VarianceKind::sieve;
  } else {
    throw ConfigError("--variance must be 'analytic' or 'sieve'");
  }
  if (args.estimator == "auto") {
    config.estimator = EstimatorKind::auto_select;
  } else if (args.estimator == "welfare-known") {
    config.estimator = EstimatorKind::welfare_known_f;
  } else if (args.estimator == "welfare-sample") {
    config.estimator = EstimatorKind::welfare_sample;
  } else if (args.estimator == "value-known") {
    config.estimator = EstimatorKind::value_known_f;
  } else if (args.estimator == "value-sample") {
    config.estimator = EstimatorKind::value_sample;
  } else {
    throw ConfigError("--estimator must be auto, welfare-known, welfare-sample, value-known or "
                      "value-sample");
  }
  if (args.trim == "auto") {
    config.trim = TrimPolicy::auto_select;
  } else if (args.trim == "on") {
    config.trim = TrimPolicy::on;
  } else if (args.trim == "off") {
    config.trim = TrimPolicy::off;
  } else {
    throw ConfigError("--trim must be auto, on or off");
  }
  config.tuning.m_points = args.m_points;
  config.tuning.m_band = args.m_band;
  config.tuning.eps = args.eps;
  config.tuning.degree = args.degree;
  config.tuning.interior1 = args.interior1;
  config.tuning.interior0 = args.interior0;
  config.tuning.interior_prop = args.interior_prop;
  config.workers = args.workers;

  const std::vector<MCRow> rows = run_grid(config);
  std::cout << render_table(rows);
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    if (!out) throw ConfigError("cannot write '" + args.out_path + "'");
    write_rows_csv(rows, out);
  }
  return 0;
}

struct EstimateArgs {
  std::string data_path;
  std::string outcome_col;
  std::string treat_col;
  std::string covar_cols;
  std::string functional = "welfare";
  double cost = 0.0;
  std::string trim = "common-support";
  double iota = defaults::kIota;
  double eps = 0.0;  // 0 means "derive from iota"
  double kde_scale = defaults::kKdeScale;
  int m_band = defaults::kBandBudget;
  int degree = defaults::kDegree;
  int interior1 = -1;
  int interior0 = -1;
  int interior_prop = -1;
  int bootstrap = 0;
  std::uint64_t seed = 1;
  std::string knots = "quantile";
  std::string out_path;
  bool eps_given = false;
  bool iota_given = false;
};

// Covariate rows of one arm, for quantile knot placement.
Eigen::MatrixXd arm_rows(const Sample& sample, int arm) {
  const int count = (arm == 1) ? sample.n_treated() : sample.n_control();
  Eigen::MatrixXd out(count, sample.dim());
  int r = 0;
  for (int i = 0; i < sample.n(); ++i) {
    if (sample.d[i] == arm) out.row(r++) = sample.x.row(i);
  }
  return out;
}

int cmd_estimate(const EstimateArgs& args) {
  if (args.eps_given && args.iota_given) {
    throw ConfigError("--eps and --iota are mutually exclusive");
  }
  if (args.functional != "welfare" && args.functional != "share") {
    throw ConfigError("--functional must be 'welfare' or 'share'");
  }
  if (args.bootstrap != 0 && args.functional != "share") {
    throw ConfigError("--bootstrap applies to the share functional only");
  }

  Sample full = read_csv_sample(args.data_path, args.outcome_col, args.treat_col,
                                split_list(args.covar_cols));
  if (args.cost != 0.0) {
    for (int i = 0; i < full.n(); ++i) {
      if (full.d[i] == 1) full.y[i] -= args.cost;
    }
  }

  Sample sample = full;
  int trim_dropped = 0;
  if (args.trim == "common-support") {
    auto [trimmed, kept] = trim_common_support(full);
    trim_dropped = full.n() - static_cast<int>(kept.size());
    sample = std::move(trimmed);
  } else if (args.trim != "none") {
    throw ConfigError("--trim must be 'common-support' or 'none'");
  }

  const int interior1 = (args.interior1 >= 0)
                            ? args.interior1
                            : default_interior_knots(sample.n_treated(), sample.dim());
  const int interior0 = (args.interior0 >= 0)
                            ? args.interior0
                            : default_interior_knots(sample.n_control(), sample.dim());
  const bool quantile_knots = args.knots == "quantile";
  if (!quantile_knots && args.knots != "uniform") {
    throw ConfigError("--knots must be 'quantile' or 'uniform'");
  }
  const std::vector<int> int1(sample.dim(), interior1);
  const std::vector<int> int0(sample.dim(), interior0);
  const BasisSpec spec1 =
      quantile_knots ? make_basis_quantile(sample.domain, args.degree, int1, arm_rows(sample, 1))
                     : make_basis(sample.domain, args.degree, int1);
  const BasisSpec spec0 =
      quantile_knots ? make_basis_quantile(sample.domain, args.degree, int0, arm_rows(sample, 0))
                     : make_basis(sample.domain, args.degree, int0);
  const SieveFit fit = fit_sieve(sample, spec1, spec0);

  EstimateMeta meta;
  meta.k1 = fit.k1();
  meta.k0 = fit.k0();
  meta.trim_dropped = trim_dropped;

  double point = 0.0;
  double sigma = 0.0;
  double critical = defaults::kCritical;
  FunctionalKind kind;

  for (int i = 0; i < sample.n(); ++i) {
    bool clamped = false;
    fit.cate_at(sample.x.row(i).transpose(), &clamped);
    meta.extrapolated += clamped ? 1 : 0;
  }

  if (args.functional == "welfare") {
    kind = FunctionalKind::welfare_sample;
    point = welfare_sample_mean(fit, sample);
    const int interior_prop = (args.interior_prop >= 0)
                                  ? args.interior_prop
                                  : default_interior_knots(sample.n(), sample.dim());
    const std::vector<int> intp(sample.dim(), interior_prop);
    const BasisSpec pspec =
        quantile_knots ? make_basis_quantile(sample.domain, args.degree, intp, sample.x)
                       : make_basis(sample.domain, args.degree, intp);
    const PropensityFit pfit = fit_propensity(sample, pspec);
    const DensityFn unit = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 1.0; };
    sigma = std::sqrt(var_welfare_analytic(fit, pfit, sample, unit,
                                           WelfareVarianceMode::sample_f,
                                           &meta.propensity_dropped));
  } else {
    kind = FunctionalKind::value_sample;
    const ValueWeight share = ValueWeight::ones();
    point = value_sample_mean(fit, share, sample);

    double eps = args.eps;
    double iota_used = 0.0;
    if (!args.eps_given) {
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < sample.n(); ++i) {
        const double h = fit.cate_at(sample.x.row(i).transpose());
        sum += h;
        sq += h * h;
      }
      const double mean = sum / sample.n();
      const double sd = std::sqrt(std::max(sq / sample.n() - mean * mean, 0.0));
      iota_used = args.iota;
      eps = args.iota * sd;
    }
    meta.eps = eps;
    meta.iota = iota_used;
    meta.kde_scale = args.kde_scale;
    meta.m_band = args.m_band;

    const KDE kde = fit_kde(sample.x, args.kde_scale);
    try {
      const DerivVector delta = deriv_value_band(
          fit, share,
          [&kde](const Eigen::Ref<const Eigen::VectorXd>& x) { return kde_pdf(kde, x); },
          sample.domain, eps, args.m_band, &meta.band_hits);
      sigma = std::sqrt(var_sieve(delta, robust_covariance(fit)));
      if (args.bootstrap > 0) {
        critical = bootstrap_critical_value(fit, delta, sigma, args.bootstrap, args.seed);
      }
    } catch (const BandEmptyError&) {
      // If the fitted CATE never comes near zero on the data, the boundary
      // set is empty and the derivative is exactly zero; otherwise the band
      // budget was too small and the error stands.
      double min_abs = std::numeric_limits<double>::infinity();
      for (int i = 0; i < sample.n(); ++i) {
        min_abs = std::min(min_abs, std::fabs(fit.cate_at(sample.x.row(i).transpose())));
      }
      if (min_abs <= eps) throw;
      sigma = 0.0;
      meta.band_hits = 0;
    }
  }

  const FunctionalEstimate est = make_estimate(kind, point, sigma, sample.n(), critical, meta);

  ordered_json out;
  out["schema_version"] = 1;
  out["functional"] = args.functional;
  out["point"] = est.point;
  out["se"] = est.se;
  out["ci_low"] = est.ci_low;
  out["ci_high"] = est.ci_high;
  out["critical"] = est.critical;
  out["n_total"] = full.n();
  out["n_used"] = sample.n();
  out["trim"] = ordered_json{{"policy", args.trim}, {"dropped", trim_dropped}};
  ordered_json tuning;
  tuning["cost"] = args.cost;
  tuning["degree"] = args.degree;
  tuning["knots"] = args.knots;
  tuning["interior1"] = interior1;
  tuning["interior0"] = interior0;
  tuning["k1"] = fit.k1();
  tuning["k0"] = fit.k0();
  if (args.functional == "share") {
    tuning["eps"] = meta.eps;
    tuning["iota"] = meta.iota;
    tuning["kde_scale"] = args.kde_scale;
    tuning["m_band"] = args.m_band;
    tuning["bootstrap"] = args.bootstrap;
  }
  tuning["seed"] = args.seed;
  out["tuning"] = tuning;
  ordered_json diag;
  if (args.functional == "welfare") diag["propensity_dropped"] = meta.propensity_dropped;
  if (args.functional == "share") diag["band_hits"] = meta.band_hits;
  diag["extrapolated"] = meta.extrapolated;
  out["diagnostics"] = diag;

  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!args.out_path.empty()) {
    std::ofstream file(args.out_path);
    if (!file) throw ConfigError("cannot write '" + args.out_path + "'");
    file << text;
  }
  return 0;
}

int cmd_models() {
  std::printf("%-5s %-4s %-22s %-22s %-6s %-6s\n", "model", "dim", "source support", "target support",
              "sigma", "scale");
  for (const auto& id : dgp_catalog()) {
    const DGPSpec dgp = make_dgp(id);
    auto box = [](const Rect& r) {
      std::ostringstream oss;
      oss << "[" << r.lower[0] << "," << r.upper[0] << "]";
      if (r.dim() == 2) oss << "x[" << r.lower[1] << "," << r.upper[1] << "]";
      return oss.str();
    };
    std::printf("%-5s %-4d %-22s %-22s %-6g %-6g\n", dgp.id.c_str(), dgp.dim(),
                box(dgp.f0).c_str(), box(dgp.f).c_str(), dgp.noise_sd, dgp.scale);
  }
  return 0;
}

int cmd_tables(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open '" + in_path + "'");
  const std::vector<MCRow> rows = read_rows_csv(in);
  const std::string table = render_table(rows);
  std::cout << table;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write '" + out_path + "'");
    out << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Welfare and value functionals of treatment effects under first-best assignment"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run Monte Carlo simulation cells");
  simulate->add_option("--models", sim.models, "Comma-separated model ids (M1..M15)")
      ->capture_default_str();
  simulate->add_option("--n", sim.ns, "Comma-separated sample sizes")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replications per cell")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--variance", sim.variance, "Variance estimator: analytic or sieve")
      ->capture_default_str();
  simulate
      ->add_option("--estimator", sim.estimator,
                   "auto, welfare-known, welfare-sample, value-known, value-sample")
      ->capture_default_str();
  simulate->add_option("--trim", sim.trim, "Common-support trimming: auto, on, off")
      ->capture_default_str();
  simulate->add_option("--m-points", sim.m_points, "Sobol budget for point estimates")
      ->capture_default_str();
  simulate->add_option("--m-band", sim.m_band, "Sobol budget for the eps-band integral")
      ->capture_default_str();
  simulate->add_option("--eps", sim.eps, "Band half-width for the value derivative")
      ->capture_default_str();
  simulate->add_option("--degree", sim.degree, "B-spline degree")->capture_default_str();
  simulate->add_option("--interior1", sim.interior1, "Interior knots, treated arm (-1 = auto)")
      ->capture_default_str();
  simulate->add_option("--interior0", sim.interior0, "Interior knots, control arm (-1 = auto)")
      ->capture_default_str();
  simulate
      ->add_option("--interior-prop", sim.interior_prop, "Interior knots, propensity (-1 = auto)")
      ->capture_default_str();
  simulate->add_option("--workers", sim.workers, "Worker threads")->capture_default_str();
  simulate->add_option("--out", sim.out_path, "Output CSV path");

  EstimateArgs est;
  CLI::App* estimate = app.add_subcommand("estimate", "Estimate a functional on CSV data");
  estimate->add_option("--data", est.data_path, "Input CSV path")->required();
  estimate->add_option("--outcome", est.outcome_col, "Outcome column name")->required();
  estimate->add_option("--treat", est.treat_col, "Treatment column name (0/1)")->required();
  estimate->add_option("--covars", est.covar_cols, "Comma-separated covariate columns")
      ->required();
  estimate->add_option("--functional", est.functional, "welfare or share")
      ->capture_default_str();
  estimate->add_option("--cost", est.cost, "Amount subtracted from treated outcomes before fitting")
      ->capture_default_str();
  estimate->add_option("--trim", est.trim, "common-support or none")->capture_default_str();
  auto* iota_opt =
      estimate->add_option("--iota", est.iota, "Band half-width as a fraction of SD(h_hat)")
          ->capture_default_str();
  auto* eps_opt = estimate->add_option("--eps", est.eps, "Absolute band half-width");
  estimate->add_option("--kde-scale", est.kde_scale, "Kernel bandwidth scaling")
      ->capture_default_str();
  estimate->add_option("--m-band", est.m_band, "Sobol budget for the eps-band integral")
      ->capture_default_str();
  estimate->add_option("--degree", est.degree, "B-spline degree")->capture_default_str();
  estimate->add_option("--interior1", est.interior1, "Interior knots, treated arm (-1 = auto)")
      ->capture_default_str();
  estimate->add_option("--interior0", est.interior0, "Interior knots, control arm (-1 = auto)")
      ->capture_default_str();
  estimate
      ->add_option("--interior-prop", est.interior_prop, "Interior knots, propensity (-1 = auto)")
      ->capture_default_str();
  estimate->add_option("--bootstrap", est.bootstrap,
                       "Score-bootstrap replicates for the share critical value (0 = off)")
      ->capture_default_str();
  estimate->add_option("--seed", est.seed, "Seed for the bootstrap multipliers")
      ->capture_default_str();
  estimate->add_option("--knots", est.knots, "Interior knot placement: quantile or uniform")
      ->capture_default_str();
  estimate->add_option("--out", est.out_path, "Output JSON path");

  CLI::App* models = app.add_subcommand("models", "List the simulation model catalog");

  std::string tables_in, tables_out;
  CLI::App* tables = app.add_subcommand("tables", "Render a stored results CSV as a text table");
  tables->add_option("--in", tables_in, "Input CSV path")->required();
  tables->add_option("--out", tables_out, "Output text path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (estimate->parsed()) {
      est.eps_given = eps_opt->count() > 0;
      est.iota_given = iota_opt->count() > 0;
      return cmd_estimate(est);
    }
    if (models->parsed()) return cmd_models();
    if (tables->parsed()) return cmd_tables(tables_in, tables_out);
  } catch (const ConfigError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const SchemaError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
