#include "optreat/functionals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "optreat/errors.hpp"
#include "optreat/qmc.hpp"
#include "optreat/rng.hpp"

namespace optreat {

double welfare_known_f(const SieveFit& fit, const TargetDistribution& dist, int m_points,
                       int* extrapolated) {
  int clamped = 0;
  const double value = expect_under(
      [&fit, &clamped](const Eigen::Ref<const Eigen::VectorXd>& x) {
        bool moved = false;
        const double h = fit.cate_at(x, &moved);
        clamped += moved ? 1 : 0;
        return std::max(h, 0.0);
      },
      dist, m_points);
  if (extrapolated) *extrapolated = clamped;
  return value;
}

double welfare_sample_mean(const SieveFit& fit, const Sample& sample) {
  double sum = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    sum += std::max(fit.cate_at(sample.x.row(i).transpose()), 0.0);
  }
  return sum / sample.n();
}

double value_known_f(const SieveFit& fit, const ValueWeight& weight,
                     const TargetDistribution& dist, int m_points, int* extrapolated) {
  int clamped = 0;
  const double value = expect_under(
      [&fit, &weight, &clamped](const Eigen::Ref<const Eigen::VectorXd>& x) {
        bool moved = false;
        const double h = fit.cate_at(x, &moved);
        clamped += moved ? 1 : 0;
        return (h >= 0.0) ? weight.v0(x) : 0.0;
      },
      dist, m_points);
  if (extrapolated) *extrapolated = clamped;
  return value;
}

double value_sample_mean(const SieveFit& fit, const ValueWeight& weight, const Sample& sample) {
  double sum = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    const auto xi = sample.x.row(i).transpose();
    if (fit.cate_at(xi) >= 0.0) sum += weight.v0(xi);
  }
  return sum / sample.n();
}

double var_welfare_analytic(const SieveFit& fit, const PropensityFit& pfit, const Sample& sample,
                            const DensityFn& lambda, WelfareVarianceMode mode,
                            int* propensity_dropped) {
  const auto mask = propensity_keep_mask(pfit, sample);
  const int kept = static_cast<int>(mask.count());
  if (kept < 2) {
    throw DegenerateTrimError("var_welfare_analytic: fewer than two observations kept");
  }
  if (propensity_dropped) *propensity_dropped = sample.n() - kept;

  double score_sum = 0.0;
  double relu_sum = 0.0;
  double relu_sq_sum = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    if (!mask[i]) continue;
    const auto xi = sample.x.row(i).transpose();
    const double h = fit.cate_at(xi);
    const double u = fit.residuals[i];
    if (h >= 0.0) {
      const double lam = (mode == WelfareVarianceMode::sample_f) ? 1.0 : lambda(xi);
      const double p = predict_propensity(pfit, xi);
      score_sum += lam * lam * u * u / (p * (1.0 - p));
    }
    const double relu = std::max(h, 0.0);
    relu_sum += relu;
    relu_sq_sum += relu * relu;
  }

  double sigma2 = score_sum / kept;
  if (mode == WelfareVarianceMode::sample_f) {
    const double mean = relu_sum / kept;
    sigma2 += relu_sq_sum / kept - mean * mean;
  }
  return sigma2;
}

DerivVector deriv_welfare_sieve(const SieveFit& fit, const TargetDistribution& dist,
                                int m_points) {
  const int k1 = fit.k1();
  const int k0 = fit.k0();
  DerivVector out;
  out.k1 = k1;
  out.delta = Eigen::VectorXd::Zero(k1 + k0);

  SobolStream stream(dist.support.dim());
  Eigen::VectorXd u(dist.support.dim());
  Eigen::VectorXd x(dist.support.dim());
  const Eigen::VectorXd width = dist.support.upper - dist.support.lower;
  const double cell = dist.support.volume() / m_points;
  TensorWindow w;
  for (int j = 0; j < m_points; ++j) {
    stream.next(u.data());
    x = dist.support.lower.array() + width.array() * u.array();
    if (fit.cate_at(x) < 0.0) continue;
    const double weight = dist.pdf(x) * cell;
    const Eigen::VectorXd x1 = fit.spec1.domain.clamp(x);
    eval_tensor_window(fit.spec1, x1, w);
    window_axpy(w, weight, out.delta.data());
    const Eigen::VectorXd x0 = fit.spec0.domain.clamp(x);
    eval_tensor_window(fit.spec0, x0, w);
    window_axpy(w, -weight, out.delta.data() + k1);
  }
  return out;
}

DerivVector deriv_welfare_sample(const SieveFit& fit, const Sample& sample) {
  const int k1 = fit.k1();
  const int k0 = fit.k0();
  DerivVector out;
  out.k1 = k1;
  out.delta = Eigen::VectorXd::Zero(k1 + k0);
  TensorWindow w;
  const double weight = 1.0 / sample.n();
  for (int i = 0; i < sample.n(); ++i) {
    const auto xi = sample.x.row(i).transpose();
    if (fit.cate_at(xi) < 0.0) continue;
    eval_tensor_window(fit.spec1, fit.spec1.domain.clamp(xi), w);
    window_axpy(w, weight, out.delta.data());
    eval_tensor_window(fit.spec0, fit.spec0.domain.clamp(xi), w);
    window_axpy(w, -weight, out.delta.data() + k1);
  }
  return out;
}

DerivVector band_derivative(const LevelFn& level, const BasisSpec& spec1, const BasisSpec& spec0,
                            const ValueWeight& weight, const DensityFn& density,
                            const Rect& support, double eps, int m_points, int* band_hits) {
  if (!(eps > 0.0)) throw ConfigError("band_derivative: eps must be positive");
  const int k1 = spec1.basis_count();
  const int k0 = spec0.basis_count();
  DerivVector out;
  out.k1 = k1;
  out.delta = Eigen::VectorXd::Zero(k1 + k0);

  SobolStream stream(support.dim());
  Eigen::VectorXd u(support.dim());
  Eigen::VectorXd x(support.dim());
  const Eigen::VectorXd width = support.upper - support.lower;
  const double cell = support.volume() / (2.0 * eps * m_points);
  TensorWindow w;
  int hits = 0;
  for (int j = 0; j < m_points; ++j) {
    stream.next(u.data());
    x = support.lower.array() + width.array() * u.array();
    const double h = level(x);
    if (!(h > -eps && h < eps)) continue;
    ++hits;
    const double f = density(x);
    const double v = weight.v0(x);
    if (!std::isfinite(f) || !std::isfinite(v)) {
      throw IntegrandError("band_derivative: non-finite density or weight inside the band");
    }
    const double scale = f * v * cell;
    eval_tensor_window(spec1, spec1.domain.clamp(x), w);
    window_axpy(w, scale, out.delta.data());
    eval_tensor_window(spec0, spec0.domain.clamp(x), w);
    window_axpy(w, -scale, out.delta.data() + k1);
  }
  if (band_hits) *band_hits = hits;
  if (hits == 0) {
    throw BandEmptyError("band_derivative: no integration point fell in the |h| < " +
                         std::to_string(eps) + " band (0 of " + std::to_string(m_points) + ")");
  }
  return out;
}

DerivVector deriv_value_band(const SieveFit& fit, const ValueWeight& weight,
                             const DensityFn& density, const Rect& support, double eps,
                             int m_points, int* band_hits) {
  return band_derivative(
      [&fit](const Eigen::Ref<const Eigen::VectorXd>& x) { return fit.cate_at(x); }, fit.spec1,
      fit.spec0, weight, density, support, eps, m_points, band_hits);
}

double var_sieve(const DerivVector& delta, const RobustCovariance& omega) {
  if (delta.delta.size() != omega.omega.rows()) {
    throw DimensionError("var_sieve: derivative length " + std::to_string(delta.delta.size()) +
                         " does not match covariance size " + std::to_string(omega.omega.rows()));
  }
  return delta.delta.dot(omega.omega * delta.delta);
}

std::pair<double, double> confidence_interval(double point, double sigma, int n, double critical) {
  const double half = critical * sigma / std::sqrt(static_cast<double>(n));
  return {point - half, point + half};
}

double bootstrap_critical_value(const SieveFit& fit, const DerivVector& delta, double sigma_v,
                                int bootstrap_count, std::uint64_t seed) {
  if (bootstrap_count < 100) {
    throw ConfigError("bootstrap_critical_value: needs at least 100 replicates");
  }
  if (delta.delta.size() != fit.k1() + fit.k0()) {
    throw DimensionError("bootstrap_critical_value: derivative length mismatch");
  }
  if (delta.delta.isZero(0.0)) return 0.0;

  // weights = (B'B/n)^{-1} delta, then per-observation score loadings
  // c_i = (b_i' weights) u_i / (sqrt(n) sigma_v), so Z* = sum_i c_i omega_i.
  const Eigen::MatrixXd scaled_gram = fit.gram / static_cast<double>(fit.n);
  const Eigen::VectorXd weights = scaled_gram.ldlt().solve(delta.delta);
  const double denom = std::sqrt(static_cast<double>(fit.n)) * sigma_v;

  Eigen::VectorXd loadings(fit.n);
  TensorWindow w;
  for (int i = 0; i < fit.n; ++i) {
    double dot;
    if (fit.d[i] == 1) {
      eval_tensor_window(fit.spec1, fit.x.row(i).transpose(), w);
      dot = window_dot(w, weights.data());
    } else {
      eval_tensor_window(fit.spec0, fit.x.row(i).transpose(), w);
      dot = window_dot(w, weights.data() + fit.k1());
    }
    loadings[i] = dot * fit.residuals[i] / denom;
  }

  std::vector<double> stats(bootstrap_count);
  for (int b = 0; b < bootstrap_count; ++b) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(b), 0x626f6f74ULL);
    double z = 0.0;
    for (int i = 0; i < fit.n; ++i) z += loadings[i] * rng.normal();
    stats[b] = std::fabs(z);
  }
  std::sort(stats.begin(), stats.end());
  const int order = static_cast<int>(std::ceil(0.95 * bootstrap_count));  // 1-based
  return stats[order - 1];
}

FunctionalEstimate make_estimate(FunctionalKind kind, double point, double sigma, int n,
                                 double critical, EstimateMeta meta) {
  FunctionalEstimate est;
  est.kind = kind;
  est.point = point;
  est.n = n;
  est.critical = critical;
  est.se = sigma / std::sqrt(static_cast<double>(n));
  est.ci_low = point - critical * est.se;
  est.ci_high = point + critical * est.se;
  est.meta = meta;
  return est;
}

}  // namespace optreat
