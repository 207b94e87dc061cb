#pragma once

#include <Eigen/Core>

#include "optreat/bspline.hpp"
#include "optreat/sample.hpp"

namespace optreat {

// Least-squares fit of the outcome on treatment-interacted B-spline bases,
//   y_i = d_i psi1(x_i)' beta1 + (1 - d_i) psi0(x_i)' beta0 + u_i.
// Because each row loads only one block, the fit decouples into one
// regression per arm; the Gram matrix B'B is block diagonal accordingly.
// The fit keeps the training covariates so covariance and bootstrap
// computations can rebuild design rows on demand.
struct SieveFit {
  Eigen::VectorXd beta1;
  Eigen::VectorXd beta0;
  BasisSpec spec1;
  BasisSpec spec0;
  Eigen::VectorXd residuals;  // u_i = y_i - mu_hat(x_i, d_i), aligned with rows
  Eigen::MatrixXd gram;       // (K1+K0) x (K1+K0), B'B
  Eigen::MatrixXd x;          // training covariates
  Eigen::VectorXi d;          // training treatment indicators
  int n = 0;

  int k1() const { return static_cast<int>(beta1.size()); }
  int k0() const { return static_cast<int>(beta0.size()); }

  // Conditional-mean prediction. Points outside the fitted domain are clamped
  // componentwise; *extrapolated reports whether clamping occurred.
  double mu(const Eigen::Ref<const Eigen::VectorXd>& point, int arm,
            bool* extrapolated = nullptr) const;

  // CATE estimate h_hat(x) = mu(x,1) - mu(x,0).
  double cate_at(const Eigen::Ref<const Eigen::VectorXd>& point,
                 bool* extrapolated = nullptr) const;
};

// Asymptotic covariance of sqrt(n) (beta_hat - beta):
//   Omega = n (B'B)^{-1} (sum_i u_i^2 b_i b_i') (B'B)^{-1}.
// A functional standard error is sqrt(delta' Omega delta / n).
struct RobustCovariance {
  Eigen::MatrixXd omega;
};

// Linear-probability sieve fit of treatment status on the covariates.
// Fitted values may fall outside [0,1]; callers mask such observations.
struct PropensityFit {
  Eigen::VectorXd coefficients;
  BasisSpec spec;
};

// Default per-arm interior-knot rule: max(1, round(n_arm^(1/(2*3+dim)))) + 1
// with cubic degree. A deliberately undersmoothed stand-in for data-driven
// dimension selection; overridable everywhere it is used.
int default_interior_knots(int n_arm, int dim);

SieveFit fit_sieve(const Sample& sample, const BasisSpec& spec1, const BasisSpec& spec0);

double predict_mu(const SieveFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x, int arm);

double cate(const SieveFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);

RobustCovariance robust_covariance(const SieveFit& fit);

PropensityFit fit_propensity(const Sample& sample, const BasisSpec& spec);

double predict_propensity(const PropensityFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);

// true iff p_hat(x_i) lies strictly inside (0,1); endpoints are excluded so
// the analytic variance never divides by zero. Throws if every entry is false.
Eigen::Array<bool, Eigen::Dynamic, 1> propensity_keep_mask(const PropensityFit& fit,
                                                           const Sample& sample);

}  // namespace optreat
