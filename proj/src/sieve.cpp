#include "optreat/sieve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "optreat/errors.hpp"

namespace optreat {

namespace {

constexpr double kRankTolerance = 1e-10;

struct ArmSolve {
  Eigen::VectorXd beta;
  Eigen::MatrixXd gram;       // A'A for this arm
  Eigen::VectorXd residuals;  // per kept row, in row order
};

// Least squares via Householder QR, with a singular-value rank check on the
// triangular factor (singular values of R equal those of the design).
ArmSolve solve_arm(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const char* label) {
  const int k = static_cast<int>(design.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(k - 1);
  if (!(smin > kRankTolerance * smax)) {
    throw SingularDesignError(std::string(label) +
                              ": rank-deficient design, smallest singular value " +
                              std::to_string(smin));
  }

  ArmSolve out;
  out.beta = qr.solve(y);
  out.gram = r.transpose() * r;
  out.residuals = y - design * out.beta;
  return out;
}

Eigen::MatrixXd build_design(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                             const BasisSpec& spec) {
  // Built transposed so each scatter writes a contiguous column.
  Eigen::MatrixXd design_t = Eigen::MatrixXd::Zero(spec.basis_count(), rows.size());
  TensorWindow w;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    eval_tensor_window(spec, x.row(rows[r]).transpose(), w);
    window_axpy(w, 1.0, design_t.col(r).data());
  }
  return design_t.transpose();
}

}  // namespace

int default_interior_knots(int n_arm, int dim) {
  const double raw = std::pow(static_cast<double>(n_arm), 1.0 / (2.0 * 3.0 + dim));
  const int rounded = static_cast<int>(std::lround(raw));
  return std::max(1, rounded) + 1;
}

SieveFit fit_sieve(const Sample& sample, const BasisSpec& spec1, const BasisSpec& spec0) {
  sample.validate();
  if (spec1.dimension() != sample.dim() || spec0.dimension() != sample.dim()) {
    throw DimensionError("fit_sieve: basis dimension does not match covariates");
  }

  std::vector<int> rows1, rows0;
  rows1.reserve(sample.n());
  rows0.reserve(sample.n());
  for (int i = 0; i < sample.n(); ++i) (sample.d[i] == 1 ? rows1 : rows0).push_back(i);

  const int k1 = spec1.basis_count();
  const int k0 = spec0.basis_count();
  if (k1 >= static_cast<int>(rows1.size())) {
    throw DimensionError("fit_sieve: K1 = " + std::to_string(k1) +
                         " must be below the treated count " + std::to_string(rows1.size()));
  }
  if (k0 >= static_cast<int>(rows0.size())) {
    throw DimensionError("fit_sieve: K0 = " + std::to_string(k0) +
                         " must be below the control count " + std::to_string(rows0.size()));
  }

  Eigen::VectorXd y1(rows1.size()), y0(rows0.size());
  for (std::size_t r = 0; r < rows1.size(); ++r) y1[r] = sample.y[rows1[r]];
  for (std::size_t r = 0; r < rows0.size(); ++r) y0[r] = sample.y[rows0[r]];

  const ArmSolve arm1 = solve_arm(build_design(sample.x, rows1, spec1), y1, "fit_sieve (treated)");
  const ArmSolve arm0 = solve_arm(build_design(sample.x, rows0, spec0), y0, "fit_sieve (control)");

  SieveFit fit;
  fit.beta1 = arm1.beta;
  fit.beta0 = arm0.beta;
  fit.spec1 = spec1;
  fit.spec0 = spec0;
  fit.x = sample.x;
  fit.d = sample.d;
  fit.n = sample.n();
  fit.residuals.resize(sample.n());
  for (std::size_t r = 0; r < rows1.size(); ++r) fit.residuals[rows1[r]] = arm1.residuals[r];
  for (std::size_t r = 0; r < rows0.size(); ++r) fit.residuals[rows0[r]] = arm0.residuals[r];
  fit.gram = Eigen::MatrixXd::Zero(k1 + k0, k1 + k0);
  fit.gram.topLeftCorner(k1, k1) = arm1.gram;
  fit.gram.bottomRightCorner(k0, k0) = arm0.gram;
  return fit;
}

double SieveFit::mu(const Eigen::Ref<const Eigen::VectorXd>& point, int arm,
                    bool* extrapolated) const {
  const BasisSpec& spec = (arm == 1) ? spec1 : spec0;
  const Eigen::VectorXd& beta = (arm == 1) ? beta1 : beta0;
  const Eigen::VectorXd clamped = spec.domain.clamp(point, extrapolated);
  TensorWindow w;
  eval_tensor_window(spec, clamped, w);
  return window_dot(w, beta.data());
}

double SieveFit::cate_at(const Eigen::Ref<const Eigen::VectorXd>& point,
                         bool* extrapolated) const {
  bool clamp1 = false, clamp0 = false;
  const double value = mu(point, 1, &clamp1) - mu(point, 0, &clamp0);
  if (extrapolated) *extrapolated = clamp1 || clamp0;
  return value;
}

double predict_mu(const SieveFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x, int arm) {
  return fit.mu(x, arm);
}

double cate(const SieveFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return fit.cate_at(x);
}

RobustCovariance robust_covariance(const SieveFit& fit) {
  const int k1 = fit.k1();
  const int k0 = fit.k0();

  // Residual-weighted meat, accumulated through the sparse basis windows.
  Eigen::MatrixXd meat1 = Eigen::MatrixXd::Zero(k1, k1);
  Eigen::MatrixXd meat0 = Eigen::MatrixXd::Zero(k0, k0);
  Eigen::VectorXd row1 = Eigen::VectorXd::Zero(k1);
  Eigen::VectorXd row0 = Eigen::VectorXd::Zero(k0);
  TensorWindow w;
  for (int i = 0; i < fit.n; ++i) {
    const double u2 = fit.residuals[i] * fit.residuals[i];
    if (fit.d[i] == 1) {
      eval_tensor_window(fit.spec1, fit.x.row(i).transpose(), w);
      row1.setZero();
      window_axpy(w, 1.0, row1.data());
      meat1.selfadjointView<Eigen::Lower>().rankUpdate(row1, u2);
    } else {
      eval_tensor_window(fit.spec0, fit.x.row(i).transpose(), w);
      row0.setZero();
      window_axpy(w, 1.0, row0.data());
      meat0.selfadjointView<Eigen::Lower>().rankUpdate(row0, u2);
    }
  }
  meat1 = meat1.selfadjointView<Eigen::Lower>();
  meat0 = meat0.selfadjointView<Eigen::Lower>();

  const Eigen::MatrixXd ginv1 =
      fit.gram.topLeftCorner(k1, k1).ldlt().solve(Eigen::MatrixXd::Identity(k1, k1));
  const Eigen::MatrixXd ginv0 =
      fit.gram.bottomRightCorner(k0, k0).ldlt().solve(Eigen::MatrixXd::Identity(k0, k0));

  RobustCovariance cov;
  cov.omega = Eigen::MatrixXd::Zero(k1 + k0, k1 + k0);
  cov.omega.topLeftCorner(k1, k1) = static_cast<double>(fit.n) * ginv1 * meat1 * ginv1;
  cov.omega.bottomRightCorner(k0, k0) = static_cast<double>(fit.n) * ginv0 * meat0 * ginv0;
  // symmetrize against roundoff
  cov.omega = 0.5 * (cov.omega + cov.omega.transpose()).eval();
  return cov;
}

PropensityFit fit_propensity(const Sample& sample, const BasisSpec& spec) {
  sample.validate();
  if (spec.dimension() != sample.dim()) {
    throw DimensionError("fit_propensity: basis dimension does not match covariates");
  }
  if (spec.basis_count() >= sample.n()) {
    throw DimensionError("fit_propensity: K must be below the sample size");
  }
  std::vector<int> rows(sample.n());
  for (int i = 0; i < sample.n(); ++i) rows[i] = i;
  const Eigen::VectorXd d_real = sample.d.cast<double>();
  const ArmSolve solved = solve_arm(build_design(sample.x, rows, spec), d_real, "fit_propensity");
  return PropensityFit{solved.beta, spec};
}

double predict_propensity(const PropensityFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd clamped = fit.spec.domain.clamp(x);
  TensorWindow w;
  eval_tensor_window(fit.spec, clamped, w);
  return window_dot(w, fit.coefficients.data());
}

Eigen::Array<bool, Eigen::Dynamic, 1> propensity_keep_mask(const PropensityFit& fit,
                                                           const Sample& sample) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(sample.n());
  int kept = 0;
  for (int i = 0; i < sample.n(); ++i) {
    const double p = predict_propensity(fit, sample.x.row(i).transpose());
    mask[i] = (p > 0.0) && (p < 1.0);
    kept += mask[i] ? 1 : 0;
  }
  if (kept == 0) {
    throw DegenerateTrimError("propensity_keep_mask: every fitted propensity lies outside (0,1)");
  }
  return mask;
}

}  // namespace optreat
