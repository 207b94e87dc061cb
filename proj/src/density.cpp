#include "optreat/density.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "optreat/errors.hpp"

namespace optreat {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
}

Rect KDE::enclosing_rect(double margin) const {
  Eigen::VectorXd lo = points.colwise().minCoeff().transpose() - margin * bandwidths;
  Eigen::VectorXd hi = points.colwise().maxCoeff().transpose() + margin * bandwidths;
  return Rect(std::move(lo), std::move(hi));
}

KDE fit_kde(const Eigen::MatrixXd& x, double scale) {
  const int n = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  if (n < 2) throw ConfigError("fit_kde: needs at least two points");
  if (!(scale > 0.0)) throw ConfigError("fit_kde: scale must be positive");

  KDE kde;
  kde.points = x;
  kde.scale = scale;
  kde.bandwidths.resize(dim);
  const double rate = std::pow(static_cast<double>(n), -1.0 / (4.0 + dim));
  for (int j = 0; j < dim; ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / (n - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
      throw BandwidthError("fit_kde: zero sample variance in dimension " + std::to_string(j + 1));
    }
    kde.bandwidths[j] = scale * 1.06 * sd * rate;
  }
  return kde;
}

double kde_pdf(const KDE& kde, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != kde.dim()) throw DimensionError("kde_pdf: dimension mismatch");
  const int m = kde.size();
  const int dim = kde.dim();
  double norm = 1.0;
  for (int j = 0; j < dim; ++j) norm *= kInvSqrt2Pi / kde.bandwidths[j];
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    double q = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double z = (x[j] - kde.points(i, j)) / kde.bandwidths[j];
      q += z * z;
    }
    sum += std::exp(-0.5 * q);
  }
  return norm * sum / static_cast<double>(m);
}

TargetDistribution kde_distribution(const KDE& kde, const Rect& support) {
  auto shared = std::make_shared<KDE>(kde);
  return TargetDistribution{
      support,
      [shared](const Eigen::Ref<const Eigen::VectorXd>& x) { return kde_pdf(*shared, x); },
      TargetDistribution::Kind::kde};
}

}  // namespace optreat
