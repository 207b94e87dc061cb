#pragma once

#include <Eigen/Core>

#include "optreat/rect.hpp"
#include "optreat/target.hpp"

namespace optreat {

// Product-Gaussian kernel density estimate with diagonal bandwidth:
//   h_j = scale * 1.06 * sd_j * n^(-1/(4+dim)).
// The scale knob mirrors the bandwidth-inflation factor used when covariates
// take discrete values.
struct KDE {
  Eigen::MatrixXd points;     // m x dim support data
  Eigen::VectorXd bandwidths; // strictly positive, one per dimension
  double scale = 1.0;

  int dim() const { return static_cast<int>(points.cols()); }
  int size() const { return static_cast<int>(points.rows()); }

  // Rectangle covering the support data plus `margin` bandwidths on each side.
  Rect enclosing_rect(double margin = 3.0) const;
};

KDE fit_kde(const Eigen::MatrixXd& x, double scale);

double kde_pdf(const KDE& kde, const Eigen::Ref<const Eigen::VectorXd>& x);

// TargetDistribution view of the estimate on the given support rectangle.
TargetDistribution kde_distribution(const KDE& kde, const Rect& support);

}  // namespace optreat
