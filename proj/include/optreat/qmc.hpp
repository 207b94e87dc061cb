#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "optreat/rect.hpp"
#include "optreat/target.hpp"

namespace optreat {

// Sobol low-discrepancy sequence, dimensions 1..16, Joe-Kuo direction
// numbers, 52 bits of resolution. The all-zeros initial point is skipped, so
// the first emitted point is (0.5, ..., 0.5). Deterministic: (dim, index)
// fully determines the next point, and every coordinate lies in (0,1).
class SobolStream {
 public:
  static constexpr int kMaxDim = 16;
  static constexpr int kBits = 52;

  explicit SobolStream(int dim);

  int dim() const { return dim_; }
  std::uint64_t index() const { return index_; }

  // Writes the next point into out[0..dim). out must have room for dim values.
  void next(double* out);

 private:
  int dim_ = 0;
  std::uint64_t index_ = 0;                  // number of points emitted so far
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> v_;  // kBits x dim
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, 1> x_;               // current integer state
};

// First `count` points of the Sobol sequence (zero point skipped), as a
// count x dim matrix with entries in (0,1).
Eigen::MatrixXd sobol_points(int dim, int count);

using Integrand = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

// volume(rect) times the Sobol-average of fn over rect. Throws IntegrandError
// if fn returns a non-finite value.
double integrate_rect(const Integrand& fn, const Rect& rect, int count);

// Sobol estimate of the expectation of fn under dist, i.e. of
// \int fn(x) pdf(x) dx over dist.support. For a uniform dist this reduces to
// the plain Sobol mean of fn.
double expect_under(const Integrand& fn, const TargetDistribution& dist, int count);

}  // namespace optreat
