#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "optreat/rect.hpp"

namespace optreat {

using DensityFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;
using WeightFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

// Rectangle-supported covariate density of a target population. The ratio
// lambda = f/f0 used by the analytic variance is computed by callers from two
// of these.
struct TargetDistribution {
  enum class Kind { uniform, kde, external };

  Rect support;
  DensityFn pdf;   // nonnegative on support; zero is allowed
  Kind kind = Kind::uniform;

  static TargetDistribution uniform(const Rect& support) {
    TargetDistribution d;
    d.support = support;
    const double inv_vol = 1.0 / support.volume();
    d.pdf = [inv_vol](const Eigen::Ref<const Eigen::VectorXd>&) { return inv_vol; };
    d.kind = Kind::uniform;
    return d;
  }

  static TargetDistribution external(const Rect& support, DensityFn pdf) {
    TargetDistribution d;
    d.support = support;
    d.pdf = std::move(pdf);
    d.kind = Kind::external;
    return d;
  }
};

// User-supplied weight v0 for the value functional; v0 == 1 yields the
// treated-population share.
struct ValueWeight {
  WeightFn v0;
  std::string label;

  static ValueWeight ones() {
    return ValueWeight{[](const Eigen::Ref<const Eigen::VectorXd>&) { return 1.0; }, "1"};
  }
};

}  // namespace optreat
