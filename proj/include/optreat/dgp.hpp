#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "optreat/defaults.hpp"
#include "optreat/rect.hpp"
#include "optreat/sample.hpp"
#include "optreat/target.hpp"

namespace optreat {

// A fully specified simulation design: uniform covariate supports for the
// source (f0) and target (f) populations, the outcome regression mu0, the
// propensity p0, noise level, the value weight v0, and an output scaling for
// value designs.
struct DGPSpec {
  std::string id;
  Rect f0;
  Rect f;
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&, int)> mu0;
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> p0;
  double noise_sd = 1.0;
  WeightFn v0;
  double scale = 1.0;

  int dim() const { return f0.dim(); }
  double cate(const Eigen::Ref<const Eigen::VectorXd>& x) const { return mu0(x, 1) - mu0(x, 0); }
};

// Catalog ids M1..M15.
const std::vector<std::string>& dgp_catalog();

DGPSpec make_dgp(const std::string& id);

// Draws X uniform on f0, D ~ Bernoulli(p0(X)), Y = mu0(X, D) + noise_sd * N(0,1).
// Deterministic given the seed; the sample domain is the f0 rectangle.
Sample simulate_sample(const DGPSpec& dgp, int n, std::uint64_t seed);

enum class TrueFunctionalKind { welfare, value };

// Ground truth by Sobol integration under the target distribution F using the
// true mu0: welfare integrates [CATE]_+, value integrates
// scale * 1{CATE >= 0} * v0. Uses no randomness.
double true_functional(const DGPSpec& dgp, TrueFunctionalKind kind,
                       int m_points = defaults::kPointBudget);

}  // namespace optreat
