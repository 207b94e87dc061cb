#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "optreat/errors.hpp"
#include "optreat/rect.hpp"

namespace optreat {

enum class KnotPlacement { uniform, quantile };

// Clamped knot vector for a univariate B-spline basis of a given degree.
// The first and last knots are each repeated degree+1 times; the number of
// basis functions is (#interior knots) + degree + 1.
struct KnotVector {
  std::vector<double> knots;
  int degree = 0;

  int basis_count() const { return static_cast<int>(knots.size()) - degree - 1; }
  double lo() const { return knots.front(); }
  double hi() const { return knots.back(); }
};

constexpr int kMaxSplineDegree = 15;

// Builds a clamped knot vector on [lo, hi]. Uniform placement spaces the
// interior knots evenly; quantile placement puts them at empirical quantiles
// of `data` and fails if the data cannot produce strictly increasing interior
// knots.
KnotVector make_knots(double lo, double hi, int degree, int interior,
                      KnotPlacement placement = KnotPlacement::uniform,
                      std::span<const double> data = {});

// All basis values at x via the de Boor-Cox recursion. x must lie within the
// knot range; there is no extrapolation here (prediction-time clamping is the
// caller's job). At the right endpoint the last basis function equals 1.
Eigen::VectorXd eval_basis_1d(const KnotVector& kv, double x);

// Nonzero window of the basis at x: entries first..first+count-1.
struct BasisWindow {
  int first = 0;
  int count = 0;
  double values[kMaxSplineDegree + 1];
};

void eval_basis_window(const KnotVector& kv, double x, BasisWindow& w);

// Tensor-product B-spline basis over a rectangle. Basis ordering is
// dimension-major with dimension 1 varying fastest:
//   flat index = i_1 + K_1 * i_2 + K_1 * K_2 * i_3 + ...
// This ordering is fixed; coefficient and derivative vectors align with it.
struct BasisSpec {
  std::vector<KnotVector> axes;
  Rect domain;

  int dimension() const { return static_cast<int>(axes.size()); }

  int basis_count() const {
    int k = 1;
    for (const auto& kv : axes) k *= kv.basis_count();
    return k;
  }
};

// Uniformly placed knots, same degree and interior count in every dimension.
BasisSpec make_basis(const Rect& domain, int degree, int interior);

// Per-dimension interior counts (uniform placement).
BasisSpec make_basis(const Rect& domain, int degree, const std::vector<int>& interior);

// Quantile-placed knots, computed per dimension from the columns of `data`.
// Keeps every knot cell populated on skewed or clumped covariates.
BasisSpec make_basis_quantile(const Rect& domain, int degree, const std::vector<int>& interior,
                              const Eigen::MatrixXd& data);

// Full basis vector of length K at a point inside the domain.
Eigen::VectorXd eval_basis(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

// Sparse evaluation state: per-dimension nonzero windows plus strides. At most
// (degree+1)^dim entries of the K-vector are nonzero.
struct TensorWindow {
  static constexpr int kMaxDim = 16;
  int dim = 0;
  BasisWindow axes[kMaxDim];
  int strides[kMaxDim];
};

void eval_tensor_window(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                        TensorWindow& w);

// Inner product of the (sparse) basis vector with a dense coefficient vector.
double window_dot(const TensorWindow& w, const double* coef);

// acc[k] += alpha * psi_k(x) for the nonzero entries.
void window_axpy(const TensorWindow& w, double alpha, double* acc);

}  // namespace optreat
