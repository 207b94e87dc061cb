#include "optreat/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace optreat {

KnotVector make_knots(double lo, double hi, int degree, int interior, KnotPlacement placement,
                      std::span<const double> data) {
  if (degree < 0) throw ConfigError("make_knots: degree must be >= 0");
  if (degree > kMaxSplineDegree) {
    throw ConfigError("make_knots: degree above supported maximum " +
                      std::to_string(kMaxSplineDegree));
  }
  if (interior < 0) throw ConfigError("make_knots: interior count must be >= 0");
  if (!(lo < hi)) throw ConfigError("make_knots: degenerate interval");

  std::vector<double> inner;
  inner.reserve(interior);
  if (placement == KnotPlacement::uniform) {
    for (int i = 1; i <= interior; ++i) {
      inner.push_back(lo + (hi - lo) * static_cast<double>(i) / (interior + 1));
    }
  } else {
    if (interior > 0) {
      std::vector<double> sorted(data.begin(), data.end());
      std::sort(sorted.begin(), sorted.end());
      const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
      if (distinct < interior + 2) {
        throw PlacementError("make_knots: quantile placement needs more distinct data points than knots");
      }
      sorted.resize(distinct);
      for (int i = 1; i <= interior; ++i) {
        const double q = static_cast<double>(i) / (interior + 1);
        const double pos = q * static_cast<double>(distinct - 1);
        const auto lo_idx = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo_idx);
        double knot = sorted[lo_idx];
        if (lo_idx + 1 < sorted.size()) knot += frac * (sorted[lo_idx + 1] - sorted[lo_idx]);
        inner.push_back(knot);
      }
      for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner[i] <= lo || inner[i] >= hi || (i > 0 && inner[i] <= inner[i - 1])) {
          throw PlacementError("make_knots: quantile knots not strictly increasing inside the interval");
        }
      }
    }
  }

  KnotVector kv;
  kv.degree = degree;
  kv.knots.reserve(2 * (degree + 1) + interior);
  for (int i = 0; i <= degree; ++i) kv.knots.push_back(lo);
  kv.knots.insert(kv.knots.end(), inner.begin(), inner.end());
  for (int i = 0; i <= degree; ++i) kv.knots.push_back(hi);
  return kv;
}

void eval_basis_window(const KnotVector& kv, double x, BasisWindow& w) {
  const int p = kv.degree;
  const int nbasis = kv.basis_count();
  if (x < kv.lo() || x > kv.hi()) {
    throw DomainError("eval_basis_1d: x = " + std::to_string(x) + " outside knot range [" +
                      std::to_string(kv.lo()) + ", " + std::to_string(kv.hi()) + "]");
  }

  // Knot span: knots[span] <= x < knots[span+1]; the right endpoint belongs
  // to the last nonempty span [knots[nbasis-1], knots[nbasis]).
  int span;
  if (x >= kv.knots[nbasis]) {
    span = nbasis - 1;
  } else {
    // binary search over knots[p..nbasis]
    int lo = p, hi = nbasis;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (x < kv.knots[mid]) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    span = lo;
  }

  // de Boor-Cox (the "basis funs" triangular scheme).
  double left[kMaxSplineDegree + 1];
  double right[kMaxSplineDegree + 1];
  w.values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - kv.knots[span + 1 - j];
    right[j] = kv.knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = w.values[r] / (right[r + 1] + left[j - r]);
      w.values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    w.values[j] = saved;
  }
  w.first = span - p;
  w.count = p + 1;
}

Eigen::VectorXd eval_basis_1d(const KnotVector& kv, double x) {
  BasisWindow w;
  eval_basis_window(kv, x, w);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kv.basis_count());
  for (int r = 0; r < w.count; ++r) out[w.first + r] = w.values[r];
  return out;
}

BasisSpec make_basis(const Rect& domain, int degree, int interior) {
  return make_basis(domain, degree, std::vector<int>(domain.dim(), interior));
}

BasisSpec make_basis(const Rect& domain, int degree, const std::vector<int>& interior) {
  if (static_cast<int>(interior.size()) != domain.dim()) {
    throw DimensionError("make_basis: interior counts do not match domain dimension");
  }
  BasisSpec spec;
  spec.domain = domain;
  spec.axes.reserve(domain.dim());
  for (int j = 0; j < domain.dim(); ++j) {
    spec.axes.push_back(make_knots(domain.lower[j], domain.upper[j], degree, interior[j]));
  }
  return spec;
}

BasisSpec make_basis_quantile(const Rect& domain, int degree, const std::vector<int>& interior,
                              const Eigen::MatrixXd& data) {
  if (static_cast<int>(interior.size()) != domain.dim() || data.cols() != domain.dim()) {
    throw DimensionError("make_basis_quantile: dimension mismatch");
  }
  BasisSpec spec;
  spec.domain = domain;
  spec.axes.reserve(domain.dim());
  for (int j = 0; j < domain.dim(); ++j) {
    const Eigen::VectorXd col = data.col(j);
    spec.axes.push_back(make_knots(domain.lower[j], domain.upper[j], degree, interior[j],
                                   KnotPlacement::quantile,
                                   std::span<const double>(col.data(), col.size())));
  }
  return spec;
}

void eval_tensor_window(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                        TensorWindow& w) {
  const int d = spec.dimension();
  if (x.size() != d) throw DimensionError("eval_basis: point dimension does not match basis");
  w.dim = d;
  int stride = 1;
  for (int j = 0; j < d; ++j) {
    eval_basis_window(spec.axes[j], x[j], w.axes[j]);
    w.strides[j] = stride;
    stride *= spec.axes[j].basis_count();
  }
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  TensorWindow w;
  eval_tensor_window(spec, x, w);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.basis_count());
  window_axpy(w, 1.0, out.data());
  return out;
}

double window_dot(const TensorWindow& w, const double* coef) {
  // Odometer over the per-dimension windows; dimension 1 varies fastest.
  int idx[TensorWindow::kMaxDim] = {0};
  double sum = 0.0;
  for (;;) {
    double value = 1.0;
    int flat = 0;
    for (int j = 0; j < w.dim; ++j) {
      value *= w.axes[j].values[idx[j]];
      flat += (w.axes[j].first + idx[j]) * w.strides[j];
    }
    sum += value * coef[flat];
    int j = 0;
    while (j < w.dim && ++idx[j] == w.axes[j].count) idx[j++] = 0;
    if (j == w.dim) break;
  }
  return sum;
}

void window_axpy(const TensorWindow& w, double alpha, double* acc) {
  int idx[TensorWindow::kMaxDim] = {0};
  for (;;) {
    double value = alpha;
    int flat = 0;
    for (int j = 0; j < w.dim; ++j) {
      value *= w.axes[j].values[idx[j]];
      flat += (w.axes[j].first + idx[j]) * w.strides[j];
    }
    acc[flat] += value;
    int j = 0;
    while (j < w.dim && ++idx[j] == w.axes[j].count) idx[j++] = 0;
    if (j == w.dim) break;
  }
}

}  // namespace optreat
