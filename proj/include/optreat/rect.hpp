#pragma once

#include <Eigen/Core>
#include <string>

#include "optreat/errors.hpp"

namespace optreat {

// Axis-aligned rectangle in R^d. Houses covariate domains and the supports of
// source/target distributions.
struct Rect {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Rect() = default;
  Rect(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    validate();
  }

  // 1-d convenience.
  static Rect interval(double lo, double hi) {
    Eigen::VectorXd l(1), u(1);
    l << lo;
    u << hi;
    return Rect(std::move(l), std::move(u));
  }

  // Cube [lo, hi]^d.
  static Rect cube(double lo, double hi, int dim) {
    return Rect(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi));
  }

  int dim() const { return static_cast<int>(lower.size()); }

  double volume() const {
    double v = 1.0;
    for (int j = 0; j < dim(); ++j) v *= upper[j] - lower[j];
    return v;
  }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != lower.size()) return false;
    for (int j = 0; j < dim(); ++j) {
      if (x[j] < lower[j] || x[j] > upper[j]) return false;
    }
    return true;
  }

  // Componentwise clamp into the rectangle; sets *clamped if any coordinate moved.
  Eigen::VectorXd clamp(const Eigen::Ref<const Eigen::VectorXd>& x, bool* clamped = nullptr) const {
    Eigen::VectorXd out = x;
    bool moved = false;
    for (int j = 0; j < dim(); ++j) {
      if (out[j] < lower[j]) {
        out[j] = lower[j];
        moved = true;
      } else if (out[j] > upper[j]) {
        out[j] = upper[j];
        moved = true;
      }
    }
    if (clamped) *clamped = moved;
    return out;
  }

  // Componentwise intersection; throws if empty or degenerate in any dimension.
  Rect intersect(const Rect& other) const {
    if (other.dim() != dim()) throw DimensionError("Rect::intersect: dimension mismatch");
    Eigen::VectorXd lo = lower.cwiseMax(other.lower);
    Eigen::VectorXd hi = upper.cwiseMin(other.upper);
    for (int j = 0; j < dim(); ++j) {
      if (!(lo[j] < hi[j])) {
        throw DegenerateSupportError("Rect::intersect: empty intersection in dimension " +
                                     std::to_string(j + 1));
      }
    }
    return Rect(std::move(lo), std::move(hi));
  }

  void validate() const {
    if (lower.size() != upper.size()) throw DimensionError("Rect: lower/upper length mismatch");
    if (lower.size() < 1) throw DimensionError("Rect: dimension must be >= 1");
    for (int j = 0; j < dim(); ++j) {
      if (!(lower[j] < upper[j])) {
        throw DimensionError("Rect: lower must be strictly below upper in dimension " +
                             std::to_string(j + 1));
      }
    }
  }
};

}  // namespace optreat
