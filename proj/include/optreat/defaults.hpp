#pragma once

namespace optreat::defaults {

// Sobol budget for point estimates and full-dimensional derivative integrals.
inline constexpr int kPointBudget = 5000;

// Sobol budget for the eps-band boundary integral.
inline constexpr int kBandBudget = 1000000;

// Absolute band half-width for simulation designs.
inline constexpr double kBandEps = 0.005;

// Data-driven band half-width for empirical runs: eps = iota * SD(h_hat).
inline constexpr double kIota = 0.01;

// Kernel bandwidth inflation for empirical runs with coarse covariates.
inline constexpr double kKdeScale = 3.0;

// Normal 97.5% quantile, the default CI critical value.
inline constexpr double kCritical = 1.959964;

// B-spline degree.
inline constexpr int kDegree = 3;

}  // namespace optreat::defaults
