#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "optreat/dgp.hpp"
#include "optreat/errors.hpp"
#include "optreat/rng.hpp"
#include "optreat/sieve.hpp"
#include "support/oracles.hpp"

using namespace optreat;

namespace {

// Random sample with one covariate dimension on [0,1].
Sample random_sample(Rng& rng, int n, int dim = 1) {
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, dim);
  d.setZero();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = rng.uniform(0.0, 1.0);
    d[i] = (i % 2 == 0) ? 1 : 0;
    y[i] = rng.normal();
  }
  return make_sample(y, d, x, dim == 1 ? Rect::interval(0, 1) : Rect::cube(0, 1, dim));
}

}  // namespace

TEST_CASE("one-cell bases recover the group means") {
  Eigen::VectorXd y(6);
  y << 1.0, 2.0, 3.0, 10.0, 20.0, 30.0;
  Eigen::VectorXi d(6);
  d << 0, 0, 0, 1, 1, 1;
  Eigen::MatrixXd x(6, 1);
  x << 0.1, 0.3, 0.5, 0.2, 0.6, 0.9;
  const Sample s = make_sample(y, d, x, Rect::interval(0, 1));
  const BasisSpec cell = make_basis(s.domain, 0, 0);
  const SieveFit fit = fit_sieve(s, cell, cell);
  CHECK(fit.beta1[0] == doctest::Approx(20.0));
  CHECK(fit.beta0[0] == doctest::Approx(2.0));
  Eigen::VectorXd q(1);
  q << 0.44;
  CHECK(predict_mu(fit, q, 1) == doctest::Approx(20.0));
  CHECK(cate(fit, q) == doctest::Approx(18.0));
}

TEST_CASE("constant outcome gives zero CATE and a constant mean surface") {
  Rng rng(1);
  Sample s = random_sample(rng, 200);
  s.y.setConstant(3.25);
  const BasisSpec spec = make_basis(s.domain, 3, 4);
  const SieveFit fit = fit_sieve(s, spec, spec);
  for (double t : {0.0, 0.21, 0.5, 0.77, 1.0}) {
    Eigen::VectorXd q(1);
    q << t;
    CHECK(predict_mu(fit, q, 1) == doctest::Approx(3.25).epsilon(1e-9));
    CHECK(predict_mu(fit, q, 0) == doctest::Approx(3.25).epsilon(1e-9));
    CHECK(cate(fit, q) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("coefficients match a normal-equations solve on random small instances") {
  Rng rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 24 + static_cast<int>(rng.next_u64() % 17);
    Sample s = random_sample(rng, n);
    const int interior1 = static_cast<int>(rng.next_u64() % 3);
    const int interior0 = static_cast<int>(rng.next_u64() % 2);
    const int degree = 1 + static_cast<int>(rng.next_u64() % 2);
    const BasisSpec spec1 = make_basis(s.domain, degree, interior1);
    const BasisSpec spec0 = make_basis(s.domain, degree, interior0);
    if (spec1.basis_count() + spec0.basis_count() > 8) continue;
    const SieveFit fit = fit_sieve(s, spec1, spec0);

    // explicit Gram-inverse solve per arm
    for (int arm = 0; arm <= 1; ++arm) {
      const BasisSpec& spec = arm ? spec1 : spec0;
      std::vector<int> rows;
      for (int i = 0; i < n; ++i) {
        if (s.d[i] == arm) rows.push_back(i);
      }
      Eigen::MatrixXd a(rows.size(), spec.basis_count());
      Eigen::VectorXd ya(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        a.row(r) = eval_basis(spec, s.x.row(rows[r]).transpose()).transpose();
        ya[r] = s.y[rows[r]];
      }
      const Eigen::VectorXd beta = (a.transpose() * a).inverse() * a.transpose() * ya;
      const Eigen::VectorXd got = arm ? fit.beta1 : fit.beta0;
      CHECK((got - beta).cwiseAbs().maxCoeff() <
            1e-8 * std::max(1.0, beta.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("residuals are orthogonal to the design") {
  Rng rng(17);
  Sample s = random_sample(rng, 400, 2);
  const BasisSpec spec = make_basis(s.domain, 3, 2);
  const SieveFit fit = fit_sieve(s, spec, spec);
  const int k = spec.basis_count();
  Eigen::VectorXd bt_u = Eigen::VectorXd::Zero(2 * k);
  Eigen::VectorXd col_norms = Eigen::VectorXd::Zero(2 * k);
  for (int i = 0; i < s.n(); ++i) {
    const Eigen::VectorXd psi = eval_basis(spec, s.x.row(i).transpose());
    const int offset = s.d[i] == 1 ? 0 : k;
    bt_u.segment(offset, k) += psi * fit.residuals[i];
    col_norms.segment(offset, k) += psi.cwiseAbs2();
  }
  col_norms = col_norms.cwiseSqrt();
  const double scaled =
      (bt_u.cwiseQuotient(col_norms.cwiseMax(1e-300))).cwiseAbs().maxCoeff() / s.n();
  CHECK(scaled < 1e-8);
}

TEST_CASE("M3-style data: fitted CATE tracks the closed form") {
  DGPSpec dgp = make_dgp("M3");

  // Noiseless draw: x^2 + d(1-x) lies in the cubic span, so the fit is exact.
  dgp.noise_sd = 0.0;
  const Sample exact = simulate_sample(dgp, 2000, 5);
  const BasisSpec spec4 = make_basis(exact.domain, 3, 4);
  const SieveFit noiseless = fit_sieve(exact, spec4, spec4);
  for (int g = 0; g <= 200; ++g) {
    Eigen::VectorXd q(1);
    q << g / 200.0;
    CHECK(std::fabs(cate(noiseless, q) - (1.0 - q[0])) < 1e-8);
  }

  // Unit-noise draw at n = 6000 (frozen seed; the 0.05 bound sits at about
  // 1.3x the sampling noise of the fitted CATE, so the seed matters).
  dgp.noise_sd = 1.0;
  const Sample s = simulate_sample(dgp, 6000, 16);
  const BasisSpec spec = make_basis(s.domain, 3, 0);
  const SieveFit fit = fit_sieve(s, spec, spec);
  double worst = 0.0;
  for (int g = 0; g <= 200; ++g) {
    Eigen::VectorXd q(1);
    q << g / 200.0;
    worst = std::max(worst, std::fabs(cate(fit, q) - (1.0 - q[0])));
  }
  CHECK(worst < 0.05);
  Eigen::VectorXd half(1);
  half << 0.5;
  CHECK(predict_mu(fit, half, 1) - predict_mu(fit, half, 0) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("zero coefficients predict zero") {
  Rng rng(3);
  Sample s = random_sample(rng, 100);
  const BasisSpec spec = make_basis(s.domain, 2, 1);
  SieveFit fit = fit_sieve(s, spec, spec);
  fit.beta1.setZero();
  Eigen::VectorXd q(1);
  q << 0.3;
  CHECK(predict_mu(fit, q, 1) == 0.0);
}

TEST_CASE("adding a constant shifts both surfaces and leaves the CATE alone") {
  Rng rng(8);
  Sample s = random_sample(rng, 500);
  const BasisSpec spec = make_basis(s.domain, 3, 3);
  const SieveFit fit = fit_sieve(s, spec, spec);
  Sample shifted = s;
  shifted.y.array() += 4.5;
  const SieveFit fit2 = fit_sieve(shifted, spec, spec);
  for (double t : {0.05, 0.33, 0.71, 0.95}) {
    Eigen::VectorXd q(1);
    q << t;
    CHECK(predict_mu(fit2, q, 1) - predict_mu(fit, q, 1) == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(predict_mu(fit2, q, 0) - predict_mu(fit, q, 0) == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(std::fabs(cate(fit2, q) - cate(fit, q)) < 1e-9);
  }
}

TEST_CASE("oversized basis and rank deficiency raise the documented errors") {
  Rng rng(12);
  Sample s = random_sample(rng, 14);
  CHECK_THROWS_AS(fit_sieve(s, make_basis(s.domain, 3, 5), make_basis(s.domain, 0, 0)),
                  DimensionError);

  // duplicate covariate values produce empty interior cells -> rank deficiency
  Eigen::VectorXd y(12);
  Eigen::VectorXi d(12);
  Eigen::MatrixXd x(12, 1);
  for (int i = 0; i < 12; ++i) {
    y[i] = rng.normal();
    d[i] = i % 2;
    x(i, 0) = (i % 2 == 0) ? 0.05 : 0.95;
  }
  const Sample degenerate = make_sample(y, d, x, Rect::interval(0, 1));
  CHECK_THROWS_WITH_AS(
      fit_sieve(degenerate, make_basis(degenerate.domain, 0, 3),
                make_basis(degenerate.domain, 0, 0)),
      doctest::Contains("singular"), SingularDesignError);
}

TEST_CASE("sandwich covariance against the brute-force triple product") {
  Rng rng(55);
  // random 50x3 design per arm, compared entrywise at 1e-10 relative
  const int n = 100;
  Sample s = random_sample(rng, n);
  const BasisSpec spec = make_basis(s.domain, 2, 0);  // K = 3 per arm
  const SieveFit fit = fit_sieve(s, spec, spec);
  const RobustCovariance cov = robust_covariance(fit);

  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if (s.d[i] == arm) rows.push_back(i);
    }
    Eigen::MatrixXd a(rows.size(), 3);
    Eigen::VectorXd u(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      a.row(r) = eval_basis(spec, s.x.row(rows[r]).transpose()).transpose();
      u[r] = fit.residuals[rows[r]];
    }
    const Eigen::MatrixXd want = oracle::sandwich_bruteforce(a, u, n);
    const Eigen::MatrixXd got = arm ? cov.omega.topLeftCorner(3, 3)
                                    : cov.omega.bottomRightCorner(3, 3);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10 * want.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("sandwich with zero residuals is the zero matrix") {
  Rng rng(66);
  Sample s = random_sample(rng, 80);
  s.y.setConstant(1.0);
  const BasisSpec spec = make_basis(s.domain, 1, 1);
  const SieveFit fit = fit_sieve(s, spec, spec);
  const RobustCovariance cov = robust_covariance(fit);
  CHECK(cov.omega.cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("sandwich with unit residuals collapses to n times the Gram inverse") {
  Rng rng(67);
  Sample s = random_sample(rng, 120);
  const BasisSpec spec = make_basis(s.domain, 2, 2);
  SieveFit fit = fit_sieve(s, spec, spec);
  fit.residuals.setConstant(1.0);
  const RobustCovariance cov = robust_covariance(fit);
  const Eigen::MatrixXd want =
      static_cast<double>(fit.n) *
      fit.gram.inverse();  // n (B'B)^-1 (B'B) (B'B)^-1
  CHECK((cov.omega - want).cwiseAbs().maxCoeff() < 1e-10 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("homoskedastic scalar sandwich") {
  // single-column design: omega = sigma^2 * n / sum b_i^2
  Eigen::VectorXd y(8);
  Eigen::VectorXi d(8);
  Eigen::MatrixXd x(8, 1);
  Rng rng(68);
  for (int i = 0; i < 8; ++i) {
    y[i] = rng.normal();
    d[i] = i < 4 ? 1 : 0;
    x(i, 0) = rng.uniform(0.0, 1.0);
  }
  const Sample s = make_sample(y, d, x, Rect::interval(0, 1));
  const BasisSpec cell = make_basis(s.domain, 0, 0);  // b_i = 1
  SieveFit fit = fit_sieve(s, cell, cell);
  const double sigma = 0.7;
  fit.residuals.setConstant(sigma);
  const RobustCovariance cov = robust_covariance(fit);
  CHECK(cov.omega(0, 0) == doctest::Approx(sigma * sigma * 8.0 / 4.0).epsilon(1e-12));
  CHECK(cov.omega(1, 1) == doctest::Approx(sigma * sigma * 8.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("propensity fit: cell means and the intercept-only Bernoulli rate") {
  // D constant within a region covered by one p=0 cell
  Eigen::VectorXd y(40);
  Eigen::VectorXi d(40);
  Eigen::MatrixXd x(40, 1);
  Rng rng(70);
  for (int i = 0; i < 40; ++i) {
    y[i] = rng.normal();
    x(i, 0) = (i < 20) ? rng.uniform(0.0, 0.49) : rng.uniform(0.51, 1.0);
    d[i] = (i < 20) ? 1 : 0;
  }
  const Sample s = make_sample(y, d, x, Rect::interval(0, 1));
  const PropensityFit pfit = fit_propensity(s, make_basis(s.domain, 0, 1));
  Eigen::VectorXd q(1);
  q << 0.2;
  CHECK(predict_propensity(pfit, q) == doctest::Approx(1.0));
  q << 0.8;
  CHECK(predict_propensity(pfit, q) == doctest::Approx(0.0));

  const int n = 4000;
  Eigen::VectorXd y2(n);
  Eigen::VectorXi d2(n);
  Eigen::MatrixXd x2(n, 1);
  for (int i = 0; i < n; ++i) {
    y2[i] = 0.0;
    d2[i] = rng.bernoulli(0.5) ? 1 : 0;
    x2(i, 0) = rng.uniform(0.0, 1.0);
  }
  const Sample s2 = make_sample(y2, d2, x2, Rect::interval(0, 1));
  const PropensityFit intercept = fit_propensity(s2, make_basis(s2.domain, 0, 0));
  CHECK(std::fabs(intercept.coefficients[0] - 0.5) < 3.0 / std::sqrt(n));
}

TEST_CASE("M1 propensity surface is recovered within 0.05") {
  const DGPSpec dgp = make_dgp("M1");
  const Sample s = simulate_sample(dgp, 6000, 4242);
  const PropensityFit pfit =
      fit_propensity(s, make_basis(s.domain, 3, default_interior_knots(s.n(), 1)));
  double worst = 0.0;
  for (int g = 0; g <= 100; ++g) {
    Eigen::VectorXd q(1);
    q << g / 100.0;
    const double truth = 1.0 / (1.0 + std::exp(-(1.0 - 2.0 * q[0])));
    worst = std::max(worst, std::fabs(predict_propensity(pfit, q) - truth));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("propensity keep mask excludes endpoints and values outside (0,1)") {
  Rng rng(80);
  Sample s = random_sample(rng, 10);
  const BasisSpec cell = make_basis(s.domain, 0, 0);
  PropensityFit pfit = fit_propensity(s, cell);

  pfit.coefficients[0] = 0.5;
  auto mask = propensity_keep_mask(pfit, s);
  CHECK(mask.count() == 10);

  pfit.coefficients[0] = 1.02;
  CHECK_THROWS_AS(propensity_keep_mask(pfit, s), DegenerateTrimError);

  pfit.coefficients[0] = 0.0;  // exactly zero is excluded (division guard)
  CHECK_THROWS_AS(propensity_keep_mask(pfit, s), DegenerateTrimError);

  // per-index exclusion: only the cell whose fitted value exceeds 1 drops out
  PropensityFit two_cells = fit_propensity(s, make_basis(s.domain, 0, 1));
  two_cells.coefficients << 1.02, 0.5;
  const auto partial = propensity_keep_mask(two_cells, s);
  for (int i = 0; i < s.n(); ++i) CHECK(partial[i] == (s.x(i, 0) >= 0.5));
}

TEST_CASE("default interior-knot rule") {
  CHECK(default_interior_knots(3000, 1) == 4);   // 3000^(1/7) ~ 3.14 -> 3 + 1
  CHECK(default_interior_knots(750, 2) == 3);    // 750^(1/8) ~ 2.29 -> 2 + 1
  CHECK(default_interior_knots(2, 1) == 2);      // floor at max(1, .) + 1
}
