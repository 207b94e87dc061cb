#include "optreat/dgp.hpp"

#include <cmath>
#include <sstream>

#include "optreat/errors.hpp"
#include "optreat/qmc.hpp"
#include "optreat/rng.hpp"

namespace optreat {

namespace {

constexpr double kPi = 3.14159265358979323846;

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

using XRef = Eigen::Ref<const Eigen::VectorXd>;

DGPSpec base_spec(const std::string& id, Rect f0, Rect f) {
  DGPSpec dgp;
  dgp.id = id;
  dgp.f0 = std::move(f0);
  dgp.f = std::move(f);
  dgp.noise_sd = 1.0;
  dgp.v0 = ValueWeight::ones().v0;
  dgp.scale = 1.0;
  return dgp;
}

// Shared outcome/propensity forms: models 8-14 reuse the functional forms of
// 1-7 on the unit-cube supports.
void fill_univariate(DGPSpec& dgp, int variant) {
  switch (variant) {
    case 1:
      dgp.mu0 = [](const XRef& x, int d) {
        return 5.0 * std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[0]) +
               d * (-0.4 + 2.0 * x[0] * x[0]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(1.0 - 2.0 * x[0]); };
      break;
    case 2:
      dgp.mu0 = [](const XRef& x, int d) {
        return 0.5 * std::fabs(x[0]) + d * (0.5 - x[0] * x[0]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(-0.5 + x[0]); };
      break;
    case 3:
      dgp.mu0 = [](const XRef& x, int d) { return x[0] * x[0] + d * (1.0 - x[0]); };
      dgp.p0 = [](const XRef& x) { return logistic(0.5 - x[0]); };
      break;
    default:
      throw ConfigError("fill_univariate: bad variant");
  }
}

// The "sin x1 x2" in the fourth design is read as sin(x1)*x2, matching the
// unambiguous spelling of the same term in the value design.
void fill_bivariate(DGPSpec& dgp, int variant) {
  switch (variant) {
    case 4:
      dgp.mu0 = [](const XRef& x, int d) {
        return (1.0 - x[0] * x[0] - x[1] * x[1]) *
                   (4.0 + std::sin(x[0]) * x[1] + std::cos(x[1])) +
               d * (0.5 * x[0] - 0.4 * x[1]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(x[0] - x[1]); };
      break;
    case 5:
      dgp.mu0 = [](const XRef& x, int d) {
        return (1.0 - x[0] * x[1]) * (3.0 + std::sin(kPi * x[0]) * std::cos(kPi * x[1])) +
               d * (0.3 * x[0] - 0.3 * x[1]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(x[0] - x[1]); };
      break;
    case 6:
      dgp.mu0 = [](const XRef& x, int d) {
        return std::log(1.0 + x[0] + x[1]) + d * (x[0] - 0.7 * x[1]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(1.5 * x[0] - 0.5 * x[1]); };
      break;
    case 7:
      dgp.mu0 = [](const XRef& x, int d) {
        return (x[0] * x[0] + x[1] * x[1]) * std::exp(-(x[0] + x[1])) + d * (0.5 - x[1]);
      };
      dgp.p0 = [](const XRef& x) { return logistic(-0.5 + x[0] + 2.0 * x[1]); };
      break;
    default:
      throw ConfigError("fill_bivariate: bad variant");
  }
}

}  // namespace

const std::vector<std::string>& dgp_catalog() {
  static const std::vector<std::string> ids = {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8",
                                               "M9", "M10", "M11", "M12", "M13", "M14", "M15"};
  return ids;
}

DGPSpec make_dgp(const std::string& id) {
  int num = 0;
  if (id.size() >= 2 && id[0] == 'M') {
    try {
      num = std::stoi(id.substr(1));
    } catch (...) {
      num = 0;
    }
  }
  if (num < 1 || num > 15) {
    std::ostringstream oss;
    oss << "make_dgp: unknown model id '" << id << "'; valid ids are";
    for (const auto& m : dgp_catalog()) oss << ' ' << m;
    throw ConfigError(oss.str());
  }

  if (num <= 3) {
    DGPSpec dgp = base_spec(id, Rect::interval(-0.2, 1.2), Rect::interval(0.0, 1.0));
    fill_univariate(dgp, num);
    return dgp;
  }
  if (num <= 7) {
    DGPSpec dgp = base_spec(id, Rect::cube(-0.2, 1.2, 2), Rect::cube(0.0, 1.0, 2));
    fill_bivariate(dgp, num);
    return dgp;
  }
  if (num <= 10) {
    DGPSpec dgp = base_spec(id, Rect::interval(0.0, 1.0), Rect::interval(0.0, 1.0));
    fill_univariate(dgp, num - 7);
    return dgp;
  }
  if (num <= 14) {
    DGPSpec dgp = base_spec(id, Rect::cube(0.0, 1.0, 2), Rect::cube(0.0, 1.0, 2));
    fill_bivariate(dgp, num - 7);
    return dgp;
  }

  // Value design: the treated surface vanishes on the unit circle and the
  // (4 + ...) factor is strictly positive on the support, so the treated
  // region is exactly the unit disk; the 3^2 output scaling makes the target
  // value equal to pi.
  DGPSpec dgp = base_spec(id, Rect::cube(-2.0, 2.0, 2), Rect::cube(-1.5, 1.5, 2));
  dgp.mu0 = [](const XRef& x, int d) {
    return d * (1.0 - x[0] * x[0] - x[1] * x[1]) *
           (4.0 + std::sin(x[0]) * x[1] + std::cos(x[1]));
  };
  dgp.p0 = [](const XRef& x) { return logistic(x[0] - x[1]); };
  dgp.scale = 9.0;
  return dgp;
}

Sample simulate_sample(const DGPSpec& dgp, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("simulate_sample: n must be >= 1");
  const int dim = dgp.dim();
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXi d(n);
  Eigen::VectorXd y(n);

  Rng rng_x = Rng::substream(seed, 0, 0);
  Rng rng_d = Rng::substream(seed, 0, 1);
  Rng rng_e = Rng::substream(seed, 0, 2);

  Eigen::VectorXd xi(dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) xi[j] = rng_x.uniform(dgp.f0.lower[j], dgp.f0.upper[j]);
    x.row(i) = xi;
    d[i] = rng_d.bernoulli(dgp.p0(xi)) ? 1 : 0;
    y[i] = dgp.mu0(xi, d[i]) + dgp.noise_sd * rng_e.normal();
  }
  return make_sample(std::move(y), std::move(d), std::move(x), dgp.f0);
}

double true_functional(const DGPSpec& dgp, TrueFunctionalKind kind, int m_points) {
  const TargetDistribution target = TargetDistribution::uniform(dgp.f);
  if (kind == TrueFunctionalKind::welfare) {
    return expect_under(
        [&dgp](const XRef& x) { return std::max(dgp.cate(x), 0.0); }, target, m_points);
  }
  return dgp.scale * expect_under(
                         [&dgp](const XRef& x) {
                           return (dgp.cate(x) >= 0.0) ? dgp.v0(x) : 0.0;
                         },
                         target, m_points);
}

}  // namespace optreat
