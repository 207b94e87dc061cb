#include "optreat/qmc.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <string>

#include "optreat/errors.hpp"

namespace optreat {

namespace {

// Joe-Kuo direction-number table (new-joe-kuo-6), dimensions 2..16.
// Polynomial x^s + a_1 x^{s-1} + ... + a_{s-1} x + 1 with the a_i packed
// MSB-first into `a`; m holds the s initial direction integers.
struct JoeKuoRow {
  int s;
  std::uint32_t a;
  std::uint32_t m[6];
};

constexpr JoeKuoRow kJoeKuo[] = {
    {1, 0, {1}},                  // dim 2
    {2, 1, {1, 3}},               // dim 3
    {3, 1, {1, 3, 1}},            // dim 4
    {3, 2, {1, 1, 1}},            // dim 5
    {4, 1, {1, 1, 3, 3}},         // dim 6
    {4, 4, {1, 3, 5, 13}},        // dim 7
    {5, 2, {1, 1, 5, 5, 17}},     // dim 8
    {5, 4, {1, 1, 5, 5, 5}},      // dim 9
    {5, 7, {1, 1, 7, 11, 19}},    // dim 10
    {5, 11, {1, 1, 5, 1, 1}},     // dim 11
    {5, 13, {1, 1, 1, 3, 11}},    // dim 12
    {5, 14, {1, 3, 5, 5, 31}},    // dim 13
    {6, 1, {1, 3, 3, 9, 7, 49}},  // dim 14
    {6, 13, {1, 1, 1, 15, 21, 21}},  // dim 15
    {6, 16, {1, 3, 1, 13, 27, 49}},  // dim 16
};

constexpr double kScale = 0x1.0p-52;  // 2^-kBits

}  // namespace

SobolStream::SobolStream(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw UnsupportedDimensionError("SobolStream: dimension " + std::to_string(dim) +
                                    " not supported (1.." + std::to_string(kMaxDim) + ")");
  }
  v_.resize(kBits, dim);
  x_ = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, 1>::Zero(dim);

  // First dimension: van der Corput in base 2, m_k = 1 for all k.
  for (int k = 0; k < kBits; ++k) v_(k, 0) = 1ULL << (kBits - 1 - k);

  for (int j = 1; j < dim; ++j) {
    const JoeKuoRow& row = kJoeKuo[j - 1];
    const int s = row.s;
    std::uint64_t m[kBits];
    for (int k = 0; k < s; ++k) m[k] = row.m[k];
    for (int k = s; k < kBits; ++k) {
      std::uint64_t mk = m[k - s] ^ (m[k - s] << s);
      for (int i = 1; i < s; ++i) {
        if ((row.a >> (s - 1 - i)) & 1U) mk ^= m[k - i] << i;
      }
      m[k] = mk;
    }
    for (int k = 0; k < kBits; ++k) v_(k, j) = m[k] << (kBits - 1 - k);
  }
}

void SobolStream::next(double* out) {
  // Gray-code step; starting from the all-zeros point (index 0, not emitted),
  // the first call produces (0.5, ..., 0.5).
  const int c = std::countr_one(index_);
  for (int j = 0; j < dim_; ++j) x_[j] ^= v_(c, j);
  ++index_;
  for (int j = 0; j < dim_; ++j) out[j] = static_cast<double>(x_[j]) * kScale;
}

Eigen::MatrixXd sobol_points(int dim, int count) {
  if (count < 1) throw ConfigError("sobol_points: count must be >= 1");
  SobolStream stream(dim);
  Eigen::MatrixXd pts(count, dim);
  Eigen::VectorXd buf(dim);
  for (int i = 0; i < count; ++i) {
    stream.next(buf.data());
    pts.row(i) = buf;
  }
  return pts;
}

double integrate_rect(const Integrand& fn, const Rect& rect, int count) {
  SobolStream stream(rect.dim());
  Eigen::VectorXd u(rect.dim());
  Eigen::VectorXd x(rect.dim());
  double sum = 0.0;
  for (int i = 0; i < count; ++i) {
    stream.next(u.data());
    x = rect.lower.array() + (rect.upper - rect.lower).array() * u.array();
    const double value = fn(x);
    if (!std::isfinite(value)) {
      std::ostringstream oss;
      oss << "integrate_rect: non-finite integrand at (";
      for (int j = 0; j < x.size(); ++j) oss << (j ? ", " : "") << x[j];
      oss << ")";
      throw IntegrandError(oss.str());
    }
    sum += value;
  }
  return rect.volume() * sum / static_cast<double>(count);
}

double expect_under(const Integrand& fn, const TargetDistribution& dist, int count) {
  const DensityFn& pdf = dist.pdf;
  return integrate_rect(
      [&fn, &pdf](const Eigen::Ref<const Eigen::VectorXd>& x) { return fn(x) * pdf(x); },
      dist.support, count);
}

}  // namespace optreat
