#pragma once

#include <stdexcept>
#include <string>

namespace optreat {

// Input data violates the expected table layout (missing column, bad header).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// A cell could not be parsed; message carries the 1-based data row index.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A sample cannot support estimation (missing arm, empty after trimming).
class DegenerateSampleError : public std::runtime_error {
 public:
  explicit DegenerateSampleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Treated and control covariate boxes do not overlap.
class DegenerateSupportError : public std::runtime_error {
 public:
  explicit DegenerateSupportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Least-squares design is rank deficient; message names the smallest singular value.
class SingularDesignError : public std::runtime_error {
 public:
  explicit SingularDesignError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested basis dimension is incompatible with the sample (K >= group size, shape mismatch).
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Knot placement could not be carried out (e.g. too few distinct quantile points).
class PlacementError : public std::runtime_error {
 public:
  explicit PlacementError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation point lies outside the basis domain.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// No integration point fell inside the |h| < eps band.
class BandEmptyError : public std::runtime_error {
 public:
  explicit BandEmptyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Integrand returned a non-finite value; message carries the offending point.
class IntegrandError : public std::runtime_error {
 public:
  explicit IntegrandError(const std::string& msg) : std::runtime_error(msg) {}
};

// Kernel bandwidth could not be formed (zero variance in a dimension).
class BandwidthError : public std::runtime_error {
 public:
  explicit BandwidthError(const std::string& msg) : std::runtime_error(msg) {}
};

// Propensity-based trimming removed everything.
class DegenerateTrimError : public std::runtime_error {
 public:
  explicit DegenerateTrimError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unsupported Sobol dimension.
class UnsupportedDimensionError : public std::runtime_error {
 public:
  explicit UnsupportedDimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration (bad model id, conflicting flags, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace optreat
