#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optreat/rect.hpp"

namespace optreat {

// Training data: outcomes, binary treatment, covariates, covariate domain.
// Immutable after construction; safe to share across concurrent readers.
struct Sample {
  Eigen::VectorXd y;   // outcome, model units
  Eigen::VectorXi d;   // treatment indicator, entries in {0,1}
  Eigen::MatrixXd x;   // n x dim covariates
  Rect domain;

  int n() const { return static_cast<int>(y.size()); }
  int dim() const { return static_cast<int>(x.cols()); }
  int n_treated() const { return d.sum(); }
  int n_control() const { return n() - n_treated(); }

  // Checks row counts, {0,1} treatment values, both arms present, and that
  // every covariate row lies inside the domain.
  void validate() const;
};

Sample make_sample(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x,
                   std::optional<Rect> domain = std::nullopt);

// Reads a comma-separated file (header row, '.' decimal separator, UTF-8, no
// missing values) into a Sample. If domain is omitted it is inferred as the
// componentwise min/max of the covariates.
Sample read_csv_sample(const std::string& path, const std::string& outcome_col,
                       const std::string& treat_col, const std::vector<std::string>& covar_cols,
                       std::optional<Rect> domain = std::nullopt);

// Writes the sample back out with full precision (17 significant digits), so
// a read/write cycle round-trips all numeric values bit-exactly.
void write_csv_sample(const Sample& sample, const std::string& path,
                      const std::string& outcome_col, const std::string& treat_col,
                      const std::vector<std::string>& covar_cols);

// Restricts the sample to the intersection of the componentwise bounding
// boxes of the treated and control covariates (single pass over the input
// boxes), resetting the domain to that intersection. Returns the trimmed
// sample and the kept original row indices. Reapplying is a no-op whenever
// both arms attain the intersection faces, e.g. on shared grid values; for
// continuous data a second pass can peel at most a few boundary rows.
std::pair<Sample, std::vector<int>> trim_common_support(const Sample& sample);

}  // namespace optreat
