#include "optreat/sample.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "optreat/errors.hpp"

namespace optreat {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace and a possible trailing \r
    const auto begin = field.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
      fields.emplace_back();
    } else {
      const auto end = field.find_last_not_of(" \t\r");
      fields.push_back(field.substr(begin, end - begin + 1));
    }
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, int data_row, const std::string& col) {
  if (text.empty()) {
    throw ParseError("missing value in column '" + col + "' at data row " +
                     std::to_string(data_row));
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ParseError("non-numeric value '" + text + "' in column '" + col + "' at data row " +
                     std::to_string(data_row));
  }
  return value;
}

Rect bounding_box(const Eigen::MatrixXd& x) {
  return Rect(x.colwise().minCoeff(), x.colwise().maxCoeff());
}

// Bounding box of the rows selected by mask.
Rect group_box(const Eigen::MatrixXd& x, const Eigen::VectorXi& d, int arm) {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(x.cols(), std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (int i = 0; i < x.rows(); ++i) {
    if (d[i] != arm) continue;
    lo = lo.cwiseMin(x.row(i).transpose());
    hi = hi.cwiseMax(x.row(i).transpose());
  }
  Rect box;
  box.lower = lo;
  box.upper = hi;
  return box;  // not validated: a single point gives a zero-width box
}

}  // namespace

void Sample::validate() const {
  if (y.size() < 1) throw DegenerateSampleError("Sample: empty");
  if (d.size() != y.size() || x.rows() != y.size()) {
    throw DimensionError("Sample: y, d, x row counts differ");
  }
  if (domain.dim() != dim()) throw DimensionError("Sample: domain dimension mismatch");
  int treated = 0, control = 0;
  for (int i = 0; i < n(); ++i) {
    if (d[i] == 1) {
      ++treated;
    } else if (d[i] == 0) {
      ++control;
    } else {
      throw ParseError("Sample: treatment value " + std::to_string(d[i]) + " at data row " +
                       std::to_string(i + 1) + " is not 0/1");
    }
    if (!domain.contains(x.row(i).transpose())) {
      throw DomainError("Sample: covariate row " + std::to_string(i + 1) + " outside domain");
    }
  }
  if (treated == 0 || control == 0) {
    throw DegenerateSampleError("Sample: needs at least one treated and one control row");
  }
}

Sample make_sample(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x,
                   std::optional<Rect> domain) {
  Sample s;
  s.y = std::move(y);
  s.d = std::move(d);
  s.x = std::move(x);
  s.domain = domain ? *domain : bounding_box(s.x);
  s.validate();
  return s;
}

Sample read_csv_sample(const std::string& path, const std::string& outcome_col,
                       const std::string& treat_col, const std::vector<std::string>& covar_cols,
                       std::optional<Rect> domain) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "': empty file, header expected");
  const std::vector<std::string> header = split_csv_line(line);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("'" + path + "': column '" + name + "' not found");
    return static_cast<int>(it - header.begin());
  };

  const int y_col = column_of(outcome_col);
  const int d_col = column_of(treat_col);
  std::vector<int> x_cols;
  x_cols.reserve(covar_cols.size());
  for (const auto& name : covar_cols) x_cols.push_back(column_of(name));
  if (x_cols.empty()) throw SchemaError("'" + path + "': at least one covariate column required");

  std::vector<double> ys;
  std::vector<int> ds;
  std::vector<double> xs;
  int data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    ++data_row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("'" + path + "': data row " + std::to_string(data_row) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    }
    ys.push_back(parse_number(fields[y_col], data_row, outcome_col));
    const double d_val = parse_number(fields[d_col], data_row, treat_col);
    if (d_val != 0.0 && d_val != 1.0) {
      throw ParseError("'" + path + "': treatment value " + fields[d_col] + " at data row " +
                       std::to_string(data_row) + " is not 0/1");
    }
    ds.push_back(static_cast<int>(d_val));
    for (int c : x_cols) xs.push_back(parse_number(fields[c], data_row, header[c]));
  }
  if (data_row == 0) throw DegenerateSampleError("'" + path + "': no data rows");

  const int n = data_row;
  const int dim = static_cast<int>(x_cols.size());
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i) {
    y[i] = ys[i];
    d[i] = ds[i];
    for (int j = 0; j < dim; ++j) x(i, j) = xs[static_cast<std::size_t>(i) * dim + j];
  }
  return make_sample(std::move(y), std::move(d), std::move(x), std::move(domain));
}

void write_csv_sample(const Sample& sample, const std::string& path,
                      const std::string& outcome_col, const std::string& treat_col,
                      const std::vector<std::string>& covar_cols) {
  if (static_cast<int>(covar_cols.size()) != sample.dim()) {
    throw SchemaError("write_csv_sample: covariate name count does not match dimension");
  }
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << outcome_col << ',' << treat_col;
  for (const auto& name : covar_cols) out << ',' << name;
  out << '\n';
  char buf[40];
  for (int i = 0; i < sample.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", sample.y[i]);
    out << buf << ',' << sample.d[i];
    for (int j = 0; j < sample.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", sample.x(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::pair<Sample, std::vector<int>> trim_common_support(const Sample& sample) {
  sample.validate();

  const Rect treated_box = group_box(sample.x, sample.d, 1);
  const Rect control_box = group_box(sample.x, sample.d, 0);
  Eigen::VectorXd lo = treated_box.lower.cwiseMax(control_box.lower);
  Eigen::VectorXd hi = treated_box.upper.cwiseMin(control_box.upper);
  for (int j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < hi[j])) {
      throw DegenerateSupportError(
          "trim_common_support: treated and control supports do not overlap in dimension " +
          std::to_string(j + 1));
    }
  }

  std::vector<int> kept;
  kept.reserve(sample.n());
  for (int i = 0; i < sample.n(); ++i) {
    bool inside = true;
    for (int j = 0; j < sample.dim(); ++j) {
      if (sample.x(i, j) < lo[j] || sample.x(i, j) > hi[j]) {
        inside = false;
        break;
      }
    }
    if (inside) kept.push_back(i);
  }
  if (kept.empty()) {
    throw DegenerateSupportError("trim_common_support: no observations in the common support");
  }

  Sample trimmed;
  trimmed.y.resize(kept.size());
  trimmed.d.resize(kept.size());
  trimmed.x.resize(kept.size(), sample.dim());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    trimmed.y[i] = sample.y[kept[i]];
    trimmed.d[i] = sample.d[kept[i]];
    trimmed.x.row(i) = sample.x.row(kept[i]);
  }
  trimmed.domain.lower = std::move(lo);
  trimmed.domain.upper = std::move(hi);
  if (trimmed.d.sum() == 0 || trimmed.d.sum() == trimmed.d.size()) {
    throw DegenerateSupportError("trim_common_support: an arm vanished while trimming");
  }
  trimmed.validate();
  return {std::move(trimmed), std::move(kept)};
}

}  // namespace optreat
