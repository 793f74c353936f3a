#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal_shap/feature_space.hpp"

namespace cshap {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Training observations; categorical entries hold level indices.
struct DataMatrix {
  FeatureSpace features;
  RowMatrix rows;

  std::size_t num_rows() const { return static_cast<std::size_t>(rows.rows()); }
};

// Splits one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(const std::string& text);

// Locale-independent parse of a floating point field; throws ValidationError.
double parse_number(const std::string& field, const std::string& context);

// Reads a CSV whose header must contain every feature name (column order free,
// extra columns ignored). Categorical cells are level names.
DataMatrix read_csv(const std::filesystem::path& path, const FeatureSpace& features);
DataMatrix parse_csv(const std::string& text, const FeatureSpace& features);

// Inverse of parse_csv; numbers printed with round-trip precision.
std::string format_csv(const DataMatrix& data);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace cshap
