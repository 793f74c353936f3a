#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "causal_shap/data.hpp"
#include "causal_shap/joint_table.hpp"

namespace cshap {

// Black-box model f: one output per row. Implementations must be safe to call
// from several threads at once.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t num_features() const = 0;
  virtual std::vector<double> predict(const RowMatrix& rows) const = 0;

  double predict_one(std::span<const double> x) const;
};

// f(x) = intercept + coefficients · x
class LinearModel final : public Predictor {
 public:
  LinearModel(double intercept, Eigen::VectorXd coefficients);

  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coef_; }

  std::size_t num_features() const override { return static_cast<std::size_t>(coef_.size()); }
  std::vector<double> predict(const RowMatrix& rows) const override;
  double evaluate(std::span<const double> x) const;

 private:
  double intercept_;
  Eigen::VectorXd coef_;
};

// Lookup table over joint level assignments of categorical inputs.
class TableModel final : public Predictor {
 public:
  TableModel(AssignmentIndex index, std::vector<double> outputs);
  // f(x1, x2) = x1 XOR x2 on two binary features.
  static TableModel exclusive_or();

  const AssignmentIndex& index() const { return index_; }
  const std::vector<double>& outputs() const { return outputs_; }

  std::size_t num_features() const override { return index_.num_features(); }
  std::vector<double> predict(const RowMatrix& rows) const override;
  double evaluate(std::span<const double> x) const;

 private:
  AssignmentIndex index_;
  std::vector<double> outputs_;
};

nlohmann::json linear_model_to_json(const LinearModel& model);
LinearModel linear_model_from_json(const nlohmann::json& doc, std::size_t num_features);

}  // namespace cshap
