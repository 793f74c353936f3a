#include "causal_shap/predictor.hpp"

#include "causal_shap/errors.hpp"

namespace cshap {

double Predictor::predict_one(std::span<const double> x) const {
  RowMatrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = x[k];
  const auto y = predict(row);
  if (y.size() != 1) throw PredictorError("predictor returned " + std::to_string(y.size()) + " values for one row", "");
  return y.front();
}

LinearModel::LinearModel(double intercept, Eigen::VectorXd coefficients)
    : intercept_(intercept), coef_(std::move(coefficients)) {
  if (!std::isfinite(intercept_) || !coef_.allFinite()) throw ValidationError("linear model has non-finite parameters");
}

double LinearModel::evaluate(std::span<const double> x) const {
  if (x.size() != num_features()) throw ValidationError("linear model got a row of the wrong width");
  double y = intercept_;
  for (std::size_t k = 0; k < x.size(); ++k) y += coef_(static_cast<Eigen::Index>(k)) * x[k];
  return y;
}

std::vector<double> LinearModel::predict(const RowMatrix& rows) const {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = evaluate(std::span<const double>(rows.row(r).data(), static_cast<std::size_t>(rows.cols())));
  }
  return out;
}

TableModel::TableModel(AssignmentIndex index, std::vector<double> outputs)
    : index_(std::move(index)), outputs_(std::move(outputs)) {
  if (outputs_.size() != index_.size()) {
    throw ValidationError("table model needs " + std::to_string(index_.size()) + " outputs, got " +
                          std::to_string(outputs_.size()));
  }
}

TableModel TableModel::exclusive_or() { return TableModel(AssignmentIndex({2, 2}), {0.0, 1.0, 1.0, 0.0}); }

double TableModel::evaluate(std::span<const double> x) const { return outputs_[index_.encode(x)]; }

std::vector<double> TableModel::predict(const RowMatrix& rows) const {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = evaluate(std::span<const double>(rows.row(r).data(), static_cast<std::size_t>(rows.cols())));
  }
  return out;
}

nlohmann::json linear_model_to_json(const LinearModel& model) {
  return {{"type", "linear"},
          {"intercept", model.intercept()},
          {"coefficients", std::vector<double>(model.coefficients().data(),
                                               model.coefficients().data() + model.coefficients().size())}};
}

LinearModel linear_model_from_json(const nlohmann::json& doc, std::size_t num_features) {
  try {
    const auto coef = doc.at("coefficients").get<std::vector<double>>();
    if (coef.size() != num_features) {
      throw ValidationError("linear model has " + std::to_string(coef.size()) + " coefficients for " +
                            std::to_string(num_features) + " features");
    }
    return LinearModel(doc.value("intercept", 0.0), Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size())));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed linear model: ") + e.what());
  }
}

}  // namespace cshap
