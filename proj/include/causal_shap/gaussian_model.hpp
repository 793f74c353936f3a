#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "causal_shap/data.hpp"
#include "causal_shap/feature_space.hpp"

namespace cshap {

// Observational distribution: a multivariate Gaussian over the continuous
// features plus empirical level frequencies for the categorical ones.
class GaussianModel {
 public:
  // `covariance` is over the continuous features only, in feature order, and
  // must already include `regularization` on its diagonal.
  GaussianModel(FeatureSpace features, Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                std::vector<std::vector<double>> level_frequencies = {}, double regularization = 0.0);

  const FeatureSpace& features() const { return features_; }
  std::size_t num_features() const { return features_.size(); }
  // Length n; categorical entries hold the mean level index.
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const std::vector<std::size_t>& continuous_features() const { return continuous_; }
  // Position of a continuous feature inside `covariance()`.
  std::size_t block_index(std::size_t feature) const;
  // Empirical level frequencies of a categorical feature.
  const std::vector<double>& level_frequencies(std::size_t feature) const;
  double regularization() const { return regularization_; }

  // Covariance between two continuous features.
  double cov(std::size_t a, std::size_t b) const { return covariance_(block_(a), block_(b)); }

 private:
  Eigen::Index block_(std::size_t f) const { return static_cast<Eigen::Index>(block_index(f)); }

  FeatureSpace features_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  std::vector<std::vector<double>> levels_;  // per feature; empty for continuous
  double regularization_;
  std::vector<std::size_t> continuous_;
  std::vector<std::size_t> block_of_;
};

// λ = 1e-8 · trace(Σ) / n_continuous.
double default_regularization(const Eigen::MatrixXd& covariance);

// Maximum-likelihood fit. Without an explicit λ the scale-aware default applies.
GaussianModel fit_gaussian(const DataMatrix& data, std::optional<double> regularization = std::nullopt);

struct ConditionalGaussian {
  std::vector<std::size_t> features;  // remaining continuous features
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Exact conditional of the continuous features not in `given`.
ConditionalGaussian condition_gaussian(const GaussianModel& model,
                                       const std::vector<std::pair<std::size_t, double>>& given);

// Precomputed P(X_T | X_C = c) for fixed index sets: the gain matrix and the
// Cholesky factor of the conditional covariance do not depend on c.
class GaussianConditioner {
 public:
  GaussianConditioner(const GaussianModel& model, std::vector<std::size_t> targets,
                      std::vector<std::size_t> conditioning);

  const std::vector<std::size_t>& targets() const { return targets_; }
  const std::vector<std::size_t>& conditioning() const { return conditioning_; }

  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& given) const;
  const Eigen::MatrixXd& conditional_covariance() const { return cond_cov_; }
  // Lower Cholesky factor of the conditional covariance.
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
  const Eigen::MatrixXd& gain() const { return gain_; }

 private:
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> conditioning_;
  Eigen::VectorXd mean_t_;
  Eigen::VectorXd mean_c_;
  Eigen::MatrixXd gain_;
  Eigen::MatrixXd cond_cov_;
  Eigen::MatrixXd chol_;
};

nlohmann::json gaussian_to_json(const GaussianModel& model);
GaussianModel gaussian_from_json(const nlohmann::json& doc);

}  // namespace cshap
