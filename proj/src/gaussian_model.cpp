#include "causal_shap/gaussian_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "causal_shap/errors.hpp"

namespace cshap {

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

std::string min_eigenvalue_note(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return "";
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << " (smallest eigenvalue " << es.eigenvalues().minCoeff() << ")";
  return os.str();
}

}  // namespace

GaussianModel::GaussianModel(FeatureSpace features, Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                             std::vector<std::vector<double>> level_frequencies, double regularization)
    : features_(std::move(features)),
      mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      levels_(std::move(level_frequencies)),
      regularization_(regularization) {
  const auto n = features_.size();
  if (static_cast<std::size_t>(mean_.size()) != n) {
    throw ValidationError("mean has length " + std::to_string(mean_.size()) + ", expected " + std::to_string(n));
  }
  if (regularization_ < 0.0) throw ValidationError("regularization must be non-negative");
  block_of_.assign(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t f = 0; f < n; ++f) {
    if (!features_.is_categorical(f)) {
      block_of_[f] = continuous_.size();
      continuous_.push_back(f);
    }
  }
  const auto nc = static_cast<Eigen::Index>(continuous_.size());
  if (covariance_.rows() != nc || covariance_.cols() != nc) {
    throw ValidationError("covariance must be " + std::to_string(nc) + "x" + std::to_string(nc) +
                          " over the continuous features");
  }
  if (!covariance_.allFinite()) throw NumericalError("covariance contains non-finite entries");
  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NumericalError("covariance is not symmetric");
  }
  if (nc > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("covariance is not positive definite" + min_eigenvalue_note(covariance_) +
                           "; increase the regularization");
    }
  }

  if (levels_.empty()) levels_.resize(n);
  if (levels_.size() != n) throw ValidationError("level frequency table must have one entry per feature");
  for (std::size_t f = 0; f < n; ++f) {
    if (!features_.is_categorical(f)) {
      if (!levels_[f].empty()) throw ValidationError("continuous feature '" + features_[f].name + "' has level frequencies");
      continue;
    }
    auto& freq = levels_[f];
    if (freq.size() != features_.num_levels(f)) {
      throw ValidationError("categorical feature '" + features_[f].name + "' needs " +
                            std::to_string(features_.num_levels(f)) + " level frequencies");
    }
    double total = 0.0;
    for (double p : freq) {
      if (!(p >= 0.0)) throw ValidationError("negative level frequency for '" + features_[f].name + "'");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("level frequencies of '" + features_[f].name + "' do not sum to 1");
    }
  }
}

std::size_t GaussianModel::block_index(std::size_t feature) const {
  if (feature >= block_of_.size()) throw ValidationError("feature index out of range");
  if (block_of_[feature] == std::numeric_limits<std::size_t>::max()) {
    throw UnsupportedError("categorical feature '" + features_[feature].name +
                           "' cannot take part in Gaussian conditioning; encode it numerically");
  }
  return block_of_[feature];
}

const std::vector<double>& GaussianModel::level_frequencies(std::size_t feature) const {
  if (!features_.is_categorical(feature)) {
    throw ValidationError("feature '" + features_[feature].name + "' is not categorical");
  }
  return levels_[feature];
}

double default_regularization(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() == 0) return 0.0;
  return 1e-8 * covariance.trace() / static_cast<double>(covariance.rows());
}

GaussianModel fit_gaussian(const DataMatrix& data, std::optional<double> regularization) {
  const auto m = data.rows.rows();
  const auto n = data.features.size();
  if (m < 2) throw ValidationError("fitting needs at least 2 rows, got " + std::to_string(m));
  if (regularization && *regularization < 0.0) throw ValidationError("regularization must be non-negative");
  if (static_cast<std::size_t>(data.rows.cols()) != n) throw ValidationError("data width does not match features");

  Eigen::VectorXd mean = data.rows.colwise().mean().transpose();
  std::vector<std::vector<double>> levels(n);
  std::vector<Eigen::Index> cont;
  for (std::size_t f = 0; f < n; ++f) {
    if (!data.features.is_categorical(f)) {
      cont.push_back(static_cast<Eigen::Index>(f));
      continue;
    }
    const auto k = data.features.num_levels(f);
    levels[f].assign(k, 0.0);
    for (Eigen::Index r = 0; r < m; ++r) {
      const double v = data.rows(r, static_cast<Eigen::Index>(f));
      if (v < 0 || v != std::floor(v) || static_cast<std::size_t>(v) >= k) {
        throw ValidationError("row " + std::to_string(r) + " has an unknown level for '" + data.features[f].name + "'");
      }
      levels[f][static_cast<std::size_t>(v)] += 1.0;
    }
    for (auto& p : levels[f]) p /= static_cast<double>(m);
  }

  Eigen::MatrixXd centered(m, static_cast<Eigen::Index>(cont.size()));
  for (std::size_t c = 0; c < cont.size(); ++c) {
    centered.col(static_cast<Eigen::Index>(c)) = data.rows.col(cont[c]).array() - mean(cont[c]);
  }
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(m);
  cov = 0.5 * (cov + cov.transpose());
  const double lambda = regularization ? *regularization : default_regularization(cov);
  cov.diagonal().array() += lambda;
  return GaussianModel(data.features, std::move(mean), std::move(cov), std::move(levels), lambda);
}

// ---------------------------------------------------------------- conditioning

GaussianConditioner::GaussianConditioner(const GaussianModel& model, std::vector<std::size_t> targets,
                                         std::vector<std::size_t> conditioning)
    : targets_(std::move(targets)), conditioning_(std::move(conditioning)) {
  std::vector<Eigen::Index> t, c;
  for (auto f : targets_) t.push_back(static_cast<Eigen::Index>(model.block_index(f)));
  for (auto f : conditioning_) c.push_back(static_cast<Eigen::Index>(model.block_index(f)));
  const auto& sigma = model.covariance();
  mean_t_.resize(static_cast<Eigen::Index>(t.size()));
  mean_c_.resize(static_cast<Eigen::Index>(c.size()));
  for (std::size_t k = 0; k < t.size(); ++k) mean_t_(k) = model.mean()(static_cast<Eigen::Index>(targets_[k]));
  for (std::size_t k = 0; k < c.size(); ++k) mean_c_(k) = model.mean()(static_cast<Eigen::Index>(conditioning_[k]));

  const Eigen::MatrixXd s_tt = submatrix(sigma, t, t);
  if (c.empty()) {
    gain_.resize(static_cast<Eigen::Index>(t.size()), 0);
    cond_cov_ = s_tt;
  } else {
    const Eigen::MatrixXd s_cc = submatrix(sigma, c, c);
    const Eigen::MatrixXd s_ct = submatrix(sigma, c, t);
    Eigen::LLT<Eigen::MatrixXd> llt(s_cc);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("conditioning block is singular" + min_eigenvalue_note(s_cc));
    }
    gain_ = llt.solve(s_ct).transpose();
    cond_cov_ = s_tt - gain_ * s_ct;
    cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());
  }
  if (cond_cov_.rows() > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(cond_cov_);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("conditional covariance is not positive definite" + min_eigenvalue_note(cond_cov_));
    }
    chol_ = llt.matrixL();
  }
}

Eigen::VectorXd GaussianConditioner::conditional_mean(const Eigen::VectorXd& given) const {
  if (conditioning_.empty()) return mean_t_;
  return mean_t_ + gain_ * (given - mean_c_);
}

ConditionalGaussian condition_gaussian(const GaussianModel& model,
                                       const std::vector<std::pair<std::size_t, double>>& given) {
  FeatureMask given_mask = 0;
  std::vector<std::size_t> cond;
  Eigen::VectorXd values(static_cast<Eigen::Index>(given.size()));
  std::vector<std::pair<std::size_t, double>> sorted = given;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto f = sorted[k].first;
    if (f >= model.num_features()) throw ValidationError("conditioning index out of range");
    if (has_feature(given_mask, f)) throw ValidationError("feature conditioned on twice");
    model.block_index(f);
    given_mask |= feature_bit(f);
    cond.push_back(f);
    values(static_cast<Eigen::Index>(k)) = sorted[k].second;
  }
  std::vector<std::size_t> rest;
  for (auto f : model.continuous_features()) {
    if (!has_feature(given_mask, f)) rest.push_back(f);
  }
  GaussianConditioner cg(model, rest, cond);
  return ConditionalGaussian{rest, cg.conditional_mean(values), cg.conditional_covariance()};
}

// ------------------------------------------------------------------- file IO

nlohmann::json gaussian_to_json(const GaussianModel& model) {
  nlohmann::json doc;
  doc["features"] = feature_space_to_json(model.features());
  doc["mean"] = std::vector<double>(model.mean().data(), model.mean().data() + model.mean().size());
  std::vector<double> cov;
  for (Eigen::Index r = 0; r < model.covariance().rows(); ++r) {
    for (Eigen::Index c = 0; c < model.covariance().cols(); ++c) cov.push_back(model.covariance()(r, c));
  }
  doc["continuous"] = model.continuous_features();
  doc["covariance"] = cov;
  doc["regularization"] = model.regularization();
  nlohmann::json levels = nlohmann::json::object();
  for (std::size_t f = 0; f < model.num_features(); ++f) {
    if (model.features().is_categorical(f)) levels[model.features()[f].name] = model.level_frequencies(f);
  }
  doc["level_frequencies"] = levels;
  return doc;
}

GaussianModel gaussian_from_json(const nlohmann::json& doc) {
  try {
    auto space = feature_space_from_json(doc.at("features"));
    const auto mean_v = doc.at("mean").get<std::vector<double>>();
    const auto cov_v = doc.at("covariance").get<std::vector<double>>();
    std::size_t nc = 0;
    for (std::size_t f = 0; f < space.size(); ++f) nc += space.is_categorical(f) ? 0 : 1;
    if (cov_v.size() != nc * nc) throw ValidationError("covariance must hold " + std::to_string(nc * nc) + " entries");
    Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(mean_v.data(), static_cast<Eigen::Index>(mean_v.size()));
    Eigen::MatrixXd cov(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nc));
    for (std::size_t r = 0; r < nc; ++r) {
      for (std::size_t c = 0; c < nc; ++c) cov(r, c) = cov_v[r * nc + c];
    }
    std::vector<std::vector<double>> levels(space.size());
    if (doc.contains("level_frequencies")) {
      for (const auto& [name, freq] : doc["level_frequencies"].items()) {
        levels[space.index_of(name)] = freq.get<std::vector<double>>();
      }
    }
    return GaussianModel(std::move(space), std::move(mean), std::move(cov), std::move(levels),
                         doc.value("regularization", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace cshap
