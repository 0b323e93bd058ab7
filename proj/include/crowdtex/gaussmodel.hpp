#ifndef CROWDTEX_GAUSSMODEL_HPP
#define CROWDTEX_GAUSSMODEL_HPP

#include <Eigen/Dense>
#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "crowdtex/dyntex.hpp"

namespace crowdtex {

// Ridge added to every fitted covariance; keeps constant-background feature
// batches invertible.
inline constexpr double kCovarianceRidge = 1e-6;

// Gaussian normalcy model over feature vectors. Two variance conventions
// coexist on purpose: per_feature_sigma uses the 1/L population form, the
// full covariance uses 1/(L-1) so the merge formula's (m-1) weighting is
// consistent. Scoring uses the full covariance.
struct GaussianModel {
    int dim = 0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;             // dim x dim, symmetric PSD
    Eigen::VectorXd per_feature_sigma; // population stddev per feature
    std::int64_t m = 0;                // sample count
};

struct AnomalyDecision {
    double score = 0.0;
    double threshold = 0.0;
    bool is_anomalous = false; // score > threshold, strictly
};

// Fits mean, per-feature population stddev, and the 1/(L-1) sample
// covariance plus kCovarianceRidge * I. Rows are observations. Requires
// L >= 2 finite rows; throws std::invalid_argument / NumericError otherwise.
GaussianModel fit_gaussian(const Eigen::MatrixXd& features);

// Squared Mahalanobis distance (x - mu)^T Sigma^-1 (x - mu), computed via a
// symmetric factorization solve (never an explicit inverse). Returns 0 at
// x = mu exactly.
double mahalanobis(const GaussianModel& model, const Eigen::VectorXd& x);

// Incremental merge of an existing model (m samples) with a fresh batch of
// n >= 2 rows:
//   mu_c    = (m mu_a + n mu_b) / (m + n)
//   sigma_c = ((m-1) sigma_a + n sigma_b) / (m + n - 1)
// sigma_b is the plain 1/(n-1) sample covariance of the batch (no ridge);
// the asymmetric (m-1)/n weighting is applied exactly as given. The result
// has m = a.m + n and per_feature_sigma = sqrt(diag(sigma_c)).
GaussianModel merge_models(const GaussianModel& a, const Eigen::MatrixXd& b_features);

AnomalyDecision decide(const GaussianModel& model, const Eigen::VectorXd& x, double threshold);

// Percentile (in (0,100]) of the training rows' Mahalanobis scores, linearly
// interpolated between order statistics.
double calibrate_threshold(const GaussianModel& model, const Eigen::MatrixXd& training_features,
                           double percentile);

// JSON document with keys schema_version, dim, m, mu, sigma (row-major),
// per_feature_sigma. Doubles survive the round trip exactly.
nlohmann::json gaussian_model_to_json(const GaussianModel& model);

// Rejects documents whose schema_version is not the current one.
GaussianModel gaussian_model_from_json(const nlohmann::json& doc);

} // namespace crowdtex

#endif
