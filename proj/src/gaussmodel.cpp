#include "crowdtex/gaussmodel.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdtex/errors.hpp"

namespace crowdtex {

namespace {

using nlohmann::json;

constexpr int kModelSchemaVersion = 1;

void require_finite(const Eigen::MatrixXd& rows, const char* op) {
    if (!rows.allFinite()) {
        throw NumericError(std::string(op) + ": non-finite feature value");
    }
}

// Mean and 1/(n-1) sample covariance of a row-major batch, ridge-free.
void batch_stats(const Eigen::MatrixXd& rows, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
    const auto n = rows.rows();
    mu = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mu.transpose();
    sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace

GaussianModel fit_gaussian(const Eigen::MatrixXd& features) {
    const auto L = features.rows();
    const auto D = features.cols();
    if (L < 2) {
        throw std::invalid_argument("fit_gaussian: need at least 2 rows, got " +
                                    std::to_string(L));
    }
    if (D < 1) {
        throw std::invalid_argument("fit_gaussian: need at least 1 feature column");
    }
    require_finite(features, "fit_gaussian");

    GaussianModel model;
    model.dim = static_cast<int>(D);
    model.m = L;
    Eigen::MatrixXd sample_cov;
    batch_stats(features, model.mu, sample_cov);
    model.sigma = sample_cov + kCovarianceRidge * Eigen::MatrixXd::Identity(D, D);

    // Per-feature stddev keeps the 1/L population form.
    const Eigen::MatrixXd centered = features.rowwise() - model.mu.transpose();
    model.per_feature_sigma =
        (centered.array().square().colwise().sum() / static_cast<double>(L)).sqrt();
    return model;
}

double mahalanobis(const GaussianModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim) {
        throw std::invalid_argument("mahalanobis: feature dimension " +
                                    std::to_string(x.size()) + " does not match model dim " +
                                    std::to_string(model.dim));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(model.sigma);
    if (ldlt.info() != Eigen::Success) {
        throw NumericError("mahalanobis: covariance factorization failed");
    }
    const Eigen::VectorXd diff = x - model.mu;
    const double score = diff.dot(ldlt.solve(diff));
    return std::max(score, 0.0);
}

GaussianModel merge_models(const GaussianModel& a, const Eigen::MatrixXd& b_features) {
    if (b_features.cols() != a.dim) {
        throw std::invalid_argument("merge_models: batch dimension " +
                                    std::to_string(b_features.cols()) +
                                    " does not match model dim " + std::to_string(a.dim));
    }
    const auto n = b_features.rows();
    if (n < 2) {
        throw std::invalid_argument("merge_models: need at least 2 batch rows, got " +
                                    std::to_string(n));
    }
    require_finite(b_features, "merge_models");

    Eigen::VectorXd mu_b;
    Eigen::MatrixXd sigma_b;
    batch_stats(b_features, mu_b, sigma_b);

    const double m = static_cast<double>(a.m);
    const double nn = static_cast<double>(n);

    GaussianModel merged;
    merged.dim = a.dim;
    merged.m = a.m + n;
    merged.mu = (m * a.mu + nn * mu_b) / (m + nn);
    // The (m-1) vs n weighting is asymmetric by definition; applied verbatim.
    merged.sigma = ((m - 1.0) * a.sigma + nn * sigma_b) / (m + nn - 1.0);
    merged.per_feature_sigma = merged.sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
    return merged;
}

AnomalyDecision decide(const GaussianModel& model, const Eigen::VectorXd& x, double threshold) {
    AnomalyDecision decision;
    decision.score = mahalanobis(model, x);
    decision.threshold = threshold;
    decision.is_anomalous = decision.score > threshold;
    return decision;
}

double calibrate_threshold(const GaussianModel& model, const Eigen::MatrixXd& training_features,
                           double percentile) {
    if (training_features.rows() < 1) {
        throw std::invalid_argument("calibrate_threshold: empty training set");
    }
    if (!(percentile > 0.0) || percentile > 100.0) {
        throw std::invalid_argument("calibrate_threshold: percentile must lie in (0, 100]");
    }
    std::vector<double> scores(static_cast<std::size_t>(training_features.rows()));
    for (Eigen::Index i = 0; i < training_features.rows(); ++i) {
        scores[static_cast<std::size_t>(i)] =
            mahalanobis(model, training_features.row(i).transpose());
    }
    std::sort(scores.begin(), scores.end());
    const double rank = (percentile / 100.0) * static_cast<double>(scores.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const auto hi = std::min(lo + 1, scores.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return scores[lo] + frac * (scores[hi] - scores[lo]);
}

json gaussian_model_to_json(const GaussianModel& model) {
    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["dim"] = model.dim;
    doc["m"] = model.m;
    doc["mu"] = to_vector(model.mu);
    std::vector<double> sigma_rm;
    sigma_rm.reserve(static_cast<std::size_t>(model.dim) * model.dim);
    for (int r = 0; r < model.dim; ++r) {
        for (int c = 0; c < model.dim; ++c) {
            sigma_rm.push_back(model.sigma(r, c));
        }
    }
    doc["sigma"] = sigma_rm;
    doc["per_feature_sigma"] = to_vector(model.per_feature_sigma);
    return doc;
}

GaussianModel gaussian_model_from_json(const json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kModelSchemaVersion) {
            throw DataError("gaussian model schema_version " + std::to_string(version) +
                            " is not supported (want " + std::to_string(kModelSchemaVersion) +
                            ")");
        }
        GaussianModel model;
        model.dim = doc.at("dim").get<int>();
        model.m = doc.at("m").get<std::int64_t>();
        const auto mu = doc.at("mu").get<std::vector<double>>();
        const auto sigma = doc.at("sigma").get<std::vector<double>>();
        const auto pfs = doc.at("per_feature_sigma").get<std::vector<double>>();
        const auto d = static_cast<std::size_t>(model.dim);
        if (model.dim < 1 || mu.size() != d || pfs.size() != d || sigma.size() != d * d) {
            throw DataError("gaussian model document has inconsistent dimensions");
        }
        if (model.m < 1) {
            throw DataError("gaussian model sample count must be >= 1");
        }
        model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), model.dim);
        model.per_feature_sigma = Eigen::Map<const Eigen::VectorXd>(pfs.data(), model.dim);
        model.sigma.resize(model.dim, model.dim);
        for (int r = 0; r < model.dim; ++r) {
            for (int c = 0; c < model.dim; ++c) {
                model.sigma(r, c) = sigma[static_cast<std::size_t>(r) * d + c];
            }
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed gaussian model document: ") + e.what());
    }
}

} // namespace crowdtex
