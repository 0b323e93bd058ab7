#include "crowdtex/dyntex.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "crowdtex/rng.hpp"

namespace crowdtex {

namespace {

LdsParams degenerate_params(int n, int d, Eigen::VectorXd y_mean) {
    LdsParams params;
    params.n = n;
    params.d = d;
    params.A = Eigen::MatrixXd::Zero(n, n);
    params.C = Eigen::MatrixXd::Identity(d, n);
    params.y_mean = std::move(y_mean);
    params.state_noise_scale = Eigen::VectorXd::Zero(n);
    params.obs_noise_var = 0.0;
    params.recon_error = 0.0;
    return params;
}

} // namespace

LdsParams fit_lds(const Cube& cube, int n) {
    const int d = cube.p * cube.p;
    const int q = cube.q;
    if (n < 1 || n > std::min(d, q - 1)) {
        throw std::invalid_argument("fit_lds: state dimension " + std::to_string(n) +
                                    " outside [1, min(d, q-1)] = [1, " +
                                    std::to_string(std::min(d, q - 1)) + "]");
    }

    // Column t is slice t flattened; the cube layout keeps slices contiguous.
    Eigen::MatrixXd Y(d, q);
    for (int t = 0; t < q; ++t) {
        Y.col(t) = Eigen::Map<const Eigen::VectorXd>(cube.data.data() +
                                                     static_cast<std::size_t>(t) * d, d);
    }
    const Eigen::VectorXd y_mean = Y.rowwise().mean();
    Eigen::MatrixXd Yc = Y.colwise() - y_mean;

    const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
    if (Yc.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
        return degenerate_params(n, d, y_mean);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Yc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    LdsParams params;
    params.n = n;
    params.d = d;
    params.C = svd.matrixU().leftCols(n);
    params.y_mean = y_mean;

    // States X = Sigma_n V_n^T, then A from one-step least squares.
    const Eigen::MatrixXd X =
        svd.singularValues().head(n).asDiagonal() * svd.matrixV().leftCols(n).transpose();
    const Eigen::MatrixXd X1 = X.leftCols(q - 1);
    const Eigen::MatrixXd X2 = X.rightCols(q - 1);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X1.transpose());
    params.A = cod.solve(X2.transpose()).transpose();

    const Eigen::MatrixXd state_residual = X2 - params.A * X1;
    params.state_noise_scale.resize(n);
    for (int i = 0; i < n; ++i) {
        params.state_noise_scale(i) = std::sqrt(state_residual.row(i).squaredNorm() / (q - 1));
    }

    const Eigen::MatrixXd obs_residual = Yc - params.C * X;
    params.obs_noise_var = obs_residual.squaredNorm() / (static_cast<double>(d) * q);
    params.recon_error = std::sqrt(params.obs_noise_var);
    return params;
}

Cube simulate_lds(const LdsParams& params, int q, std::uint64_t seed,
                  const std::optional<Eigen::VectorXd>& initial_state) {
    if (q < 1) {
        throw std::invalid_argument("simulate_lds: q must be >= 1");
    }
    const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(params.d))));
    if (p * p != params.d) {
        throw std::invalid_argument("simulate_lds: observation dimension " +
                                    std::to_string(params.d) + " is not a square");
    }
    if (initial_state && initial_state->size() != params.n) {
        throw std::invalid_argument("simulate_lds: initial state has wrong dimension");
    }

    Rng rng(seed);
    auto draw_state_noise = [&]() {
        Eigen::VectorXd v(params.n);
        for (int i = 0; i < params.n; ++i) {
            v(i) = params.state_noise_scale(i) * rng.normal();
        }
        return v;
    };

    Eigen::VectorXd x = initial_state ? *initial_state : draw_state_noise();
    const double obs_noise_std = std::sqrt(params.obs_noise_var);

    Cube cube;
    cube.p = p;
    cube.q = q;
    cube.data.resize(static_cast<std::size_t>(params.d) * q);
    for (int t = 0; t < q; ++t) {
        Eigen::VectorXd y = params.C * x + params.y_mean;
        for (int i = 0; i < params.d; ++i) {
            y(i) += obs_noise_std * rng.normal();
        }
        for (int i = 0; i < params.d; ++i) {
            cube.data[static_cast<std::size_t>(t) * params.d + i] = std::clamp(y(i), 0.0, 1.0);
        }
        x = params.A * x + draw_state_noise();
    }
    return cube;
}

FeatureVector lds_features(const LdsParams& params) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(params.A, /*computeEigenvectors=*/false);
    std::vector<double> mags(static_cast<std::size_t>(params.n));
    for (int i = 0; i < params.n; ++i) {
        mags[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()(i));
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());

    FeatureVector features(params.n + 4);
    for (int i = 0; i < params.n; ++i) {
        features(i) = mags[static_cast<std::size_t>(i)];
    }
    features(params.n) = mags.empty() ? 0.0 : mags.front(); // spectral radius
    features(params.n + 1) = params.recon_error;
    features(params.n + 2) = params.state_noise_scale.size() > 0
                                 ? params.state_noise_scale.mean()
                                 : 0.0;
    features(params.n + 3) = params.obs_noise_var;
    return features;
}

} // namespace crowdtex
