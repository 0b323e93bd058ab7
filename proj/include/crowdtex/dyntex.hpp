#ifndef CROWDTEX_DYNTEX_HPP
#define CROWDTEX_DYNTEX_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "crowdtex/cubes.hpp"

namespace crowdtex {

// Fitted dynamic-texture parameters for one cube: the linear system
//   x_{t+1} = A x_t + diag(state_noise_scale) v_t,   v_t ~ N(0, I)
//   y_t     = C x_t + y_mean + w_t,                  w_t ~ N(0, obs_noise_var I)
// with C column-orthonormal and d = p*p the flattened slice dimension.
struct LdsParams {
    int n = 0; // state dimension
    int d = 0; // observation dimension
    Eigen::MatrixXd A;                 // n x n
    Eigen::MatrixXd C;                 // d x n, C^T C = I
    Eigen::VectorXd y_mean;            // d
    Eigen::VectorXd state_noise_scale; // n, per-dimension innovation stddev
    double obs_noise_var = 0.0;
    double recon_error = 0.0; // RMS residual of C*X + y_mean against the data
};

// Per-cube feature vector fed to the Gaussian model.
using FeatureVector = Eigen::VectorXd;

// Subspace identification: SVD of the temporally centered d x q slice matrix
// gives C and the state trajectory; A is the least-squares one-step
// predictor. A zero-variance cube (all slices identical) yields degenerate
// params (A = 0, recon_error = 0) instead of an error so static background
// flows through. Requires 1 <= n <= min(d, q-1).
LdsParams fit_lds(const Cube& cube, int n);

// Runs the system forward for q frames and reshapes observations into a
// p x p x q cube, clamped to [0,1]. x_0 is drawn from the state noise
// distribution unless initial_state overrides it (needed to excite the
// dynamics when the noise scales are zero). Deterministic per seed.
Cube simulate_lds(const LdsParams& params, int q, std::uint64_t seed,
                  const std::optional<Eigen::VectorXd>& initial_state = std::nullopt);

// Fixed-length spectral summary, D = n + 4:
//   [ |eig(A)| sorted descending (n), spectral radius, recon_error,
//     mean(state_noise_scale), obs_noise_var ]
// Eigenvalue magnitudes are similarity-invariant, so the features do not
// depend on the state basis the fit happened to pick.
FeatureVector lds_features(const LdsParams& params);

} // namespace crowdtex

#endif
