#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "pricecast/errors.hpp"
#include "pricecast/simplex.hpp"

namespace pricecast {

/// sigma2_t = alpha0 + alpha1 * eps_{t-1}^2 + beta1 * sigma2_{t-1}
struct GarchParams {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;

    double persistence() const { return alpha1 + beta1; }
};

struct GarchState {
    Eigen::VectorXd residuals;
    Eigen::VectorXd sigma2;  // sigma2(t) is the variance paired with residuals(t)
};

/// out(k) is the variance one step after residual k, i.e. out(0) uses
/// (residuals(0), sigma2_0). Output length equals the residual length.
Eigen::VectorXd garch_recursion(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0);

/// Gaussian quasi log-likelihood sum -0.5 (ln s2_t + e_t^2 / s2_t), constant dropped.
double garch_log_likelihood(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0);

/// Conditional variance aligned with each residual (sigma2_0 first).
GarchState garch_filter(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0);

struct GarchFit {
    GarchParams params;
    double sigma2_0 = 0.0;
    double log_likelihood = 0.0;
    double start_log_likelihood = 0.0;
    int evaluations = 0;
    bool boundary = false;  // alpha1 + beta1 >= 0.999
    GarchState state;
};

inline constexpr Eigen::Index kGarchMinObservations = 200;

/// Quasi-maximum likelihood over a logistic parameterisation that keeps
/// alpha0 > 0, alpha1, beta1 >= 0 and alpha1 + beta1 < 1. The simplex starts at
/// (0.1 var, 0.1, 0.8) and sigma2_0 is the sample variance.
GarchFit fit_garch11(const Eigen::VectorXd& residuals, const SimplexOptions& options = {});

/// Multi-step variance forecast; converges to alpha0 / (1 - alpha1 - beta1).
Eigen::VectorXd forecast_variance(const GarchParams& params, double last_sigma2, double last_eps, Eigen::Index steps);

/// Gaussian GARCH(1,1) innovations, started at the long-run variance.
Eigen::VectorXd simulate_garch11(const GarchParams& params, Eigen::Index n, std::uint64_t seed);

}  // namespace pricecast
