#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pricecast/errors.hpp"
#include "pricecast/simplex.hpp"

namespace pricecast {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaBounds {
    int p_max = 5;
    int d_max = 2;
    int q_max = 5;
    /// Candidates with an AR or MA root closer to the unit circle than this are
    /// not admitted to the grid (near-unit-root fits on levels otherwise win the
    /// AIC comparison against the differenced model about half the time).
    double min_root_modulus = 1.01;
};

/// y_t = c + sum phi_i y_{t-i} + e_t + sum theta_j e_{t-j} on the d-times
/// differenced series.
struct ArimaModel {
    ArimaOrder order;
    Eigen::VectorXd phi;
    Eigen::VectorXd theta;
    double intercept = 0.0;
    double sigma2 = 1.0;
    Eigen::Index n_obs = 0;  // residuals entering the sum of squares
    double sse = 0.0;
    double aic = 0.0;
    int evaluations = 0;
    std::vector<std::string> warnings;

    /// Process mean of the differenced series, c / (1 - sum phi).
    double mean() const;
};

enum class ForecastMode { Static, Rolling };

Eigen::VectorXd difference(const Eigen::VectorXd& series, int d);

/// Inverse of difference(): `anchors` are the d original values immediately
/// preceding the first differenced value.
Eigen::VectorXd undifference(const Eigen::VectorXd& diffed, const Eigen::VectorXd& anchors, int d);

/// Gaussian CSS form: n ln(sse / n) + 2k.
double aic(double sse, Eigen::Index n, int k);

/// Smallest modulus among the roots of 1 - a_1 z - ... - a_p z^p
/// (infinity for an empty or all-zero polynomial).
double min_root_modulus(const Eigen::VectorXd& a);

/// Conditional residuals: e_t = 0 for t < p, otherwise the ARMA recursion.
Eigen::VectorXd css_residuals(const Eigen::VectorXd& z, double intercept, const Eigen::VectorXd& phi,
                              const Eigen::VectorXd& theta);

struct ArmaFitOptions {
    /// Leading residuals excluded from the sum of squares; -1 means p.
    Eigen::Index condition = -1;
    SimplexOptions simplex{.max_evaluations = 40000, .f_tolerance = 1e-11, .x_tolerance = 1e-7,
                           .initial_step = 0.1, .restarts = 1};
};

/// Conditional-sum-of-squares ARMA(p, q) fit. Starts from Hannan-Rissanen
/// estimates and refines them with Nelder-Mead.
ArimaModel fit_arma(const Eigen::VectorXd& series, int p, int q, const ArmaFitOptions& options = {});

/// Differences `series` d times and fits ARMA(p, q).
ArimaModel fit_arima(const Eigen::VectorXd& series, ArimaOrder order, const ArmaFitOptions& options = {});

struct CandidateFit {
    ArimaOrder order;
    bool ok = false;
    double aic = 0.0;
    std::string error;
};

struct AutoArimaResult {
    ArimaModel model;
    std::vector<CandidateFit> candidates;
};

/// Exhaustive AIC grid over p <= p_max, d <= d_max, q <= q_max. All
/// candidates are scored on the same target observations. Ties prefer smaller
/// p + q, then smaller d, then smaller p. `threads` = 0 uses the hardware
/// concurrency; results do not depend on the thread count.
AutoArimaResult auto_arima(const Eigen::VectorXd& series, const ArimaBounds& bounds = {}, unsigned threads = 0);

/// Forecasts in the units of `history`.
///
/// Static: one origin at the end of `history`, future innovations zero.
/// Rolling: step k is the one-step forecast from history plus realized[0, k);
/// `realized` must hold at least steps - 1 values.
Eigen::VectorXd forecast(const ArimaModel& model, const Eigen::VectorXd& history, Eigen::Index steps,
                         ForecastMode mode = ForecastMode::Static, const Eigen::VectorXd& realized = {});

}  // namespace pricecast
