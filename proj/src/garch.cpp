#include "pricecast/garch.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace pricecast {

namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

void check_finite(const Eigen::VectorXd& x, const char* what) {
    if (!x.allFinite()) throw DataError(fmt::format("{}: non-finite input", what));
}

// u = (ln(alpha0 / var), logit(persistence), logit(alpha1 / persistence))
GarchParams unpack(const Eigen::VectorXd& u, double var) {
    const double persistence = logistic(u(1));
    const double share = logistic(u(2));
    GarchParams p;
    p.alpha0 = var * std::exp(u(0));
    p.alpha1 = persistence * share;
    p.beta1 = persistence - p.alpha1;
    return p;
}

}  // namespace

Eigen::VectorXd garch_recursion(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0) {
    check_finite(residuals, "garch_recursion");
    if (!(sigma2_0 > 0.0) || !std::isfinite(sigma2_0)) throw DataError("garch_recursion: sigma2_0 must be positive");
    if (!std::isfinite(params.alpha0) || !std::isfinite(params.alpha1) || !std::isfinite(params.beta1))
        throw DataError("garch_recursion: non-finite parameters");
    Eigen::VectorXd out(residuals.size());
    double prev = sigma2_0;
    for (Eigen::Index t = 0; t < residuals.size(); ++t) {
        prev = params.alpha0 + params.alpha1 * residuals(t) * residuals(t) + params.beta1 * prev;
        out(t) = prev;
    }
    return out;
}

GarchState garch_filter(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0) {
    GarchState s;
    s.residuals = residuals;
    s.sigma2.resize(residuals.size());
    if (residuals.size() == 0) return s;
    const Eigen::VectorXd next = garch_recursion(params, residuals, sigma2_0);
    s.sigma2(0) = sigma2_0;
    s.sigma2.tail(residuals.size() - 1) = next.head(residuals.size() - 1);
    return s;
}

double garch_log_likelihood(const GarchParams& params, const Eigen::VectorXd& residuals, double sigma2_0) {
    double ll = 0.0;
    double s2 = sigma2_0;
    for (Eigen::Index t = 0; t < residuals.size(); ++t) {
        const double e2 = residuals(t) * residuals(t);
        if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
        ll -= 0.5 * (std::log(s2) + e2 / s2);
        s2 = params.alpha0 + params.alpha1 * e2 + params.beta1 * s2;
    }
    return ll;
}

GarchFit fit_garch11(const Eigen::VectorXd& residuals, const SimplexOptions& options) {
    if (residuals.size() < kGarchMinObservations)
        throw DataError(fmt::format("fit_garch11: need at least {} residuals, got {}", kGarchMinObservations,
                                    residuals.size()));
    check_finite(residuals, "fit_garch11");
    const double n = static_cast<double>(residuals.size());
    const double var = (residuals.array() - residuals.mean()).square().sum() / n;
    if (!(var > 0.0)) throw DataError("fit_garch11: residuals have zero variance");

    auto objective = [&](const Eigen::VectorXd& u) {
        return -garch_log_likelihood(unpack(u, var), residuals, var) / n;
    };

    Eigen::VectorXd u0(3);
    u0 << std::log(0.1), logit(0.9), logit(0.1 / 0.9);
    const SimplexResult opt = nelder_mead(objective, u0, options);
    if (!opt.converged)
        throw FitError(fmt::format("fit_garch11: no convergence after {} evaluations (best -loglik/n {:.8g})",
                                   opt.evaluations, opt.value));

    GarchFit fit;
    fit.params = unpack(opt.x, var);
    fit.sigma2_0 = var;
    fit.log_likelihood = -opt.value * n;
    fit.start_log_likelihood = -opt.start_value * n;
    fit.evaluations = opt.evaluations;
    fit.boundary = fit.params.persistence() >= 0.999;
    fit.state = garch_filter(fit.params, residuals, var);
    return fit;
}

Eigen::VectorXd forecast_variance(const GarchParams& params, double last_sigma2, double last_eps, Eigen::Index steps) {
    if (!std::isfinite(last_sigma2) || !std::isfinite(last_eps) || !(last_sigma2 > 0.0))
        throw DataError("forecast_variance: invalid last state");
    if (params.persistence() >= 1.0)
        throw DataError("forecast_variance: alpha1 + beta1 >= 1 has no finite long-run variance");
    Eigen::VectorXd out(std::max<Eigen::Index>(steps, 0));
    double s2 = params.alpha0 + params.alpha1 * last_eps * last_eps + params.beta1 * last_sigma2;
    for (Eigen::Index h = 0; h < out.size(); ++h) {
        out(h) = s2;
        s2 = params.alpha0 + params.persistence() * s2;
    }
    return out;
}

Eigen::VectorXd simulate_garch11(const GarchParams& params, Eigen::Index n, std::uint64_t seed) {
    if (params.persistence() >= 1.0) throw DataError("simulate_garch11: non-stationary parameters");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd eps(n);
    double s2 = params.alpha0 / (1.0 - params.persistence());
    for (Eigen::Index t = 0; t < n; ++t) {
        eps(t) = std::sqrt(s2) * normal(rng);
        s2 = params.alpha0 + params.alpha1 * eps(t) * eps(t) + params.beta1 * s2;
    }
    return eps;
}

}  // namespace pricecast
