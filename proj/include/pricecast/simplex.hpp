#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace pricecast {

struct SimplexOptions {
    int max_evaluations = 20000;
    /// Relative spread of vertex values at which a pass is considered converged.
    double f_tolerance = 1e-10;
    /// Largest vertex distance from the best vertex at convergence.
    double x_tolerance = 1e-7;
    double initial_step = 0.1;
    /// Fresh simplexes built around the optimum after the first pass converges.
    int restarts = 1;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    double start_value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead downhill simplex with dimension-adaptive coefficients
/// (reflection 1, expansion 1 + 2/n, contraction 0.75 - 1/2n, shrink 1 - 1/n).
/// Non-finite objective values are treated as +inf, so infeasible regions can
/// be expressed by returning infinity. The best vertex value never increases.
template <typename Objective>
SimplexResult nelder_mead(Objective&& objective, const Eigen::VectorXd& start, const SimplexOptions& options = {}) {
    const Eigen::Index n = start.size();
    const double inf = std::numeric_limits<double>::infinity();
    SimplexResult result;
    result.x = start;

    auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : inf;
    };

    result.value = result.start_value = eval(start);
    if (n == 0) {
        result.converged = true;
        return result;
    }

    const double nd = static_cast<double>(n);
    const double alpha = 1.0, gamma = 1.0 + 2.0 / nd;
    const double rho = 0.75 - 0.5 / nd, sigma = 1.0 - 1.0 / nd;

    for (int pass = 0; pass <= options.restarts; ++pass) {
        std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(n + 1), result.x);
        std::vector<double> fx(static_cast<std::size_t>(n + 1), result.value);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& v = x[static_cast<std::size_t>(i + 1)];
            const double step = options.initial_step * std::max(1.0, std::abs(v(i)));
            v(i) += step;
            fx[static_cast<std::size_t>(i + 1)] = eval(v);
        }

        std::vector<std::size_t> order(x.size());
        bool pass_converged = false;
        while (result.evaluations < options.max_evaluations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

            const double fb = fx[best], fw = fx[worst];
            double spread = 0.0;
            for (const auto& v : x) spread = std::max(spread, (v - x[best]).lpNorm<Eigen::Infinity>());
            if (std::isfinite(fw) && std::abs(fw - fb) <= options.f_tolerance * (std::abs(fb) + options.f_tolerance) &&
                spread <= options.x_tolerance * std::max(1.0, x[best].lpNorm<Eigen::Infinity>())) {
                pass_converged = true;
                break;
            }

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += x[order[k]];
            centroid /= nd;

            const Eigen::VectorXd xr = centroid + alpha * (centroid - x[worst]);
            const double fr = eval(xr);
            if (fr < fb) {
                const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
                const double fe = eval(xe);
                if (fe < fr) {
                    x[worst] = xe;
                    fx[worst] = fe;
                } else {
                    x[worst] = xr;
                    fx[worst] = fr;
                }
            } else if (fr < fx[second]) {
                x[worst] = xr;
                fx[worst] = fr;
            } else {
                const bool outside = fr < fw;
                const Eigen::VectorXd xc =
                    outside ? Eigen::VectorXd(centroid + rho * (xr - centroid)) : Eigen::VectorXd(centroid + rho * (x[worst] - centroid));
                const double fc = eval(xc);
                if (fc < (outside ? fr : fw)) {
                    x[worst] = xc;
                    fx[worst] = fc;
                } else {
                    for (std::size_t k = 0; k < x.size(); ++k) {
                        if (k == best) continue;
                        x[k] = x[best] + sigma * (x[k] - x[best]);
                        fx[k] = eval(x[k]);
                    }
                }
            }
        }

        const auto best_it = std::min_element(fx.begin(), fx.end());
        const auto best_idx = static_cast<std::size_t>(best_it - fx.begin());
        if (fx[best_idx] <= result.value) {
            result.value = fx[best_idx];
            result.x = x[best_idx];
        }
        result.converged = pass_converged;
        if (!pass_converged) break;
    }
    return result;
}

}  // namespace pricecast
