#include "pricecast/arima.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace pricecast {

namespace {

// Levinson step-down (Schur-Cohn) test: true when every root of
// 1 - a_1 z - ... - a_p z^p lies strictly outside the unit circle.
bool stable(const Eigen::VectorXd& a) {
    Eigen::VectorXd c = a;
    for (Eigen::Index k = c.size(); k >= 1; --k) {
        const double kappa = c(k - 1);
        if (!(std::abs(kappa) < 1.0)) return false;
        if (k == 1) break;
        const double denom = 1.0 - kappa * kappa;
        Eigen::VectorXd next(k - 1);
        for (Eigen::Index i = 0; i < k - 1; ++i) next(i) = (c(i) + kappa * c(k - 2 - i)) / denom;
        c = std::move(next);
    }
    return true;
}

Eigen::VectorXd shrink_until_stable(Eigen::VectorXd a) {
    for (int i = 0; i < 60 && !stable(a); ++i) a *= 0.9;
    if (!stable(a)) a.setZero();
    return a;
}

Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) { return X.colPivHouseholderQr().solve(y); }

struct ArmaStart {
    double mean = 0.0;
    Eigen::VectorXd phi, theta;
};

// Two-stage Hannan-Rissanen: a long AR supplies innovation proxies, then
// z_t is regressed on its own lags and the lagged proxies.
ArmaStart hannan_rissanen(const Eigen::VectorXd& z, int p, int q) {
    const Eigen::Index n = z.size();
    ArmaStart start{z.mean(), Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(q)};
    if (p == 0 && q == 0) return start;

    Eigen::VectorXd innovations = Eigen::VectorXd::Zero(n);
    Eigen::Index m = 0;
    if (q > 0) {
        m = std::min<Eigen::Index>(std::max<Eigen::Index>(p + q + 5, 10), (n - 1) / 3);
        const Eigen::Index rows = n - m;
        Eigen::MatrixXd X(rows, m + 1);
        X.col(0).setOnes();
        for (Eigen::Index i = 1; i <= m; ++i) X.col(i) = z.segment(m - i, rows);
        const Eigen::VectorXd beta = ols(X, z.tail(rows));
        innovations.tail(rows) = z.tail(rows) - X * beta;
    }

    const Eigen::Index first = std::max<Eigen::Index>(p, m + q);
    const Eigen::Index rows = n - first;
    if (rows <= p + q + 1) return start;
    Eigen::MatrixXd X(rows, 1 + p + q);
    X.col(0).setOnes();
    for (int i = 1; i <= p; ++i) X.col(i) = z.segment(first - i, rows);
    for (int j = 1; j <= q; ++j) X.col(p + j) = innovations.segment(first - j, rows);
    const Eigen::VectorXd beta = ols(X, z.tail(rows));
    if (!beta.allFinite()) return start;

    const double ar_sum = 1.0 - beta.segment(1, p).sum();
    if (std::abs(ar_sum) > 1e-3) start.mean = beta(0) / ar_sum;
    start.phi = shrink_until_stable(beta.segment(1, p));
    start.theta = -shrink_until_stable(-beta.segment(1 + p, q));
    return start;
}

}  // namespace

double ArimaModel::mean() const {
    const double ar_sum = 1.0 - phi.sum();
    if (ar_sum == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return intercept / ar_sum;
}

Eigen::VectorXd difference(const Eigen::VectorXd& series, int d) {
    if (d < 0) throw DataError("difference: negative order");
    if (series.size() <= d)
        throw DataError(fmt::format("difference: series of length {} too short for d = {}", series.size(), d));
    Eigen::VectorXd out = series;
    for (int k = 0; k < d; ++k) {
        const Eigen::Index m = out.size() - 1;
        out = (out.tail(m) - out.head(m)).eval();
    }
    return out;
}

Eigen::VectorXd undifference(const Eigen::VectorXd& diffed, const Eigen::VectorXd& anchors, int d) {
    if (d < 0) throw DataError("undifference: negative order");
    if (anchors.size() != d)
        throw DataError(fmt::format("undifference: expected {} anchors, got {}", d, anchors.size()));
    Eigen::VectorXd out = diffed;
    for (int k = d - 1; k >= 0; --k) {
        Eigen::VectorXd level = anchors;
        for (int j = 0; j < k; ++j) {
            const Eigen::Index m = level.size() - 1;
            level = (level.tail(m) - level.head(m)).eval();
        }
        double running = level(level.size() - 1);
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            running += out(i);
            out(i) = running;
        }
    }
    return out;
}

double aic(double sse, Eigen::Index n, int k) {
    if (!(sse > 0.0) || n <= k) throw DataError("aic: requires sse > 0 and n > k");
    const double nd = static_cast<double>(n);
    return nd * std::log(sse / nd) + 2.0 * k;
}

double min_root_modulus(const Eigen::VectorXd& a) {
    Eigen::Index p = a.size();
    while (p > 0 && a(p - 1) == 0.0) --p;
    if (p == 0) return std::numeric_limits<double>::infinity();
    // Roots of the lag polynomial are reciprocals of the companion eigenvalues.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    companion.row(0) = a.head(p).transpose();
    if (p > 1) companion.bottomLeftCorner(p - 1, p - 1).setIdentity();
    const Eigen::VectorXcd eig = companion.eigenvalues();
    const double largest = eig.cwiseAbs().maxCoeff();
    return largest > 0.0 ? 1.0 / largest : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd css_residuals(const Eigen::VectorXd& z, double intercept, const Eigen::VectorXd& phi,
                              const Eigen::VectorXd& theta) {
    const Eigen::Index n = z.size(), p = phi.size(), q = theta.size();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (Eigen::Index t = p; t < n; ++t) {
        double v = z(t) - intercept;
        for (Eigen::Index i = 1; i <= p; ++i) v -= phi(i - 1) * z(t - i);
        for (Eigen::Index j = 1; j <= q && j <= t; ++j) v -= theta(j - 1) * e(t - j);
        e(t) = v;
    }
    return e;
}

ArimaModel fit_arma(const Eigen::VectorXd& series, int p, int q, const ArmaFitOptions& options) {
    if (p < 0 || q < 0) throw DataError("fit_arma: negative order");
    const Eigen::Index n = series.size();
    const Eigen::Index min_len = 10 * static_cast<Eigen::Index>(p + q + 1);
    if (n < min_len) throw DataError(fmt::format("fit_arma: ARMA({},{}) needs {} observations, got {}", p, q, min_len, n));
    if (!series.allFinite()) throw DataError("fit_arma: non-finite observations");

    const Eigen::Index cond = options.condition < 0 ? p : options.condition;
    if (cond < p || cond >= n - (p + q + 2)) throw DataError("fit_arma: invalid conditioning length");
    const Eigen::Index n_eff = n - cond;

    const double zbar = series.mean();
    const double sd = std::sqrt((series.array() - zbar).square().sum() / static_cast<double>(n));
    if (!(sd > 0.0) || series.maxCoeff() == series.minCoeff())
        throw DataError("fit_arma: degenerate series (zero variance)");

    // Parameter vector: [(mu - zbar) / sd, phi..., theta...]. Working with the
    // mean instead of the intercept keeps the simplex well scaled.
    auto unpack = [&](const Eigen::VectorXd& u, double& intercept, Eigen::VectorXd& phi, Eigen::VectorXd& theta) {
        phi = u.segment(1, p);
        theta = u.segment(1 + p, q);
        const double mu = zbar + sd * u(0);
        intercept = mu * (1.0 - phi.sum());
    };

    const double scale = sd * sd * static_cast<double>(n_eff);
    auto objective = [&](const Eigen::VectorXd& u) {
        double c;
        Eigen::VectorXd phi, theta;
        unpack(u, c, phi, theta);
        if (!stable(phi) || !stable(-theta)) return std::numeric_limits<double>::infinity();
        const Eigen::VectorXd e = css_residuals(series, c, phi, theta);
        return e.tail(n_eff).squaredNorm() / scale;
    };

    const ArmaStart hr = hannan_rissanen(series, p, q);
    Eigen::VectorXd u0(1 + p + q);
    u0(0) = (hr.mean - zbar) / sd;
    u0.segment(1, p) = hr.phi;
    u0.segment(1 + p, q) = hr.theta;
    if (!std::isfinite(objective(u0))) {
        u0.setZero();
    }

    const SimplexResult opt = nelder_mead(objective, u0, options.simplex);

    ArimaModel model;
    model.order = ArimaOrder{p, 0, q};
    unpack(opt.x, model.intercept, model.phi, model.theta);
    model.evaluations = opt.evaluations;
    model.sse = opt.value * scale;
    model.n_obs = n_eff;

    if (!opt.converged)
        throw FitError(fmt::format("fit_arma: ARMA({},{}) did not converge after {} evaluations "
                                   "(best sse {:.6g}, intercept {:.6g})",
                                   p, q, opt.evaluations, model.sse, model.intercept));
    if (!std::isfinite(model.sse) || !(model.sse > 0.0))
        throw FitError(fmt::format("fit_arma: ARMA({},{}) produced invalid sse {}", p, q, model.sse));

    const double ar_root = min_root_modulus(model.phi);
    if (ar_root < 1.001)
        throw FitError(fmt::format("fit_arma: ARMA({},{}) is non-stationary (AR root modulus {:.6f})", p, q, ar_root));
    if (ar_root < 1.05) model.warnings.push_back(fmt::format("AR root modulus {:.4f} is close to the unit circle", ar_root));
    const double ma_root = min_root_modulus(-model.theta);
    if (ma_root < 1.001) model.warnings.push_back(fmt::format("MA root modulus {:.4f}: near non-invertible", ma_root));

    model.sigma2 = model.sse / static_cast<double>(n_eff);
    model.aic = aic(model.sse, n_eff, p + q + 2);
    return model;
}

ArimaModel fit_arima(const Eigen::VectorXd& series, ArimaOrder order, const ArmaFitOptions& options) {
    ArimaModel m = fit_arma(difference(series, order.d), order.p, order.q, options);
    m.order.d = order.d;
    return m;
}

AutoArimaResult auto_arima(const Eigen::VectorXd& series, const ArimaBounds& bounds, unsigned threads) {
    if (bounds.p_max < 0 || bounds.d_max < 0 || bounds.q_max < 0) throw DataError("auto_arima: negative bounds");
    const Eigen::Index needed = bounds.d_max + 10 * static_cast<Eigen::Index>(bounds.p_max + bounds.q_max + 1) +
                                bounds.p_max;
    if (series.size() < needed)
        throw DataError(fmt::format("auto_arima: series of length {} too short for bounds ({},{},{}); need {}",
                                    series.size(), bounds.p_max, bounds.d_max, bounds.q_max, needed));

    std::vector<ArimaOrder> grid;
    for (int d = 0; d <= bounds.d_max; ++d)
        for (int p = 0; p <= bounds.p_max; ++p)
            for (int q = 0; q <= bounds.q_max; ++q) grid.push_back({p, d, q});

    std::vector<Eigen::VectorXd> diffed;
    for (int d = 0; d <= bounds.d_max; ++d) diffed.push_back(difference(series, d));

    std::vector<CandidateFit> fits(grid.size());
    std::vector<std::optional<ArimaModel>> models(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            const ArimaOrder o = grid[i];
            fits[i].order = o;
            try {
                ArmaFitOptions opts;
                opts.condition = bounds.p_max + bounds.d_max - o.d;
                ArimaModel m = fit_arma(diffed[static_cast<std::size_t>(o.d)], o.p, o.q, opts);
                m.order.d = o.d;
                const double ar = min_root_modulus(m.phi), ma = min_root_modulus(-m.theta);
                if (ar < bounds.min_root_modulus || ma < bounds.min_root_modulus) {
                    fits[i].error = fmt::format("root modulus {:.4f} inside admission margin {:.4f}",
                                                std::min(ar, ma), bounds.min_root_modulus);
                    continue;
                }
                fits[i].ok = true;
                fits[i].aic = m.aic;
                models[i] = std::move(m);
            } catch (const std::exception& e) {
                fits[i].error = e.what();
            }
        }
    };

    unsigned count = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    count = std::min<unsigned>(count, static_cast<unsigned>(grid.size()));
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    }

    std::optional<std::size_t> best;
    auto key = [&](std::size_t i) {
        const auto& o = fits[i].order;
        return std::tuple(fits[i].aic, o.p + o.q, o.d, o.p);
    };
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (!fits[i].ok) continue;
        if (!best || key(i) < key(*best)) best = i;
    }
    if (!best) {
        std::string reason = fits.empty() ? "empty grid" : fits.front().error;
        throw FitError(fmt::format("auto_arima: all {} candidates failed (first: {})", fits.size(), reason));
    }
    return AutoArimaResult{std::move(*models[*best]), std::move(fits)};
}

Eigen::VectorXd forecast(const ArimaModel& model, const Eigen::VectorXd& history, Eigen::Index steps,
                         ForecastMode mode, const Eigen::VectorXd& realized) {
    const int p = model.order.p, d = model.order.d, q = model.order.q;
    if (model.phi.size() != p || model.theta.size() != q) throw DataError("forecast: coefficient count mismatch");
    if (steps < 0) throw DataError("forecast: negative step count");
    const Eigen::Index needed = std::max<Eigen::Index>(std::max(p, q) + d, d + 1);
    if (history.size() < needed)
        throw DataError(fmt::format("forecast: history of length {} too short; need {}", history.size(), needed));

    auto static_path = [&](const Eigen::VectorXd& h, Eigen::Index count) {
        const Eigen::VectorXd z = difference(h, d);
        const Eigen::Index n = z.size();
        Eigen::VectorXd zf(n + count), ef = Eigen::VectorXd::Zero(n + count);
        zf.head(n) = z;
        ef.head(n) = css_residuals(z, model.intercept, model.phi, model.theta);
        for (Eigen::Index t = n; t < n + count; ++t) {
            double v = model.intercept;
            for (int i = 1; i <= p; ++i) v += model.phi(i - 1) * zf(t - i);
            for (int j = 1; j <= q; ++j)
                if (t - j >= 0) v += model.theta(j - 1) * ef(t - j);
            zf(t) = v;
        }
        return undifference(zf.tail(count), h.tail(d), d);
    };

    if (mode == ForecastMode::Static) return static_path(history, steps);

    if (realized.size() < steps - 1)
        throw DataError(fmt::format("forecast: rolling mode needs {} realized values, got {}", steps - 1, realized.size()));
    Eigen::VectorXd out(steps);
    Eigen::VectorXd h(history.size() + std::max<Eigen::Index>(steps - 1, 0));
    h.head(history.size()) = history;
    for (Eigen::Index k = 0; k < steps; ++k) {
        if (k > 0) h(history.size() + k - 1) = realized(k - 1);
        out(k) = static_path(h.head(history.size() + k), 1)(0);
    }
    return out;
}

}  // namespace pricecast
