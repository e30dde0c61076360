#include "pricecast/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace pricecast {

namespace {

class Normal {
public:
    explicit Normal(std::uint64_t seed) : rng_(seed) {}

    // Box-Muller on 53-bit uniforms; identical on every standard library.
    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::vector<Date> weekdays(Date start, Eigen::Index n) {
    std::vector<Date> out;
    out.reserve(static_cast<std::size_t>(n));
    std::chrono::sys_days day{start};
    while (static_cast<Eigen::Index>(out.size()) < n) {
        const std::chrono::weekday wd{day};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.emplace_back(day);
        day += std::chrono::days{1};
    }
    return out;
}

double round_to(double x, double step) {
    const double scale = std::round(1.0 / step);
    return std::round(x * scale) / scale;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_days < 2) throw DataError("synth: n_days must be >= 2");
    if (!(start_price > 0.0)) throw DataError("synth: start_price must be positive");
    if (!(volatility >= 0.0) || !std::isfinite(drift)) throw DataError("synth: invalid drift or volatility");
    if (!(regime_start >= 0.0 && regime_start <= 1.0)) throw DataError("synth: regime_start must be in [0, 1]");
    if (!(regime_vol_multiplier >= 0.0) || !std::isfinite(regime_drift_multiplier))
        throw DataError("synth: invalid regime multipliers");
    if (!start_date.ok()) throw DataError("synth: invalid start date");
}

TimeSeriesFrame synthesize(const SynthSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.n_days;
    const auto shift = static_cast<Eigen::Index>(std::floor(spec.regime_start * static_cast<double>(n)));

    // Independent streams so that adding a column never perturbs the price path.
    Normal price_noise(spec.seed);
    Normal bar_noise(spec.seed + 1);
    Normal aux_noise(spec.seed + 2);
    Normal macro_noise(spec.seed + 3);

    const std::vector<std::string> names{"PX_OPEN",  "PX_HIGH", "PX_LOW",  "PX_LAST", "PX_VOLUME",  "PE_RATIO",
                                         "VIX",      "USGG10YR", "NAPMPMI", "CONCCONF", "BETA_ADJ"};
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(names.size()), kMissing);
    const auto dates = weekdays(spec.start_date, n);

    double log_p = std::log(spec.start_price);
    double prev_close = spec.start_price;
    double vix = 16.0, yield = 2.6, pmi = 52.0, conf = 95.0, abs_ret_ewma = spec.volatility * 0.8;
    double log_eps = std::log(spec.start_price / 17.0);
    const double eps_growth = 0.06 / 252.0;

    for (Eigen::Index t = 0; t < n; ++t) {
        const bool shifted = t >= shift;
        const double mu = shifted ? spec.drift * spec.regime_drift_multiplier : spec.drift;
        const double sigma = shifted ? spec.volatility * spec.regime_vol_multiplier : spec.volatility;
        const double z = price_noise();
        const double ret = t == 0 ? 0.0 : mu + sigma * z;
        log_p += ret;
        const double close = std::exp(log_p);

        const double gap = sigma * 0.25 * bar_noise();
        const double open = t == 0 ? close : prev_close * std::exp(gap);
        const double range = sigma * 0.6 * std::abs(bar_noise());
        const double high = std::max(open, close) * std::exp(range);
        const double low = std::min(open, close) * std::exp(-sigma * 0.6 * std::abs(bar_noise()));
        const double volume = std::round(2.0e9 * std::exp(0.25 * bar_noise() + 8.0 * std::abs(ret)));

        abs_ret_ewma = 0.94 * abs_ret_ewma + 0.06 * std::abs(ret);
        vix += 0.05 * (16.0 * abs_ret_ewma / std::max(spec.volatility * 0.8, 1e-12) - vix) + 0.6 * aux_noise();
        vix = std::max(vix, 9.0);
        log_eps += eps_growth + 0.002 * aux_noise();
        yield += 0.02 * (2.6 - yield) + 0.04 * aux_noise();

        v(t, 0) = round_to(open, 1e-4);
        v(t, 1) = round_to(high, 1e-4);
        v(t, 2) = round_to(low, 1e-4);
        v(t, 3) = round_to(close, 1e-4);
        v(t, 4) = volume;
        v(t, 5) = round_to(close / std::exp(log_eps), 1e-4);
        v(t, 6) = round_to(vix, 1e-4);
        v(t, 7) = round_to(yield, 1e-4);
        const bool month_start = t == 0 || dates[static_cast<std::size_t>(t)].month() != dates[static_cast<std::size_t>(t - 1)].month();
        if (month_start) {
            pmi += 0.2 * (52.0 - pmi) + 1.2 * macro_noise();
            conf += 0.1 * (95.0 - conf) + 3.0 * macro_noise() + 200.0 * (ret + mu);
            v(t, 8) = round_to(pmi, 1e-2);
            v(t, 9) = round_to(conf, 1e-2);
        }
        v(t, 10) = 1.0;
        prev_close = close;
    }
    return TimeSeriesFrame(dates, names, std::move(v));
}

}  // namespace pricecast
