#pragma once

#include <cstdint>

#include "pricecast/frame.hpp"

namespace pricecast {

/// Geometric random walk with drift and a single regime shift.
///
///   log P_t = log P_{t-1} + mu_t + sigma_t z_t,   z_t ~ N(0, 1)
///
/// mu_t, sigma_t equal `drift`, `volatility` before row
/// floor(regime_start * n_days) and `drift * regime_drift_multiplier`,
/// `volatility * regime_vol_multiplier` from there on.
///
/// Columns: PX_OPEN, PX_HIGH, PX_LOW, PX_LAST, PX_VOLUME, PE_RATIO (price over
/// a smooth earnings trend), VIX (mean-reverting, driven by recent absolute
/// returns), USGG10YR (independent mean-reverting walk), NAPMPMI and CONCCONF
/// (published on the first trading day of each month, blank otherwise) and
/// BETA_ADJ (constant). Dates are weekdays from `start_date`.
struct SynthSpec {
    std::uint64_t seed = 42;
    Eigen::Index n_days = 2770;
    double start_price = 1700.0;
    double drift = 0.0004;
    double volatility = 0.009;
    double regime_start = 0.85;
    double regime_drift_multiplier = -2.5;
    double regime_vol_multiplier = 1.8;
    Date start_date{std::chrono::year{2013}, std::chrono::month{10}, std::chrono::day{1}};

    void validate() const;
};

TimeSeriesFrame synthesize(const SynthSpec& spec);

}  // namespace pricecast
