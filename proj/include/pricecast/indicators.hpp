#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "pricecast/frame.hpp"

namespace pricecast {

/// Simple moving average; the first n-1 positions are missing.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> sma(const Eigen::MatrixBase<Derived>& prices, Eigen::Index n) {
    using Scalar = typename Derived::Scalar;
    if (n < 1) throw DataError("sma: period must be >= 1");
    const Eigen::Index len = prices.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(len, std::numeric_limits<Scalar>::quiet_NaN());
    // Each window is summed directly rather than with a running sum so that
    // long series do not accumulate cancellation error.
    for (Eigen::Index t = n - 1; t < len; ++t) out(t) = prices.segment(t - n + 1, n).mean();
    return out;
}

/// Wilder's RSI. Positions [0, n) are missing.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> rsi(const Eigen::MatrixBase<Derived>& prices, Eigen::Index n = 14) {
    using Scalar = typename Derived::Scalar;
    if (n < 1) throw DataError("rsi: period must be >= 1");
    const Eigen::Index len = prices.size();
    if (len <= n) throw DataError(fmt::format("rsi: need more than {} prices, got {}", n, len));

    auto value = [](Scalar gain, Scalar loss) -> Scalar {
        if (loss == Scalar(0)) return gain > Scalar(0) ? Scalar(100) : Scalar(50);
        return Scalar(100) - Scalar(100) / (Scalar(1) + gain / loss);
    };

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(len, std::numeric_limits<Scalar>::quiet_NaN());
    Scalar gain = 0, loss = 0;
    for (Eigen::Index k = 1; k <= n; ++k) {
        const Scalar change = prices(k) - prices(k - 1);
        gain += std::max(change, Scalar(0));
        loss += std::max(-change, Scalar(0));
    }
    gain /= Scalar(n);
    loss /= Scalar(n);
    out(n) = value(gain, loss);
    for (Eigen::Index k = n + 1; k < len; ++k) {
        const Scalar change = prices(k) - prices(k - 1);
        gain = (gain * Scalar(n - 1) + std::max(change, Scalar(0))) / Scalar(n);
        loss = (loss * Scalar(n - 1) + std::max(-change, Scalar(0))) / Scalar(n);
        out(k) = value(gain, loss);
    }
    return out;
}

inline constexpr double kTradingDaysPerYear = 252.0;

/// Annualised sample standard deviation of the trailing n log returns, in percent.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> rolling_volatility(const Eigen::MatrixBase<Derived>& prices,
                                                                             Eigen::Index n = 30) {
    using Scalar = typename Derived::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (n < 2) throw DataError("rolling_volatility: period must be >= 2");
    const Eigen::Index len = prices.size();
    for (Eigen::Index t = 0; t < len; ++t)
        if (!(prices(t) > Scalar(0)))
            throw DataError(fmt::format("rolling_volatility: non-positive price at index {}", t));

    Vector out = Vector::Constant(len, std::numeric_limits<Scalar>::quiet_NaN());
    if (len < 2) return out;
    const Vector returns = (prices.tail(len - 1).array() / prices.head(len - 1).array()).log().matrix();
    const Scalar annualise = std::sqrt(Scalar(kTradingDaysPerYear)) * Scalar(100);
    for (Eigen::Index t = n; t < len; ++t) {
        const auto window = returns.segment(t - n, n).array();
        const Scalar var = (window - window.mean()).square().sum() / Scalar(n - 1);
        out(t) = std::sqrt(var) * annualise;
    }
    return out;
}

template <typename DerivedH, typename DerivedL>
Eigen::Matrix<typename DerivedH::Scalar, Eigen::Dynamic, 1> high_low_diff(const Eigen::MatrixBase<DerivedH>& high,
                                                                         const Eigen::MatrixBase<DerivedL>& low) {
    if (high.size() != low.size()) throw DataError("high_low_diff: length mismatch");
    for (Eigen::Index t = 0; t < high.size(); ++t)
        if (high(t) < low(t)) throw DataError(fmt::format("high_low_diff: high < low at index {}", t));
    return high - low;
}

enum class IndicatorKind { Sma, Rsi, RollingVol, HighLowDiff };

struct IndicatorSpec {
    IndicatorKind kind = IndicatorKind::Sma;
    Eigen::Index period = 1;
    std::vector<std::string> sources;  // price column, or {high, low}

    /// MOV_AVG_50D, RSI_14D, VOLATILITY_30D, PX_HIGH_LOW_DIFFERENCE.
    std::string output_name() const;
};

Eigen::VectorXd compute_indicator(const TimeSeriesFrame& frame, const IndicatorSpec& spec);

/// The price-derived feature set: 50/200-day SMA, 14-day RSI, 30-day
/// volatility and, when high/low columns exist, the high-low difference.
std::vector<IndicatorSpec> default_indicator_specs(const TimeSeriesFrame& frame, const std::string& price_column,
                                                   const std::string& high_column = "PX_HIGH",
                                                   const std::string& low_column = "PX_LOW");

/// Appends every indicator whose output column is not already present.
TimeSeriesFrame derive_indicators(const TimeSeriesFrame& frame, const std::vector<IndicatorSpec>& specs);

}  // namespace pricecast
