#include "pricecast/indicators.hpp"

namespace pricecast {

std::string IndicatorSpec::output_name() const {
    switch (kind) {
        case IndicatorKind::Sma: return fmt::format("MOV_AVG_{}D", period);
        case IndicatorKind::Rsi: return fmt::format("RSI_{}D", period);
        case IndicatorKind::RollingVol: return fmt::format("VOLATILITY_{}D", period);
        case IndicatorKind::HighLowDiff: return "PX_HIGH_LOW_DIFFERENCE";
    }
    return {};
}

Eigen::VectorXd compute_indicator(const TimeSeriesFrame& frame, const IndicatorSpec& spec) {
    if (spec.period < 1) throw DataError("indicator period must be >= 1");
    const auto need = spec.kind == IndicatorKind::HighLowDiff ? 2u : 1u;
    if (spec.sources.size() != need) throw DataError(fmt::format("{} needs {} source column(s)", spec.output_name(), need));
    const Eigen::VectorXd x = frame.column(spec.sources[0]);
    switch (spec.kind) {
        case IndicatorKind::Sma: return sma(x, spec.period);
        case IndicatorKind::Rsi: return rsi(x, spec.period);
        case IndicatorKind::RollingVol: return rolling_volatility(x, spec.period);
        case IndicatorKind::HighLowDiff: return high_low_diff(x, frame.column(spec.sources[1]));
    }
    return {};
}

std::vector<IndicatorSpec> default_indicator_specs(const TimeSeriesFrame& frame, const std::string& price_column,
                                                   const std::string& high_column, const std::string& low_column) {
    std::vector<IndicatorSpec> specs{
        {IndicatorKind::Sma, 50, {price_column}},
        {IndicatorKind::Sma, 200, {price_column}},
        {IndicatorKind::Rsi, 14, {price_column}},
        {IndicatorKind::RollingVol, 30, {price_column}},
    };
    if (frame.has_column(high_column) && frame.has_column(low_column))
        specs.push_back({IndicatorKind::HighLowDiff, 1, {high_column, low_column}});
    return specs;
}

TimeSeriesFrame derive_indicators(const TimeSeriesFrame& frame, const std::vector<IndicatorSpec>& specs) {
    TimeSeriesFrame out = frame;
    for (const auto& spec : specs) {
        const auto name = spec.output_name();
        if (out.has_column(name)) continue;
        out = out.with_column(name, compute_indicator(frame, spec));
    }
    return out;
}

}  // namespace pricecast
