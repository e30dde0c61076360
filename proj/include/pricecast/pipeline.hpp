#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pricecast/arima.hpp"
#include "pricecast/frame.hpp"
#include "pricecast/lstm.hpp"
#include "pricecast/metrics.hpp"

namespace pricecast {

enum class FeatureMode { WithFeatures, PriceOnly };
enum class RunMode { Arima, Lstm, Both };

std::string to_string(FeatureMode m);
std::string to_string(RunMode m);
std::string to_string(ForecastMode m);
FeatureMode parse_feature_mode(const std::string& s);
RunMode parse_run_mode(const std::string& s);
ForecastMode parse_forecast_mode(const std::string& s);

struct PipelineConfig {
    std::string input;
    std::string date_column = "date";
    std::string target = "PX_LAST";
    std::vector<double> arima_split{0.8, 0.2};
    std::vector<double> lstm_split{0.6, 0.2, 0.2};
    Eigen::Index window = 216;
    Eigen::Index horizon = 1;
    double correlation_threshold = 0.5;
    std::vector<FeatureMode> feature_modes{FeatureMode::PriceOnly, FeatureMode::WithFeatures};
    RunMode mode = RunMode::Both;
    bool derive_indicators = true;
    ArimaBounds arima_bounds;
    ForecastMode forecast_mode = ForecastMode::Static;
    LstmConfig lstm;  // input_size and seed are resolved at run time
    std::string lstm_precision = "float";
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    bool dump_stages = false;

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Reads a JSON config; keys that are absent keep their defaults.
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& c);

struct LegArtifacts {
    std::string name;  // arima, lstm_price_only, lstm_with_features
    std::filesystem::path predictions;
    std::filesystem::path metrics;
    std::filesystem::path chart;
    std::filesystem::path model;  // checkpoint (LSTM) or fitted model JSON (ARIMA)
    ForecastReport report;
};

struct RunArtifacts {
    std::vector<LegArtifacts> legs;
    std::filesystem::path resolved_config;
    std::vector<std::filesystem::path> stage_dumps;

    const LegArtifacts& leg(const std::string& name) const;
};

using LogSink = std::function<void(const std::string&)>;

/// ingest -> forward fill -> derive indicators -> split -> fit -> forecast ->
/// metrics -> chart, for every requested leg. A failing stage aborts the run
/// with "stage '<name>': <cause>" (keeping the DataError / FitError type) and
/// removes every file the run had written.
RunArtifacts run_pipeline(const PipelineConfig& config, const LogSink& log = {});

/// Fitted model, its forecast mode and the candidate grid as JSON.
std::string arima_model_to_json(const AutoArimaResult& result, ForecastMode mode);
ArimaModel arima_model_from_json(const std::string& text);

/// Frame after ingestion, forward fill and indicator derivation.
TimeSeriesFrame prepare_frame(const PipelineConfig& config);

/// Features for the LSTM leg: the target first, then the correlation-selected
/// columns (with_features only). Correlations use the training rows only.
std::vector<std::string> lstm_features(const TimeSeriesFrame& train, const PipelineConfig& config, FeatureMode mode);

/// Rows [begin - window - horizon + 1, end) so that the first target is row `begin`.
TimeSeriesFrame with_context(const TimeSeriesFrame& frame, Eigen::Index begin, Eigen::Index end, Eigen::Index window,
                             Eigen::Index horizon);

}  // namespace pricecast
