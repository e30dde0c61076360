#include "pricecast/pipeline.hpp"

#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "pricecast/atomic_file.hpp"
#include "pricecast/checkpoint.hpp"
#include "pricecast/indicators.hpp"
#include "pricecast/svg_chart.hpp"

namespace pricecast {

using nlohmann::json;

std::string to_string(FeatureMode m) { return m == FeatureMode::WithFeatures ? "with_features" : "price_only"; }

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Arima: return "arima";
        case RunMode::Lstm: return "lstm";
        default: return "both";
    }
}

std::string to_string(ForecastMode m) { return m == ForecastMode::Static ? "static" : "rolling"; }

FeatureMode parse_feature_mode(const std::string& s) {
    if (s == "with_features" || s == "with") return FeatureMode::WithFeatures;
    if (s == "price_only" || s == "without") return FeatureMode::PriceOnly;
    throw DataError(fmt::format("unknown feature mode '{}'", s));
}

RunMode parse_run_mode(const std::string& s) {
    if (s == "arima") return RunMode::Arima;
    if (s == "lstm") return RunMode::Lstm;
    if (s == "both") return RunMode::Both;
    throw DataError(fmt::format("unknown run mode '{}'", s));
}

ForecastMode parse_forecast_mode(const std::string& s) {
    if (s == "static") return ForecastMode::Static;
    if (s == "rolling") return ForecastMode::Rolling;
    throw DataError(fmt::format("unknown forecast mode '{}'", s));
}

void PipelineConfig::validate() const {
    if (input.empty()) throw DataError("config: input path is empty");
    if (target.empty()) throw DataError("config: target column is empty");
    SplitSpec{arima_split}.validate();
    SplitSpec{lstm_split}.validate();
    if (arima_split.size() != 2) throw DataError("config: arima_split needs two fractions (train, test)");
    if (lstm_split.size() != 3) throw DataError("config: lstm_split needs three fractions (train, validation, test)");
    if (window < 1 || horizon < 1) throw DataError("config: window and horizon must be >= 1");
    if (!(correlation_threshold >= 0.0 && correlation_threshold <= 1.0))
        throw DataError("config: correlation_threshold must be in [0, 1]");
    if (feature_modes.empty()) throw DataError("config: no feature mode selected");
    if (arima_bounds.p_max < 0 || arima_bounds.d_max < 0 || arima_bounds.q_max < 0)
        throw DataError("config: arima bounds must be non-negative");
    if (lstm_precision != "float" && lstm_precision != "double")
        throw DataError("config: lstm_precision must be 'float' or 'double'");
    LstmConfig l = lstm;
    l.input_size = 1;
    l.validate();
}

void to_json(json& j, const PipelineConfig& c) {
    json modes = json::array();
    for (auto m : c.feature_modes) modes.push_back(to_string(m));
    j = json{
        {"input", c.input},
        {"date_column", c.date_column},
        {"target", c.target},
        {"arima_split", c.arima_split},
        {"lstm_split", c.lstm_split},
        {"window", c.window},
        {"horizon", c.horizon},
        {"correlation_threshold", c.correlation_threshold},
        {"feature_modes", modes},
        {"target_in_features", true},
        {"mode", to_string(c.mode)},
        {"derive_indicators", c.derive_indicators},
        {"arima", {{"p_max", c.arima_bounds.p_max},
                   {"d_max", c.arima_bounds.d_max},
                   {"q_max", c.arima_bounds.q_max},
                   {"min_root_modulus", c.arima_bounds.min_root_modulus},
                   {"forecast_mode", to_string(c.forecast_mode)}}},
        {"lstm", {{"hidden_size", c.lstm.hidden_size},
                  {"num_layers", c.lstm.num_layers},
                  {"dropout_rate", c.lstm.dropout_rate},
                  {"learning_rate", c.lstm.learning_rate},
                  {"batch_size", c.lstm.batch_size},
                  {"max_epochs", c.lstm.max_epochs},
                  {"patience", c.lstm.patience},
                  {"precision", c.lstm_precision}}},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"dump_stages", c.dump_stages},
    };
}

void from_json(const json& j, PipelineConfig& c) {
    auto opt = [&](const json& obj, const char* key, auto& field) {
        if (obj.contains(key)) obj.at(key).get_to(field);
    };
    opt(j, "input", c.input);
    opt(j, "date_column", c.date_column);
    opt(j, "target", c.target);
    opt(j, "arima_split", c.arima_split);
    opt(j, "lstm_split", c.lstm_split);
    opt(j, "window", c.window);
    opt(j, "horizon", c.horizon);
    opt(j, "correlation_threshold", c.correlation_threshold);
    if (j.contains("feature_modes")) {
        c.feature_modes.clear();
        for (const auto& m : j.at("feature_modes")) c.feature_modes.push_back(parse_feature_mode(m.get<std::string>()));
    }
    if (j.contains("mode")) c.mode = parse_run_mode(j.at("mode").get<std::string>());
    opt(j, "derive_indicators", c.derive_indicators);
    if (j.contains("arima")) {
        const auto& a = j.at("arima");
        opt(a, "p_max", c.arima_bounds.p_max);
        opt(a, "d_max", c.arima_bounds.d_max);
        opt(a, "q_max", c.arima_bounds.q_max);
        opt(a, "min_root_modulus", c.arima_bounds.min_root_modulus);
        if (a.contains("forecast_mode")) c.forecast_mode = parse_forecast_mode(a.at("forecast_mode").get<std::string>());
    }
    if (j.contains("lstm")) {
        const auto& l = j.at("lstm");
        opt(l, "hidden_size", c.lstm.hidden_size);
        opt(l, "num_layers", c.lstm.num_layers);
        opt(l, "dropout_rate", c.lstm.dropout_rate);
        opt(l, "learning_rate", c.lstm.learning_rate);
        opt(l, "batch_size", c.lstm.batch_size);
        opt(l, "max_epochs", c.lstm.max_epochs);
        opt(l, "patience", c.lstm.patience);
        opt(l, "precision", c.lstm_precision);
    }
    opt(j, "output_dir", c.output_dir);
    opt(j, "seed", c.seed);
    opt(j, "dump_stages", c.dump_stages);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open config '{}'", path.string()));
    try {
        return json::parse(in).get<PipelineConfig>();
    } catch (const json::exception& e) {
        throw DataError(fmt::format("config '{}': {}", path.string(), e.what()));
    }
}

std::string dump_config(const PipelineConfig& c) { return json(c).dump(2) + "\n"; }

const LegArtifacts& RunArtifacts::leg(const std::string& name) const {
    for (const auto& l : legs)
        if (l.name == name) return l;
    throw DataError(fmt::format("no leg named '{}'", name));
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const FitError& e) {
        throw FitError(fmt::format("stage '{}': {}", name, e.what()));
    } catch (const DataError& e) {
        throw DataError(fmt::format("stage '{}': {}", name, e.what()));
    } catch (const std::exception& e) {
        throw DataError(fmt::format("stage '{}': {}", name, e.what()));
    }
}

// Every file the run creates, so that a failure can take them back.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    std::filesystem::path write(const std::string& name, std::string_view text) {
        const auto p = path(name);
        written_.push_back(p);
        write_file_atomic(p, text);
        return p;
    }

    std::filesystem::path track(const std::string& name) {
        written_.push_back(path(name));
        return written_.back();
    }

    void remove_all() noexcept {
        std::error_code ec;
        for (const auto& p : written_) {
            std::filesystem::remove(p, ec);
            std::filesystem::remove(p.string() + ".tmp", ec);
        }
        std::filesystem::remove(dir_ / "stages", ec);  // only succeeds when empty
    }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
};

std::string json_number(double x) { return std::isfinite(x) ? fmt::format("{:.17g}", x) : "null"; }

struct ArimaLeg {
    AutoArimaResult fit;
    ForecastReport report;
};

ArimaLeg run_arima_leg(const TimeSeriesFrame& frame, const PipelineConfig& cfg, const LogSink& log) {
    const auto parts = stage("split", [&] { return chrono_split(frame, SplitSpec{cfg.arima_split}); });
    const auto& train = parts[0];
    const auto& test = parts[1];
    if (test.rows() < 2) throw DataError("stage 'split': ARIMA test period needs at least 2 rows");
    const Eigen::VectorXd history = train.column(cfg.target);
    const Eigen::VectorXd realized = test.column(cfg.target);

    ArimaLeg leg;
    leg.fit = stage("fit-arima", [&] { return auto_arima(history, cfg.arima_bounds); });
    const auto& m = leg.fit.model;
    if (log)
        log(fmt::format("arima: selected ({},{},{}) aic={:.3f} on {} training rows", m.order.p, m.order.d, m.order.q,
                        m.aic, train.rows()));
    const Eigen::VectorXd pred = stage("forecast", [&] {
        return forecast(m, history, realized.size(), cfg.forecast_mode, realized.head(realized.size() - 1));
    });
    leg.report = stage("evaluate", [&] { return report(test.dates(), realized, pred); });
    return leg;
}

struct LstmSplit {
    Eigen::Index train_rows = 0, val_rows = 0, test_rows = 0;
    ScalerParams scaler;
    TimeSeriesFrame scaled;
};

LstmSplit split_for_lstm(const TimeSeriesFrame& frame, const PipelineConfig& cfg) {
    return stage("split", [&] {
        const auto parts = chrono_split(frame, SplitSpec{cfg.lstm_split});
        LstmSplit s;
        s.train_rows = parts[0].rows();
        s.val_rows = parts[1].rows();
        s.test_rows = parts[2].rows();
        if (cfg.window + cfg.horizon >= s.train_rows)
            throw DataError(fmt::format("window + horizon = {} must be below the {} training rows",
                                        cfg.window + cfg.horizon, s.train_rows));
        if (s.test_rows < 2) throw DataError("LSTM test period needs at least 2 rows");
        s.scaler = fit_scaler(parts[0]);
        s.scaled = apply_scaler(frame, s.scaler);
        return s;
    });
}

struct LstmLeg {
    FeatureMode mode{};
    std::vector<std::string> features;
    WindowedDataset train_set, val_set, test_set;
    TrainingHistory history;
    ForecastReport report;
    std::function<void(const std::filesystem::path&)> save;
};

template <typename Scalar>
LstmLeg run_lstm_leg(const TimeSeriesFrame& frame, const LstmSplit& split, const PipelineConfig& cfg,
                     FeatureMode mode, const LogSink& log) {
    LstmLeg leg;
    leg.mode = mode;
    const auto n = frame.rows();
    const Eigen::Index val_begin = split.train_rows, test_begin = split.train_rows + split.val_rows;
    leg.features = stage("select-features", [&] { return lstm_features(frame.slice(0, split.train_rows), cfg, mode); });
    stage("windows", [&] {
        leg.train_set = make_windows(split.scaled.slice(0, split.train_rows), leg.features, cfg.target, cfg.window,
                                     cfg.horizon);
        if (split.val_rows > 0)
            leg.val_set = make_windows(with_context(split.scaled, val_begin, test_begin, cfg.window, cfg.horizon),
                                       leg.features, cfg.target, cfg.window, cfg.horizon);
        leg.test_set = make_windows(with_context(split.scaled, test_begin, n, cfg.window, cfg.horizon), leg.features,
                                    cfg.target, cfg.window, cfg.horizon);
    });

    LstmConfig lc = cfg.lstm;
    lc.input_size = static_cast<Eigen::Index>(leg.features.size());
    lc.seed = cfg.seed;
    const std::string name = "lstm_" + to_string(mode);
    if (log)
        log(fmt::format("{}: {} features, {}/{}/{} windows", name, leg.features.size(), leg.train_set.size(),
                        leg.val_set.size(), leg.test_set.size()));

    auto result = stage("train-lstm", [&] {
        EpochCallback cb;
        if (log)
            cb = [&](std::size_t epoch, double tl, double vl) {
                log(fmt::format("{}: epoch {} train_mse={:.6g} val_mse={:.6g}", name, epoch + 1, tl, vl));
            };
        return train(init_network<Scalar>(lc), leg.train_set, leg.val_set, cb);
    });
    leg.history = result.history;

    const Eigen::VectorXd predicted = stage("forecast", [&] {
        return invert_scaler(predict_series(result.network, leg.test_set), cfg.target, split.scaler);
    });
    const Eigen::VectorXd actual = frame.column(cfg.target).tail(split.test_rows);
    leg.report = stage("evaluate", [&] { return report(leg.test_set.target_dates, actual, predicted); });
    leg.save = [net = std::move(result.network), adam = std::move(result.adam)](const std::filesystem::path& p) {
        save_checkpoint(p, net, &adam);
    };
    return leg;
}

LstmLeg run_lstm_leg_any(const TimeSeriesFrame& frame, const LstmSplit& split, const PipelineConfig& cfg,
                         FeatureMode mode, const LogSink& log) {
    return cfg.lstm_precision == "double" ? run_lstm_leg<double>(frame, split, cfg, mode, log)
                                          : run_lstm_leg<float>(frame, split, cfg, mode, log);
}

std::string scaler_json(const ScalerParams& s) {
    json j = json::object();
    for (const auto& [name, r] : s.ranges) j[name] = {{"min", json::parse(json_number(r.min))}, {"max", json::parse(json_number(r.max))}};
    return j.dump(2) + "\n";
}

std::string correlations_json(const std::map<std::string, std::optional<double>>& c) {
    json j = json::object();
    for (const auto& [name, r] : c) j[name] = r ? json::parse(json_number(*r)) : json(nullptr);
    return j.dump(2) + "\n";
}

std::string windows_json(const LstmLeg& leg, Eigen::Index window, Eigen::Index horizon) {
    auto part = [](const WindowedDataset& d) {
        json j{{"count", d.size()}};
        if (!d.empty()) {
            j["first_target_date"] = format_date(d.target_dates.front());
            j["last_target_date"] = format_date(d.target_dates.back());
        }
        return j;
    };
    json j{{"window", window},
           {"horizon", horizon},
           {"features", leg.features},
           {"train", part(leg.train_set)},
           {"validation", part(leg.val_set)},
           {"test", part(leg.test_set)}};
    return j.dump(2) + "\n";
}

std::string history_csv(const TrainingHistory& h) {
    std::string out = "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < h.train_loss.size(); ++e)
        out += fmt::format("{},{:.9g},{}\n", e + 1, h.train_loss[e],
                           std::isnan(h.val_loss[e]) ? std::string() : fmt::format("{:.9g}", h.val_loss[e]));
    return out;
}

}  // namespace

std::string arima_model_to_json(const AutoArimaResult& r, ForecastMode mode) {
    const auto& m = r.model;
    json candidates = json::array();
    for (const auto& c : r.candidates) {
        json e{{"order", {c.order.p, c.order.d, c.order.q}}, {"ok", c.ok}};
        if (c.ok) e["aic"] = json::parse(json_number(c.aic));
        else e["error"] = c.error;
        candidates.push_back(e);
    }
    auto vec = [](const Eigen::VectorXd& v) {
        json a = json::array();
        for (double x : v) a.push_back(json::parse(json_number(x)));
        return a;
    };
    json j{{"order", {m.order.p, m.order.d, m.order.q}},
           {"phi", vec(m.phi)},
           {"theta", vec(m.theta)},
           {"intercept", json::parse(json_number(m.intercept))},
           {"sigma2", json::parse(json_number(m.sigma2))},
           {"n_obs", m.n_obs},
           {"sse", json::parse(json_number(m.sse))},
           {"aic", json::parse(json_number(m.aic))},
           {"warnings", m.warnings},
           {"forecast_mode", to_string(mode)},
           {"candidates", candidates}};
    return j.dump(2) + "\n";
}

ArimaModel arima_model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        ArimaModel m;
        const auto order = j.at("order").get<std::vector<int>>();
        if (order.size() != 3) throw DataError("model: order needs three entries");
        m.order = {order[0], order[1], order[2]};
        auto vec = [&](const char* key) {
            const auto v = j.at(key).get<std::vector<double>>();
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
        };
        m.phi = vec("phi");
        m.theta = vec("theta");
        if (m.phi.size() != m.order.p || m.theta.size() != m.order.q)
            throw DataError("model: coefficient count does not match the order");
        m.intercept = j.at("intercept").get<double>();
        m.sigma2 = j.at("sigma2").get<double>();
        m.n_obs = j.value("n_obs", Eigen::Index{0});
        m.sse = j.value("sse", 0.0);
        m.aic = j.value("aic", 0.0);
        return m;
    } catch (const json::exception& e) {
        throw DataError(fmt::format("model: {}", e.what()));
    }
}

TimeSeriesFrame prepare_frame(const PipelineConfig& cfg) {
    TimeSeriesFrame frame = stage("ingest", [&] { return load_csv(cfg.input, cfg.date_column); });
    if (!frame.has_column(cfg.target))
        throw DataError(fmt::format("stage 'ingest': target column '{}' not found", cfg.target));
    frame = stage("forward-fill", [&] { return forward_fill(frame); });
    if (cfg.derive_indicators)
        frame = stage("derive-indicators", [&] {
            auto derived = derive_indicators(frame, default_indicator_specs(frame, cfg.target));
            return forward_fill(derived);
        });
    return frame;
}

std::vector<std::string> lstm_features(const TimeSeriesFrame& train, const PipelineConfig& cfg, FeatureMode mode) {
    std::vector<std::string> out{cfg.target};
    if (mode == FeatureMode::WithFeatures)
        for (auto& f : select_features(correlation_vector(train, cfg.target), cfg.correlation_threshold))
            out.push_back(std::move(f));
    return out;
}

TimeSeriesFrame with_context(const TimeSeriesFrame& frame, Eigen::Index begin, Eigen::Index end, Eigen::Index window,
                             Eigen::Index horizon) {
    const Eigen::Index from = begin - window - horizon + 1;
    if (from < 0) throw DataError(fmt::format("not enough rows before row {} for a window of {}", begin, window));
    return frame.slice(from, end);
}

RunArtifacts run_pipeline(const PipelineConfig& config, const LogSink& log) {
    stage("config", [&] { config.validate(); });
    OutputSet out(config.output_dir);
    RunArtifacts art;
    try {
        const TimeSeriesFrame frame = prepare_frame(config);
        if (log) log(fmt::format("prepared {} rows x {} columns", frame.rows(), frame.cols()));
        if (config.dump_stages) {
            stage("dump", [&] {
                const auto p = out.track("stages/filled.csv");
                write_csv(frame, p, config.date_column);
                art.stage_dumps.push_back(p);
            });
        }

        const bool want_arima = config.mode != RunMode::Lstm;
        const bool want_lstm = config.mode != RunMode::Arima;

        // The ARIMA leg only reads the prepared frame, so it can overlap the
        // LSTM training when there is a spare core.
        std::future<ArimaLeg> arima_future;
        std::optional<ArimaLeg> arima;
        if (want_arima) {
            if (want_lstm && std::thread::hardware_concurrency() > 1)
                arima_future = std::async(std::launch::async, [&] { return run_arima_leg(frame, config, log); });
            else
                arima = run_arima_leg(frame, config, log);
        }

        std::vector<LstmLeg> lstm_legs;
        std::optional<LstmSplit> split;
        if (want_lstm) {
            split = split_for_lstm(frame, config);
            for (auto mode : config.feature_modes)
                lstm_legs.push_back(run_lstm_leg_any(frame, *split, config, mode, log));
        }
        if (arima_future.valid()) arima = arima_future.get();

        stage("write-outputs", [&] {
            if (config.dump_stages && split) {
                art.stage_dumps.push_back(out.write("stages/scaler.json", scaler_json(split->scaler)));
                const auto corr = correlation_vector(frame.slice(0, split->train_rows), config.target);
                art.stage_dumps.push_back(out.write("stages/correlations.json", correlations_json(corr)));
                for (const auto& leg : lstm_legs) {
                    const std::string n = "lstm_" + to_string(leg.mode);
                    std::string feats;
                    for (const auto& f : leg.features) feats += f + "\n";
                    art.stage_dumps.push_back(out.write("stages/" + n + ".features.txt", feats));
                    art.stage_dumps.push_back(
                        out.write("stages/" + n + ".windows.json", windows_json(leg, config.window, config.horizon)));
                }
            }
            auto emit = [&](const std::string& name, const ForecastReport& r, const std::string& title) {
                LegArtifacts a;
                a.name = name;
                a.report = r;
                a.predictions = out.track(name + ".predictions.csv");
                write_predictions_csv(a.predictions, r);
                a.metrics = out.write(name + ".metrics.txt", to_text(r));
                PredictionTable t{r.dates, r.actual, r.predicted};
                a.chart = out.write(name + ".svg", render_chart(t, title));
                return a;
            };
            if (arima) {
                auto a = emit("arima", arima->report,
                              fmt::format("ARIMA({},{},{}) {} forecast", arima->fit.model.order.p,
                                          arima->fit.model.order.d, arima->fit.model.order.q,
                                          to_string(config.forecast_mode)));
                a.model = out.write("arima.model.json", arima_model_to_json(arima->fit, config.forecast_mode));
                art.legs.push_back(std::move(a));
            }
            for (const auto& leg : lstm_legs) {
                const std::string n = "lstm_" + to_string(leg.mode);
                auto a = emit(n, leg.report, fmt::format("LSTM ({})", to_string(leg.mode)));
                a.model = out.track(n + ".ckpt");
                leg.save(a.model);
                out.write(n + ".history.csv", history_csv(leg.history));
                art.legs.push_back(std::move(a));
            }
            art.resolved_config = out.write("resolved_config.json", dump_config(config));
        });
    } catch (...) {
        out.remove_all();
        throw;
    }
    return art;
}

}  // namespace pricecast
