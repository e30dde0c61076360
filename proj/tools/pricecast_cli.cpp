#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pricecast/atomic_file.hpp"
#include "pricecast/garch.hpp"
#include "pricecast/indicators.hpp"
#include "pricecast/pipeline.hpp"
#include "pricecast/svg_chart.hpp"
#include "pricecast/synth.hpp"

namespace pc = pricecast;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitFit = 3;

std::string default_out_dir() {
    const char* env = std::getenv("PRICECAST_OUT_DIR");
    return env && *env ? env : "out";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw pc::DataError(fmt::format("cannot open '{}'", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

struct RunFlags {
    std::string config, input, out, mode, features, forecast_mode;
    std::uint64_t seed = 0;
    Eigen::Index max_epochs = 0;
    bool dump_stage = false;
    bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
    cmd->add_option("--config", f.config, "JSON pipeline config");
    cmd->add_option("--input", f.input, "input CSV (overrides the config)");
    cmd->add_option("--out", f.out, "output directory (default $PRICECAST_OUT_DIR or ./out)");
    cmd->add_option("--seed", f.seed, "random seed");
    if (with_mode)
        cmd->add_option("--mode", f.mode, "models to run")->check(CLI::IsMember({"arima", "lstm", "both"}));
    cmd->add_option("--features", f.features, "LSTM feature mode")->check(CLI::IsMember({"with", "without", "both"}));
    cmd->add_option("--forecast-mode", f.forecast_mode, "ARIMA forecast mode")->check(CLI::IsMember({"static", "rolling"}));
    cmd->add_option("--max-epochs", f.max_epochs, "LSTM epoch limit");
    cmd->add_flag("--dump-stage", f.dump_stage, "write intermediate artifacts under <out>/stages");
    cmd->add_flag("--quiet", f.quiet, "no progress output");
}

pc::PipelineConfig resolve(const RunFlags& f, CLI::App* cmd) {
    pc::PipelineConfig cfg;
    cfg.output_dir = default_out_dir();
    if (!f.config.empty()) cfg = pc::load_config(f.config);
    if (!f.config.empty() && !nlohmann::json::parse(read_file(f.config)).contains("output_dir"))
        cfg.output_dir = default_out_dir();
    if (!f.input.empty()) cfg.input = f.input;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (cmd->count("--seed")) cfg.seed = f.seed;
    if (!f.mode.empty()) cfg.mode = pc::parse_run_mode(f.mode);
    if (f.features == "with") cfg.feature_modes = {pc::FeatureMode::WithFeatures};
    if (f.features == "without") cfg.feature_modes = {pc::FeatureMode::PriceOnly};
    if (f.features == "both") cfg.feature_modes = {pc::FeatureMode::PriceOnly, pc::FeatureMode::WithFeatures};
    if (!f.forecast_mode.empty()) cfg.forecast_mode = pc::parse_forecast_mode(f.forecast_mode);
    if (f.max_epochs > 0) {
        cfg.lstm.max_epochs = f.max_epochs;
        cfg.lstm.patience = std::min(cfg.lstm.patience, f.max_epochs);
    }
    if (f.dump_stage) cfg.dump_stages = true;
    return cfg;
}

int run(const pc::PipelineConfig& cfg, bool quiet) {
    const auto art = pc::run_pipeline(cfg, quiet ? pc::LogSink{} : pc::LogSink{log_line});
    for (const auto& leg : art.legs) {
        std::cout << fmt::format("{}: mae={:.6f} rmse={:.6f} accuracy={:.4f}% (first half {:.4f}%, second half {:.4f}%)\n",
                                 leg.name, leg.report.mae, leg.report.rmse, leg.report.accuracy_pct,
                                 leg.report.accuracy_first_half_pct, leg.report.accuracy_second_half_pct);
        std::cout << fmt::format("  {}\n  {}\n  {}\n  {}\n", leg.predictions.string(), leg.metrics.string(),
                                 leg.chart.string(), leg.model.string());
    }
    std::cout << "  " << art.resolved_config.string() << '\n';
    return kExitOk;
}

pc::ArimaOrder parse_order(const std::string& s) {
    pc::ArimaOrder o;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> o.p >> c1 >> o.d >> c2 >> o.q) || c1 != ',' || c2 != ',' || o.p < 0 || o.d < 0 || o.q < 0)
        throw CLI::ValidationError("--order", "expected p,d,q");
    return o;
}

std::pair<pc::TimeSeriesFrame, pc::TimeSeriesFrame> train_test(const std::string& input, const std::string& target,
                                                                double train_fraction) {
    const auto frame = pc::forward_fill(pc::load_csv(input));
    if (!frame.has_column(target)) throw pc::DataError(fmt::format("column '{}' not found", target));
    const auto parts = pc::chrono_split(frame, pc::SplitSpec{{train_fraction, 1.0 - train_fraction}});
    return {parts[0], parts[1]};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pricecast: ARIMA, GARCH and LSTM price forecasting"};
    app.require_subcommand(1);

    // synth
    pc::SynthSpec synth;
    std::string synth_out;
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic price CSV");
    cmd_synth->add_option("--out", synth_out, "output CSV (default <out dir>/synthetic.csv)");
    cmd_synth->add_option("--seed", synth.seed);
    cmd_synth->add_option("--days", synth.n_days, "trading days")->check(CLI::PositiveNumber);
    cmd_synth->add_option("--start-price", synth.start_price);
    cmd_synth->add_option("--drift", synth.drift, "daily log drift");
    cmd_synth->add_option("--volatility", synth.volatility, "daily log volatility");
    cmd_synth->add_option("--regime-start", synth.regime_start, "fraction of rows before the regime shift");
    cmd_synth->add_option("--regime-drift", synth.regime_drift_multiplier, "drift multiplier after the shift");
    cmd_synth->add_option("--regime-vol", synth.regime_vol_multiplier, "volatility multiplier after the shift");

    // features
    std::string feat_in, feat_out, feat_target = "PX_LAST";
    auto* cmd_features = app.add_subcommand("features", "forward-fill and derive technical indicators");
    cmd_features->add_option("--input", feat_in)->required();
    cmd_features->add_option("--output", feat_out)->required();
    cmd_features->add_option("--target", feat_target, "price column");

    // fit-arima
    std::string fa_in, fa_out, fa_target = "PX_LAST", fa_order;
    double fa_train = 0.8;
    pc::ArimaBounds fa_bounds;
    auto* cmd_fit_arima = app.add_subcommand("fit-arima", "fit ARIMA on the training part of a column");
    cmd_fit_arima->add_option("--input", fa_in)->required();
    cmd_fit_arima->add_option("--output", fa_out, "model JSON")->required();
    cmd_fit_arima->add_option("--target", fa_target);
    cmd_fit_arima->add_option("--train-fraction", fa_train)->check(CLI::Range(0.0, 1.0));
    cmd_fit_arima->add_option("--order", fa_order, "fixed p,d,q instead of the AIC search");
    cmd_fit_arima->add_option("--p-max", fa_bounds.p_max);
    cmd_fit_arima->add_option("--d-max", fa_bounds.d_max);
    cmd_fit_arima->add_option("--q-max", fa_bounds.q_max);

    // forecast
    std::string fc_model, fc_in, fc_out, fc_target = "PX_LAST", fc_mode = "static", fc_metrics;
    double fc_train = 0.8;
    auto* cmd_forecast = app.add_subcommand("forecast", "forecast the test part of a column with a fitted ARIMA");
    cmd_forecast->add_option("--model", fc_model)->required();
    cmd_forecast->add_option("--input", fc_in)->required();
    cmd_forecast->add_option("--output", fc_out, "predictions CSV")->required();
    cmd_forecast->add_option("--metrics", fc_metrics, "metrics text file");
    cmd_forecast->add_option("--target", fc_target);
    cmd_forecast->add_option("--train-fraction", fc_train)->check(CLI::Range(0.0, 1.0));
    cmd_forecast->add_option("--mode", fc_mode)->check(CLI::IsMember({"static", "rolling"}));

    // fit-garch
    std::string fg_in, fg_column = "PX_LAST", fg_params, fg_variance;
    bool fg_prices = false;
    auto* cmd_fit_garch = app.add_subcommand("fit-garch", "fit GARCH(1,1) to a returns column");
    cmd_fit_garch->add_option("--input", fg_in)->required();
    cmd_fit_garch->add_option("--column", fg_column);
    cmd_fit_garch->add_flag("--prices", fg_prices, "column holds prices; use 100 x log returns");
    cmd_fit_garch->add_option("--output", fg_params, "parameters JSON")->required();
    cmd_fit_garch->add_option("--variance", fg_variance, "conditional variance CSV");

    // train-lstm / run
    RunFlags lstm_flags, run_flags;
    auto* cmd_train = app.add_subcommand("train-lstm", "train the LSTM legs and write checkpoints");
    add_run_flags(cmd_train, lstm_flags, false);
    auto* cmd_run = app.add_subcommand("run", "full ARIMA vs LSTM comparison");
    add_run_flags(cmd_run, run_flags, true);

    // chart
    std::string ch_in, ch_out, ch_title = "Actual vs predicted";
    auto* cmd_chart = app.add_subcommand("chart", "SVG chart from a predictions CSV");
    cmd_chart->add_option("--input", ch_in)->required();
    cmd_chart->add_option("--output", ch_out)->required();
    cmd_chart->add_option("--title", ch_title);

    // evaluate
    std::string ev_in, ev_out;
    auto* cmd_evaluate = app.add_subcommand("evaluate", "metrics for a predictions CSV");
    cmd_evaluate->add_option("--input", ev_in)->required();
    cmd_evaluate->add_option("--output", ev_out, "metrics file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cmd_synth) {
            if (synth_out.empty()) synth_out = (fs::path(default_out_dir()) / "synthetic.csv").string();
            const auto frame = pc::synthesize(synth);
            pc::write_csv(frame, synth_out);
            std::cout << synth_out << '\n';
        } else if (*cmd_features) {
            auto frame = pc::forward_fill(pc::load_csv(feat_in));
            if (!frame.has_column(feat_target)) throw pc::DataError(fmt::format("column '{}' not found", feat_target));
            frame = pc::derive_indicators(frame, pc::default_indicator_specs(frame, feat_target));
            pc::write_csv(frame, feat_out);
        } else if (*cmd_fit_arima) {
            const auto [train, test] = train_test(fa_in, fa_target, fa_train);
            const Eigen::VectorXd y = train.column(fa_target);
            pc::AutoArimaResult r;
            if (fa_order.empty()) {
                r = pc::auto_arima(y, fa_bounds);
            } else {
                r.model = pc::fit_arima(y, parse_order(fa_order));
                r.candidates.push_back({r.model.order, true, r.model.aic, {}});
            }
            pc::write_file_atomic(fa_out, pc::arima_model_to_json(r, pc::ForecastMode::Static));
            const auto& m = r.model;
            std::cout << fmt::format("ARIMA({},{},{}) aic={:.4f} sigma2={:.6g}\n", m.order.p, m.order.d, m.order.q, m.aic,
                                     m.sigma2);
            for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
        } else if (*cmd_forecast) {
            const auto model = pc::arima_model_from_json(read_file(fc_model));
            const auto [train, test] = train_test(fc_in, fc_target, fc_train);
            if (test.rows() < 2) throw pc::DataError("test part needs at least 2 rows");
            const Eigen::VectorXd actual = test.column(fc_target);
            const Eigen::VectorXd pred = pc::forecast(model, train.column(fc_target), actual.size(),
                                                      pc::parse_forecast_mode(fc_mode), actual.head(actual.size() - 1));
            const auto rep = pc::report(test.dates(), actual, pred);
            pc::write_predictions_csv(fc_out, rep);
            if (!fc_metrics.empty()) pc::write_file_atomic(fc_metrics, pc::to_text(rep));
            std::cout << pc::to_text(rep);
        } else if (*cmd_fit_garch) {
            const auto frame = pc::forward_fill(pc::load_csv(fg_in));
            if (!frame.has_column(fg_column)) throw pc::DataError(fmt::format("column '{}' not found", fg_column));
            Eigen::VectorXd x = frame.column(fg_column);
            if (fg_prices) {
                if ((x.array() <= 0.0).any()) throw pc::DataError("prices must be positive");
                x = 100.0 * (x.tail(x.size() - 1).array().log() - x.head(x.size() - 1).array().log()).matrix();
            }
            const Eigen::VectorXd eps = x.array() - x.mean();
            const auto fit = pc::fit_garch11(eps);
            nlohmann::json j{{"alpha0", fit.params.alpha0},
                             {"alpha1", fit.params.alpha1},
                             {"beta1", fit.params.beta1},
                             {"persistence", fit.params.persistence()},
                             {"mean", x.mean()},
                             {"sigma2_0", fit.sigma2_0},
                             {"log_likelihood", fit.log_likelihood},
                             {"boundary", fit.boundary},
                             {"n", eps.size()}};
            pc::write_file_atomic(fg_params, j.dump(2) + "\n");
            if (!fg_variance.empty()) {
                const auto dates = std::vector<pc::Date>(frame.dates().end() - eps.size(), frame.dates().end());
                std::string text = "date,residual,sigma2\n";
                for (Eigen::Index t = 0; t < eps.size(); ++t)
                    text += fmt::format("{},{:.9g},{:.9g}\n", pc::format_date(dates[static_cast<std::size_t>(t)]),
                                        fit.state.residuals(t), fit.state.sigma2(t));
                pc::write_file_atomic(fg_variance, text);
            }
            std::cout << j.dump(2) << '\n';
            if (fit.boundary) std::cerr << "warning: alpha1 + beta1 is at the stationarity boundary\n";
        } else if (*cmd_train) {
            auto cfg = resolve(lstm_flags, cmd_train);
            cfg.mode = pc::RunMode::Lstm;
            return run(cfg, lstm_flags.quiet);
        } else if (*cmd_run) {
            return run(resolve(run_flags, cmd_run), run_flags.quiet);
        } else if (*cmd_chart) {
            const auto table = pc::read_predictions_csv(ch_in);
            pc::write_file_atomic(ch_out, pc::render_chart(table, ch_title));
        } else if (*cmd_evaluate) {
            const auto t = pc::read_predictions_csv(ev_in);
            std::vector<pc::Date> dates;
            std::vector<double> a, p;
            for (Eigen::Index i = 0; i < t.actual.size(); ++i) {
                if (std::isnan(t.predicted(i))) continue;
                dates.push_back(t.dates[static_cast<std::size_t>(i)]);
                a.push_back(t.actual(i));
                p.push_back(t.predicted(i));
            }
            const auto n = static_cast<Eigen::Index>(a.size());
            const auto rep = pc::report(dates, Eigen::Map<Eigen::VectorXd>(a.data(), n), Eigen::Map<Eigen::VectorXd>(p.data(), n));
            if (ev_out.empty()) std::cout << pc::to_text(rep);
            else pc::write_file_atomic(ev_out, pc::to_text(rep));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const pc::FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kExitFit;
    } catch (const pc::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
