#include "pricecast/metrics.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pricecast/atomic_file.hpp"

namespace pricecast {

double accuracy(double mae_value, double actual_mean) {
    if (actual_mean == 0.0) throw DataError("accuracy: mean of actual values is zero");
    return 100.0 - (mae_value / actual_mean) * 100.0;
}

ForecastReport report(std::vector<Date> dates, const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    detail::check_pair(actual, predicted);
    if (actual.size() < 2) throw DataError("report: need at least 2 points");
    if (static_cast<Eigen::Index>(dates.size()) != actual.size()) throw DataError("report: dates length mismatch");
    ForecastReport r{std::move(dates), actual, predicted};
    r.mae = mae(actual, predicted);
    r.rmse = rmse(actual, predicted);
    r.accuracy_pct = accuracy(r.mae, actual.mean());
    const Eigen::Index half = actual.size() / 2, rest = actual.size() - half;
    r.accuracy_first_half_pct = accuracy(mae(actual.head(half), predicted.head(half)), actual.head(half).mean());
    r.accuracy_second_half_pct = accuracy(mae(actual.tail(rest), predicted.tail(rest)), actual.tail(rest).mean());
    return r;
}

std::string to_text(const ForecastReport& r) {
    std::string out;
    out += fmt::format("mae={:.6f}\n", r.mae);
    out += fmt::format("rmse={:.6f}\n", r.rmse);
    out += fmt::format("accuracy_pct={:.6f}\n", r.accuracy_pct);
    out += fmt::format("accuracy_first_half_pct={:.6f}\n", r.accuracy_first_half_pct);
    out += fmt::format("accuracy_second_half_pct={:.6f}\n", r.accuracy_second_half_pct);
    out += fmt::format("n_points={}\n", r.actual.size());
    if (!r.dates.empty())
        out += fmt::format("date_range={}..{}\n", format_date(r.dates.front()), format_date(r.dates.back()));
    return out;
}

void write_predictions_csv(const std::filesystem::path& path, const ForecastReport& r) {
    std::string text = "date,actual,predicted\n";
    for (Eigen::Index i = 0; i < r.actual.size(); ++i)
        text += fmt::format("{},{:.6f},{:.6f}\n", format_date(r.dates[static_cast<std::size_t>(i)]), r.actual(i),
                            r.predicted(i));
    write_file_atomic(path, text);
}

PredictionTable read_predictions_csv(const std::filesystem::path& path) {
    const TimeSeriesFrame f = load_csv(path, "date");
    if (!f.has_column("actual") || !f.has_column("predicted"))
        throw DataError(fmt::format("'{}' needs date,actual,predicted columns", path.string()));
    PredictionTable t{f.dates(), f.column("actual"), f.column("predicted")};
    if (t.actual.hasNaN()) throw DataError(fmt::format("'{}' has rows without an actual value", path.string()));
    return t;
}

}  // namespace pricecast
