#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pricecast/frame.hpp"

namespace pricecast {

namespace detail {
template <typename A, typename P>
void check_pair(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<P>& predicted) {
    if (actual.size() == 0) throw DataError("metrics: empty input");
    if (actual.size() != predicted.size()) throw DataError("metrics: length mismatch");
}
}  // namespace detail

template <typename A, typename P>
typename A::Scalar mae(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<P>& predicted) {
    detail::check_pair(actual, predicted);
    return (actual - predicted).cwiseAbs().mean();
}

template <typename A, typename P>
typename A::Scalar rmse(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<P>& predicted) {
    detail::check_pair(actual, predicted);
    return std::sqrt((actual - predicted).squaredNorm() / static_cast<typename A::Scalar>(actual.size()));
}

/// 100 - mae / mean(actual) * 100. Not clamped; a zero mean is an error.
double accuracy(double mae_value, double actual_mean);

struct ForecastReport {
    std::vector<Date> dates;
    Eigen::VectorXd actual;
    Eigen::VectorXd predicted;
    double mae = 0.0;
    double rmse = 0.0;
    double accuracy_pct = 0.0;
    double accuracy_first_half_pct = 0.0;
    double accuracy_second_half_pct = 0.0;
};

/// Halves split at floor(n / 2); each half uses its own MAE and actual mean.
ForecastReport report(std::vector<Date> dates, const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Key-value document, one `key=value` per line.
std::string to_text(const ForecastReport& r);

/// Header `date,actual,predicted`, prices with six decimals.
void write_predictions_csv(const std::filesystem::path& path, const ForecastReport& r);

struct PredictionTable {
    std::vector<Date> dates;
    Eigen::VectorXd actual;
    Eigen::VectorXd predicted;  // NaN where the row carries history only
};

PredictionTable read_predictions_csv(const std::filesystem::path& path);

}  // namespace pricecast
