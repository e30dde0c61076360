#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pricecast/errors.hpp"

namespace pricecast {

using Date = std::chrono::year_month_day;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double x) { return std::isnan(x); }

/// Parses `YYYY-MM-DD`, optionally followed by an ISO-8601 time part.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Date-indexed table of named numeric columns. Missing cells are NaN.
///
/// Values are stored as a rows x cols matrix (one row per date). Dates are
/// strictly increasing; this is checked on construction.
class TimeSeriesFrame {
public:
    TimeSeriesFrame() = default;
    TimeSeriesFrame(std::vector<Date> dates, std::vector<std::string> names, Eigen::MatrixXd values);

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    bool empty() const { return values_.rows() == 0; }

    const std::vector<Date>& dates() const { return dates_; }
    const std::vector<std::string>& column_names() const { return names_; }
    const Eigen::MatrixXd& values() const { return values_; }

    bool has_column(const std::string& name) const;
    Eigen::Index column_index(const std::string& name) const;
    Eigen::VectorXd column(const std::string& name) const { return values_.col(column_index(name)); }

    /// Rows [begin, end).
    TimeSeriesFrame slice(Eigen::Index begin, Eigen::Index end) const;
    TimeSeriesFrame select(std::span<const std::string> names) const;
    /// Copy with `name` appended, or replaced when it already exists.
    TimeSeriesFrame with_column(const std::string& name, const Eigen::VectorXd& data) const;

    friend bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b);

private:
    std::vector<Date> dates_;
    std::vector<std::string> names_;
    Eigen::MatrixXd values_;
};

TimeSeriesFrame load_csv(const std::filesystem::path& path, const std::string& date_column = "date");
void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path,
               const std::string& date_column = "date");

/// Replaces each missing value with the last observation in its column and
/// drops leading rows that still have a gap in any column.
TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame);

struct SplitSpec {
    std::vector<double> fractions;

    /// Throws DataError unless fractions are non-negative and sum to 1 within 1e-9.
    void validate() const;
};

/// Chronological contiguous partition; cut k sits at floor(cumulative_k * rows).
std::vector<TimeSeriesFrame> chrono_split(const TimeSeriesFrame& frame, const SplitSpec& spec);

struct ColumnRange {
    double min = 0.0;
    double max = 0.0;
};

struct ScalerParams {
    std::map<std::string, ColumnRange> ranges;

    const ColumnRange& at(const std::string& column) const;
};

ScalerParams fit_scaler(const TimeSeriesFrame& train);
TimeSeriesFrame apply_scaler(const TimeSeriesFrame& frame, const ScalerParams& params);
Eigen::VectorXd invert_scaler(const Eigen::VectorXd& scaled, const std::string& column,
                              const ScalerParams& params);

/// Pearson correlation of every non-target column with `target`.
/// Zero-variance columns map to std::nullopt.
std::map<std::string, std::optional<double>> correlation_vector(const TimeSeriesFrame& frame,
                                                                const std::string& target);

/// Columns with |r| > threshold, sorted by |r| descending then name ascending.
std::vector<std::string> select_features(const std::map<std::string, std::optional<double>>& correlations,
                                         double threshold);

struct WindowedDataset {
    std::vector<Eigen::MatrixXd> inputs;  // each window x features
    Eigen::VectorXd targets;
    std::vector<Date> target_dates;
    Eigen::Index window = 0;
    Eigen::Index horizon = 0;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
    Eigen::Index features() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

/// Sample i uses rows [i, i + window) of `feature_columns`; its target is
/// `target` at row i + window + horizon - 1.
WindowedDataset make_windows(const TimeSeriesFrame& frame, std::span<const std::string> feature_columns,
                             const std::string& target, Eigen::Index window, Eigen::Index horizon);

}  // namespace pricecast
