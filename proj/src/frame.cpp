#include "pricecast/frame.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "pricecast/atomic_file.hpp"

namespace pricecast {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.emplace_back(trim(field));
    return out;
}

double parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return kMissing;
    if (s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return kMissing;
    return value;
}

int parse_digits(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return -1;
    return v;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
    const int y = parse_digits(text.substr(0, 4));
    const int m = parse_digits(text.substr(5, 2));
    const int d = parse_digits(text.substr(8, 2));
    if (y < 0 || m < 0 || d < 0) return std::nullopt;
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_date(Date d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

TimeSeriesFrame::TimeSeriesFrame(std::vector<Date> dates, std::vector<std::string> names, Eigen::MatrixXd values)
    : dates_(std::move(dates)), names_(std::move(names)), values_(std::move(values)) {
    if (static_cast<Eigen::Index>(dates_.size()) != values_.rows())
        throw DataError(fmt::format("frame has {} dates but {} value rows", dates_.size(), values_.rows()));
    if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
        throw DataError(fmt::format("frame has {} names but {} value columns", names_.size(), values_.cols()));
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i - 1] < dates_[i]))
            throw DataError(fmt::format("dates not strictly increasing at {}", format_date(dates_[i])));
    }
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw DataError(fmt::format("duplicate column '{}'", n));
    }
}

bool TimeSeriesFrame::has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Eigen::Index TimeSeriesFrame::column_index(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError(fmt::format("unknown column '{}'", name));
    return static_cast<Eigen::Index>(it - names_.begin());
}

TimeSeriesFrame TimeSeriesFrame::slice(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end < begin || end > rows()) throw DataError("row slice out of range");
    std::vector<Date> d(dates_.begin() + begin, dates_.begin() + end);
    return TimeSeriesFrame(std::move(d), names_, values_.middleRows(begin, end - begin));
}

TimeSeriesFrame TimeSeriesFrame::select(std::span<const std::string> names) const {
    Eigen::MatrixXd v(rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = column(names[j]);
    return TimeSeriesFrame(dates_, std::vector<std::string>(names.begin(), names.end()), std::move(v));
}

TimeSeriesFrame TimeSeriesFrame::with_column(const std::string& name, const Eigen::VectorXd& data) const {
    if (data.size() != rows()) throw DataError(fmt::format("column '{}' has wrong length", name));
    if (has_column(name)) {
        Eigen::MatrixXd v = values_;
        v.col(column_index(name)) = data;
        return TimeSeriesFrame(dates_, names_, std::move(v));
    }
    Eigen::MatrixXd v(rows(), cols() + 1);
    v.leftCols(cols()) = values_;
    v.col(cols()) = data;
    auto names = names_;
    names.push_back(name);
    return TimeSeriesFrame(dates_, std::move(names), std::move(v));
}

bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
    if (a.dates_ != b.dates_ || a.names_ != b.names_ || a.values_.rows() != b.values_.rows() ||
        a.values_.cols() != b.values_.cols())
        return false;
    // NaN-aware elementwise equality.
    for (Eigen::Index j = 0; j < a.values_.cols(); ++j)
        for (Eigen::Index i = 0; i < a.values_.rows(); ++i) {
            const double x = a.values_(i, j), y = b.values_(i, j);
            if (!(x == y || (is_missing(x) && is_missing(y)))) return false;
        }
    return true;
}

TimeSeriesFrame load_csv(const std::filesystem::path& path, const std::string& date_column) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));

    std::string line;
    if (!std::getline(in, line)) throw DataError(fmt::format("'{}' has no header row", path.string()));
    const auto header = split_csv_line(line);
    const auto date_it = std::find(header.begin(), header.end(), date_column);
    if (date_it == header.end())
        throw DataError(fmt::format("'{}' has no date column '{}'", path.string(), date_column));
    const auto date_idx = static_cast<std::size_t>(date_it - header.begin());

    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != date_idx) names.push_back(header[j]);

    std::vector<std::pair<Date, std::vector<double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() <= date_idx) throw DataError(fmt::format("line {}: missing date cell", line_no));
        const auto date = parse_date(cells[date_idx]);
        if (!date) throw DataError(fmt::format("line {}: unparseable date '{}'", line_no, cells[date_idx]));
        std::vector<double> values;
        values.reserve(names.size());
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == date_idx) continue;
            values.push_back(j < cells.size() ? parse_number(cells[j]) : kMissing);
        }
        rows.emplace_back(*date, std::move(values));
    }
    if (rows.empty()) throw DataError(fmt::format("'{}' has no data rows", path.string()));

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw DataError(fmt::format("duplicate date {}", format_date(rows[i].first)));

    std::vector<Date> dates;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        dates.push_back(rows[i].first);
        for (std::size_t j = 0; j < names.size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].second[j];
    }
    return TimeSeriesFrame(std::move(dates), std::move(names), std::move(values));
}

void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path, const std::string& date_column) {
    std::string out = date_column;
    for (const auto& n : frame.column_names()) out += ',' + n;
    out += '\n';
    for (Eigen::Index i = 0; i < frame.rows(); ++i) {
        out += format_date(frame.dates()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < frame.cols(); ++j) {
            out += ',';
            const double v = frame.values()(i, j);
            if (!is_missing(v)) out += fmt::format("{}", v);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame) {
    if (frame.empty()) throw DataError("forward_fill: empty frame");
    Eigen::MatrixXd v = frame.values();
    Eigen::Index first_complete = 0;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index first_seen = -1;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            if (!is_missing(v(i, j))) {
                if (first_seen < 0) first_seen = i;
            } else if (first_seen >= 0) {
                v(i, j) = v(i - 1, j);
            }
        }
        if (first_seen < 0)
            throw DataError(fmt::format("column '{}' has no observations", frame.column_names()[static_cast<std::size_t>(j)]));
        first_complete = std::max(first_complete, first_seen);
    }
    std::vector<Date> dates(frame.dates().begin() + first_complete, frame.dates().end());
    return TimeSeriesFrame(std::move(dates), frame.column_names(), v.bottomRows(v.rows() - first_complete));
}

void SplitSpec::validate() const {
    if (fractions.empty()) throw DataError("split: no fractions");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw DataError("split: negative fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError(fmt::format("split fractions sum to {}, not 1", sum));
}

std::vector<TimeSeriesFrame> chrono_split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
    spec.validate();
    const Eigen::Index n = frame.rows();
    if (n < static_cast<Eigen::Index>(spec.fractions.size()))
        throw DataError(fmt::format("split: {} rows for {} parts", n, spec.fractions.size()));
    std::vector<TimeSeriesFrame> parts;
    double cumulative = 0.0;
    Eigen::Index begin = 0;
    for (std::size_t k = 0; k < spec.fractions.size(); ++k) {
        cumulative += spec.fractions[k];
        Eigen::Index end = n;
        if (k + 1 < spec.fractions.size()) {
            // Guard against 0.6 + 0.2 = 0.7999... under-flooring.
            end = static_cast<Eigen::Index>(std::floor(cumulative * static_cast<double>(n) + 1e-9));
            end = std::clamp(end, begin, n);
        }
        parts.push_back(frame.slice(begin, end));
        begin = end;
    }
    return parts;
}

const ColumnRange& ScalerParams::at(const std::string& column) const {
    const auto it = ranges.find(column);
    if (it == ranges.end()) throw DataError(fmt::format("scaler has no column '{}'", column));
    return it->second;
}

ScalerParams fit_scaler(const TimeSeriesFrame& train) {
    if (train.empty()) throw DataError("fit_scaler: empty frame");
    ScalerParams params;
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
        const auto& name = train.column_names()[static_cast<std::size_t>(j)];
        const auto col = train.values().col(j);
        if (col.hasNaN()) throw DataError(fmt::format("fit_scaler: column '{}' has missing values", name));
        params.ranges[name] = ColumnRange{col.minCoeff(), col.maxCoeff()};
    }
    return params;
}

TimeSeriesFrame apply_scaler(const TimeSeriesFrame& frame, const ScalerParams& params) {
    Eigen::MatrixXd v = frame.values();
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const auto& r = params.at(frame.column_names()[static_cast<std::size_t>(j)]);
        const double span = r.max - r.min;
        if (span > 0.0)
            v.col(j) = (v.col(j).array() - r.min) / span;
        else
            v.col(j).setZero();
    }
    return TimeSeriesFrame(frame.dates(), frame.column_names(), std::move(v));
}

Eigen::VectorXd invert_scaler(const Eigen::VectorXd& scaled, const std::string& column, const ScalerParams& params) {
    const auto& r = params.at(column);
    const double span = r.max - r.min;
    if (span > 0.0) return (scaled.array() * span + r.min).matrix();
    return Eigen::VectorXd::Constant(scaled.size(), r.min);
}

std::map<std::string, std::optional<double>> correlation_vector(const TimeSeriesFrame& frame,
                                                                const std::string& target) {
    const Eigen::VectorXd y = frame.column(target);
    if (y.hasNaN()) throw DataError("correlation_vector: target has missing values");
    const Eigen::ArrayXd yc = y.array() - y.mean();
    const double syy = yc.square().sum();

    std::map<std::string, std::optional<double>> out;
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
        const auto& name = frame.column_names()[static_cast<std::size_t>(j)];
        if (name == target) continue;
        const auto x = frame.values().col(j);
        if (x.hasNaN()) throw DataError(fmt::format("correlation_vector: column '{}' has missing values", name));
        const Eigen::ArrayXd xc = x.array() - x.mean();
        const double sxx = xc.square().sum();
        if (sxx <= 0.0 || syy <= 0.0 || x.minCoeff() == x.maxCoeff()) {
            out[name] = std::nullopt;
            continue;
        }
        out[name] = std::clamp((xc * yc).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
    }
    return out;
}

std::vector<std::string> select_features(const std::map<std::string, std::optional<double>>& correlations,
                                         double threshold) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& [name, r] : correlations)
        if (r && std::abs(*r) > threshold) kept.emplace_back(name, std::abs(*r));
    // Two equal |r| stored as +0.6 and -0.6 compare equal exactly.
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> names;
    for (auto& [n, _] : kept) names.push_back(std::move(n));
    return names;
}

WindowedDataset make_windows(const TimeSeriesFrame& frame, std::span<const std::string> feature_columns,
                             const std::string& target, Eigen::Index window, Eigen::Index horizon) {
    if (window < 1 || horizon < 1) throw DataError("make_windows: window and horizon must be positive");
    const Eigen::Index n = frame.rows();
    if (n < window + horizon)
        throw DataError(fmt::format("make_windows: need at least {} rows (window {} + horizon {}), got {}",
                                    window + horizon, window, horizon, n));
    const TimeSeriesFrame features = frame.select(feature_columns);
    const Eigen::VectorXd y = frame.column(target);

    WindowedDataset ds;
    ds.window = window;
    ds.horizon = horizon;
    const Eigen::Index count = n - window - horizon + 1;
    ds.inputs.reserve(static_cast<std::size_t>(count));
    ds.targets.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        ds.inputs.emplace_back(features.values().middleRows(i, window));
        const Eigen::Index t = i + window + horizon - 1;
        ds.targets(i) = y(t);
        ds.target_dates.push_back(frame.dates()[static_cast<std::size_t>(t)]);
    }
    return ds;
}

}  // namespace pricecast
