#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pricecast/frame.hpp"
#include "test_util.hpp"

using namespace pricecast;
using testutil::TempDir;

namespace {

constexpr double NaN = kMissing;

Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}; }

std::vector<Date> days(Eigen::Index n) {
    std::vector<Date> out;
    std::chrono::sys_days d{day(2020, 1, 1)};
    for (Eigen::Index i = 0; i < n; ++i) out.emplace_back(d + std::chrono::days{i});
    return out;
}

TimeSeriesFrame frame_of(std::vector<std::string> names, const Eigen::MatrixXd& v) {
    return TimeSeriesFrame(days(v.rows()), std::move(names), v);
}

TimeSeriesFrame random_frame(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double missing_rate = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-50.0, 150.0), coin(0.0, 1.0);
    Eigen::MatrixXd v(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) v(i, j) = coin(rng) < missing_rate ? NaN : u(rng);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < cols; ++j) names.push_back("c" + std::to_string(j));
    return frame_of(names, v);
}

}  // namespace

TEST(ParseDate, AcceptsIsoDatesAndTimestamps) {
    EXPECT_EQ(parse_date("2020-01-02"), day(2020, 1, 2));
    EXPECT_EQ(parse_date("2020-01-02T00:00:00"), day(2020, 1, 2));
    EXPECT_FALSE(parse_date("2020-13-02"));
    EXPECT_FALSE(parse_date("02/01/2020"));
    EXPECT_EQ(format_date(day(2013, 10, 1)), "2013-10-01");
}

TEST(LoadCsv, TwoRowsOneColumn) {
    TempDir dir;
    const auto f = load_csv(dir.write("a.csv", "date,close\n2020-01-02,100\n2020-01-03,101\n"));
    EXPECT_EQ(f.rows(), 2);
    EXPECT_EQ(f.cols(), 1);
    EXPECT_EQ(f.column("close")(1), 101.0);
}

TEST(LoadCsv, EmptyCellIsMissingAndRowIsKept) {
    TempDir dir;
    const auto f = load_csv(dir.write("a.csv", "date,close,pmi\n2020-01-02,100,\n2020-01-03,101,52.1\n"));
    ASSERT_EQ(f.rows(), 2);
    EXPECT_TRUE(is_missing(f.column("pmi")(0)));
    EXPECT_EQ(f.column("pmi")(1), 52.1);
}

TEST(LoadCsv, SortsRowsByDate) {
    std::vector<std::pair<std::string, int>> rows{{"2021-03-04", 1}, {"2020-05-06", 2}, {"2022-01-01", 3}, {"2020-01-09", 4}};
    std::string text = "date,x\n";
    for (const auto& [d, v] : rows) text += d + "," + std::to_string(v) + "\n";
    TempDir dir;
    const auto f = load_csv(dir.write("a.csv", text));
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    ASSERT_EQ(f.rows(), 4);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        EXPECT_EQ(format_date(f.dates()[i]), sorted[i].first);
        EXPECT_EQ(f.column("x")(static_cast<Eigen::Index>(i)), sorted[i].second);
    }
}

TEST(LoadCsv, Errors) {
    TempDir dir;
    EXPECT_THROW(load_csv(dir / "missing.csv"), DataError);
    EXPECT_THROW(load_csv(dir.write("a.csv", "day,x\n2020-01-01,1\n")), DataError);
    EXPECT_THROW(load_csv(dir.write("b.csv", "date,x\n2020-01-01,1\n2020-01-01,2\n")), DataError);
    EXPECT_THROW(load_csv(dir.write("c.csv", "date,x\n")), DataError);
}

TEST(LoadCsv, WriteThenLoadRoundTrips) {
    TempDir dir;
    const auto f = random_frame(30, 3, 7, 0.2);
    write_csv(f, dir / "f.csv");
    EXPECT_EQ(load_csv(dir / "f.csv"), f);
}

TEST(ForwardFill, FillsInteriorGaps) {
    Eigen::MatrixXd v(4, 1);
    v << 1, NaN, NaN, 4;
    const auto f = forward_fill(frame_of({"a"}, v));
    EXPECT_EQ(f.column("a"), Eigen::Vector4d(1, 1, 1, 4));
}

TEST(ForwardFill, DropsLeadingGapRows) {
    Eigen::MatrixXd v(3, 1);
    v << NaN, 2, NaN;
    const auto f = forward_fill(frame_of({"a"}, v));
    ASSERT_EQ(f.rows(), 2);
    EXPECT_EQ(f.column("a"), Eigen::Vector2d(2, 2));
    EXPECT_EQ(f.dates().front(), day(2020, 1, 2));
}

TEST(ForwardFill, ColumnsAreFilledIndependently) {
    const auto f = random_frame(200, 4, 11, 0.3);
    const auto filled = forward_fill(f);
    // Per-column oracle: fill, then drop the rows before every column has a value.
    const Eigen::Index n = f.rows();
    Eigen::MatrixXd expect = f.values();
    Eigen::Index first = 0;
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
        Eigen::Index k = 0;
        while (k < n && std::isnan(expect(k, j))) ++k;
        first = std::max(first, k);
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::isnan(expect(i, j))) expect(i, j) = expect(i - 1, j);
    }
    EXPECT_EQ(filled.rows(), n - first);
    EXPECT_TRUE(filled.values() == expect.bottomRows(n - first));
}

TEST(ForwardFill, IsIdempotent) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto once = forward_fill(random_frame(60, 3, seed, 0.25));
        EXPECT_EQ(forward_fill(once), once) << "seed " << seed;
    }
}

TEST(ForwardFill, AllMissingColumnIsAnErrorNamingIt) {
    Eigen::MatrixXd v(3, 2);
    v << 1, NaN, 2, NaN, 3, NaN;
    try {
        forward_fill(frame_of({"ok", "empty_col"}, v));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("empty_col"), std::string::npos);
    }
}

TEST(ChronoSplit, ExactDivision) {
    const auto f = random_frame(10, 1, 1);
    auto parts = chrono_split(f, {{0.6, 0.2, 0.2}});
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0].rows(), 6);
    EXPECT_EQ(parts[1].rows(), 2);
    EXPECT_EQ(parts[2].rows(), 2);
    parts = chrono_split(f, {{0.8, 0.2}});
    EXPECT_EQ(parts[0].rows(), 8);
    EXPECT_EQ(parts[1].rows(), 2);
}

TEST(ChronoSplit, FloorOfCumulativeFraction) {
    const auto parts = chrono_split(random_frame(7, 1, 1), {{0.6, 0.2, 0.2}});
    EXPECT_EQ(parts[0].rows(), 4);
    EXPECT_EQ(parts[1].rows(), 1);
    EXPECT_EQ(parts[2].rows(), 2);
}

TEST(ChronoSplit, PartsConcatenateInOrder) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng() % 300);
        const auto f = random_frame(n, 2, rng());
        double a = std::uniform_real_distribution<double>(0, 1)(rng), b = std::uniform_real_distribution<double>(0, 1 - a)(rng);
        const auto parts = chrono_split(f, {{a, b, 1.0 - a - b}});
        Eigen::Index row = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            EXPECT_EQ(parts[k], f.slice(row, row + parts[k].rows()));
            if (k > 0 && !parts[k].empty() && !parts[k - 1].empty())
                EXPECT_LT(parts[k - 1].dates().back(), parts[k].dates().front());
            row += parts[k].rows();
        }
        EXPECT_EQ(row, n);
    }
}

TEST(ChronoSplit, FractionsMustSumToOne) {
    const auto f = random_frame(10, 1, 1);
    EXPECT_THROW(chrono_split(f, {{0.6, 0.2}}), DataError);
    EXPECT_THROW(chrono_split(f, {{0.6, 0.5, -0.1}}), DataError);
}

TEST(Scaler, FitsExtremaPerColumn) {
    Eigen::MatrixXd v(3, 2);
    v << 0, 7, 5, 7, 10, 7;
    const auto p = fit_scaler(frame_of({"a", "k"}, v));
    EXPECT_EQ(p.at("a").min, 0);
    EXPECT_EQ(p.at("a").max, 10);
    EXPECT_EQ(p.at("k").min, 7);
    EXPECT_EQ(p.at("k").max, 7);

    const auto r = random_frame(50, 3, 5);
    const auto q = fit_scaler(r);
    for (const auto& name : r.column_names()) {
        EXPECT_EQ(q.at(name).min, r.column(name).minCoeff());
        EXPECT_EQ(q.at(name).max, r.column(name).maxCoeff());
    }
}

TEST(Scaler, ApplyAndInvert) {
    Eigen::MatrixXd v(3, 2);
    v << 0, 7, 5, 7, 10, 7;
    const auto f = frame_of({"a", "k"}, v);
    const auto p = fit_scaler(f);
    const auto s = apply_scaler(f, p);
    EXPECT_EQ(s.column("a"), Eigen::Vector3d(0, 0.5, 1));
    EXPECT_EQ(s.column("k"), Eigen::Vector3d::Zero());
    EXPECT_EQ(invert_scaler(Eigen::Vector3d(0, 0.5, 1), "a", p), Eigen::Vector3d(0, 5, 10));

    Eigen::MatrixXd t(1, 2);
    t << 12, 7;
    EXPECT_DOUBLE_EQ(apply_scaler(frame_of({"a", "k"}, t), p).column("a")(0), 1.2);
    EXPECT_DOUBLE_EQ(invert_scaler(Eigen::VectorXd::Constant(1, 1.2), "a", p)(0), 12.0);
}

TEST(Scaler, UnknownColumnIsAnError) {
    const auto p = fit_scaler(random_frame(5, 1, 1));
    EXPECT_THROW(apply_scaler(random_frame(5, 2, 1), p), DataError);
    EXPECT_THROW(invert_scaler(Eigen::VectorXd::Zero(2), "nope", p), DataError);
}

TEST(Scaler, RoundTripProperty) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = random_frame(40, 4, seed);
        const auto p = fit_scaler(f.slice(0, 25));
        const auto s = apply_scaler(f, p);
        for (const auto& name : f.column_names()) {
            const Eigen::VectorXd back = invert_scaler(s.column(name), name, p);
            EXPECT_LE((back - f.column(name)).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed << " " << name;
        }
    }
}

TEST(Correlation, SelfAndNegated) {
    const auto x = testutil::to_eigen(oracle::normals(100, 1));
    auto f = frame_of({"t"}, x).with_column("same", x).with_column("neg", -x);
    const auto c = correlation_vector(f, "t");
    EXPECT_EQ(c.count("t"), 0u);
    EXPECT_NEAR(*c.at("same"), 1.0, 1e-12);
    EXPECT_NEAR(*c.at("neg"), -1.0, 1e-12);
}

TEST(Correlation, IndependentNoiseIsNearZero) {
    const auto f = frame_of({"t"}, testutil::to_eigen(oracle::normals(10000, 1)))
                       .with_column("noise", testutil::to_eigen(oracle::normals(10000, 2)));
    EXPECT_LT(std::abs(*correlation_vector(f, "t").at("noise")), 0.05);
}

TEST(Correlation, MatchesTwoPassOracle) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto f = random_frame(500, 5, seed);
        const auto c = correlation_vector(f, "c0");
        const auto t = f.column("c0");
        for (const auto& name : {"c1", "c2", "c3", "c4"}) {
            const Eigen::VectorXd x = f.column(name);
            const double r = oracle::pearson(std::vector<double>(x.data(), x.data() + x.size()),
                                             std::vector<double>(t.data(), t.data() + t.size()));
            EXPECT_NEAR(*c.at(name), r, 1e-10);
        }
    }
}

TEST(Correlation, ConstantColumnIsUndefinedAndMissingTargetErrors) {
    const auto f = random_frame(20, 1, 1).with_column("flat", Eigen::VectorXd::Constant(20, 3.0));
    EXPECT_FALSE(correlation_vector(f, "c0").at("flat").has_value());
    EXPECT_THROW(correlation_vector(f, "nope"), DataError);
}

TEST(SelectFeatures, ThresholdAndOrdering) {
    using M = std::map<std::string, std::optional<double>>;
    EXPECT_EQ(select_features(M{{"A", 0.9}, {"B", -0.6}, {"C", 0.3}}, 0.5), (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(select_features(M{{"A", 0.9}, {"B", -0.6}, {"C", 0.3}, {"D", std::nullopt}}, 0.0),
              (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(select_features(M{{"B", -0.6}, {"A", 0.6}}, 0.5), (std::vector<std::string>{"A", "B"}));
    EXPECT_TRUE(select_features(M{{"A", 0.5}}, 0.5).empty());
}

TEST(MakeWindows, CountsAtTheBoundary) {
    const auto f = random_frame(220, 2, 1);
    const std::vector<std::string> feats{"c0", "c1"};
    const auto w = make_windows(f, feats, "c0", 216, 1);
    EXPECT_EQ(w.size(), 4u);
    const auto one = make_windows(f.slice(0, 217), feats, "c0", 216, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_TRUE(one.inputs[0] == f.values().topRows(216));
    EXPECT_EQ(one.targets(0), f.column("c0")(216));
    EXPECT_EQ(one.target_dates[0], f.dates()[216]);
    try {
        make_windows(f.slice(0, 216), feats, "c0", 216, 1);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("217"), std::string::npos) << e.what();
    }
}

TEST(MakeWindows, CountMatchesEnumeration) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(2 + rng() % 999);
        const auto W = static_cast<Eigen::Index>(1 + rng() % 40), h = static_cast<Eigen::Index>(1 + rng() % 10);
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i + W + h - 1 < n) ++count;
        const auto f = random_frame(n, 1, static_cast<std::uint64_t>(trial));
        const std::vector<std::string> feats{"c0"};
        if (count == 0) {
            EXPECT_THROW(make_windows(f, feats, "c0", W, h), DataError);
            continue;
        }
        const auto w = make_windows(f, feats, "c0", W, h);
        ASSERT_EQ(w.size(), count) << "n=" << n << " W=" << W << " h=" << h;
        const std::size_t last = count - 1;
        EXPECT_EQ(w.targets(static_cast<Eigen::Index>(last)), f.column("c0")(static_cast<Eigen::Index>(last) + W + h - 1));
    }
}
