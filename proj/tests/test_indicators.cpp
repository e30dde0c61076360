#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pricecast/indicators.hpp"
#include "test_util.hpp"

using namespace pricecast;

namespace {

Eigen::VectorXd random_prices(Eigen::Index n, std::uint64_t seed) {
    const auto z = oracle::normals(static_cast<std::size_t>(n), seed);
    Eigen::VectorXd p(n);
    double lp = std::log(100.0);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = std::exp(lp += 0.02 * z[static_cast<std::size_t>(i)]);
    return p;
}

}  // namespace

TEST(Sma, MeanOfPairs) {
    const Eigen::VectorXd s = sma(Eigen::Vector4d(1, 2, 3, 4), 2);
    EXPECT_TRUE(std::isnan(s(0)));
    EXPECT_EQ(s.tail(3), Eigen::Vector3d(1.5, 2.5, 3.5));
}

TEST(Sma, PeriodOneIsIdentityAndConstantStaysConstant) {
    const auto p = random_prices(50, 1);
    EXPECT_EQ(sma(p, 1), p);
    const Eigen::VectorXd c = sma(Eigen::VectorXd::Constant(20, 3.25), 5);
    for (Eigen::Index i = 4; i < 20; ++i) EXPECT_DOUBLE_EQ(c(i), 3.25);
}

TEST(Sma, BoundedByWindowExtrema) {
    const auto p = random_prices(300, 2);
    const Eigen::VectorXd s = sma(p, 20);
    for (Eigen::Index t = 19; t < p.size(); ++t) {
        EXPECT_GE(s(t), p.segment(t - 19, 20).minCoeff() - 1e-12);
        EXPECT_LE(s(t), p.segment(t - 19, 20).maxCoeff() + 1e-12);
    }
}

TEST(Rsi, MonotoneAndConstantSeries) {
    Eigen::VectorXd up(30), down(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        up(i) = 100.0 + static_cast<double>(i);
        down(i) = 100.0 - static_cast<double>(i);
    }
    const Eigen::VectorXd ru = rsi(up, 14), rd = rsi(down, 14), rc = rsi(Eigen::VectorXd::Constant(30, 5.0), 14);
    for (Eigen::Index i = 0; i < 14; ++i) EXPECT_TRUE(std::isnan(ru(i)));
    for (Eigen::Index i = 14; i < 30; ++i) {
        EXPECT_EQ(ru(i), 100.0);
        EXPECT_EQ(rd(i), 0.0);
        EXPECT_EQ(rc(i), 50.0);
    }
}

TEST(Rsi, MatchesWilderRecursionOracle) {
    const auto p = random_prices(400, 3);
    const Eigen::VectorXd r = rsi(p, 14);
    // Oracle: Wilder averages written as exponential smoothing with alpha = 1/n.
    std::vector<double> gains, losses;
    for (Eigen::Index i = 1; i < p.size(); ++i) {
        const double d = p(i) - p(i - 1);
        gains.push_back(d > 0 ? d : 0.0);
        losses.push_back(d < 0 ? -d : 0.0);
    }
    double ag = 0, al = 0;
    for (int k = 0; k < 14; ++k) {
        ag += gains[static_cast<std::size_t>(k)] / 14.0;
        al += losses[static_cast<std::size_t>(k)] / 14.0;
    }
    for (std::size_t k = 14; k <= gains.size(); ++k) {
        if (k > 14) {
            ag += (gains[k - 1] - ag) / 14.0;
            al += (losses[k - 1] - al) / 14.0;
        }
        const double expect = 100.0 * ag / (ag + al);
        EXPECT_NEAR(r(static_cast<Eigen::Index>(k)), expect, 1e-9);
    }
}

TEST(Rsi, AlwaysWithinBoundsAndShortSeriesErrors) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Eigen::VectorXd r = rsi(random_prices(100, seed), 14);
        for (Eigen::Index i = 14; i < r.size(); ++i) {
            EXPECT_GE(r(i), 0.0);
            EXPECT_LE(r(i), 100.0);
        }
    }
    EXPECT_THROW(rsi(random_prices(14, 1), 14), DataError);
}

TEST(RollingVolatility, ConstantAndGeometricSeriesAreZero) {
    const Eigen::VectorXd c = rolling_volatility(Eigen::VectorXd::Constant(40, 10.0), 30);
    Eigen::VectorXd g(40);
    for (Eigen::Index i = 0; i < 40; ++i) g(i) = 5.0 * std::pow(1.01, static_cast<double>(i));
    const Eigen::VectorXd vg = rolling_volatility(g, 30);
    for (Eigen::Index i = 0; i < 30; ++i) EXPECT_TRUE(std::isnan(c(i)));
    for (Eigen::Index i = 30; i < 40; ++i) {
        EXPECT_EQ(c(i), 0.0);
        EXPECT_NEAR(vg(i), 0.0, 1e-9);
    }
}

TEST(RollingVolatility, AlternatingReturnsMatchStdevOracle) {
    Eigen::VectorXd p(61);
    p(0) = 100;
    for (Eigen::Index i = 1; i < p.size(); ++i) p(i) = p(i - 1) * std::exp(i % 2 ? 0.01 : -0.01);
    const Eigen::VectorXd v = rolling_volatility(p, 30);
    for (Eigen::Index t = 30; t < p.size(); ++t) {
        std::vector<double> r;
        for (Eigen::Index k = t - 29; k <= t; ++k) r.push_back(std::log(p(k) / p(k - 1)));
        EXPECT_NEAR(v(t), oracle::sample_stdev(r) * std::sqrt(252.0) * 100.0, 1e-10);
    }
}

TEST(RollingVolatility, ScaleInvariantAndNonNegative) {
    const auto p = random_prices(200, 4);
    const Eigen::VectorXd a = rolling_volatility(p, 30), b = rolling_volatility((p * 37.5).eval(), 30);
    for (Eigen::Index t = 30; t < p.size(); ++t) {
        EXPECT_GE(a(t), 0.0);
        EXPECT_NEAR(a(t), b(t), 1e-9);
    }
    Eigen::VectorXd bad = p;
    bad(10) = 0;
    EXPECT_THROW(rolling_volatility(bad, 30), DataError);
}

TEST(HighLowDiff, SubtractsAndValidates) {
    EXPECT_EQ(high_low_diff(Eigen::Vector2d(10, 12), Eigen::Vector2d(9, 11)), Eigen::Vector2d(1, 1));
    EXPECT_EQ(high_low_diff(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 4)), Eigen::Vector2d::Zero());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 100);
    Eigen::VectorXd lo(100), hi(100);
    for (Eigen::Index i = 0; i < 100; ++i) {
        lo(i) = u(rng);
        hi(i) = lo(i) + u(rng);
    }
    const Eigen::VectorXd d = high_low_diff(hi, lo);
    for (Eigen::Index i = 0; i < 100; ++i) EXPECT_EQ(d(i), hi(i) - lo(i));
    try {
        high_low_diff(Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(4, 6, 4));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
    }
}

TEST(DeriveIndicators, NamesAlignmentAndSkipsExisting) {
    const Eigen::Index n = 260;
    const auto p = random_prices(n, 6);
    std::vector<Date> dates;
    std::chrono::sys_days d{Date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}}};
    for (Eigen::Index i = 0; i < n; ++i) dates.emplace_back(d + std::chrono::days{i});
    Eigen::MatrixXd v(n, 3);
    v.col(0) = p;
    v.col(1) = p * 1.01;
    v.col(2) = p * 0.99;
    const TimeSeriesFrame f(dates, {"PX_LAST", "PX_HIGH", "PX_LOW"}, v);

    const auto specs = default_indicator_specs(f, "PX_LAST");
    std::vector<std::string> names;
    for (const auto& s : specs) names.push_back(s.output_name());
    EXPECT_EQ(names, (std::vector<std::string>{"MOV_AVG_50D", "MOV_AVG_200D", "RSI_14D", "VOLATILITY_30D",
                                                "PX_HIGH_LOW_DIFFERENCE"}));

    const auto out = derive_indicators(f, specs);
    EXPECT_EQ(out.rows(), n);
    EXPECT_TRUE(out.column("MOV_AVG_50D").tail(n - 49) == sma(p, 50).tail(n - 49));
    EXPECT_TRUE(out.column("MOV_AVG_50D").head(49).array().isNaN().all());
    EXPECT_EQ(out.column("RSI_14D").tail(n - 14), rsi(p, 14).tail(n - 14));
    EXPECT_TRUE(std::isnan(out.column("MOV_AVG_200D")(198)));
    EXPECT_FALSE(std::isnan(out.column("MOV_AVG_200D")(199)));

    const auto pre = f.with_column("RSI_14D", Eigen::VectorXd::Constant(n, 42.0));
    EXPECT_EQ(derive_indicators(pre, specs).column("RSI_14D"), Eigen::VectorXd::Constant(n, 42.0));

    const TimeSeriesFrame only_close(dates, {"PX_LAST"}, p);
    EXPECT_EQ(default_indicator_specs(only_close, "PX_LAST").size(), 4u);
}
