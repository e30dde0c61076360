#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pricecast/metrics.hpp"
#include "test_util.hpp"

using namespace pricecast;
using testutil::to_eigen;

namespace {

std::vector<Date> dates(std::size_t n) {
    std::vector<Date> out;
    std::chrono::sys_days d{Date{std::chrono::year{2024}, std::chrono::month{1}, std::chrono::day{1}}};
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(d + std::chrono::days{static_cast<int>(i)});
    return out;
}

}  // namespace

TEST(Mae, Examples) {
    EXPECT_EQ(mae(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)), 0.0);
    EXPECT_EQ(mae(Eigen::Vector2d(100, 200), Eigen::Vector2d(110, 190)), 10.0);
    EXPECT_THROW(mae(Eigen::VectorXd(), Eigen::VectorXd()), DataError);
    EXPECT_THROW(mae(Eigen::VectorXd(Eigen::Vector2d(1, 2)), Eigen::VectorXd(Eigen::Vector3d(1, 2, 3))), DataError);
}

TEST(Rmse, Examples) {
    EXPECT_EQ(rmse(Eigen::Vector2d(4, 5), Eigen::Vector2d(4, 5)), 0.0);
    EXPECT_NEAR(rmse(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)), std::sqrt(12.5), 1e-15);
    const Eigen::VectorXd a = to_eigen(oracle::normals(10, 1));
    EXPECT_DOUBLE_EQ(rmse(a, (a.array() - 2.5).matrix().eval()), 2.5);
    EXPECT_THROW(rmse(Eigen::VectorXd(Eigen::Vector2d(1, 2)), Eigen::VectorXd(Eigen::Vector3d(1, 2, 3))), DataError);
}

TEST(Accuracy, Examples) {
    EXPECT_EQ(accuracy(0, 123), 100.0);
    EXPECT_EQ(accuracy(10, 100), 90.0);
    EXPECT_NEAR(accuracy(462.1, 4530.4), 89.80, 0.005);
    EXPECT_LT(accuracy(300, 100), 0.0);
    EXPECT_THROW(accuracy(1, 0), DataError);
}

TEST(Metrics, FuzzedAgainstOracle) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> price(100, 5000), noise(-200, 200);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 400;
        std::vector<double> a(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = price(rng);
            p[i] = a[i] + noise(rng);
        }
        const auto ea = to_eigen(a), ep = to_eigen(p);
        EXPECT_NEAR(mae(ea, ep), oracle::mae(a, p), 1e-12 * std::max(1.0, oracle::mae(a, p)));
        EXPECT_NEAR(rmse(ea, ep), oracle::rmse(a, p), 1e-12 * std::max(1.0, oracle::rmse(a, p)));
        EXPECT_NEAR(accuracy(mae(ea, ep), ea.mean()), oracle::accuracy(a, p), 1e-10);
        EXPECT_GE(rmse(ea, ep), mae(ea, ep) - 1e-12);
    }
}

TEST(Metrics, TranslationAndScaleInvariance) {
    const auto a = to_eigen(oracle::normals(200, 1)), e = to_eigen(oracle::normals(200, 2));
    const Eigen::VectorXd actual = (a.array() * 50 + 1000).matrix(), pred = actual + 10 * e;
    const Eigen::VectorXd shifted_a = (actual.array() + 321.0).matrix(), shifted_p = (pred.array() + 321.0).matrix();
    EXPECT_NEAR(mae(actual, pred), mae(shifted_a, shifted_p), 1e-10);
    EXPECT_NEAR(rmse(actual, pred), rmse(shifted_a, shifted_p), 1e-10);
    const Eigen::VectorXd sa = actual * 3.7, sp = pred * 3.7;
    EXPECT_NEAR(accuracy(mae(actual, pred), actual.mean()), accuracy(mae(sa, sp), sa.mean()), 1e-10);
}

TEST(Report, PerfectPredictions) {
    const Eigen::Vector4d a(1, 2, 3, 4);
    const auto r = report(dates(4), a, a);
    EXPECT_EQ(r.mae, 0);
    EXPECT_EQ(r.rmse, 0);
    EXPECT_EQ(r.accuracy_pct, 100);
    EXPECT_EQ(r.accuracy_first_half_pct, 100);
    EXPECT_EQ(r.accuracy_second_half_pct, 100);
}

TEST(Report, HalvesUseTheirOwnMeans) {
    const auto r = report(dates(4), Eigen::Vector4d(100, 100, 200, 200), Eigen::Vector4d(90, 110, 190, 210));
    EXPECT_EQ(r.mae, 10);
    EXPECT_EQ(r.accuracy_first_half_pct, 90);
    EXPECT_EQ(r.accuracy_second_half_pct, 95);
    EXPECT_LE(r.accuracy_pct, 100);
}

TEST(Report, EvenLengthMaeIsMeanOfHalves) {
    const auto a = to_eigen(oracle::normals(100, 3)), p = to_eigen(oracle::normals(100, 4));
    const auto r = report(dates(100), a, p);
    EXPECT_DOUBLE_EQ(r.mae, 0.5 * (mae(a.head(50), p.head(50)) + mae(a.tail(50), p.tail(50))));
}

TEST(Report, OddLengthGivesExtraPointToSecondHalf) {
    const Eigen::VectorXd a = (Eigen::VectorXd(5) << 10, 10, 20, 20, 20).finished();
    const Eigen::VectorXd p = (Eigen::VectorXd(5) << 9, 11, 20, 20, 14).finished();
    const auto r = report(dates(5), a, p);
    EXPECT_DOUBLE_EQ(r.accuracy_first_half_pct, 90.0);
    EXPECT_DOUBLE_EQ(r.accuracy_second_half_pct, 90.0);
    EXPECT_THROW(report(dates(1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)), DataError);
}

TEST(Report, TextAndCsvFormats) {
    const auto r = report(dates(4), Eigen::Vector4d(100, 100, 200, 200), Eigen::Vector4d(90, 110, 190, 210));
    EXPECT_EQ(to_text(r),
              "mae=10.000000\nrmse=10.000000\naccuracy_pct=93.333333\naccuracy_first_half_pct=90.000000\n"
              "accuracy_second_half_pct=95.000000\nn_points=4\ndate_range=2024-01-01..2024-01-04\n");
    testutil::TempDir dir;
    write_predictions_csv(dir / "p.csv", r);
    EXPECT_EQ(testutil::read(dir / "p.csv"),
              "date,actual,predicted\n2024-01-01,100.000000,90.000000\n2024-01-02,100.000000,110.000000\n"
              "2024-01-03,200.000000,190.000000\n2024-01-04,200.000000,210.000000\n");
    const auto t = read_predictions_csv(dir / "p.csv");
    EXPECT_EQ(t.actual, r.actual);
    EXPECT_EQ(t.predicted, r.predicted);
    EXPECT_EQ(t.dates, r.dates);
}
