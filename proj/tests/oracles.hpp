#pragma once

// Straight-loop reference implementations used as test oracles. They share no
// code with the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline double mae(const std::vector<double>& a, const std::vector<double>& p) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - p[i]);
    return s / static_cast<double>(a.size());
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& p) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - p[i]) * (a[i] - p[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

inline double accuracy(const std::vector<double>& a, const std::vector<double>& p) {
    double mean = 0;
    for (double x : a) mean += x;
    mean /= static_cast<double>(a.size());
    return 100.0 - mae(a, p) / mean * 100.0;
}

// Two-pass Pearson.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double sample_stdev(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

inline std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed, std::size_t burn = 500) {
    const auto e = normals(n + burn, seed);
    std::vector<double> y(n + burn, 0.0);
    for (std::size_t t = 1; t < y.size(); ++t) y[t] = phi * y[t - 1] + e[t];
    return {y.begin() + static_cast<std::ptrdiff_t>(burn), y.end()};
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
    const auto e = normals(n, seed);
    std::vector<double> y(n);
    double level = 0;
    for (std::size_t t = 0; t < n; ++t) y[t] = level += e[t];
    return y;
}

// Lag-1 Yule-Walker estimate.
inline double yule_walker_ar1(const std::vector<double>& y) {
    double m = 0;
    for (double v : y) m += v;
    m /= static_cast<double>(y.size());
    double c0 = 0, c1 = 0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        c0 += (y[t] - m) * (y[t] - m);
        if (t > 0) c1 += (y[t] - m) * (y[t - 1] - m);
    }
    return c1 / c0;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM cell step for a single sample with weights given as plain row-major
// arrays: W[4H][in], U[4H][H], b[4H], gate blocks in order i, f, o, g.
struct ScalarCell {
    std::size_t in, hidden;
    std::vector<std::vector<double>> W, U;
    std::vector<double> b;

    void step(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c) const {
        std::vector<double> a(4 * hidden);
        for (std::size_t r = 0; r < 4 * hidden; ++r) {
            double s = b[r];
            for (std::size_t k = 0; k < in; ++k) s += W[r][k] * x[k];
            for (std::size_t k = 0; k < hidden; ++k) s += U[r][k] * h[k];
            a[r] = s;
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            const double ig = sigmoid(a[j]);
            const double fg = sigmoid(a[hidden + j]);
            const double og = sigmoid(a[2 * hidden + j]);
            const double gg = std::tanh(a[3 * hidden + j]);
            c[j] = fg * c[j] + ig * gg;
            h[j] = og * std::tanh(c[j]);
        }
    }
};

}  // namespace oracle
