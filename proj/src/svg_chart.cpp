#include "pricecast/svg_chart.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace pricecast {

namespace {

constexpr double kWidth = 960, kHeight = 480;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_chart(const PredictionTable& t, const std::string& title) {
    const Eigen::Index n = t.actual.size();
    if (n == 0 || t.predicted.size() != n || static_cast<Eigen::Index>(t.dates.size()) != n)
        throw DataError("render_chart: empty or inconsistent prediction table");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < n; ++i)
        for (double v : {t.actual(i), t.predicted(i)})
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (hi <= lo) {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    auto x_at = [&](Eigen::Index i) {
        return n == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto y_at = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    std::string points_actual, points_pred;
    Eigen::Index first_pred = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        points_actual += fmt::format("{}{:.2f},{:.2f}", points_actual.empty() ? "" : " ", x_at(i), y_at(t.actual(i)));
        if (!std::isnan(t.predicted(i))) {
            if (first_pred < 0) first_pred = i;
            points_pred += fmt::format("{}{:.2f},{:.2f}", points_pred.empty() ? "" : " ", x_at(i), y_at(t.predicted(i)));
        }
    }

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
                       kWidth, kHeight);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    svg += fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
                       kWidth / 2, escape(title));

    // Axes and ticks.
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop, kTop + plot_h);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kTop + plot_h,
                       kLeft + plot_w);
    constexpr int kTicks = 5;
    for (int k = 0; k <= kTicks; ++k) {
        const double v = lo + (hi - lo) * k / kTicks;
        svg += fmt::format(
            "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.2f}</text>\n",
            kLeft - 6, y_at(v) + 4, v);
        const auto i = static_cast<Eigen::Index>(std::llround(static_cast<double>(n - 1) * k / kTicks));
        svg += fmt::format(
            "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            x_at(i), kTop + plot_h + 18, format_date(t.dates[static_cast<std::size_t>(i)]));
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">Date</text>\n",
                       kLeft + plot_w / 2, kHeight - 12);
    svg += fmt::format(
        "<text x=\"18\" y=\"{0:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 18 {0:.2f})\">Price</text>\n",
        kTop + plot_h / 2);

    if (first_pred > 0)
        svg += fmt::format(
            "<line class=\"boundary\" x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
            x_at(first_pred), kTop, kTop + plot_h);

    svg += fmt::format("<polyline class=\"actual\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       points_actual);
    svg += fmt::format("<polyline class=\"predicted\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       points_pred);

    // Legend.
    const double lx = kLeft + 12, ly = kTop + 12;
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n", lx, ly, lx + 24);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">Actual</text>\n", lx + 30, ly + 4);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#d62728\" stroke-width=\"2\"/>\n", lx,
                       ly + 18, lx + 24);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">Predicted</text>\n", lx + 30,
                       ly + 22);
    svg += "</svg>\n";
    return svg;
}

}  // namespace pricecast
