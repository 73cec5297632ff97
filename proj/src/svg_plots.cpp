#include "geopas/svg_plots.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "geopas/common.hpp"

namespace geopas::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;

std::string fmt(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << v;
    return out.str();
}

class Builder {
  public:
    Builder(double width, double height) {
        body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
              << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " "
              << fmt(height) << "\">\n";
        body_ << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
              << "\" fill=\"white\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" fill-opacity=\""
              << fmt(opacity) << "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(width) << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.50\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body_ << ' ';
            body_ << fmt(pts[i].first) << ',' << fmt(pts[i].second);
        }
        body_ << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11.0,
              const std::string& anchor = "start") {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
              << "</text>\n";
    }

    std::string finish() {
        body_ << "</svg>\n";
        return body_.str();
    }

  private:
    std::ostringstream body_;
};

std::vector<double> as_values(const eval::Report& report) {
    std::vector<double> v;
    v.reserve(report.records.size());
    for (const auto& r : report.records) v.push_back(r.as_relert);
    return v;
}

std::vector<double> sbs_values(const eval::Report& report) {
    std::vector<double> v;
    v.reserve(report.records.size());
    for (const auto& r : report.records) v.push_back(r.sbs_relert);
    return v;
}

double max_log10(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 1.0;
    for (double v : a) m = std::max(m, v);
    for (double v : b) m = std::max(m, v);
    return std::ceil(std::log10(m) + 1e-12);
}

}  // namespace

std::string relert_histogram(const eval::Report& report) {
    const auto as_vals = as_values(report);
    const auto sbs_vals = sbs_values(report);
    const double log_max = std::max(1.0, max_log10(as_vals, sbs_vals));
    const int bins_per_decade = 4;
    const int bins = static_cast<int>(log_max) * bins_per_decade;

    auto histogram = [&](const std::vector<double>& vals) {
        std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
        for (double v : vals) {
            const double lg = std::log10(std::max(1.0, v));
            auto bin = static_cast<long>(lg / log_max * bins);
            bin = std::min<long>(bins - 1, std::max<long>(0, bin));
            h[static_cast<std::size_t>(bin)] += 1.0;
        }
        return h;
    };
    const auto h_as = histogram(as_vals);
    const auto h_sbs = histogram(sbs_vals);
    double peak = 1.0;
    for (double v : h_as) peak = std::max(peak, v);
    for (double v : h_sbs) peak = std::max(peak, v);

    Builder svg(kWidth, kHeight);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double bin_w = plot_w / bins;

    for (int b = 0; b < bins; ++b) {
        const double x = kMarginLeft + b * bin_w;
        const double hs = h_sbs[static_cast<std::size_t>(b)] / peak * plot_h;
        const double ha = h_as[static_cast<std::size_t>(b)] / peak * plot_h;
        svg.rect(x, kMarginTop + plot_h - hs, bin_w * 0.45, hs, "#888888");
        svg.rect(x + bin_w * 0.45, kMarginTop + plot_h - ha, bin_w * 0.45, ha, "#1f77b4");
    }
    svg.line(kMarginLeft, kMarginTop + plot_h, kWidth - kMarginRight, kMarginTop + plot_h, "black");
    svg.line(kMarginLeft, kMarginTop, kMarginLeft, kMarginTop + plot_h, "black");
    for (int decade = 0; decade <= static_cast<int>(log_max); ++decade) {
        const double x = kMarginLeft + decade / log_max * plot_w;
        svg.line(x, kMarginTop + plot_h, x, kMarginTop + plot_h + 4, "black");
        svg.text(x, kMarginTop + plot_h + 18, "10^" + std::to_string(decade), 11.0, "middle");
    }
    svg.text(kWidth / 2, kHeight - 12, "relERT (log scale)", 12.0, "middle");
    svg.text(kMarginLeft, kMarginTop - 10,
             "relERT histogram, selector (blue) vs SBS (grey), protocol " + report.protocol);
    return svg.finish();
}

std::vector<std::pair<double, double>> survival_points(const std::vector<double>& values) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    // thresholds start at the displayed axis origin t = 1
    std::vector<std::pair<double, double>> pts;
    pts.reserve(sorted.size() + 1);
    pts.emplace_back(1.0, static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                                            [](double v) { return v > 1.0; })) /
                              n);
    for (double t : sorted) {
        if (t <= 1.0) continue;
        const double above = static_cast<double>(sorted.end() -
                                                 std::upper_bound(sorted.begin(), sorted.end(), t));
        pts.emplace_back(t, above / n);
    }
    return pts;
}

std::string survival_curves(const eval::Report& report) {
    const auto as_vals = as_values(report);
    const auto sbs_vals = sbs_values(report);
    const double log_max = std::max(1.0, max_log10(as_vals, sbs_vals));

    Builder svg(kWidth, kHeight);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;

    auto to_xy = [&](double t, double p) {
        const double x = kMarginLeft + std::log10(std::max(1.0, t)) / log_max * plot_w;
        const double y = kMarginTop + (1.0 - p) * plot_h;
        return std::make_pair(x, y);
    };
    auto curve = [&](const std::vector<double>& vals) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [t, p] : survival_points(vals)) pts.push_back(to_xy(t, p));
        return pts;
    };

    svg.line(kMarginLeft, kMarginTop + plot_h, kWidth - kMarginRight, kMarginTop + plot_h, "black");
    svg.line(kMarginLeft, kMarginTop, kMarginLeft, kMarginTop + plot_h, "black");
    svg.polyline(curve(sbs_vals), "#888888");
    svg.polyline(curve(as_vals), "#1f77b4");
    for (int decade = 0; decade <= static_cast<int>(log_max); ++decade) {
        const double x = kMarginLeft + decade / log_max * plot_w;
        svg.line(x, kMarginTop + plot_h, x, kMarginTop + plot_h + 4, "black");
        svg.text(x, kMarginTop + plot_h + 18, "10^" + std::to_string(decade), 11.0, "middle");
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const double p = tick / 4.0;
        const double y = kMarginTop + (1.0 - p) * plot_h;
        svg.line(kMarginLeft - 4, y, kMarginLeft, y, "black");
        svg.text(kMarginLeft - 8, y + 4, fmt(p), 10.0, "end");
    }
    svg.text(kWidth / 2, kHeight - 12, "threshold t (log scale)", 12.0, "middle");
    svg.text(kMarginLeft, kMarginTop - 10,
             "P(relERT > t), selector (blue) vs SBS (grey), protocol " + report.protocol);
    return svg.finish();
}

std::string selection_frequencies(const eval::Report& report) {
    const auto width = report.algorithms.size();
    std::vector<std::size_t> order(width);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.vbs_frequency[a] > report.vbs_frequency[b];
    });

    Builder svg(kWidth, kHeight);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double slot = plot_w / static_cast<double>(width);
    double peak = 0.0;
    for (std::size_t a = 0; a < width; ++a)
        peak = std::max({peak, report.vbs_frequency[a], report.pick_frequency[a]});
    peak = std::max(peak, 1e-9);

    for (std::size_t pos = 0; pos < width; ++pos) {
        const std::size_t a = order[pos];
        const double x = kMarginLeft + static_cast<double>(pos) * slot;
        const double hv = report.vbs_frequency[a] / peak * plot_h;
        const double hp = report.pick_frequency[a] / peak * plot_h;
        svg.rect(x + slot * 0.1, kMarginTop + plot_h - hv, slot * 0.35, hv, "#888888");
        svg.rect(x + slot * 0.5, kMarginTop + plot_h - hp, slot * 0.35, hp, "#1f77b4");
        svg.text(x + slot * 0.5, kMarginTop + plot_h + 14, report.algorithms[a], 9.0, "middle");
    }
    svg.line(kMarginLeft, kMarginTop + plot_h, kWidth - kMarginRight, kMarginTop + plot_h, "black");
    svg.text(kMarginLeft, kMarginTop - 10,
             "selection frequency, selector (blue) vs VBS (grey), protocol " + report.protocol);
    return svg.finish();
}

namespace {

std::string grey_shade(double closure) {
    // closure in [0, 1] mapped to [white, mid-grey]; non-improving cells stay white
    const double clamped = std::min(1.0, std::max(0.0, closure));
    const int level = static_cast<int>(std::lround(255.0 - clamped * 128.0));
    std::ostringstream out;
    out << "rgb(" << level << ',' << level << ',' << level << ')';
    return out.str();
}

}  // namespace

std::string closure_heatmap(const eval::Report& report) {
    std::vector<std::string> groups;
    std::vector<std::string> dims;
    for (const auto& cell : report.cells) {
        if (std::find(groups.begin(), groups.end(), cell.group) == groups.end())
            groups.push_back(cell.group);
        if (std::find(dims.begin(), dims.end(), cell.dimension) == dims.end())
            dims.push_back(cell.dimension);
    }

    Builder svg(kWidth, kHeight);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double cw = plot_w / static_cast<double>(dims.size());
    const double ch = plot_h / static_cast<double>(groups.size());

    for (const auto& cell : report.cells) {
        const auto gi = static_cast<double>(
            std::find(groups.begin(), groups.end(), cell.group) - groups.begin());
        const auto di = static_cast<double>(
            std::find(dims.begin(), dims.end(), cell.dimension) - dims.begin());
        const double x = kMarginLeft + di * cw;
        const double y = kMarginTop + gi * ch;
        svg.rect(x, y, cw, ch, grey_shade(cell.closure_median));
        svg.text(x + cw / 2, y + ch / 2 + 4, fmt(cell.selector.median), 10.0, "middle");
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
        svg.text(kMarginLeft - 6, kMarginTop + (static_cast<double>(g) + 0.5) * ch + 4, groups[g],
                 10.0, "end");
    for (std::size_t d = 0; d < dims.size(); ++d)
        svg.text(kMarginLeft + (static_cast<double>(d) + 0.5) * cw,
                 kMarginTop + plot_h + 16, "d=" + dims[d], 10.0, "middle");
    svg.text(kMarginLeft, kMarginTop - 10,
             "median relERT by cell, shaded by gap closure, protocol " + report.protocol);
    return svg.finish();
}

std::string sweep_heatmap(const eval::SweepGrid& grid, const std::string& statistic) {
    Builder svg(kWidth, kHeight);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double cw = plot_w / static_cast<double>(grid.resolutions.size());
    const double ch = plot_h / static_cast<double>(grid.slice_counts.size());

    auto pick = [&](const eval::SweepCell& cell) {
        if (statistic == "mean") return cell.stats.mean;
        if (statistic == "median") return cell.stats.median;
        if (statistic == "p90") return cell.stats.p90;
        throw input_error("sweep_heatmap: unknown statistic '" + statistic + "'");
    };
    double lo = pick(grid.cells.front()), hi = lo;
    for (const auto& cell : grid.cells) {
        lo = std::min(lo, pick(cell));
        hi = std::max(hi, pick(cell));
    }
    const double span = std::max(1e-12, hi - lo);

    for (const auto& cell : grid.cells) {
        const auto ki = static_cast<double>(
            std::find(grid.slice_counts.begin(), grid.slice_counts.end(), cell.slice_count) -
            grid.slice_counts.begin());
        const auto ri = static_cast<double>(
            std::find(grid.resolutions.begin(), grid.resolutions.end(), cell.resolution) -
            grid.resolutions.begin());
        const double x = kMarginLeft + ri * cw;
        const double y = kMarginTop + ki * ch;
        // darker = better (lower statistic)
        svg.rect(x, y, cw, ch, grey_shade(1.0 - (pick(cell) - lo) / span));
        svg.text(x + cw / 2, y + ch / 2 + 4, fmt(pick(cell)), 10.0, "middle");
    }
    for (std::size_t k = 0; k < grid.slice_counts.size(); ++k)
        svg.text(kMarginLeft - 6, kMarginTop + (static_cast<double>(k) + 0.5) * ch + 4,
                 "k=" + std::to_string(grid.slice_counts[k]), 10.0, "end");
    for (std::size_t r = 0; r < grid.resolutions.size(); ++r)
        svg.text(kMarginLeft + (static_cast<double>(r) + 0.5) * cw, kMarginTop + plot_h + 16,
                 "r=" + std::to_string(grid.resolutions[r]), 10.0, "middle");
    svg.text(kMarginLeft, kMarginTop - 10, statistic + " relERT over probing budget");
    return svg.finish();
}

}  // namespace geopas::svg
