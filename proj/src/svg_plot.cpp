#include "gfm/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gfm {

namespace {

constexpr int kMaxPointsPerSeries = 2500;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 34.0;
constexpr double kMarginBottom = 30.0;

const char* kPalette[] = {
    "#1f6fb2", "#d1495b", "#2e933c", "#8f5db7", "#e08e29", "#3aa6a6",
};
constexpr int kPaletteSize = 6;

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    bool any = false;

    void include(double v) {
        if (!std::isfinite(v)) return;
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!any) {
            lo = 0.0;
            hi = 1.0;
            return;
        }
        double span = hi - lo;
        if (span <= 0.0) span = std::max(1.0, std::fabs(hi));
        lo -= 0.05 * span;
        hi += 0.05 * span;
    }
};

}  // namespace

std::string render_svg(const std::string& title, const std::vector<PlotPanel>& panels,
                       int width, int panel_height) {
    const double plot_w = width - kMarginLeft - kMarginRight;
    const int total_h = static_cast<int>(panels.size()) * panel_height + 30;

    Range xr;
    for (const auto& p : panels)
        for (const auto& s : p.series)
            if (s.x)
                for (double v : *s.x) xr.include(v);
    xr.pad();

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(total_h) + "\" font-family=\"sans-serif\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(width / 2.0, "%.0f") +
           "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& panel = panels[pi];
        const double top = 30.0 + pi * panel_height + kMarginTop;
        const double bottom = 30.0 + (pi + 1) * panel_height - kMarginBottom;
        const double plot_h = bottom - top;

        Range yr;
        for (const auto& s : panel.series)
            if (s.y)
                for (double v : *s.y) yr.include(v);
        yr.pad();

        auto px = [&](double x) {
            return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
        };
        auto py = [&](double y) {
            return bottom - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
        };

        out += "<rect x=\"" + fmt(kMarginLeft) + "\" y=\"" + fmt(top) + "\" width=\"" +
               fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
               "\" fill=\"none\" stroke=\"#888\"/>\n";
        out += "<text x=\"" + fmt(kMarginLeft) + "\" y=\"" + fmt(top - 8.0) +
               "\" font-size=\"13\">" + panel.title + "</text>\n";

        // Axis extent labels and a zero line when it is in range.
        out += "<text x=\"" + fmt(kMarginLeft - 6.0) + "\" y=\"" + fmt(top + 11.0) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(yr.hi, "%.4g") + "</text>\n";
        out += "<text x=\"" + fmt(kMarginLeft - 6.0) + "\" y=\"" + fmt(bottom) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(yr.lo, "%.4g") + "</text>\n";
        if (yr.lo < 0.0 && yr.hi > 0.0)
            out += "<line x1=\"" + fmt(kMarginLeft) + "\" y1=\"" + fmt(py(0.0)) +
                   "\" x2=\"" + fmt(kMarginLeft + plot_w) + "\" y2=\"" + fmt(py(0.0)) +
                   "\" stroke=\"#ddd\"/>\n";
        if (pi + 1 == panels.size()) {
            out += "<text x=\"" + fmt(kMarginLeft) + "\" y=\"" + fmt(bottom + 16.0) +
                   "\" font-size=\"11\">" + fmt(xr.lo, "%.4g") + "</text>\n";
            out += "<text x=\"" + fmt(kMarginLeft + plot_w) + "\" y=\"" + fmt(bottom + 16.0) +
                   "\" text-anchor=\"end\" font-size=\"11\">" + fmt(xr.hi, "%.4g") +
                   " s</text>\n";
        }

        double legend_x = kMarginLeft + 8.0;
        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const auto& s = panel.series[si];
            if (!s.x || !s.y || s.x->empty()) continue;
            const char* color = kPalette[si % kPaletteSize];
            const std::size_t n = std::min(s.x->size(), s.y->size());
            const std::size_t stride = std::max<std::size_t>(1, n / kMaxPointsPerSeries);

            out += "<polyline fill=\"none\" stroke=\"";
            out += color;
            out += "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < n; i += stride) {
                out += fmt(px((*s.x)[i]));
                out += ',';
                out += fmt(py((*s.y)[i]));
                out += ' ';
            }
            if ((n - 1) % stride != 0) {  // always close on the final sample
                out += fmt(px((*s.x)[n - 1]));
                out += ',';
                out += fmt(py((*s.y)[n - 1]));
            }
            out += "\"/>\n";

            out += "<text x=\"" + fmt(legend_x) + "\" y=\"" + fmt(top + plot_h + 14.0) +
                   "\" font-size=\"11\" fill=\"";
            out += color;
            out += "\">" + s.label + "</text>\n";
            legend_x += 9.0 * (s.label.size() + 2);
        }
    }

    out += "</svg>\n";
    return out;
}

namespace {

std::vector<std::pair<std::string, PlotPanel>> standard_panels(const CsvTable& table) {
    const auto& t = table.col("t");
    auto series = [&](const char* label, const char* column) {
        return PlotSeries{label, &t, &table.col(column)};
    };

    std::vector<std::pair<std::string, PlotPanel>> panels;
    panels.push_back({"currents_dq",
                      {"grid current dq vs reference [pu]",
                       {series("i_g_d", "i_g_d"), series("i_g_q", "i_g_q"),
                        series("i_ref_d", "i_ref_d"), series("i_ref_q", "i_ref_q")}}});
    panels.push_back({"converter_current",
                      {"converter current alpha/beta [pu]",
                       {series("i_c_alpha", "i_c_alpha"), series("i_c_beta", "i_c_beta")}}});
    panels.push_back({"power",
                      {"power vs reference [pu]",
                       {series("p", "p"), series("p_ref", "p_ref"), series("q", "q"),
                        series("q_ref", "q_ref")}}});
    panels.push_back({"frequency", {"frequency [rad/s]", {series("omega", "omega")}}});
    panels.push_back({"voltages",
                      {"voltages [pu]",
                       {series("e_mag", "e_mag"), series("v_plus", "v_plus"),
                        series("v_minus", "v_minus")}}});
    panels.push_back({"damping_flags",
                      {"damping resistance [pu] and fault/limiter flags",
                       {series("r_v_dyn", "r_v_dyn"), series("sf", "sf"),
                        series("fm", "fm"), series("limiter", "limiter")}}});
    return panels;
}

}  // namespace

std::string plot_timeseries(const CsvTable& table, const std::string& title) {
    std::vector<PlotPanel> panels;
    for (auto& [name, panel] : standard_panels(table)) panels.push_back(panel);
    return render_svg(title, panels);
}

std::vector<std::pair<std::string, std::string>> plot_panel_files(
    const CsvTable& table, const std::string& title) {
    std::vector<std::pair<std::string, std::string>> files;
    int index = 1;
    for (auto& [name, panel] : standard_panels(table)) {
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "%02d_", index++);
        files.emplace_back(prefix + name + ".svg",
                           render_svg(title + " - " + panel.title, {panel}));
    }
    files.emplace_back("overview.svg", plot_timeseries(table, title));
    return files;
}

}  // namespace gfm
