// Minimal deterministic SVG line plots: no timestamps, no randomness, fixed
// number formatting, so the same table always renders to identical bytes.
#pragma once

#include <string>
#include <vector>

#include "gfm/csv.hpp"

namespace gfm {

struct PlotSeries {
    std::string label;
    const std::vector<double>* x = nullptr;
    const std::vector<double>* y = nullptr;
};

struct PlotPanel {
    std::string title;
    std::vector<PlotSeries> series;
};

// Stacked panels sharing the x axis. Series longer than a few thousand points
// are stride-decimated for file size.
std::string render_svg(const std::string& title, const std::vector<PlotPanel>& panels,
                       int width = 1100, int panel_height = 230);

// Standard dashboard for a simulation CSV: currents with their references,
// powers with their references, frequency, EMF/sequence voltages, and the
// dynamic damping resistance with the fault flags.
std::string plot_timeseries(const CsvTable& table, const std::string& title);

// The same dashboard as individual single-panel files: (file name, SVG bytes)
// pairs, one per panel, plus a combined overview.
std::vector<std::pair<std::string, std::string>> plot_panel_files(
    const CsvTable& table, const std::string& title);

}  // namespace gfm
