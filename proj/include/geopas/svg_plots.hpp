#ifndef GEOPAS_SVG_PLOTS_HPP
#define GEOPAS_SVG_PLOTS_HPP

#include <string>
#include <vector>

#include "geopas/evaluation.hpp"

namespace geopas::svg {

// All emitters are pure string builders with fixed number formatting, so a
// plot regenerated from the same report is byte-identical.

// log-binned relERT histogram, selector vs SBS
std::string relert_histogram(const eval::Report& report);

// survival curves P(relERT > t) on a log-t axis
std::string survival_curves(const eval::Report& report);

// per-algorithm pick frequencies, selector vs VBS, ordered by VBS frequency
std::string selection_frequencies(const eval::Report& report);

// (group x dimension) heatmap of the median-relERT gap closure
std::string closure_heatmap(const eval::Report& report);

// (k x r) heatmap grids for the budget sweep, one per statistic
std::string sweep_heatmap(const eval::SweepGrid& grid, const std::string& statistic);

// survival-curve samples used by the plot; exposed so the definition
// P(relERT > t) can be checked against raw records
std::vector<std::pair<double, double>> survival_points(const std::vector<double>& values);

}  // namespace geopas::svg

#endif
