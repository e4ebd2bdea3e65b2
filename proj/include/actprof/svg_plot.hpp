#pragma once

// Self-contained SVG histogram writer for the per-class distance plots.
// No plotting dependency: bars are emitted as translucent rects with an
// outline, plus axes, tick labels and a legend.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace actprof::plot {

struct histogram_series {
    std::string label;
    std::string color; // SVG color name or #rrggbb
    std::vector<double> values;
};

struct histogram_layout {
    int bins = 60;
    int width = 640;
    int height = 420;
};

struct binned_histogram {
    double lo = 0.0;
    double hi = 0.0;
    double bin_width = 0.0;
    // counts[series][bin]
    std::vector<std::vector<std::uint64_t>> counts;
};

/// Shared binning over the combined range of all series (empty series allowed).
binned_histogram bin_series(std::span<const histogram_series> series, int bins);

void write_histogram_svg(const std::filesystem::path& path, const std::string& title,
                         std::span<const histogram_series> series,
                         const histogram_layout& layout = {},
                         std::span<const std::string> header_lines = {});

/// The same binned counts as a delimited table:
/// bin_lo,bin_hi,<one count column per series>.
void write_histogram_data(const std::filesystem::path& path,
                          std::span<const histogram_series> series, int bins,
                          std::span<const std::string> header_lines = {});

} // namespace actprof::plot
