#include "actprof/svg_plot.hpp"

#include "actprof/encoding.hpp"
#include "actprof/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace actprof::plot {

namespace {

std::string tick_label(double v) {
    // shortest round-trip form is noisy for ticks; trim to ~4 significant digits
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

binned_histogram bin_series(std::span<const histogram_series> series, int bins) {
    if (bins <= 0) throw data_error("histogram needs a positive bin count");
    binned_histogram out;
    out.counts.assign(series.size(), std::vector<std::uint64_t>(static_cast<std::size_t>(bins), 0));

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series)
        for (const double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo <= hi)) { // all series empty
        lo = 0.0;
        hi = 1.0;
    }
    if (lo == hi) hi = lo + 1.0;
    out.lo = lo;
    out.hi = hi;
    out.bin_width = (hi - lo) / bins;

    for (std::size_t si = 0; si < series.size(); ++si) {
        for (const double v : series[si].values) {
            auto b = static_cast<std::int64_t>((v - lo) / out.bin_width);
            if (b < 0) b = 0;
            if (b >= bins) b = bins - 1;
            ++out.counts[si][static_cast<std::size_t>(b)];
        }
    }
    return out;
}

void write_histogram_svg(const std::filesystem::path& path, const std::string& title,
                         std::span<const histogram_series> series,
                         const histogram_layout& layout,
                         std::span<const std::string> header_lines) {
    const auto binned = bin_series(series, layout.bins);

    std::uint64_t max_count = 1;
    for (const auto& row : binned.counts)
        for (const auto c : row) max_count = std::max(max_count, c);

    const double margin_l = 56, margin_r = 14, margin_t = 34, margin_b = 40;
    const double plot_w = layout.width - margin_l - margin_r;
    const double plot_h = layout.height - margin_t - margin_b;

    const auto x_of = [&](double v) {
        return margin_l + (v - binned.lo) / (binned.hi - binned.lo) * plot_w;
    };
    const auto y_of = [&](double count) {
        return margin_t + plot_h - count / static_cast<double>(max_count) * plot_h;
    };

    std::ofstream out(path);
    if (!out) throw data_error("cannot write plot: " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& line : header_lines) out << "<!-- " << line << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << layout.width
        << "\" height=\"" << layout.height << "\" viewBox=\"0 0 " << layout.width
        << ' ' << layout.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << layout.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

    // series bars (translucent) and outline
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& color = series[si].color;
        out << "<g fill=\"" << color << "\" fill-opacity=\"0.3\" stroke=\"none\">\n";
        for (int b = 0; b < layout.bins; ++b) {
            const auto c = binned.counts[si][static_cast<std::size_t>(b)];
            if (c == 0) continue;
            const double x0 = x_of(binned.lo + b * binned.bin_width);
            const double x1 = x_of(binned.lo + (b + 1) * binned.bin_width);
            const double y = y_of(static_cast<double>(c));
            out << "<rect x=\"" << tick_label(x0) << "\" y=\"" << tick_label(y)
                << "\" width=\"" << tick_label(x1 - x0) << "\" height=\""
                << tick_label(margin_t + plot_h - y) << "\"/>\n";
        }
        out << "</g>\n";
        out << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" d=\"";
        double prev_y = margin_t + plot_h;
        for (int b = 0; b < layout.bins; ++b) {
            const auto c = binned.counts[si][static_cast<std::size_t>(b)];
            const double x0 = x_of(binned.lo + b * binned.bin_width);
            const double x1 = x_of(binned.lo + (b + 1) * binned.bin_width);
            const double y = y_of(static_cast<double>(c));
            if (b == 0)
                out << "M" << tick_label(x0) << ' ' << tick_label(y);
            else if (y != prev_y)
                out << " L" << tick_label(x0) << ' ' << tick_label(y);
            out << " L" << tick_label(x1) << ' ' << tick_label(y);
            prev_y = y;
        }
        out << "\"/>\n";
    }

    // axes
    out << "<line x1=\"" << margin_l << "\" y1=\"" << margin_t + plot_h << "\" x2=\""
        << margin_l + plot_w << "\" y2=\"" << margin_t + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin_l << "\" y1=\"" << margin_t << "\" x2=\"" << margin_l
        << "\" y2=\"" << margin_t + plot_h << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = binned.lo + (binned.hi - binned.lo) * i / 5.0;
        const double x = x_of(v);
        out << "<line x1=\"" << tick_label(x) << "\" y1=\"" << margin_t + plot_h
            << "\" x2=\"" << tick_label(x) << "\" y2=\"" << margin_t + plot_h + 4
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << tick_label(x) << "\" y=\"" << margin_t + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << tick_label(v) << "</text>\n";
        const double cv = static_cast<double>(max_count) * i / 5.0;
        const double y = y_of(cv);
        out << "<line x1=\"" << margin_l - 4 << "\" y1=\"" << tick_label(y) << "\" x2=\""
            << margin_l << "\" y2=\"" << tick_label(y) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << margin_l - 7 << "\" y=\"" << tick_label(y + 3)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << tick_label(cv) << "</text>\n";
    }
    out << "<text x=\"" << margin_l + plot_w / 2 << "\" y=\"" << layout.height - 6
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << "distance</text>\n";

    // legend
    double ly = margin_t + 6;
    for (const auto& s : series) {
        out << "<rect x=\"" << margin_l + plot_w - 110 << "\" y=\"" << tick_label(ly)
            << "\" width=\"10\" height=\"10\" fill=\"" << s.color
            << "\" fill-opacity=\"0.5\" stroke=\"" << s.color << "\"/>\n";
        out << "<text x=\"" << margin_l + plot_w - 96 << "\" y=\"" << tick_label(ly + 9)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
            << "</text>\n";
        ly += 16;
    }
    out << "</svg>\n";
    if (!out) throw data_error("write failed: " + path.string());
}

void write_histogram_data(const std::filesystem::path& path,
                          std::span<const histogram_series> series, int bins,
                          std::span<const std::string> header_lines) {
    const auto binned = bin_series(series, bins);
    std::ofstream out(path);
    if (!out) throw data_error("cannot write plot data: " + path.string());
    for (const auto& line : header_lines) out << "# " << line << "\n";
    out << "bin_lo,bin_hi";
    for (const auto& s : series) out << ',' << s.label;
    out << "\n";
    for (int b = 0; b < bins; ++b) {
        out << util::format_double(binned.lo + b * binned.bin_width) << ','
            << util::format_double(binned.lo + (b + 1) * binned.bin_width);
        for (std::size_t si = 0; si < series.size(); ++si)
            out << ',' << binned.counts[si][static_cast<std::size_t>(b)];
        out << "\n";
    }
    if (!out) throw data_error("write failed: " + path.string());
}

} // namespace actprof::plot
