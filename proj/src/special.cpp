#include "actprof/special.hpp"

#include "actprof/errors.hpp"

#include <cmath>
#include <limits>

namespace actprof::stats {

namespace {
constexpr double machep = 1.11022302462515654042e-16; // 2**-53
constexpr double maxlog = 709.782712893383996843;
constexpr double big = 4.503599627370496e15;
constexpr double biginv = 2.22044604925031308085e-16;
} // namespace

double igam(double a, double x) {
    if (x <= 0 || a <= 0) return 0.0;
    if (x > 1.0 && x > a) return 1.0 - igamc(a, x);

    double ax = a * std::log(x) - x - std::lgamma(a);
    if (ax < -maxlog) return 0.0;
    ax = std::exp(ax);

    // power series
    double r = a;
    double c = 1.0;
    double ans = 1.0;
    do {
        r += 1.0;
        c *= x / r;
        ans += c;
    } while (c / ans > machep);
    return ans * ax / a;
}

double igamc(double a, double x) {
    if (x <= 0 || a <= 0) return 1.0;
    if (x < 1.0 || x < a) return 1.0 - igam(a, x);

    double ax = a * std::log(x) - x - std::lgamma(a);
    if (ax < -maxlog) return 0.0;
    ax = std::exp(ax);

    // continued fraction
    double y = 1.0 - a;
    double z = x + y + 1.0;
    double c = 0.0;
    double pkm2 = 1.0;
    double qkm2 = x;
    double pkm1 = x + 1.0;
    double qkm1 = z * x;
    double ans = pkm1 / qkm1;
    double t;
    do {
        c += 1.0;
        y += 1.0;
        z += 2.0;
        const double yc = y * c;
        const double pk = pkm1 * z - pkm2 * yc;
        const double qk = qkm1 * z - qkm2 * yc;
        if (qk != 0) {
            const double r = pk / qk;
            t = std::fabs((ans - r) / r);
            ans = r;
        } else {
            t = 1.0;
        }
        pkm2 = pkm1;
        pkm1 = pk;
        qkm2 = qkm1;
        qkm1 = qk;
        if (std::fabs(pk) > big) {
            pkm2 *= biginv;
            pkm1 *= biginv;
            qkm2 *= biginv;
            qkm1 *= biginv;
        }
    } while (t > machep);
    return ans * ax;
}

double chi2_sf(double x, double df) {
    if (df <= 0) throw numeric_error("chi-square needs positive degrees of freedom");
    if (x < 0) return 1.0;
    return igamc(df / 2.0, x / 2.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double kolmogorov_sf(double x) {
    if (x <= 0) return 1.0;
    if (x < 1.18) {
        // theta-function form converges fast for small arguments
        const double v = (M_PI * M_PI) / (8.0 * x * x);
        double sum = 0.0;
        for (int k = 1; k < 64; k += 2) {
            const double term = std::exp(-static_cast<double>(k) * k * v);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        const double cdf = std::sqrt(2.0 * M_PI) / x * sum;
        return 1.0 - cdf;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 64; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * k * x * x);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    const double sf = 2.0 * sum;
    return sf < 0 ? 0.0 : (sf > 1 ? 1.0 : sf);
}

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw data_error("percentile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace actprof::stats
