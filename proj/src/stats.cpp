#include "actprof/stats.hpp"

#include "actprof/errors.hpp"
#include "actprof/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace actprof::stats {

namespace {

using mat4 = std::array<std::array<double, 4>, 4>;
using vec4 = std::array<double, 4>;

/// Cyclic Jacobi eigendecomposition of a symmetric 4x4 matrix.
/// Returns eigenvalues in `eig` and eigenvectors as columns of `vecs`.
void jacobi_eigen(mat4 a, vec4& eig, mat4& vecs) {
    vecs = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-300) break;
        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
                const double sin_r = t * cos_r;
                for (int i = 0; i < 4; ++i) {
                    const double aip = a[i][p];
                    const double aiq = a[i][q];
                    a[i][p] = cos_r * aip - sin_r * aiq;
                    a[i][q] = sin_r * aip + cos_r * aiq;
                }
                for (int i = 0; i < 4; ++i) {
                    const double api = a[p][i];
                    const double aqi = a[q][i];
                    a[p][i] = cos_r * api - sin_r * aqi;
                    a[q][i] = sin_r * api + cos_r * aqi;
                }
                for (int i = 0; i < 4; ++i) {
                    const double vip = vecs[i][p];
                    const double viq = vecs[i][q];
                    vecs[i][p] = cos_r * vip - sin_r * viq;
                    vecs[i][q] = sin_r * vip + cos_r * viq;
                }
            }
        }
    }
    for (int i = 0; i < 4; ++i) eig[i] = a[i][i];
}

/// Mean of the characteristic-function feature vector
/// [cos(t1 x), cos(t2 x), sin(t1 x), sin(t2 x)] and its biased covariance.
void char_features(std::span<const double> sample, double t1, double t2,
                   vec4& mean, mat4& cov) {
    const auto n = static_cast<double>(sample.size());
    mean = {0, 0, 0, 0};
    std::vector<vec4> g(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s) {
        const double x = sample[s];
        g[s] = {std::cos(t1 * x), std::cos(t2 * x), std::sin(t1 * x), std::sin(t2 * x)};
        for (int i = 0; i < 4; ++i) mean[i] += g[s][i];
    }
    for (int i = 0; i < 4; ++i) mean[i] /= n;
    cov = {};
    for (const auto& row : g)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) cov[i][j] /= n;
}

} // namespace

const char* magnitude_name(magnitude m) {
    switch (m) {
        case magnitude::negligible: return "negligible";
        case magnitude::small: return "small";
        case magnitude::medium: return "medium";
        case magnitude::large: return "large";
    }
    return "unknown";
}

magnitude classify_magnitude(double delta) {
    const double d = std::fabs(delta);
    if (d < 0.147) return magnitude::negligible;
    if (d < 0.33) return magnitude::small;
    if (d < 0.474) return magnitude::medium;
    return magnitude::large;
}

test_result epps_singleton(std::span<const double> a, std::span<const double> b,
                           std::pair<double, double> t) {
    const std::size_t na = a.size(), nb = b.size();
    if (na < 5 || nb < 5)
        throw data_error("epps_singleton needs at least 5 values per sample");
    if (!(t.first > 0) || !(t.second > 0))
        throw data_error("characteristic points must be positive");
    for (const double v : a)
        if (!std::isfinite(v)) throw data_error("nonfinite value in sample");
    for (const double v : b)
        if (!std::isfinite(v)) throw data_error("nonfinite value in sample");

    const double n = static_cast<double>(na + nb);

    // scale the evaluation points by the pooled semi-interquartile range
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const double iqr =
        percentile_sorted(pooled, 75.0) - percentile_sorted(pooled, 25.0);
    const double sigma = iqr / 2.0;
    if (sigma == 0.0)
        throw data_error("epps_singleton: pooled semi-interquartile range is "
                         "zero (degenerate scale)");
    const double t1 = t.first / sigma;
    const double t2 = t.second / sigma;

    vec4 mean_a, mean_b;
    mat4 cov_a, cov_b;
    char_features(a, t1, t2, mean_a, cov_a);
    char_features(b, t1, t2, mean_b, cov_b);

    mat4 est_cov;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            est_cov[i][j] = (n / static_cast<double>(na)) * cov_a[i][j] +
                            (n / static_cast<double>(nb)) * cov_b[i][j];

    // pseudo-inverse through the eigendecomposition; eigenvalues below
    // 1e-15 * max are treated as zero, and the chi-square degrees of freedom
    // equal the retained rank
    vec4 eig;
    mat4 vecs;
    jacobi_eigen(est_cov, eig, vecs);
    double eig_max = 0.0;
    for (const double e : eig) eig_max = std::max(eig_max, std::fabs(e));
    const double tol = 1e-15 * eig_max;
    int rank = 0;
    vec4 inv_eig{};
    for (int i = 0; i < 4; ++i) {
        if (std::fabs(eig[i]) > tol) {
            inv_eig[i] = 1.0 / eig[i];
            ++rank;
        }
    }
    if (rank == 0)
        throw numeric_error("epps_singleton: covariance estimate is zero");

    vec4 diff;
    for (int i = 0; i < 4; ++i) diff[i] = mean_a[i] - mean_b[i];
    // w = n * diff' V diag(1/eig) V' diff
    vec4 proj{};
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) proj[j] += vecs[i][j] * diff[i];
    double w = 0.0;
    for (int j = 0; j < 4; ++j) w += proj[j] * proj[j] * inv_eig[j];
    w *= n;

    if (std::max(na, nb) < 25) {
        const double corr =
            1.0 / (1.0 + std::pow(n, -0.45) +
                   10.1 * (std::pow(static_cast<double>(na), -1.7) +
                           std::pow(static_cast<double>(nb), -1.7)));
        w *= corr;
    }

    return {w, chi2_sf(w, static_cast<double>(rank))};
}

effect_size cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw data_error("cliffs_delta needs non-empty samples");
    std::vector<double> sorted_b(b.begin(), b.end());
    std::sort(sorted_b.begin(), sorted_b.end());
    std::int64_t greater = 0, less = 0;
    for (const double x : a) {
        const auto lo = std::lower_bound(sorted_b.begin(), sorted_b.end(), x);
        const auto hi = std::upper_bound(lo, sorted_b.end(), x);
        greater += lo - sorted_b.begin();                 // pairs with x > y
        less += sorted_b.end() - hi;                      // pairs with x < y
    }
    const double delta = static_cast<double>(greater - less) /
                         (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    return {delta, classify_magnitude(delta)};
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na < 2 || nb < 2) throw data_error("cohens_d needs at least 2 values per sample");
    const auto mean = [](std::span<const double> s) {
        double sum = 0.0;
        for (const double v : s) sum += v;
        return sum / static_cast<double>(s.size());
    };
    const auto ssq = [](std::span<const double> s, double m) {
        double sum = 0.0;
        for (const double v : s) sum += (v - m) * (v - m);
        return sum;
    };
    const double ma = mean(a), mb = mean(b);
    const double pooled_var =
        (ssq(a, ma) + ssq(b, mb)) / static_cast<double>(na + nb - 2);
    if (pooled_var == 0.0)
        throw data_error("cohens_d: pooled standard deviation is zero");
    return (ma - mb) / std::sqrt(pooled_var);
}

test_result rank_sum_test(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw data_error("rank_sum_test needs non-empty samples");
    const std::size_t na = a.size(), nb = b.size();
    const std::size_t n = na + nb;

    struct tagged {
        double value;
        bool from_a;
    };
    std::vector<tagged> all;
    all.reserve(n);
    for (const double v : a) all.push_back({v, true});
    for (const double v : b) all.push_back({v, false});
    std::sort(all.begin(), all.end(),
              [](const tagged& x, const tagged& y) { return x.value < y.value; });

    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && all[j].value == all[i].value) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const auto ties = static_cast<double>(j - i);
        if (j - i > 1) tie_term += ties * ties * ties - ties;
        for (std::size_t s = i; s < j; ++s)
            if (all[s].from_a) rank_sum_a += midrank;
        i = j;
    }

    const double mu = static_cast<double>(na) * static_cast<double>(n + 1) / 2.0;
    const double var =
        static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
        (static_cast<double>(n + 1) -
         tie_term / (static_cast<double>(n) * static_cast<double>(n - 1)));
    if (!(var > 0))
        throw data_error("rank_sum_test: all pooled values are tied");
    const double z = (rank_sum_a - mu) / std::sqrt(var);
    return {z, 2.0 * normal_sf(std::fabs(z))};
}

test_result ks_test(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw data_error("ks_test needs non-empty samples");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const auto na = static_cast<double>(sa.size());
    const auto nb = static_cast<double>(sb.size());

    double d = 0.0;
    const auto cdf_at = [](const std::vector<double>& s, double x) {
        return static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) /
               static_cast<double>(s.size());
    };
    for (const double x : sa) d = std::max(d, std::fabs(cdf_at(sa, x) - cdf_at(sb, x)));
    for (const double x : sb) d = std::max(d, std::fabs(cdf_at(sa, x) - cdf_at(sb, x)));

    const double en = na * nb / (na + nb);
    return {d, kolmogorov_sf(std::sqrt(en) * d)};
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double alpha) {
    for (const double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw data_error("p-value outside [0, 1]");
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return p_values[x] < p_values[y];
    });
    std::size_t largest = 0; // 1-based rank; 0 = none
    for (std::size_t r = 1; r <= m; ++r) {
        if (p_values[order[r - 1]] <=
            static_cast<double>(r) * alpha / static_cast<double>(m))
            largest = r;
    }
    std::vector<bool> rejected(m, false);
    for (std::size_t r = 0; r < largest; ++r) rejected[order[r]] = true;
    return rejected;
}

std::vector<comparison_row> compare_categories(
    std::span<const prof::distance_record> records_a,
    std::span<const prof::distance_record> records_b, int num_classes,
    const compare_options& options) {
    std::vector<std::vector<double>> by_class_a(static_cast<std::size_t>(num_classes));
    std::vector<std::vector<double>> by_class_b(static_cast<std::size_t>(num_classes));
    for (const auto& r : records_a)
        if (r.predicted_class >= 0 && r.predicted_class < num_classes)
            by_class_a[static_cast<std::size_t>(r.predicted_class)].push_back(r.distance);
    for (const auto& r : records_b)
        if (r.predicted_class >= 0 && r.predicted_class < num_classes)
            by_class_b[static_cast<std::size_t>(r.predicted_class)].push_back(r.distance);

    std::vector<comparison_row> rows(static_cast<std::size_t>(num_classes));
    std::vector<double> es_pvalues;
    std::vector<std::size_t> es_rows;
    for (int k = 0; k < num_classes; ++k) {
        auto& row = rows[static_cast<std::size_t>(k)];
        row.class_id = k;
        const auto& sa = by_class_a[static_cast<std::size_t>(k)];
        const auto& sb = by_class_b[static_cast<std::size_t>(k)];
        if (sa.empty() || sb.empty()) continue; // blank row
        row.cliffs = cliffs_delta(sa, sb);
        if (sa.size() >= 5 && sb.size() >= 5) {
            try {
                row.es = epps_singleton(sa, sb);
                es_pvalues.push_back(row.es->p_value);
                es_rows.push_back(static_cast<std::size_t>(k));
            } catch (const data_error&) {
                // degenerate scale: leave the cell blank
            }
        }
        if (options.secondary_tests) {
            if (sa.size() >= 2 && sb.size() >= 2) {
                try {
                    row.cohens = cohens_d(sa, sb);
                } catch (const data_error&) {
                }
            }
            try {
                row.rank_sum = rank_sum_test(sa, sb);
            } catch (const data_error&) {
            }
            row.ks = ks_test(sa, sb);
        }
    }

    if (!es_pvalues.empty()) {
        const auto flags = benjamini_hochberg(es_pvalues, options.alpha);
        for (std::size_t i = 0; i < es_rows.size(); ++i)
            rows[es_rows[i]].bh_rejected = flags[i];
    }
    return rows;
}

} // namespace actprof::stats
