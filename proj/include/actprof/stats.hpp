#pragma once

// Two-sample comparison of distance distributions: Epps-Singleton on the
// empirical characteristic function, Cliff's delta and Cohen's d effect
// sizes, rank-sum and Kolmogorov-Smirnov consistency checks, and the
// Benjamini-Hochberg step-up correction.

#include "actprof/profiles.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace actprof::stats {

struct test_result {
    double statistic = 0.0;
    double p_value = 1.0;
};

enum class magnitude { negligible, small, medium, large };

const char* magnitude_name(magnitude m);

/// Thresholds 0.147 / 0.33 / 0.474 applied to |delta|.
magnitude classify_magnitude(double delta);

struct effect_size {
    double delta = 0.0;
    magnitude mag = magnitude::negligible;
};

/// Epps-Singleton two-sample test. The characteristic function is evaluated
/// at t / (semi-interquartile range of the pooled sample) with t = (0.4, 0.8)
/// by default; the small-sample statistic correction applies when both
/// samples have fewer than 25 values. The p-value comes from the chi-square
/// distribution whose degrees of freedom equal the rank of the covariance
/// estimate (4 in nondegenerate cases). Each sample needs >= 5 values.
test_result epps_singleton(std::span<const double> a, std::span<const double> b,
                           std::pair<double, double> t = {0.4, 0.8});

/// delta = (#{x > y} - #{x < y}) / (n_a * n_b), computed in O((n+m) log m)
/// via a sorted copy of b; exact integer pair counts.
effect_size cliffs_delta(std::span<const double> a, std::span<const double> b);

/// (mean_a - mean_b) / pooled standard deviation, (n_a + n_b - 2) denominator.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Wilcoxon rank-sum, normal approximation with tie correction (statistic is
/// the standardized z of the rank sum of `a`); two-sided p-value.
test_result rank_sum_test(std::span<const double> a, std::span<const double> b);

/// Two-sample Kolmogorov-Smirnov sup-distance with the asymptotic
/// (Kolmogorov limiting distribution) two-sided p-value.
test_result ks_test(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg step-up: sort ascending, find the largest rank r with
/// p_(r) <= r * alpha / m, reject hypotheses 1..r. Flags are returned in the
/// input order.
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double alpha);

struct comparison_row {
    int class_id = 0;
    std::optional<test_result> es;        // empty when either side has < 5 values
    std::optional<effect_size> cliffs;    // empty when either side is empty
    std::optional<double> cohens;
    std::optional<test_result> rank_sum;
    std::optional<test_result> ks;
    bool bh_rejected = false;
};

struct compare_options {
    double alpha = 0.005;        // Bonferroni-adjusted level for 10 hypotheses
    bool secondary_tests = false; // also fill cohens / rank_sum / ks
};

/// Group two record sets by predicted class and run the two-sample tests per
/// class. Classes empty on either side yield blank rows; BH flags are
/// computed across the per-class Epps-Singleton p-values.
std::vector<comparison_row> compare_categories(
    std::span<const prof::distance_record> records_a,
    std::span<const prof::distance_record> records_b, int num_classes,
    const compare_options& options = {});

} // namespace actprof::stats
