#pragma once

// Distribution tail functions backing the two-sample tests. The incomplete
// gamma routines follow the classic Cephes series/continued-fraction split so
// results agree with common statistics libraries deep into the tails.

#include <cstddef>
#include <span>

namespace actprof::stats {

/// Regularized lower incomplete gamma P(a, x).
double igam(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double igamc(double a, double x);

/// Chi-square survival function with df degrees of freedom.
double chi2_sf(double x, double df);

/// Standard normal survival function.
double normal_sf(double z);

/// Kolmogorov limiting distribution survival Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
double kolmogorov_sf(double x);

/// Linear-interpolation percentile (q in [0, 100]) of an ascending-sorted span.
double percentile_sorted(std::span<const double> sorted, double q);

} // namespace actprof::stats
