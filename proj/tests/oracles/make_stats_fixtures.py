#!/usr/bin/env python3
"""Generate frozen reference values for the two-sample test suite.

Reference implementation: scipy.stats (run once; outputs are frozen into
stats_fixtures.hpp and committed). Sample values are short decimal literals
so the exact same float64 inputs are reproduced by the C++ tests.

Usage: python3 make_stats_fixtures.py > stats_fixtures.hpp
"""

import numpy as np
from scipy import stats
from scipy.stats import distributions


def fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def literal(rng, n, lo, hi, decimals=4):
    """Uniform draws rounded to short decimals (identical parsing in C++)."""
    return np.round(rng.uniform(lo, hi, n), decimals)


def normal_literal(rng, n, mu, sd, decimals=4):
    return np.round(rng.normal(mu, sd, n), decimals)


def sparse_relu_like(rng, n, p_zero, scale, decimals=4):
    mask = rng.uniform(0, 1, n) < p_zero
    vals = np.round(rng.exponential(scale, n), decimals)
    vals[mask] = 0.0
    return vals


def rank_sum_z_tiecorrected(a, b):
    """Independent hand-coded rank-sum z with tie correction (no continuity)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    n = na + nb
    combined = np.concatenate([a, b])
    ranks = stats.rankdata(combined)  # midranks
    w = ranks[:na].sum()
    mu = na * (n + 1) / 2.0
    _, counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    z = (w - mu) / np.sqrt(var)
    p = 2.0 * distributions.norm.sf(abs(z))
    return z, p


def main():
    rng = np.random.RandomState(20240811)

    # --- Epps-Singleton pairs ------------------------------------------------
    identical = normal_literal(rng, 100, 5.0, 2.0)
    pairs = [
        ("identical 100-point sample", identical, identical.copy()),
        ("well separated: 500 near 0 vs 500 near 10",
         normal_literal(rng, 500, 0.0, 1.0), normal_literal(rng, 500, 10.0, 1.0)),
        ("small samples n=20 vs n=20, slight shift (correction path)",
         normal_literal(rng, 20, 1.0, 1.0), normal_literal(rng, 20, 1.6, 1.0)),
        ("minimum sizes n=5 vs n=7",
         np.array([0.1, 0.9, 1.7, 2.2, 3.4]),
         np.array([0.5, 1.1, 1.4, 2.8, 3.1, 4.0, 4.4])),
        ("discrete ties: small integer counts",
         np.array([0., 0., 1., 1., 1., 2., 2., 3., 3., 4., 4., 5., 0., 1., 2.]),
         np.array([0., 1., 1., 2., 2., 2., 3., 3., 4., 5., 5., 5., 1., 2., 3.])),
        ("asymmetric sizes 30 vs 200, same distribution",
         normal_literal(rng, 30, 2.0, 1.5), normal_literal(rng, 200, 2.0, 1.5)),
        ("heavy tail vs normal",
         np.round(rng.lognormal(0.0, 1.0, 80), 4), normal_literal(rng, 80, 1.6, 1.3)),
        ("same mean, different scale",
         normal_literal(rng, 150, 3.0, 0.5), normal_literal(rng, 150, 3.0, 2.5)),
        ("sparse nonnegative with many zeros, slight shift",
         sparse_relu_like(rng, 120, 0.55, 1.0), sparse_relu_like(rng, 120, 0.45, 1.2)),
        ("moderate shift n=60 vs n=80",
         literal(rng, 60, 0.0, 4.0), literal(rng, 80, 0.8, 4.8)),
        # locks the correction boundary: max(nx, ny) >= 25 -> no correction
        ("mixed sizes n=10 vs n=100 (no small-sample correction)",
         normal_literal(rng, 10, 0.0, 1.0), normal_literal(rng, 100, 0.5, 1.0)),
    ]

    print("// Frozen reference values for two-sample statistics.")
    print("// Generated once by make_stats_fixtures.py (scipy %s); do not edit."
          % __import__("scipy").__version__)
    print("#pragma once")
    print()
    print("#include <vector>")
    print()
    print("namespace fixtures {")
    print()
    print("struct two_sample_case {")
    print("    const char* name;")
    print("    std::vector<double> a;")
    print("    std::vector<double> b;")
    print("    double statistic;")
    print("    double p_value;")
    print("};")
    print()

    print("inline const std::vector<two_sample_case>& epps_singleton_cases() {")
    print("    static const std::vector<two_sample_case> cases = {")
    for name, a, b in pairs:
        res = stats.epps_singleton_2samp(a, b)
        print("        {\"%s\"," % name)
        print("         {%s}," % fmt(a))
        print("         {%s}," % fmt(b))
        print("         %s, %s}," % (repr(float(res.statistic)), repr(float(res.pvalue))))
    print("    };")
    print("    return cases;")
    print("}")
    print()

    # --- Kolmogorov-Smirnov (classic asymptotic) -----------------------------
    ks_pairs = [
        ("mixed overlap", literal(rng, 40, 0.0, 2.0), literal(rng, 55, 0.5, 2.5)),
        ("ties present",
         np.array([1., 1., 2., 2., 3., 3., 4., 5., 5., 6.]),
         np.array([2., 2., 3., 4., 4., 5., 6., 6., 7., 7., 8.])),
        ("large same-distribution", normal_literal(rng, 300, 0.0, 1.0),
         normal_literal(rng, 250, 0.0, 1.0)),
    ]
    print("inline const std::vector<two_sample_case>& ks_cases() {")
    print("    static const std::vector<two_sample_case> cases = {")
    for name, a, b in ks_pairs:
        # statistic: two-sample sup distance (same for any mode)
        d = float(stats.ks_2samp(a, b).statistic)
        en = len(a) * len(b) / (len(a) + len(b))
        p = float(distributions.kstwobign.sf(np.sqrt(en) * d))
        print("        {\"%s\"," % name)
        print("         {%s}," % fmt(a))
        print("         {%s}," % fmt(b))
        print("         %s, %s}," % (repr(d), repr(p)))
    print("    };")
    print("    return cases;")
    print("}")
    print()

    # --- rank-sum (normal approximation, tie corrected, no continuity) -------
    rs_pairs = [
        ("mixed overlap", literal(rng, 30, 0.0, 3.0), literal(rng, 45, 0.7, 3.7)),
        ("ties present",
         np.array([1., 2., 2., 3., 3., 3., 4., 5.]),
         np.array([2., 3., 3., 4., 4., 5., 5., 6., 6.])),
        ("clear shift", normal_literal(rng, 50, 0.0, 1.0),
         normal_literal(rng, 50, 1.2, 1.0)),
    ]
    print("inline const std::vector<two_sample_case>& rank_sum_cases() {")
    print("    static const std::vector<two_sample_case> cases = {")
    for name, a, b in rs_pairs:
        z, p = rank_sum_z_tiecorrected(a, b)
        # cross-check with an independent trusted route
        mw = stats.mannwhitneyu(a, b, alternative="two-sided",
                                method="asymptotic", use_continuity=False)
        assert abs(mw.pvalue - p) < 1e-12, (mw.pvalue, p)
        print("        {\"%s\"," % name)
        print("         {%s}," % fmt(a))
        print("         {%s}," % fmt(b))
        print("         %s, %s}," % (repr(float(z)), repr(float(p))))
    print("    };")
    print("    return cases;")
    print("}")
    print()
    print("} // namespace fixtures")


if __name__ == "__main__":
    main()
