"""Published reference estimates used as benchmark targets.

These numbers come from the published study this implementation is designed
to replicate the machinery of. They are not computed here; they anchor
regression tests and appear as annotations in reports.
"""

from __future__ import annotations

# First-stage regressions of statutory status on the joint-eligibility
# indicator with district fixed effects and district-clustered errors.
FIRST_STAGE = {
    "global": {
        "coef": 0.431,
        "se": 0.0157,
        "f_stat": 749.43,
        "partial_r2": 0.2522,
        "adj_r2": 0.3493,
        "n_obs": 502_179,
        "n_clusters": 619,
    },
    "local": {
        "coef": 0.071,
        "se": 0.0167,
        "f_stat": 18.05,
        "partial_r2": 0.0127,
        "adj_r2": 0.1007,
        "n_obs": 37_151,
        "n_clusters": 558,
    },
}

# Single-instrument first-stage strength benchmarks (10 percent and 25
# percent maximal bias) plus the common rule of thumb.
WEAK_IV_BENCHMARKS = {
    "ten_percent_bias": 16.38,
    "twenty_five_percent_bias": 8.96,
    "rule_of_thumb": 10.0,
}

# Boundary density tests on the three normalized running variables.
DENSITY_TESTS = {
    "population": {"statistic": 0.754, "pvalue": 0.451},
    "density": {"statistic": 0.245, "pvalue": 0.807},
    "nonag_male_share": {"statistic": -1.101, "pvalue": 0.271},
}
