"""Fold statistics: Student-t confidence intervals and box-plot summaries."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..errors import StatisticsError

# two-sided 95% critical values t_{0.975, df}
T_975 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365, 8: 2.306,
    9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145, 15: 2.131,
    16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086, 21: 2.080, 22: 2.074,
    23: 2.069, 24: 2.064, 25: 2.060, 26: 2.056, 27: 2.052, 28: 2.048, 29: 2.045,
    30: 2.042,
}
Z_975 = 1.960


def critical_value(df, level=0.95, method="t"):
    if method == "normal":
        return Z_975 if level == 0.95 else float(stats.norm.ppf((1 + level) / 2))
    if method != "t":
        raise StatisticsError(f"unknown interval method {method!r}")
    if level == 0.95:
        return T_975.get(df, Z_975)
    if df > 30:
        return float(stats.norm.ppf((1 + level) / 2))
    return float(stats.t.ppf((1 + level) / 2, df))


def confidence_interval(values, level=0.95, method="t"):
    """(mean, half_width) with half_width = crit * s / sqrt(n), s the n-1 std."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n < 2:
        raise StatisticsError(f"a confidence interval needs at least 2 values, got {n}")
    if not 0 < level < 1:
        raise StatisticsError(f"level must lie in (0, 1), got {level}")
    mean = float(values.mean())
    s = float(values.std(ddof=1))
    return mean, critical_value(n - 1, level, method) * s / math.sqrt(n)


def box_summary(values, whisker=1.5):
    """Quartiles and Tukey whiskers (most extreme points within whisker * IQR)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise StatisticsError("box summary of an empty sample")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - whisker * iqr, q3 + whisker * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "min": float(v[0]), "q1": float(q1), "median": float(med), "q3": float(q3),
        "max": float(v[-1]),
        "whisker_low": float(inside.min()), "whisker_high": float(inside.max()),
        "outliers": [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    }
