"""Validity diagnostics for the discontinuity design.

Covers first-stage strength, a boundary density (manipulation) test in the
style of the standard binned local-linear log-density comparison, covariate
balance in the reduced form, a direct-effect exclusion check, and binned
scatter series for plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from .design import DesignConfig, analysis_frame, default_controls
from .errors import ConfigError, InferenceError, InputError
from .estimators import RegressionSpec, ols, partial_r2, tsls

TREATMENT = "statutory_2011"
INSTRUMENT = "z"
DEFAULT_FE = "district_id"
DEFAULT_BALANCE_VARIABLES = (
    "literacy_rate_2001",
    "main_worker_rate_2001",
    "sc_share_2001",
    "st_share_2001",
)


def base_spec(
    outcome: str,
    degree: int = 1,
    fixed_effect: str | None = DEFAULT_FE,
    cluster: str | None = DEFAULT_FE,
    local: bool = True,
) -> RegressionSpec:
    """Canonical 2SLS spec: outcome ~ treatment | joint eligibility."""
    return RegressionSpec(
        outcome=outcome,
        controls=default_controls(degree),
        endogenous=TREATMENT,
        instrument=INSTRUMENT,
        fixed_effect=fixed_effect,
        cluster=cluster,
        sample_filter="in_local_sample" if local else None,
    )


@dataclass(frozen=True)
class FirstStageDiagnostics:
    """Strength of the eligibility instrument for the treatment."""

    coef: float
    se: float
    f_stat: float
    partial_r2: float
    r2: float
    adj_r2: float
    n_obs: int
    n_clusters: int
    n_fe_groups: int
    local: bool

    def to_dict(self) -> dict:
        return {
            "coef": self.coef,
            "se": self.se,
            "f_stat": self.f_stat,
            "partial_r2": self.partial_r2,
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
            "n_fe_groups": self.n_fe_groups,
            "local": self.local,
        }


def first_stage(
    data,
    cfg: DesignConfig | None = None,
    local: bool = True,
    degree: int = 1,
    fixed_effect: str | None = DEFAULT_FE,
    cluster: str | None = DEFAULT_FE,
) -> FirstStageDiagnostics:
    """First-stage regression of treatment on the eligibility instrument.

    The F statistic is the squared clustered t ratio of the instrument, as
    appropriate for a single instrument.
    """
    cfg = cfg or DesignConfig()
    frame = analysis_frame(data, cfg, degree=degree)
    sample_filter = "in_local_sample" if local else None
    spec = RegressionSpec(
        outcome=TREATMENT,
        controls=(INSTRUMENT, *default_controls(degree)),
        fixed_effect=fixed_effect,
        cluster=cluster,
        sample_filter=sample_filter,
    )
    fit = ols(spec, frame)
    coef = float(fit.coefficients[INSTRUMENT])
    se = float(fit.se[INSTRUMENT])
    # partial_r2 only reads the endogenous/instrument roles; the outcome
    # slot is irrelevant to it, so any always-present column works there.
    iv_spec = RegressionSpec(
        outcome="frontier",
        controls=default_controls(degree),
        endogenous=TREATMENT,
        instrument=INSTRUMENT,
        fixed_effect=fixed_effect,
        cluster=cluster,
        sample_filter=sample_filter,
    )
    pr2 = partial_r2(iv_spec, frame)
    return FirstStageDiagnostics(
        coef=coef,
        se=se,
        f_stat=(coef / se) ** 2,
        partial_r2=pr2,
        r2=fit.r2,
        adj_r2=fit.adj_r2,
        n_obs=fit.n_obs,
        n_clusters=fit.n_clusters,
        n_fe_groups=fit.n_fe_groups,
        local=local,
    )


@dataclass(frozen=True)
class DensityTestResult:
    """Log difference in the running-variable density across the cutoff."""

    log_diff: float
    se: float
    statistic: float
    pvalue: float
    f_left: float
    f_right: float
    bandwidth: float
    bin_width: float
    n_left: int
    n_right: int
    n_bins_left: int
    n_bins_right: int
    se_jackknife: float | None = None
    statistic_jackknife: float | None = None
    pvalue_jackknife: float | None = None

    def to_dict(self) -> dict:
        out = {
            "log_diff": self.log_diff,
            "se": self.se,
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "f_left": self.f_left,
            "f_right": self.f_right,
            "bandwidth": self.bandwidth,
            "bin_width": self.bin_width,
            "n_left": self.n_left,
            "n_right": self.n_right,
            "n_bins_left": self.n_bins_left,
            "n_bins_right": self.n_bins_right,
        }
        if self.se_jackknife is not None:
            out["se_jackknife"] = self.se_jackknife
            out["statistic_jackknife"] = self.statistic_jackknife
            out["pvalue_jackknife"] = self.pvalue_jackknife
        return out


def _binned_density(values: np.ndarray, cutoff: float, bin_width: float):
    """Histogram with bins anchored so no bin straddles the cutoff."""
    idx = np.floor((values - cutoff) / bin_width).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    mids = (np.arange(lo, hi + 1) + 0.5) * bin_width + cutoff
    heights = counts / (len(values) * bin_width)
    return mids, heights


def _side_bandwidth(mids: np.ndarray, heights: np.ndarray) -> float:
    """Rule-of-thumb local-linear bandwidth from a global quartic fit."""
    if len(mids) < 5:
        return float(mids.max() - mids.min()) if len(mids) else 0.0
    coefs = np.polynomial.polynomial.polyfit(mids, heights, 4)
    fitted = np.polynomial.polynomial.polyval(mids, coefs)
    sigma2 = float(np.mean((heights - fitted) ** 2))
    second = 2 * coefs[2] + 6 * coefs[3] * mids + 12 * coefs[4] * mids**2
    curve = float(np.sum(second**2))
    span = float(mids.max() - mids.min())
    if curve <= 0 or sigma2 <= 0:
        return span
    h = 3.348 * (sigma2 * span / curve) ** 0.2
    return min(h, span) if span > 0 else h


def _boundary_fit(dist: np.ndarray, heights: np.ndarray, h: float) -> float:
    """Triangular-kernel local linear intercept at distance zero."""
    w = 1.0 - np.abs(dist) / h
    use = w > 0
    if use.sum() < 2 or len(np.unique(dist[use])) < 2:
        raise InferenceError("too few bins inside the density-test bandwidth")
    w, d, y = w[use], dist[use], heights[use]
    sw = w.sum()
    sd = (w * d).sum()
    sdd = (w * d * d).sum()
    sy = (w * y).sum()
    sdy = (w * d * y).sum()
    det = sw * sdd - sd * sd
    if det <= 0:
        raise InferenceError("degenerate boundary fit in density test")
    return float((sdd * sy - sd * sdy) / det)


def mccrary_test(
    values,
    cutoff: float = 0.0,
    bin_width: float | None = None,
    bandwidth: float | None = None,
    jackknife: bool = False,
) -> DensityTestResult:
    """Manipulation test: discontinuity in the density at the cutoff.

    The sample is binned so no bin straddles the cutoff (values exactly at
    the cutoff fall in the first right-side bin), normalized bin heights are
    smoothed with a triangular-kernel local linear fit on each side, and the
    statistic is the difference in log boundary densities. The default bin
    width is ``2 * sd * n**-0.5`` and the default bandwidth averages a
    per-side rule-of-thumb from a global quartic fit. ``jackknife=True``
    adds a delete-one-bin variance estimate.
    """
    r = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise InputError("non-finite value in running variable")
    n = len(r)
    n_left = int((r < cutoff).sum())
    n_right = n - n_left
    if n_left == 0 or n_right == 0:
        raise InferenceError("density test needs observations on both sides")
    if bin_width is None:
        sd = float(r.std(ddof=1))
        if sd <= 0:
            raise InferenceError("running variable is constant")
        bin_width = 2.0 * sd * n ** (-0.5)
    elif bin_width <= 0:
        raise ConfigError("bin_width must be positive")

    mids, heights = _binned_density(r, cutoff, bin_width)
    left = mids < cutoff
    right = ~left
    if bandwidth is None:
        h_left = _side_bandwidth(mids[left], heights[left])
        h_right = _side_bandwidth(mids[right], heights[right])
        bandwidth = 0.5 * (h_left + h_right)
    elif bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    if bandwidth <= bin_width:
        bandwidth = 2.0 * bin_width

    def theta_from(mask_left, mask_right):
        f_minus = _boundary_fit(mids[mask_left] - cutoff, heights[mask_left], bandwidth)
        f_plus = _boundary_fit(mids[mask_right] - cutoff, heights[mask_right], bandwidth)
        if f_minus <= 0 or f_plus <= 0:
            raise InferenceError("estimated boundary density is not positive")
        return f_minus, f_plus

    f_left_hat, f_right_hat = theta_from(left, right)
    theta = math.log(f_right_hat) - math.log(f_left_hat)
    se = math.sqrt((1.0 / (n * bandwidth)) * (24.0 / 5.0) * (1.0 / f_right_hat + 1.0 / f_left_hat))
    stat = theta / se
    pvalue = float(2.0 * stats.norm.sf(abs(stat)))

    se_jk = stat_jk = p_jk = None
    if jackknife:
        dist = np.abs(mids - cutoff)
        used = np.flatnonzero(dist < bandwidth)
        thetas = []
        for j in used:
            keep = np.ones(len(mids), dtype=bool)
            keep[j] = False
            try:
                fm, fp = theta_from(left & keep, right & keep)
            except InferenceError:
                continue
            thetas.append(math.log(fp) - math.log(fm))
        if len(thetas) >= 3:
            arr = np.asarray(thetas)
            b = len(arr)
            se_jk = math.sqrt((b - 1.0) / b * float(((arr - arr.mean()) ** 2).sum()))
            if se_jk > 0:
                stat_jk = theta / se_jk
                p_jk = float(2.0 * stats.norm.sf(abs(stat_jk)))

    return DensityTestResult(
        log_diff=theta,
        se=se,
        statistic=stat,
        pvalue=pvalue,
        f_left=f_left_hat,
        f_right=f_right_hat,
        bandwidth=float(bandwidth),
        bin_width=float(bin_width),
        n_left=n_left,
        n_right=n_right,
        n_bins_left=int(left.sum()),
        n_bins_right=int(right.sum()),
        se_jackknife=se_jk,
        statistic_jackknife=stat_jk,
        pvalue_jackknife=p_jk,
    )


@dataclass(frozen=True)
class BalanceRow:
    """Reduced-form effect of eligibility on one predetermined covariate."""

    variable: str
    coef: float
    se: float
    statistic: float
    pvalue: float
    n_obs: int

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "coef": self.coef,
            "se": self.se,
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "n_obs": self.n_obs,
        }


def balance_table(
    data,
    cfg: DesignConfig | None = None,
    variables: tuple[str, ...] = DEFAULT_BALANCE_VARIABLES,
    local: bool = True,
    fixed_effect: str | None = DEFAULT_FE,
    cluster: str | None = DEFAULT_FE,
) -> list[BalanceRow]:
    """Eligibility-on-covariate regressions with running-variable controls.

    Each row regresses a predetermined covariate on the instrument and the
    three running variables. Large, significant coefficients indicate
    sorting on observables near the frontier.
    """
    cfg = cfg or DesignConfig()
    frame = analysis_frame(data, cfg, degree=1)
    rows = []
    for variable in variables:
        if variable not in frame.columns:
            raise InputError(f"balance variable {variable!r} not in data")
        spec = RegressionSpec(
            outcome=variable,
            controls=(INSTRUMENT, "r_p", "r_d", "r_n"),
            fixed_effect=fixed_effect,
            cluster=cluster,
            sample_filter="in_local_sample" if local else None,
        )
        fit = ols(spec, frame)
        rows.append(
            BalanceRow(
                variable=variable,
                coef=float(fit.coefficients[INSTRUMENT]),
                se=float(fit.se[INSTRUMENT]),
                statistic=fit.tstat(INSTRUMENT),
                pvalue=fit.pvalue(INSTRUMENT),
                n_obs=fit.n_obs,
            )
        )
    return rows


@dataclass(frozen=True)
class ExclusionCheckResult:
    """Instrumented effect next to the direct effect among the untreated."""

    outcome: str
    late: float
    late_se: float
    direct: float
    direct_se: float
    direct_statistic: float
    direct_pvalue: float
    n_untreated: int
    n_full: int

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "late": self.late,
            "late_se": self.late_se,
            "direct": self.direct,
            "direct_se": self.direct_se,
            "direct_statistic": self.direct_statistic,
            "direct_pvalue": self.direct_pvalue,
            "n_untreated": self.n_untreated,
            "n_full": self.n_full,
        }


def exclusion_check(
    data,
    outcome: str,
    cfg: DesignConfig | None = None,
    local: bool = True,
    degree: int = 1,
    fixed_effect: str | None = DEFAULT_FE,
    cluster: str | None = DEFAULT_FE,
) -> ExclusionCheckResult:
    """Contrast the instrumented effect with a direct-effect regression.

    The direct effect regresses the outcome on the instrument and controls
    among settlements that stayed untreated, where the instrument cannot
    operate through treatment. Under exclusion it should be near zero.
    Both columns run through the same estimation path as the main results.
    """
    cfg = cfg or DesignConfig()
    frame = analysis_frame(data, cfg, degree=degree)
    spec = base_spec(
        outcome=outcome,
        degree=degree,
        fixed_effect=fixed_effect,
        cluster=cluster,
        local=local,
    )
    main = tsls(spec, frame)

    untreated = frame.loc[frame[TREATMENT] == 0].copy()
    direct_spec = RegressionSpec(
        outcome=outcome,
        controls=(INSTRUMENT, *default_controls(degree)),
        fixed_effect=fixed_effect,
        cluster=cluster,
        sample_filter="in_local_sample" if local else None,
    )
    direct = ols(direct_spec, untreated)
    return ExclusionCheckResult(
        outcome=outcome,
        late=float(main.coefficients[TREATMENT]),
        late_se=float(main.se[TREATMENT]),
        direct=float(direct.coefficients[INSTRUMENT]),
        direct_se=float(direct.se[INSTRUMENT]),
        direct_statistic=direct.tstat(INSTRUMENT),
        direct_pvalue=direct.pvalue(INSTRUMENT),
        n_untreated=direct.n_obs,
        n_full=main.n_obs,
    )


@dataclass(frozen=True)
class BinnedSeries:
    """Equal-count binned means per side of a cutoff, with side-wise fits.

    ``fit_left`` and ``fit_right`` hold polynomial coefficients (lowest
    degree first) in the shifted variable ``x - cutoff``, estimated on the
    raw points of each side; either may be None when a side is empty.
    """

    cutoff: float
    bin_x: np.ndarray
    bin_y: np.ndarray
    bin_n: np.ndarray
    bin_side: np.ndarray
    fit_left: np.ndarray | None
    fit_right: np.ndarray | None

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        if self.fit_left is not None:
            mask = x < self.cutoff
            out[mask] = np.polynomial.polynomial.polyval(x[mask] - self.cutoff, self.fit_left)
        if self.fit_right is not None:
            mask = x >= self.cutoff
            out[mask] = np.polynomial.polynomial.polyval(x[mask] - self.cutoff, self.fit_right)
        return out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "bin_x": self.bin_x,
                "bin_y": self.bin_y,
                "bin_n": self.bin_n,
                "side": self.bin_side,
            }
        )


def _side_bins(x: np.ndarray, y: np.ndarray, n_bins: int):
    order = np.argsort(x, kind="mergesort")
    chunks = np.array_split(order, min(n_bins, len(order)))
    bx, by, bn = [], [], []
    for chunk in chunks:
        if len(chunk) == 0:
            continue
        bx.append(float(x[chunk].mean()))
        by.append(float(y[chunk].mean()))
        bn.append(len(chunk))
    return bx, by, bn


def binned_scatter(
    x,
    y,
    cutoff: float = 0.0,
    n_bins: int = 20,
    degree: int = 2,
) -> BinnedSeries:
    """Equal-count binned scatter of ``y`` against ``x`` split at a cutoff.

    Bins are quantile (rank) splits computed separately on each side, so no
    bin straddles the cutoff; values exactly at the cutoff count as the
    right side. Polynomial fits use the raw points, not the bin means.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError("x and y must have the same length")
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if n_bins < 1:
        raise ConfigError("n_bins must be >= 1")
    left = x < cutoff
    right = ~left
    bx, by, bn, side = [], [], [], []
    fit_left = fit_right = None
    if left.any():
        sx, sy, sn = _side_bins(x[left], y[left], n_bins)
        bx += sx
        by += sy
        bn += sn
        side += [-1] * len(sx)
        deg = min(degree, max(0, left.sum() - 1))
        fit_left = np.polynomial.polynomial.polyfit(x[left] - cutoff, y[left], deg)
    if right.any():
        sx, sy, sn = _side_bins(x[right], y[right], n_bins)
        bx += sx
        by += sy
        bn += sn
        side += [1] * len(sx)
        deg = min(degree, max(0, right.sum() - 1))
        fit_right = np.polynomial.polynomial.polyfit(x[right] - cutoff, y[right], deg)
    return BinnedSeries(
        cutoff=cutoff,
        bin_x=np.asarray(bx),
        bin_y=np.asarray(by),
        bin_n=np.asarray(bn, dtype=np.int64),
        bin_side=np.asarray(side, dtype=np.int64),
        fit_left=fit_left,
        fit_right=fit_right,
    )
