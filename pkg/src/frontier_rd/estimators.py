"""Fixed-effects OLS and just-identified 2SLS with cluster-robust inference.

Fixed effects are absorbed by exact within-group demeaning; groups with a
single row are dropped and counted. Coefficients come from a pivoted QR
solve with an explicit rank check. Variances use the clustered sandwich

    V = c * B (sum_g s_g s_g') B',   s_g = Z_g' e_g,
    c = G/(G-1) * (N-1)/(N-K),

where ``Z`` is the regressor matrix for OLS (``B = (X'X)^-1``) and the
instrument-side matrix for 2SLS (``B = (Z'X)^-1``), ``e`` are structural
residuals ``y - X beta``, and ``K`` counts regressors plus one per absorbed
fixed-effect group. With every observation its own cluster the formula
reduces to HC1. Confidence intervals and p-values use Student's t with
``G - 1`` degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats
from sklearn.base import BaseEstimator

from .errors import (
    CollinearityError,
    DegenerateInstrumentError,
    InferenceError,
    InputError,
)

RANK_TOL = 1e-10
DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class RegressionSpec:
    """Names of the columns that define one regression.

    For plain OLS leave ``endogenous`` and ``instrument`` unset and put every
    right-hand-side variable in ``controls``. For 2SLS set both; the
    endogenous regressor is instrumented by the single instrument, controls
    instrument themselves.
    """

    outcome: str
    controls: tuple[str, ...] = ()
    endogenous: str | None = None
    instrument: str | None = None
    fixed_effect: str | None = None
    cluster: str | None = None
    sample_filter: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        if (self.endogenous is None) != (self.instrument is None):
            raise InputError("endogenous and instrument must be set together")
        used = [self.outcome, *self.controls]
        if self.endogenous is not None:
            used += [self.endogenous, self.instrument]
        if len(set(used)) != len(used):
            raise InputError("regression spec reuses a column")


@dataclass(frozen=True)
class FitResult:
    """Estimates plus enough bookkeeping to reproduce the inference.

    ``coefficients`` and ``vcov`` are indexed by term name. ``n_clusters``
    doubles as the degrees-of-freedom anchor: intervals and p-values use
    t(n_clusters - 1).
    """

    method: str
    coefficients: pd.Series
    vcov: pd.DataFrame
    n_obs: int
    n_clusters: int
    n_fe_groups: int
    k_params: int
    r2: float
    adj_r2: float
    ssr: float
    sst: float
    dropped_missing: int
    dropped_singletons: int

    def __post_init__(self):
        v = self.vcov.to_numpy()
        if not np.allclose(v, v.T, atol=1e-12):
            raise InferenceError("variance matrix is not symmetric")
        eigmin = float(np.linalg.eigvalsh(v).min()) if v.size else 0.0
        if eigmin < -1e-8 * max(1.0, float(np.abs(v).max())):
            raise InferenceError("variance matrix is not positive semidefinite")
        if self.n_clusters < 2:
            raise InferenceError("need at least 2 clusters for inference")

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.vcov.to_numpy())), index=self.coefficients.index)

    @property
    def df_inference(self) -> int:
        return self.n_clusters - 1

    def tstat(self, term: str) -> float:
        return float(self.coefficients[term] / self.se[term])

    def pvalue(self, term: str) -> float:
        return float(2.0 * stats.t.sf(abs(self.tstat(term)), self.df_inference))

    def conf_int(self, term: str, level: float = 0.95) -> tuple[float, float]:
        crit = float(stats.t.ppf(0.5 + level / 2.0, self.df_inference))
        half = crit * float(self.se[term])
        center = float(self.coefficients[term])
        return (center - half, center + half)

    def to_dict(self) -> dict:
        terms = {}
        for name in self.coefficients.index:
            lo, hi = self.conf_int(name)
            terms[name] = {
                "coef": float(self.coefficients[name]),
                "se": float(self.se[name]),
                "t": self.tstat(name),
                "p": self.pvalue(name),
                "ci_low": lo,
                "ci_high": hi,
            }
        return {
            "method": self.method,
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
            "n_fe_groups": self.n_fe_groups,
            "k_params": self.k_params,
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "dropped_missing": self.dropped_missing,
            "dropped_singletons": self.dropped_singletons,
            "terms": terms,
        }

    def summary(self) -> str:
        lines = [
            f"method: {self.method}   n={self.n_obs}  clusters={self.n_clusters}"
            f"  fe_groups={self.n_fe_groups}",
            f"r2={self.r2:.4f}  adj_r2={self.adj_r2:.4f}",
            f"{'term':<24}{'coef':>12}{'se':>12}{'t':>9}{'p':>9}",
        ]
        for name in self.coefficients.index:
            lines.append(
                f"{name:<24}{self.coefficients[name]:>12.5f}{self.se[name]:>12.5f}"
                f"{self.tstat(name):>9.3f}{self.pvalue(name):>9.4f}"
            )
        return "\n".join(lines)


def _encode_groups(values, label: str) -> tuple[np.ndarray, int]:
    series = pd.Series(np.asarray(values).ravel())
    if len(series) == 0:
        raise InputError(f"{label} key is empty")
    if series.isna().any():
        raise InputError(f"missing {label} key")
    as_str = series.astype(str)
    if (as_str == "").any():
        raise InputError(f"empty {label} key")
    codes, uniques = pd.factorize(as_str, sort=True)
    return codes.astype(np.int64), len(uniques)


def within_transform(values, groups) -> np.ndarray:
    """Subtract group means from each column.

    ``values`` is ``(n,)`` or ``(n, k)``; ``groups`` is a length-n key
    vector. Rows in singleton groups come back exactly zero. Raises
    :class:`InputError` on length mismatch or missing/empty group keys.
    """
    X = np.asarray(values, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError("within_transform expects a vector or matrix")
    codes, n_groups = _encode_groups(groups, "group")
    if len(codes) != X.shape[0]:
        raise InputError("groups length does not match values")
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    out = np.empty_like(X)
    for j in range(X.shape[1]):
        sums = np.bincount(codes, weights=X[:, j], minlength=n_groups)
        out[:, j] = X[:, j] - (sums / counts)[codes]
    return out[:, 0] if single else out


def _group_means(X: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    means = np.empty((n_groups, X.shape[1]))
    for j in range(X.shape[1]):
        means[:, j] = np.bincount(codes, weights=X[:, j], minlength=n_groups) / counts
    return means


def _demean(X: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    return X - _group_means(X, codes, n_groups)[codes]


def _qr_rank_check(X: np.ndarray, names: Sequence[str], rank_tol: float):
    """Pivoted QR with a rank check naming the collinear columns."""
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size and diag[0] > 0:
        rank = int((diag > rank_tol * diag[0]).sum())
    else:
        rank = 0
    if rank < X.shape[1]:
        raise CollinearityError(sorted(names[j] for j in piv[rank:]))
    return q, r, piv


def _qr_solve(q, r, piv, y: np.ndarray) -> np.ndarray:
    beta_p = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty_like(beta_p)
    beta[piv] = beta_p
    return beta


def _xtx_inv(r, piv) -> np.ndarray:
    rinv = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
    inner = rinv @ rinv.T
    out = np.empty_like(inner)
    out[np.ix_(piv, piv)] = inner
    return out


def _cluster_meat(scores_matrix: np.ndarray, resid: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    scores = scores_matrix * resid[:, None]
    k = scores.shape[1]
    sums = np.empty((n_groups, k))
    for j in range(k):
        sums[:, j] = np.bincount(codes, weights=scores[:, j], minlength=n_groups)
    return sums.T @ sums


@dataclass
class _Prepared:
    y: np.ndarray
    y_raw: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    names_x: list[str]
    names_z: list[str]
    fe_codes: np.ndarray | None
    n_fe_groups: int
    cluster_codes: np.ndarray
    n_clusters: int
    dropped_singletons: int
    centered: bool
    keep_index: np.ndarray


def _prepare(
    y,
    X,
    Z,
    names_x: Sequence[str],
    names_z: Sequence[str],
    fixed_effects,
    clusters,
    add_constant: bool,
) -> _Prepared:
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.ndim != 2 or Z.ndim != 2:
        raise InputError("regressor matrices must be two-dimensional")
    n = y.shape[0]
    if X.shape[0] != n or Z.shape[0] != n:
        raise InputError("matrix row counts do not match outcome length")
    if not np.all(np.isfinite(y)):
        raise InputError("non-finite value in outcome")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Z)):
        raise InputError("non-finite value in regressors")
    names_x = list(names_x)
    names_z = list(names_z)
    if len(names_x) != X.shape[1] or len(names_z) != Z.shape[1]:
        raise InputError("column names do not match matrix width")

    keep = np.arange(n)
    dropped_singletons = 0
    fe_codes = None
    n_fe_groups = 0
    if fixed_effects is not None:
        codes, n_groups = _encode_groups(fixed_effects, "fixed-effect")
        if len(codes) != n:
            raise InputError("fixed_effects length does not match outcome")
        counts = np.bincount(codes, minlength=n_groups)
        singleton = counts[codes] == 1
        dropped_singletons = int(singleton.sum())
        if dropped_singletons:
            keep = keep[~singleton]
            y, X, Z = y[~singleton], X[~singleton], Z[~singleton]
            codes, n_groups = _encode_groups(codes[~singleton], "fixed-effect")
        fe_codes = codes
        n_fe_groups = n_groups

    if clusters is not None:
        cl = np.asarray(clusters)
        if cl.shape[0] != n:
            raise InputError("clusters length does not match outcome")
        cluster_codes, n_clusters = _encode_groups(cl[keep], "cluster")
    else:
        cluster_codes = np.arange(len(y), dtype=np.int64)
        n_clusters = len(y)
    if n_clusters < 2:
        raise InferenceError("need at least 2 clusters for inference")

    y_raw = y.copy()
    centered = True
    if fe_codes is not None:
        y = _demean(y[:, None], fe_codes, n_fe_groups).ravel()
        X = _demean(X, fe_codes, n_fe_groups)
        Z = _demean(Z, fe_codes, n_fe_groups)
    elif add_constant:
        ones = np.ones((len(y), 1))
        X = np.hstack([X, ones])
        Z = np.hstack([Z, ones])
        names_x = names_x + ["const"]
        names_z = names_z + ["const"]
    else:
        centered = False

    return _Prepared(
        y=y,
        y_raw=y_raw,
        X=X,
        Z=Z,
        names_x=names_x,
        names_z=names_z,
        fe_codes=fe_codes,
        n_fe_groups=n_fe_groups,
        cluster_codes=cluster_codes,
        n_clusters=n_clusters,
        dropped_singletons=dropped_singletons,
        centered=centered,
        keep_index=keep,
    )


def _fit_stats(prep: _Prepared, beta: np.ndarray, method: str, dropped_missing: int, bread: np.ndarray):
    resid = prep.y - prep.X @ beta
    n = len(prep.y)
    k_params = prep.X.shape[1] + prep.n_fe_groups
    if n <= k_params:
        raise InferenceError(f"{n} observations cannot support {k_params} parameters")
    g = prep.n_clusters
    meat = _cluster_meat(prep.Z, resid, prep.cluster_codes, g)
    scale = (g / (g - 1.0)) * ((n - 1.0) / (n - k_params))
    vcov = scale * (bread @ meat @ bread.T)
    vcov = 0.5 * (vcov + vcov.T)
    ssr = float(resid @ resid)
    if prep.centered:
        dev = prep.y_raw - prep.y_raw.mean()
    else:
        dev = prep.y_raw
    sst = float(dev @ dev)
    r2 = 1.0 - ssr / sst if sst > 0 else float("nan")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / (n - k_params) if sst > 0 else float("nan")
    return FitResult(
        method=method,
        coefficients=pd.Series(beta, index=prep.names_x),
        vcov=pd.DataFrame(vcov, index=prep.names_x, columns=prep.names_x),
        n_obs=n,
        n_clusters=g,
        n_fe_groups=prep.n_fe_groups,
        k_params=k_params,
        r2=r2,
        adj_r2=adj_r2,
        ssr=ssr,
        sst=sst,
        dropped_missing=dropped_missing,
        dropped_singletons=prep.dropped_singletons,
    )


def _ols_fit(
    y,
    X,
    names: Sequence[str],
    fixed_effects=None,
    clusters=None,
    add_constant: bool = True,
    rank_tol: float = RANK_TOL,
    dropped_missing: int = 0,
) -> FitResult:
    prep = _prepare(y, X, X, names, names, fixed_effects, clusters, add_constant)
    q, r, piv = _qr_rank_check(prep.X, prep.names_x, rank_tol)
    beta = _qr_solve(q, r, piv, prep.y)
    bread = _xtx_inv(r, piv)
    return _fit_stats(prep, beta, "ols", dropped_missing, bread)


def _iv_fit(
    y,
    X,
    Z,
    names_x: Sequence[str],
    names_z: Sequence[str],
    fixed_effects=None,
    clusters=None,
    add_constant: bool = True,
    rank_tol: float = RANK_TOL,
    degenerate_tol: float = DEGENERATE_TOL,
    dropped_missing: int = 0,
) -> FitResult:
    prep = _prepare(y, X, Z, names_x, names_z, fixed_effects, clusters, add_constant)
    _qr_rank_check(prep.X, prep.names_x, rank_tol)
    _qr_rank_check(prep.Z, prep.names_z, rank_tol)

    # The endogenous regressor and the instrument occupy column 0 of X and Z;
    # shared exogenous columns fill the rest. Degeneracy is judged on the
    # partial correlation of the two leading columns given the shared ones.
    rho = _partial_correlation(prep.X[:, 0], prep.Z[:, 0], prep.X[:, 1:])
    if not np.isfinite(rho) or abs(rho) < degenerate_tol:
        raise DegenerateInstrumentError(
            f"instrument carries no first-stage signal (partial correlation {rho:.3e})"
        )
    zx = prep.Z.T @ prep.X
    try:
        beta = np.linalg.solve(zx, prep.Z.T @ prep.y)
        bread = np.linalg.solve(zx, np.eye(zx.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise DegenerateInstrumentError(f"Z'X is singular: {exc}") from exc
    return _fit_stats(prep, beta, "2sls", dropped_missing, bread)


def _residualize(v: np.ndarray, controls: np.ndarray) -> np.ndarray:
    if controls.shape[1] == 0:
        return v
    q, _ = np.linalg.qr(controls)
    return v - q @ (q.T @ v)


def _partial_correlation(a: np.ndarray, b: np.ndarray, controls: np.ndarray) -> float:
    ra = _residualize(a, controls)
    rb = _residualize(b, controls)
    # residuals this far below the original scale are rounding noise from
    # the projection, not signal; correlating them would give junk
    tol_a = 1e-12 * max(1.0, float(np.linalg.norm(a)))
    tol_b = 1e-12 * max(1.0, float(np.linalg.norm(b)))
    norm_a = float(np.linalg.norm(ra))
    norm_b = float(np.linalg.norm(rb))
    if norm_a <= tol_a or norm_b <= tol_b:
        return float("nan")
    return float(ra @ rb / (norm_a * norm_b))


def _spec_frame(spec: RegressionSpec, data) -> tuple[pd.DataFrame, int]:
    """Filtered, missing-dropped frame restricted to the spec's columns."""
    frame = data.frame if hasattr(data, "frame") else data
    if not isinstance(frame, pd.DataFrame):
        raise InputError("expected a Dataset or pandas DataFrame")
    used = [spec.outcome, *spec.controls]
    if spec.endogenous is not None:
        used += [spec.endogenous, spec.instrument]
    meta = [c for c in (spec.fixed_effect, spec.cluster, spec.sample_filter) if c]
    missing_cols = [c for c in used + meta if c not in frame.columns]
    if missing_cols:
        raise InputError("data is missing columns: " + ", ".join(sorted(set(missing_cols))))
    sub = frame.loc[:, list(dict.fromkeys(used + meta))]
    if spec.sample_filter:
        mask = sub[spec.sample_filter].astype(bool).to_numpy()
        sub = sub.loc[mask]
    complete = sub.loc[:, used].notna().all(axis=1).to_numpy()
    dropped_missing = int((~complete).sum())
    return sub.loc[complete], dropped_missing


def ols(spec: RegressionSpec, data) -> FitResult:
    """OLS of ``spec.outcome`` on ``spec.controls`` per the spec's design.

    The spec must not declare an endogenous regressor; use :func:`tsls` for
    that. A constant is added exactly when no fixed effect is absorbed.
    """
    if spec.endogenous is not None:
        raise InputError("spec declares an endogenous regressor; use tsls")
    if not spec.controls:
        raise InputError("ols needs at least one control column")
    sub, dropped = _spec_frame(spec, data)
    y = sub[spec.outcome].to_numpy(dtype=float)
    X = sub.loc[:, list(spec.controls)].to_numpy(dtype=float)
    return _ols_fit(
        y,
        X,
        list(spec.controls),
        fixed_effects=sub[spec.fixed_effect] if spec.fixed_effect else None,
        clusters=sub[spec.cluster] if spec.cluster else None,
        add_constant=spec.fixed_effect is None,
        dropped_missing=dropped,
    )


def tsls(spec: RegressionSpec, data) -> FitResult:
    """Just-identified 2SLS: one endogenous regressor, one instrument.

    Controls instrument themselves. Standard errors use structural
    residuals ``y - X beta``, not second-stage residuals.
    """
    if spec.endogenous is None:
        raise InputError("tsls requires endogenous and instrument columns")
    sub, dropped = _spec_frame(spec, data)
    y = sub[spec.outcome].to_numpy(dtype=float)
    controls = sub.loc[:, list(spec.controls)].to_numpy(dtype=float)
    endog = sub[spec.endogenous].to_numpy(dtype=float)[:, None]
    instr = sub[spec.instrument].to_numpy(dtype=float)[:, None]
    X = np.hstack([endog, controls])
    Z = np.hstack([instr, controls])
    return _iv_fit(
        y,
        X,
        Z,
        [spec.endogenous, *spec.controls],
        [spec.instrument, *spec.controls],
        fixed_effects=sub[spec.fixed_effect] if spec.fixed_effect else None,
        clusters=sub[spec.cluster] if spec.cluster else None,
        add_constant=spec.fixed_effect is None,
        dropped_missing=dropped,
    )


def first_stage_regression(spec: RegressionSpec, data) -> FitResult:
    """OLS of the endogenous regressor on instrument plus controls."""
    if spec.endogenous is None:
        raise InputError("spec has no endogenous regressor")
    fs = replace(
        spec,
        outcome=spec.endogenous,
        controls=(spec.instrument, *spec.controls),
        endogenous=None,
        instrument=None,
    )
    return ols(fs, data)


def reduced_form_regression(spec: RegressionSpec, data) -> FitResult:
    """OLS of the outcome on instrument plus controls."""
    if spec.endogenous is None:
        raise InputError("spec has no endogenous regressor")
    rf = replace(
        spec,
        controls=(spec.instrument, *spec.controls),
        endogenous=None,
        instrument=None,
    )
    return ols(rf, data)


def partial_r2(spec: RegressionSpec, data) -> float:
    """Squared partial correlation of instrument and endogenous regressor.

    Both are residualized on the controls, the constant, and any absorbed
    fixed effects before correlating, so the value equals
    ``1 - SSR_full / SSR_restricted`` from the first-stage regressions.
    """
    if spec.endogenous is None:
        raise InputError("partial_r2 requires endogenous and instrument columns")
    sub, _ = _spec_frame(spec, data)
    endog = sub[spec.endogenous].to_numpy(dtype=float)
    instr = sub[spec.instrument].to_numpy(dtype=float)
    controls = sub.loc[:, list(spec.controls)].to_numpy(dtype=float)
    if spec.fixed_effect:
        codes, n_groups = _encode_groups(sub[spec.fixed_effect], "fixed-effect")
        counts = np.bincount(codes, minlength=n_groups)
        keep = counts[codes] > 1
        endog, instr, controls = endog[keep], instr[keep], controls[keep]
        codes, n_groups = _encode_groups(codes[keep], "fixed-effect")
        endog = _demean(endog[:, None], codes, n_groups).ravel()
        instr = _demean(instr[:, None], codes, n_groups).ravel()
        controls = _demean(controls, codes, n_groups)
    else:
        controls = np.hstack([controls, np.ones((len(endog), 1))])
    rho = _partial_correlation(endog, instr, controls)
    if not np.isfinite(rho):
        return 0.0
    return float(rho * rho)


def _resolve_names(X, feature_names) -> list[str]:
    if feature_names is not None:
        return [str(n) for n in feature_names]
    if isinstance(X, pd.DataFrame):
        return [str(c) for c in X.columns]
    width = np.asarray(X).shape[1] if np.asarray(X).ndim == 2 else 1
    return [f"x{j}" for j in range(width)]


class ClusterRobustOLS(BaseEstimator):
    """Least squares with absorbed fixed effects and clustered errors.

    Parameters
    ----------
    add_constant : bool, default True
        Append an intercept column. Ignored (no constant) when
        ``fixed_effects`` is passed to :meth:`fit`.
    rank_tol : float, default 1e-10
        Rank tolerance relative to the largest design-column norm.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Slope estimates, excluding the intercept.
    intercept_ : float
        Fitted constant, or the grand mean of absorbed effects.
    result_ : FitResult
        Full estimation record including the clustered variance matrix.
    """

    def __init__(self, add_constant: bool = True, rank_tol: float = RANK_TOL):
        self.add_constant = add_constant
        self.rank_tol = rank_tol

    def fit(self, X, y, *, fixed_effects=None, clusters=None, feature_names=None):
        names = _resolve_names(X, feature_names)
        Xa = np.asarray(X, dtype=float)
        if Xa.ndim == 1:
            Xa = Xa[:, None]
        result = _ols_fit(
            y,
            Xa,
            names,
            fixed_effects=fixed_effects,
            clusters=clusters,
            add_constant=self.add_constant,
            rank_tol=self.rank_tol,
        )
        self.result_ = result
        self.feature_names_in_ = np.asarray(names, dtype=object)
        self.n_features_in_ = Xa.shape[1]
        slopes = result.coefficients.reindex(names).to_numpy(dtype=float)
        self.coef_ = slopes
        if "const" in result.coefficients.index:
            self.intercept_ = float(result.coefficients["const"])
        elif fixed_effects is not None:
            y_arr = np.asarray(y, dtype=float).ravel()
            idx = _nonsingleton_index(fixed_effects)
            self.intercept_ = float((y_arr[idx] - Xa[idx] @ slopes).mean())
        else:
            self.intercept_ = 0.0
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "result_"):
            raise InputError("estimator is not fitted")
        Xa = np.asarray(X, dtype=float)
        if Xa.ndim == 1:
            Xa = Xa[:, None]
        return Xa @ self.coef_ + self.intercept_


def _nonsingleton_index(fixed_effects) -> np.ndarray:
    codes, n_groups = _encode_groups(fixed_effects, "fixed-effect")
    counts = np.bincount(codes, minlength=n_groups)
    return np.flatnonzero(counts[codes] > 1)


class ClusterRobustIV(BaseEstimator):
    """Just-identified 2SLS with absorbed fixed effects and clustered errors.

    ``X`` holds the exogenous controls; the endogenous regressor and its
    instrument are passed to :meth:`fit` as keyword vectors. ``coef_`` puts
    the endogenous coefficient first, followed by the controls.
    """

    def __init__(
        self,
        add_constant: bool = True,
        rank_tol: float = RANK_TOL,
        degenerate_tol: float = DEGENERATE_TOL,
    ):
        self.add_constant = add_constant
        self.rank_tol = rank_tol
        self.degenerate_tol = degenerate_tol

    def fit(
        self,
        X,
        y,
        *,
        endogenous,
        instrument,
        fixed_effects=None,
        clusters=None,
        feature_names=None,
        endogenous_name: str = "endogenous",
        instrument_name: str = "instrument",
    ):
        names = _resolve_names(X, feature_names)
        Xa = np.asarray(X, dtype=float)
        if Xa.ndim == 1:
            Xa = Xa[:, None]
        endog = np.asarray(endogenous, dtype=float).ravel()[:, None]
        instr = np.asarray(instrument, dtype=float).ravel()[:, None]
        result = _iv_fit(
            y,
            np.hstack([endog, Xa]),
            np.hstack([instr, Xa]),
            [endogenous_name, *names],
            [instrument_name, *names],
            fixed_effects=fixed_effects,
            clusters=clusters,
            add_constant=self.add_constant,
            rank_tol=self.rank_tol,
            degenerate_tol=self.degenerate_tol,
        )
        self.result_ = result
        self.feature_names_in_ = np.asarray(names, dtype=object)
        self.n_features_in_ = Xa.shape[1]
        order = [endogenous_name, *names]
        self.coef_ = result.coefficients.reindex(order).to_numpy(dtype=float)
        self.intercept_ = (
            float(result.coefficients["const"])
            if "const" in result.coefficients.index
            else 0.0
        )
        return self

    def predict(self, X, *, endogenous) -> np.ndarray:
        if not hasattr(self, "result_"):
            raise InputError("estimator is not fitted")
        Xa = np.asarray(X, dtype=float)
        if Xa.ndim == 1:
            Xa = Xa[:, None]
        endog = np.asarray(endogenous, dtype=float).ravel()
        full = np.hstack([endog[:, None], Xa])
        return full @ self.coef_ + self.intercept_
