"""Running variables, eligibility instrument, and frontier distance.

Each settlement is scored on three criteria: population, density, and the
male non-agricultural workforce share. Every criterion value ``v`` with
cutoff ``c`` is normalized to a running variable ``r = v / c - 1`` so that 0
marks the cutoff and -0.5 means halfway below it. A settlement is eligible
(``z = 1``) only when all three running variables clear zero.

Distance to the eligibility frontier is a soft minimum of the three running
variables::

    softmin(r; tau) = -tau * log(sum_j exp(-r_j / tau))

computed stably as ``m - tau * log(sum_j exp(-(r_j - m) / tau))`` with
``m = min_j r_j``. It is bounded between ``min - tau*log(3)`` and ``min``,
increases in every argument, and converges to the hard minimum as ``tau``
goes to 0. A hard-minimum mode is available for sensitivity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .configio import get_bool, get_float, get_str, read_kv, write_kv
from .errors import ConfigError, InputError

DESIGN_COLUMNS = (
    "r_p",
    "r_d",
    "r_n",
    "z_p",
    "z_d",
    "z_n",
    "z",
    "frontier",
    "in_local_sample",
)

SOURCE_COLUMNS = ("population_2001", "density_2001", "nonag_male_share_2001")

FRONTIER_MODES = ("softmin", "hardmin")


@dataclass(frozen=True)
class DesignConfig:
    """Cutoffs, local-sample bands, and frontier parameters.

    Bands apply to the raw criterion levels, not the normalized scale: the
    default local sample keeps settlements within 5000 of the population
    cutoff, 400 of the density cutoff, and 0.2 of the share cutoff, jointly.
    """

    population_cutoff: float = 5000.0
    density_cutoff: float = 400.0
    nonag_cutoff: float = 0.75
    population_band: float = 5000.0
    density_band: float = 400.0
    nonag_band: float = 0.2
    tau: float = 0.05
    inclusive: bool = True
    frontier_mode: str = "softmin"

    def __post_init__(self):
        for name in (
            "population_cutoff",
            "density_cutoff",
            "nonag_cutoff",
            "population_band",
            "density_band",
            "nonag_band",
            "tau",
        ):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive number, got {value!r}")
        if self.frontier_mode not in FRONTIER_MODES:
            raise ConfigError(
                f"frontier_mode must be one of {FRONTIER_MODES}, got {self.frontier_mode!r}"
            )

    @classmethod
    def from_file(cls, path) -> "DesignConfig":
        kv = read_kv(path)
        defaults = cls()
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(kv) - known)
        if unknown:
            raise ConfigError("unknown design config keys: " + ", ".join(unknown))
        return cls(
            population_cutoff=get_float(kv, "population_cutoff", defaults.population_cutoff),
            density_cutoff=get_float(kv, "density_cutoff", defaults.density_cutoff),
            nonag_cutoff=get_float(kv, "nonag_cutoff", defaults.nonag_cutoff),
            population_band=get_float(kv, "population_band", defaults.population_band),
            density_band=get_float(kv, "density_band", defaults.density_band),
            nonag_band=get_float(kv, "nonag_band", defaults.nonag_band),
            tau=get_float(kv, "tau", defaults.tau),
            inclusive=get_bool(kv, "inclusive", defaults.inclusive),
            frontier_mode=get_str(kv, "frontier_mode", defaults.frontier_mode),
        )

    def to_file(self, path) -> None:
        write_kv(
            path,
            {f.name: str(getattr(self, f.name)) for f in fields(self)},
            header="design configuration",
        )


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"non-finite value in {name}")
    return arr


def normalize(population, density, nonag_share, cfg: DesignConfig | None = None):
    """Normalized distances to each cutoff: ``r = value / cutoff - 1``.

    Accepts scalars or arrays; returns ``(r_p, r_d, r_n)`` of the same shape.
    Raises :class:`InputError` on non-finite input, naming the field.
    """
    cfg = cfg or DesignConfig()
    r_p = _as_float_array(population, "population") / cfg.population_cutoff - 1.0
    r_d = _as_float_array(density, "density") / cfg.density_cutoff - 1.0
    r_n = _as_float_array(nonag_share, "nonag_share") / cfg.nonag_cutoff - 1.0
    if np.ndim(population) == 0 and np.ndim(density) == 0 and np.ndim(nonag_share) == 0:
        return float(r_p), float(r_d), float(r_n)
    return r_p, r_d, r_n


def eligibility(r_p, r_d, r_n, cfg: DesignConfig | None = None):
    """Per-criterion indicators and their conjunction.

    With the default inclusive rule a criterion is met when its running
    variable is >= 0; ``z`` is 1 only when all three are met. Returns
    ``(z_p, z_d, z_n, z)`` as 0/1 integers matching the input shape.
    """
    cfg = cfg or DesignConfig()
    scalar = np.ndim(r_p) == 0 and np.ndim(r_d) == 0 and np.ndim(r_n) == 0
    parts = []
    for values, name in ((r_p, "r_p"), (r_d, "r_d"), (r_n, "r_n")):
        arr = _as_float_array(values, name)
        parts.append(arr >= 0 if cfg.inclusive else arr > 0)
    z = parts[0] & parts[1] & parts[2]
    out = tuple(np.asarray(p, dtype=np.int64) for p in (*parts, z))
    if scalar:
        return tuple(int(p) for p in out)
    return out


def frontier_distance(r_p, r_d, r_n, tau: float = 0.05):
    """Soft-minimum distance to the eligibility frontier.

    Uses the shifted log-sum-exp form, so large negative running variables
    cannot overflow. ``tau`` must be positive; use :func:`hard_min` for the
    limiting hard minimum.
    """
    if not math.isfinite(tau) or tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau!r}")
    scalar = np.ndim(r_p) == 0 and np.ndim(r_d) == 0 and np.ndim(r_n) == 0
    stacked = np.stack(
        [
            _as_float_array(r_p, "r_p"),
            _as_float_array(r_d, "r_d"),
            _as_float_array(r_n, "r_n"),
        ]
    )
    m = stacked.min(axis=0)
    s = np.exp(-(stacked - m) / tau).sum(axis=0)
    out = m - tau * np.log(s)
    return float(out) if scalar else out


def hard_min(r_p, r_d, r_n):
    """Hard minimum of the three running variables."""
    scalar = np.ndim(r_p) == 0 and np.ndim(r_d) == 0 and np.ndim(r_n) == 0
    stacked = np.stack(
        [
            _as_float_array(r_p, "r_p"),
            _as_float_array(r_d, "r_d"),
            _as_float_array(r_n, "r_n"),
        ]
    )
    out = stacked.min(axis=0)
    return float(out) if scalar else out


def local_filter(population, density, nonag_share, cfg: DesignConfig | None = None):
    """Joint band membership around all three cutoffs (raw levels)."""
    cfg = cfg or DesignConfig()
    scalar = (
        np.ndim(population) == 0 and np.ndim(density) == 0 and np.ndim(nonag_share) == 0
    )
    pop = _as_float_array(population, "population")
    den = _as_float_array(density, "density")
    non = _as_float_array(nonag_share, "nonag_share")
    mask = (
        (np.abs(pop - cfg.population_cutoff) <= cfg.population_band)
        & (np.abs(den - cfg.density_cutoff) <= cfg.density_band)
        & (np.abs(non - cfg.nonag_cutoff) <= cfg.nonag_band)
    )
    return bool(mask) if scalar else mask


@dataclass(frozen=True)
class DesignedRow:
    """Design quantities for a single settlement."""

    settlement_id: str
    r_p: float
    r_d: float
    r_n: float
    z_p: int
    z_d: int
    z_n: int
    z: int
    frontier: float
    in_local_sample: bool


def _design_arrays(frame: pd.DataFrame, cfg: DesignConfig) -> pd.DataFrame:
    pop = np.asarray(frame["population_2001"], dtype=float)
    den = np.asarray(frame["density_2001"], dtype=float)
    non = np.asarray(frame["nonag_male_share_2001"], dtype=float)
    r_p = pop / cfg.population_cutoff - 1.0
    r_d = den / cfg.density_cutoff - 1.0
    r_n = non / cfg.nonag_cutoff - 1.0
    if cfg.inclusive:
        z_p, z_d, z_n = r_p >= 0, r_d >= 0, r_n >= 0
    else:
        z_p, z_d, z_n = r_p > 0, r_d > 0, r_n > 0
    if cfg.frontier_mode == "softmin":
        frontier = frontier_distance(r_p, r_d, r_n, cfg.tau)
    else:
        frontier = hard_min(r_p, r_d, r_n)
    local = (
        (np.abs(pop - cfg.population_cutoff) <= cfg.population_band)
        & (np.abs(den - cfg.density_cutoff) <= cfg.density_band)
        & (np.abs(non - cfg.nonag_cutoff) <= cfg.nonag_band)
    )
    return pd.DataFrame(
        {
            "r_p": r_p,
            "r_d": r_d,
            "r_n": r_n,
            "z_p": z_p.astype(np.int64),
            "z_d": z_d.astype(np.int64),
            "z_n": z_n.astype(np.int64),
            "z": (z_p & z_d & z_n).astype(np.int64),
            "frontier": frontier,
            "in_local_sample": local,
        },
        index=frame.index,
    )


def build_design(data, cfg: DesignConfig | None = None) -> pd.DataFrame:
    """Design table for a dataset, sorted by settlement id.

    ``data`` is a :class:`~frontier_rd.data.Dataset` or a frame holding the
    source columns (and optionally ``settlement_id``). Rows with non-finite
    source values are dropped and listed in ``result.attrs["exclusions"]``
    as ``(settlement_id, reason)`` pairs; validated datasets never hit this.

    Returns a frame with ``settlement_id`` followed by
    :data:`DESIGN_COLUMNS`.
    """
    cfg = cfg or DesignConfig()
    frame = data.frame if hasattr(data, "frame") else data
    missing = [c for c in SOURCE_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError("design input missing columns: " + ", ".join(missing))
    if "settlement_id" in frame.columns:
        ids = frame["settlement_id"].astype(str)
    else:
        ids = frame.index.astype(str)
    finite = np.ones(len(frame), dtype=bool)
    exclusions = []
    for col in SOURCE_COLUMNS:
        ok = np.isfinite(np.asarray(frame[col], dtype=float))
        for sid in ids[~ok & finite]:
            exclusions.append((sid, f"non-finite value: {col}"))
        finite &= ok
    body = frame.loc[finite]
    design = _design_arrays(body, cfg)
    design.insert(0, "settlement_id", ids[finite].to_numpy())
    design = design.sort_values("settlement_id", kind="mergesort").reset_index(drop=True)
    design.attrs["exclusions"] = exclusions
    return design


def design_rows(design: pd.DataFrame) -> list[DesignedRow]:
    """Materialize a design frame as row records (small data only)."""
    return [
        DesignedRow(
            settlement_id=str(t.settlement_id),
            r_p=float(t.r_p),
            r_d=float(t.r_d),
            r_n=float(t.r_n),
            z_p=int(t.z_p),
            z_d=int(t.z_d),
            z_n=int(t.z_n),
            z=int(t.z),
            frontier=float(t.frontier),
            in_local_sample=bool(t.in_local_sample),
        )
        for t in design.itertuples(index=False)
    ]


def write_design_csv(design: pd.DataFrame, path) -> None:
    """Write the nine design columns (no id column) as CSV, 0/1 indicators."""
    out = design.loc[:, list(DESIGN_COLUMNS)].copy()
    out["in_local_sample"] = out["in_local_sample"].astype(np.int64)
    out.to_csv(path, index=False, lineterminator="\n")


class FrontierDesign(TransformerMixin, BaseEstimator):
    """Transformer mapping raw criterion levels to design columns.

    Stateless apart from column validation; ``fit`` records the input
    columns and ``transform`` returns the design frame aligned with the
    input rows (no sorting). Parameters mirror :class:`DesignConfig`.

    Examples
    --------
    >>> import pandas as pd
    >>> X = pd.DataFrame({"population_2001": [5200.0], "density_2001": [410.0],
    ...                   "nonag_male_share_2001": [0.78]})
    >>> FrontierDesign().fit_transform(X)["z"].item()
    1
    """

    def __init__(
        self,
        population_cutoff: float = 5000.0,
        density_cutoff: float = 400.0,
        nonag_cutoff: float = 0.75,
        population_band: float = 5000.0,
        density_band: float = 400.0,
        nonag_band: float = 0.2,
        tau: float = 0.05,
        inclusive: bool = True,
        frontier_mode: str = "softmin",
    ):
        self.population_cutoff = population_cutoff
        self.density_cutoff = density_cutoff
        self.nonag_cutoff = nonag_cutoff
        self.population_band = population_band
        self.density_band = density_band
        self.nonag_band = nonag_band
        self.tau = tau
        self.inclusive = inclusive
        self.frontier_mode = frontier_mode

    def config(self) -> DesignConfig:
        """Validated :class:`DesignConfig` from the current parameters."""
        return DesignConfig(**self.get_params())

    def fit(self, X, y=None):
        frame = X.frame if hasattr(X, "frame") else X
        if not isinstance(frame, pd.DataFrame):
            raise InputError("FrontierDesign expects a pandas DataFrame")
        missing = [c for c in SOURCE_COLUMNS if c not in frame.columns]
        if missing:
            raise InputError("design input missing columns: " + ", ".join(missing))
        self.config_ = self.config()
        self.feature_names_in_ = np.asarray(frame.columns, dtype=object)
        self.n_features_in_ = frame.shape[1]
        return self

    def transform(self, X) -> pd.DataFrame:
        if not hasattr(self, "config_"):
            raise InputError("FrontierDesign is not fitted; call fit first")
        frame = X.frame if hasattr(X, "frame") else X
        missing = [c for c in SOURCE_COLUMNS if c not in frame.columns]
        if missing:
            raise InputError("design input missing columns: " + ", ".join(missing))
        for col in SOURCE_COLUMNS:
            if not np.all(np.isfinite(np.asarray(frame[col], dtype=float))):
                raise InputError(f"non-finite value in {col}")
        return _design_arrays(frame, self.config_)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(DESIGN_COLUMNS, dtype=object)


def analysis_frame(data, cfg: DesignConfig | None = None, degree: int = 1) -> pd.DataFrame:
    """Dataset columns plus design columns plus running-variable powers.

    Row order follows the dataset. ``degree`` >= 2 appends ``r_p2``,
    ``r_p3``, ... for each running variable, for polynomial controls.
    """
    if degree < 1:
        raise ConfigError(f"degree must be >= 1, got {degree}")
    cfg = cfg or DesignConfig()
    frame = data.frame if hasattr(data, "frame") else data
    design = _design_arrays(frame, cfg)
    out = pd.concat([frame.reset_index(drop=True), design.reset_index(drop=True)], axis=1)
    for power in range(2, degree + 1):
        for base in ("r_p", "r_d", "r_n"):
            out[f"{base}{power}"] = out[base] ** power
    return out


def default_controls(degree: int = 1) -> tuple[str, ...]:
    """Running variables (with powers) plus baseline composition controls."""
    names = ["r_p", "r_d", "r_n"]
    for power in range(2, degree + 1):
        names += [f"r_p{power}", f"r_d{power}", f"r_n{power}"]
    names += ["literacy_rate_2001", "sc_share_2001", "st_share_2001"]
    return tuple(names)
