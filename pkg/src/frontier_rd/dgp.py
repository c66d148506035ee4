"""Synthetic settlement panels with known treatment effects.

The generator plants a fuzzy discontinuity: three running variables drawn
from heavy-tailed distributions, an eligibility indicator at their joint
cutoffs, a take-up probability that jumps by ``compliance_jump`` at
eligibility, and outcomes that are linear in the normalized running
variables plus a treatment effect. Because outcomes are linear in exactly
the controls the estimators use, the instrumented estimate is consistent
for the planted effect, which makes the generator usable as an oracle.

Selection into treatment can be made endogenous (``endogeneity`` couples
the take-up draw to the outcome noise), in which case plain OLS is biased
while 2SLS is not. ``density_jump_at_cutoff`` plants running-variable
manipulation by mirror-moving a share of just-ineligible settlements across
the population cutoff, producing a density ratio of the requested size.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import stats

from .configio import read_kv
from .data import Dataset, dataset_from_frame
from .design import DesignConfig, analysis_frame
from .diagnostics import base_spec
from .errors import ConfigError, NumericalError
from .estimators import first_stage_regression, tsls

_SCALAR_FIELDS = {
    "n_settlements": int,
    "n_districts": int,
    "n_states": int,
    "log_population_mean": float,
    "log_population_sd": float,
    "log_density_mean": float,
    "log_density_sd": float,
    "nonag_logit_mean": float,
    "nonag_logit_sd": float,
    "compliance_jump": float,
    "takeup_level": float,
    "takeup_slope": float,
    "takeup_center": float,
    "takeup_cluster_sd": float,
    "outcome_base": float,
    "outcome_slope_p": float,
    "outcome_slope_d": float,
    "outcome_slope_n": float,
    "outcome_noise_sd": float,
    "cluster_rho": float,
    "endogeneity": float,
    "density_jump_at_cutoff": float,
    "manipulation_window": float,
    "round_outcomes": bool,
    "seed": int,
}


@dataclass(frozen=True)
class DgpParams:
    """Parameters of the synthetic settlement generator.

    ``late`` maps outcome names to planted treatment effects;
    ``direct_effect`` maps outcome names to planted direct (exclusion
    violating) effects of eligibility itself. Outcomes named in either map
    are generated.
    """

    n_settlements: int = 5000
    n_districts: int = 100
    n_states: int = 10
    log_population_mean: float = 8.135
    log_population_sd: float = 0.4
    log_density_mean: float = 5.609
    log_density_sd: float = 0.4
    nonag_logit_mean: float = 0.335
    nonag_logit_sd: float = 0.8
    compliance_jump: float = 0.25
    takeup_level: float = 0.1
    takeup_slope: float = 2.0
    takeup_center: float = 0.0
    takeup_cluster_sd: float = 0.02
    late: Mapping[str, float] = field(default_factory=lambda: {"amenity_count": 2.0})
    direct_effect: Mapping[str, float] = field(default_factory=dict)
    outcome_base: float = 10.0
    outcome_slope_p: float = 1.0
    outcome_slope_d: float = 0.5
    outcome_slope_n: float = 0.5
    outcome_noise_sd: float = 1.0
    cluster_rho: float = 0.2
    endogeneity: float = 0.0
    density_jump_at_cutoff: float = 1.0
    manipulation_window: float = 0.25
    round_outcomes: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "late", dict(self.late))
        object.__setattr__(self, "direct_effect", dict(self.direct_effect))
        if self.n_settlements < 10:
            raise ConfigError("n_settlements must be at least 10")
        if self.n_districts < 2 or self.n_districts > self.n_settlements:
            raise ConfigError("n_districts must be in [2, n_settlements]")
        if self.n_states < 1 or self.n_states > self.n_districts:
            raise ConfigError("n_states must be in [1, n_districts]")
        for name in ("log_population_sd", "log_density_sd", "nonag_logit_sd"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.compliance_jump < 0:
            raise ConfigError("compliance_jump must be non-negative")
        if self.takeup_level < 0:
            raise ConfigError("takeup_level must be non-negative")
        if self.takeup_level + self.compliance_jump > 1.0:
            raise ConfigError(
                "infeasible take-up probability: takeup_level + compliance_jump > 1"
            )
        if self.takeup_cluster_sd < 0:
            raise ConfigError("takeup_cluster_sd must be non-negative")
        if self.outcome_noise_sd < 0:
            raise ConfigError("outcome_noise_sd must be non-negative")
        if not 0.0 <= self.cluster_rho < 1.0:
            raise ConfigError("cluster_rho must be in [0, 1)")
        if not -1.0 <= self.endogeneity <= 1.0:
            raise ConfigError("endogeneity must be in [-1, 1]")
        if self.density_jump_at_cutoff <= 0:
            raise ConfigError("density_jump_at_cutoff must be positive")
        if self.manipulation_window <= 0 or self.manipulation_window >= 1:
            raise ConfigError("manipulation_window must be in (0, 1)")
        if not self.late and not self.direct_effect:
            raise ConfigError("at least one outcome must be declared")
        for name in list(self.late) + list(self.direct_effect):
            if not name.isidentifier():
                raise ConfigError(f"invalid outcome name {name!r}")

    @classmethod
    def from_file(cls, path) -> "DgpParams":
        return cls.from_mapping(read_kv(path))

    @classmethod
    def from_mapping(cls, kv: Mapping[str, str]) -> "DgpParams":
        kwargs: dict = {}
        late: dict[str, float] = {}
        direct: dict[str, float] = {}
        for key, raw in kv.items():
            if key.startswith("late."):
                late[key[len("late."):]] = float(raw)
            elif key.startswith("direct_effect."):
                direct[key[len("direct_effect."):]] = float(raw)
            elif key in _SCALAR_FIELDS:
                kind = _SCALAR_FIELDS[key]
                if kind is bool:
                    kwargs[key] = raw.lower() in ("true", "1", "yes", "on")
                else:
                    try:
                        kwargs[key] = kind(raw)
                    except ValueError:
                        raise ConfigError(f"dgp key {key!r}: bad value {raw!r}") from None
            else:
                raise ConfigError(f"unknown dgp config key {key!r}")
        if late:
            kwargs["late"] = late
        if direct:
            kwargs["direct_effect"] = direct
        return cls(**kwargs)

    def outcome_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.late) | set(self.direct_effect)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def generate(params: DgpParams) -> Dataset:
    """Draw one synthetic settlement panel.

    Deterministic given ``params`` (including the seed): the same inputs
    produce a byte-identical serialized dataset.
    """
    rng = np.random.default_rng(params.seed)
    n = params.n_settlements
    cfg = DesignConfig()

    district_idx = rng.integers(0, params.n_districts, size=n)
    state_idx = district_idx % params.n_states

    population = np.exp(rng.normal(params.log_population_mean, params.log_population_sd, n))
    density = np.exp(rng.normal(params.log_density_mean, params.log_density_sd, n))
    nonag = _sigmoid(rng.normal(params.nonag_logit_mean, params.nonag_logit_sd, n))

    literacy = rng.beta(5.5, 4.5, n)
    main_worker = rng.beta(3.5, 6.5, n)
    sc_share = rng.beta(2.0, 10.0, n)
    st_share = rng.beta(1.2, 12.0, n)

    # Manipulation: mirror-move a share of settlements across the population
    # cutoff so the density ratio just right of it equals the requested jump.
    jump = params.density_jump_at_cutoff
    if jump != 1.0:
        w = params.manipulation_window
        r_p0 = population / cfg.population_cutoff - 1.0
        if jump > 1.0:
            window = (r_p0 > -w) & (r_p0 < 0)
            q = (jump - 1.0) / (jump + 1.0)
        else:
            window = (r_p0 >= 0) & (r_p0 < w)
            q = (1.0 - jump) / (1.0 + jump)
        move = window & (rng.random(n) < q)
        new_r = -r_p0[move]
        new_pop = cfg.population_cutoff * (1.0 + new_r)
        # keep density fixed for moved rows so only one margin shifts
        population = population.copy()
        population[move] = new_pop
    area = population / density

    r_p = population / cfg.population_cutoff - 1.0
    r_d = density / cfg.density_cutoff - 1.0
    r_n = nonag / cfg.nonag_cutoff - 1.0
    z = ((r_p >= 0) & (r_d >= 0) & (r_n >= 0)).astype(np.int64)
    frontier_hard = np.minimum(np.minimum(r_p, r_d), r_n)

    takeup_effect = rng.normal(0.0, params.takeup_cluster_sd, params.n_districts)
    base = params.takeup_level * _sigmoid(
        params.takeup_slope * (frontier_hard - params.takeup_center)
    )
    prob = np.clip(base + params.compliance_jump * z + takeup_effect[district_idx], 0.0, 1.0)
    u_latent = rng.random(n)
    treated = (u_latent < prob).astype(np.int64)

    frame = pd.DataFrame(
        {
            "settlement_id": [f"V{i:07d}" for i in range(n)],
            "state_id": [f"ST{s:03d}" for s in state_idx],
            "district_id": [f"D{d:05d}" for d in district_idx],
            "population_2001": population,
            "area_2001": area,
            "density_2001": density,
            "nonag_male_share_2001": nonag,
            "literacy_rate_2001": literacy,
            "main_worker_rate_2001": main_worker,
            "sc_share_2001": sc_share,
            "st_share_2001": st_share,
            "ct_2001": z,
            "statutory_2011": treated,
        }
    )

    smooth = (
        params.outcome_base
        + params.outcome_slope_p * r_p
        + params.outcome_slope_d * r_d
        + params.outcome_slope_n * r_n
    )
    # Endogeneity: settlements with low take-up draws (the ones most likely
    # to convert) get correlated outcome noise, biasing naive OLS.
    w_endog = -stats.norm.ppf(np.clip(u_latent, 1e-12, 1 - 1e-12))
    district_noise = rng.normal(0.0, 1.0, params.n_districts)
    rho = params.cluster_rho
    outcome_names = params.outcome_names()
    for name in outcome_names:
        eta = rng.normal(0.0, 1.0, n)
        eps = params.endogeneity * w_endog + math.sqrt(1.0 - params.endogeneity**2) * eta
        noise = params.outcome_noise_sd * (
            math.sqrt(rho) * district_noise[district_idx] + math.sqrt(1.0 - rho) * eps
        )
        y = (
            smooth
            + params.late.get(name, 0.0) * treated
            + params.direct_effect.get(name, 0.0) * z
            + noise
        )
        if params.round_outcomes:
            y = np.maximum(np.round(y), 0.0)
        frame[name] = y

    return dataset_from_frame(
        frame, outcome_names=outcome_names, source=f"synthetic(seed={params.seed})"
    )


@dataclass(frozen=True)
class ReplicationResult:
    """Monte Carlo summary across replications of one DGP."""

    outcome: str
    truth: float
    n_reps: int
    n_failed: int
    records: pd.DataFrame
    mean_estimate: float
    bias: float
    sd_estimate: float
    mean_se: float
    coverage: float
    rejection_rate: float
    mean_f_stat: float

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "truth": self.truth,
            "n_reps": self.n_reps,
            "n_failed": self.n_failed,
            "mean_estimate": self.mean_estimate,
            "bias": self.bias,
            "sd_estimate": self.sd_estimate,
            "mean_se": self.mean_se,
            "coverage": self.coverage,
            "rejection_rate": self.rejection_rate,
            "mean_f_stat": self.mean_f_stat,
        }


def _replicate_one(args) -> tuple[int, dict | None]:
    params, rep, outcome, degree, local = args
    rep_params = replace(params, seed=params.seed + rep)
    data = generate(rep_params)
    cfg = DesignConfig()
    frame = analysis_frame(data, cfg, degree=degree)
    spec = base_spec(outcome, degree=degree, local=local)
    try:
        fit = tsls(spec, frame)
        fs = first_stage_regression(spec, frame)
    except NumericalError:
        return rep, None
    term = spec.endogenous
    lo, hi = fit.conf_int(term)
    fs_t = fs.coefficients[spec.instrument] / fs.se[spec.instrument]
    return rep, {
        "rep": rep,
        "estimate": float(fit.coefficients[term]),
        "se": float(fit.se[term]),
        "ci_low": lo,
        "ci_high": hi,
        "pvalue": fit.pvalue(term),
        "f_stat": float(fs_t * fs_t),
        "n_obs": fit.n_obs,
    }


def replicate(
    params: DgpParams,
    n_reps: int,
    outcome: str | None = None,
    degree: int = 1,
    local: bool = False,
    n_jobs: int = 1,
) -> ReplicationResult:
    """Re-estimate the planted effect across independent replications.

    Replication ``i`` reseeds the generator with ``params.seed + i``, so
    results do not depend on ``n_jobs`` or scheduling. Replications whose
    estimation degenerates numerically are counted in ``n_failed`` and
    excluded from the summary.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    if outcome is None:
        outcome = params.outcome_names()[0]
    if outcome not in params.outcome_names():
        raise ConfigError(f"unknown outcome {outcome!r}")
    truth = float(params.late.get(outcome, 0.0))

    jobs = [(params, rep, outcome, degree, local) for rep in range(n_reps)]
    results: list[tuple[int, dict | None]] = []
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_replicate_one, jobs, chunksize=8))
    else:
        results = [_replicate_one(job) for job in jobs]
    results.sort(key=lambda t: t[0])

    rows = [r for _, r in results if r is not None]
    n_failed = n_reps - len(rows)
    if not rows:
        raise NumericalError("every replication failed")
    records = pd.DataFrame(rows)
    est = records["estimate"].to_numpy()
    covered = (records["ci_low"].to_numpy() <= truth) & (truth <= records["ci_high"].to_numpy())
    return ReplicationResult(
        outcome=outcome,
        truth=truth,
        n_reps=n_reps,
        n_failed=n_failed,
        records=records,
        mean_estimate=float(est.mean()),
        bias=float(est.mean() - truth),
        sd_estimate=float(est.std(ddof=1)) if len(est) > 1 else 0.0,
        mean_se=float(records["se"].mean()),
        coverage=float(covered.mean()),
        rejection_rate=float((records["pvalue"].to_numpy() < 0.05).mean()),
        mean_f_stat=float(records["f_stat"].mean()),
    )
