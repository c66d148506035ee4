"""Plain-text rendering of results for terminal reports."""

from __future__ import annotations

import pandas as pd

from . import reference
from .diagnostics import (
    BalanceRow,
    DensityTestResult,
    ExclusionCheckResult,
    FirstStageDiagnostics,
)
from .dgp import ReplicationResult
from .estimators import FitResult

RULE = "-" * 72


def render_fit(fit: FitResult, title: str) -> str:
    lines = [title, RULE, fit.summary(), RULE]
    return "\n".join(lines)


def render_first_stage(diag: FirstStageDiagnostics) -> str:
    bench = reference.WEAK_IV_BENCHMARKS
    verdict = "strong" if diag.f_stat >= bench["ten_percent_bias"] else (
        "moderate" if diag.f_stat >= bench["twenty_five_percent_bias"] else "weak"
    )
    sample = "local frontier sample" if diag.local else "full sample"
    lines = [
        f"first stage ({sample})",
        RULE,
        f"eligibility coefficient      {diag.coef:>10.4f}  (se {diag.se:.4f})",
        f"first-stage F (t squared)    {diag.f_stat:>10.2f}",
        f"partial R2 of instrument     {diag.partial_r2:>10.4f}",
        f"adjusted R2                  {diag.adj_r2:>10.4f}",
        f"observations                 {diag.n_obs:>10d}",
        f"clusters                     {diag.n_clusters:>10d}",
        f"strength vs F benchmarks     {verdict:>10s}"
        f"  (10%: {bench['ten_percent_bias']}, 25%: {bench['twenty_five_percent_bias']})",
        RULE,
    ]
    return "\n".join(lines)


def render_density_tests(results: dict[str, DensityTestResult]) -> str:
    lines = [
        "running-variable density tests",
        RULE,
        f"{'variable':<22}{'log diff':>10}{'se':>9}{'t':>8}{'p':>8}{'bandwidth':>11}",
    ]
    for name, res in results.items():
        lines.append(
            f"{name:<22}{res.log_diff:>10.4f}{res.se:>9.4f}{res.statistic:>8.3f}"
            f"{res.pvalue:>8.4f}{res.bandwidth:>11.4f}"
        )
    lines.append(RULE)
    return "\n".join(lines)


def render_balance(rows: list[BalanceRow]) -> str:
    lines = [
        "covariate balance at the frontier",
        RULE,
        f"{'variable':<26}{'coef':>10}{'se':>9}{'t':>8}{'p':>8}{'n':>9}",
    ]
    for row in rows:
        lines.append(
            f"{row.variable:<26}{row.coef:>10.4f}{row.se:>9.4f}{row.statistic:>8.3f}"
            f"{row.pvalue:>8.4f}{row.n_obs:>9d}"
        )
    lines.append(RULE)
    return "\n".join(lines)


def render_exclusion(res: ExclusionCheckResult) -> str:
    lines = [
        f"exclusion check: {res.outcome}",
        RULE,
        f"instrumented effect          {res.late:>10.4f}  (se {res.late_se:.4f})",
        f"direct effect (untreated)    {res.direct:>10.4f}  (se {res.direct_se:.4f})",
        f"direct-effect t, p           {res.direct_statistic:>10.3f}  {res.direct_pvalue:.4f}",
        f"untreated / full sample      {res.n_untreated:>10d} / {res.n_full}",
        RULE,
    ]
    return "\n".join(lines)


def render_replication(res: ReplicationResult, reference_f: float | None = None) -> str:
    lines = [
        f"monte carlo: outcome {res.outcome}, truth {res.truth}",
        RULE,
        f"replications (failed)        {res.n_reps:>10d}  ({res.n_failed})",
        f"mean estimate                {res.mean_estimate:>10.4f}",
        f"bias                         {res.bias:>10.4f}",
        f"sd of estimates              {res.sd_estimate:>10.4f}",
        f"mean clustered se            {res.mean_se:>10.4f}",
        f"95% CI coverage              {res.coverage:>10.3f}",
        f"rejection rate at 5%         {res.rejection_rate:>10.3f}",
        f"mean first-stage F           {res.mean_f_stat:>10.2f}",
    ]
    if reference_f is not None:
        ratio = res.mean_f_stat / reference_f if reference_f else float("nan")
        lines.append(
            f"reference first-stage F      {reference_f:>10.2f}  (ratio {ratio:.2f})"
        )
    lines.append(RULE)
    return "\n".join(lines)


def render_counts_table(table: pd.DataFrame, title: str) -> str:
    return "\n".join([title, RULE, table.to_string(), RULE])


def render_provenance(prov) -> str:
    lines = [
        "ingestion summary",
        RULE,
        f"source                       {prov.source}",
        f"rows ingested                {prov.rows_ingested:>10d}",
        f"rows retained                {prov.rows_retained:>10d}",
        f"rows excluded                {prov.rows_excluded:>10d}",
        f"density mismatches           {prov.density_mismatches:>10d}",
        f"negative outcome cells       {prov.negative_outcome_cells:>10d}",
        RULE,
    ]
    return "\n".join(lines)
