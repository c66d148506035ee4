"""Command line interface.

Subcommands: ingest, design, estimate, diagnose, simulate, report. Every
run writes its primary payload as deterministic JSON (sorted keys, no
timestamps) plus a manifest with sha256 checksums of inputs and outputs, so
identical invocations produce byte-identical files.

Exit codes: 0 on success, 1 on numerical failure during estimation, 2 on
usage or configuration problems.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from . import reference
from .configio import read_kv, write_kv
from .data import (
    CANONICAL_COLUMNS,
    crosstab_thresholds,
    crosstab_treatment,
    ingest_csv,
    read_schema,
)
from .design import DesignConfig, analysis_frame, build_design, write_design_csv
from .dgp import DgpParams, replicate
from .diagnostics import (
    balance_table,
    base_spec,
    exclusion_check,
    first_stage,
    mccrary_test,
)
from .errors import ConfigError, NumericalError, UsageError
from .estimators import reduced_form_regression, tsls
from . import tables

try:
    from importlib.metadata import version as _pkg_version

    VERSION = _pkg_version("frontier-rd")
except Exception:  # pragma: no cover - metadata missing in odd installs
    VERSION = "0.0.0"

ENV_THREADS = "FRONTIER_RD_THREADS"

FE_COLUMNS = {"district": "district_id", "state": "state_id"}


@dataclass(frozen=True)
class RunManifest:
    """Checksummed record of one CLI run."""

    command: str
    version: str
    seed: int | None
    threads: int
    output_format: str
    inputs: dict
    outputs: dict

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "threads": self.threads,
            "output_format": self.output_format,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_manifest(args, command: str, input_paths: list[str], output_names: list[str]) -> None:
    outputs = {
        name: sha256_file(os.path.join(args.out_dir, name)) for name in sorted(output_names)
    }
    inputs = {path: sha256_file(path) for path in sorted(set(input_paths))}
    manifest = RunManifest(
        command=command,
        version=VERSION,
        seed=args.seed,
        threads=_threads(args),
        output_format=args.output_format,
        inputs=inputs,
        outputs=outputs,
    )
    manifest.write(os.path.join(args.out_dir, f"{command}_manifest.json"))


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        return args.threads
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} is not an integer: {env!r}") from None
        if value < 1:
            raise ConfigError(f"{ENV_THREADS} must be at least 1")
        return value
    return 1


def _design_config(args) -> DesignConfig:
    cfg = DesignConfig.from_file(args.config) if args.config else DesignConfig()
    if args.tau is not None:
        cfg = DesignConfig(**{**asdict(cfg), "tau": args.tau})
    return cfg


def _load_dataset(args):
    return ingest_csv(args.csv, read_schema(args.schema))


def _ensure_out_dir(args) -> None:
    os.makedirs(args.out_dir, exist_ok=True)


def _identity_schema_lines(outcomes) -> dict[str, str]:
    pairs = {c: c for c in CANONICAL_COLUMNS if c != "density_2001"}
    for name in outcomes:
        pairs[f"outcome.{name}"] = name
    return pairs


def cmd_ingest(args) -> int:
    _ensure_out_dir(args)
    ds = _load_dataset(args)
    ds.to_csv(os.path.join(args.out_dir, "dataset.csv"))
    ds.write_exclusions(os.path.join(args.out_dir, "exclusions.csv"))
    write_kv(
        os.path.join(args.out_dir, "dataset_schema.cfg"),
        _identity_schema_lines(ds.outcome_names),
        header="identity schema for the canonical dataset",
    )
    thresholds = crosstab_thresholds(ds)
    treatment = crosstab_treatment(ds)
    payload = {
        "provenance": ds.provenance.to_dict(),
        "n": ds.n,
        "outcomes": list(ds.outcome_names),
        "crosstab_thresholds": {
            name: {
                f"statutory_{idx}": {
                    "below": int(tab.loc[idx, "below"]),
                    "at_or_above": int(tab.loc[idx, "at_or_above"]),
                }
                for idx in (0, 1)
            }
            for name, tab in thresholds.items()
        },
        "crosstab_treatment": treatment.to_dict(orient="records"),
    }
    write_json(os.path.join(args.out_dir, "ingest.json"), payload)
    outputs = ["dataset.csv", "exclusions.csv", "dataset_schema.cfg", "ingest.json"]
    _write_manifest(args, "ingest", [args.csv, args.schema], outputs)
    if args.output_format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(tables.render_provenance(ds.provenance))
        print(tables.render_counts_table(treatment, "census-town status by statutory status"))
    return 0


def cmd_design(args) -> int:
    _ensure_out_dir(args)
    ds = _load_dataset(args)
    cfg = _design_config(args)
    design = build_design(ds, cfg)
    write_design_csv(design, os.path.join(args.out_dir, "design.csv"))
    with_ids = design.copy()
    with_ids["in_local_sample"] = with_ids["in_local_sample"].astype(np.int64)
    with_ids.to_csv(os.path.join(args.out_dir, "design_ids.csv"), index=False, lineterminator="\n")
    payload = {
        "config": asdict(cfg),
        "n": int(len(design)),
        "n_eligible": int(design["z"].sum()),
        "n_local": int(design["in_local_sample"].sum()),
        "frontier_min": float(design["frontier"].min()),
        "frontier_median": float(design["frontier"].median()),
        "frontier_max": float(design["frontier"].max()),
        "excluded_rows": len(design.attrs.get("exclusions", [])),
    }
    write_json(os.path.join(args.out_dir, "design.json"), payload)
    _write_manifest(
        args,
        "design",
        [args.csv, args.schema] + ([args.config] if args.config else []),
        ["design.csv", "design_ids.csv", "design.json"],
    )
    if args.output_format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(
            f"designed {payload['n']} settlements: {payload['n_eligible']} eligible, "
            f"{payload['n_local']} in the local sample"
        )
    return 0


def cmd_estimate(args) -> int:
    _ensure_out_dir(args)
    ds = _load_dataset(args)
    cfg = _design_config(args)
    frame = analysis_frame(ds, cfg, degree=args.degree)
    spec = base_spec(
        args.outcome,
        degree=args.degree,
        fixed_effect=FE_COLUMNS[args.fe],
        cluster=FE_COLUMNS[args.cluster],
        local=args.local,
    )
    fs = first_stage(
        ds,
        cfg,
        local=args.local,
        degree=args.degree,
        fixed_effect=FE_COLUMNS[args.fe],
        cluster=FE_COLUMNS[args.cluster],
    )
    rf = reduced_form_regression(spec, frame)
    iv = tsls(spec, frame)
    wald = float(rf.coefficients[spec.instrument]) / fs.coef if fs.coef else float("nan")
    payload = {
        "outcome": args.outcome,
        "design": asdict(cfg),
        "local": args.local,
        "degree": args.degree,
        "fixed_effect": FE_COLUMNS[args.fe],
        "cluster": FE_COLUMNS[args.cluster],
        "first_stage": fs.to_dict(),
        "reduced_form": rf.to_dict(),
        "tsls": iv.to_dict(),
        "wald_ratio": wald,
    }
    write_json(os.path.join(args.out_dir, "estimate.json"), payload)
    if args.output_format == "csv":
        terms = pd.DataFrame(
            [
                {"term": term, **vals}
                for term, vals in payload["tsls"]["terms"].items()
            ]
        )
        terms.to_csv(os.path.join(args.out_dir, "estimate_terms.csv"), index=False, lineterminator="\n")
    _write_manifest(
        args,
        "estimate",
        [args.csv, args.schema] + ([args.config] if args.config else []),
        ["estimate.json"]
        + (["estimate_terms.csv"] if args.output_format == "csv" else []),
    )
    if args.output_format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(tables.render_first_stage(fs))
        print(tables.render_fit(rf, f"reduced form: {args.outcome} on eligibility"))
        print(tables.render_fit(iv, f"2SLS: {args.outcome} on treatment"))
    return 0


def cmd_diagnose(args) -> int:
    _ensure_out_dir(args)
    ds = _load_dataset(args)
    cfg = _design_config(args)
    frame = analysis_frame(ds, cfg, degree=1)
    sample = frame
    if args.local:
        sample = frame.loc[frame["in_local_sample"]]
    fs = first_stage(
        ds,
        cfg,
        local=args.local,
        fixed_effect=FE_COLUMNS[args.fe],
        cluster=FE_COLUMNS[args.cluster],
    )
    density = {}
    for name, col in (("population", "r_p"), ("density", "r_d"), ("nonag_male_share", "r_n")):
        density[name] = mccrary_test(
            sample[col].to_numpy(), cutoff=0.0, jackknife=args.jackknife
        )
    balance = balance_table(
        ds,
        cfg,
        local=args.local,
        fixed_effect=FE_COLUMNS[args.fe],
        cluster=FE_COLUMNS[args.cluster],
    )
    excl = None
    if args.outcome:
        excl = exclusion_check(
            ds,
            args.outcome,
            cfg,
            local=args.local,
            fixed_effect=FE_COLUMNS[args.fe],
            cluster=FE_COLUMNS[args.cluster],
        )
    payload = {
        "local": args.local,
        "first_stage": fs.to_dict(),
        "density_tests": {name: res.to_dict() for name, res in density.items()},
        "density_reference": reference.DENSITY_TESTS,
        "balance": [row.to_dict() for row in balance],
        "exclusion": excl.to_dict() if excl else None,
    }
    write_json(os.path.join(args.out_dir, "diagnose.json"), payload)
    outputs = ["diagnose.json"]
    if args.output_format == "csv":
        pd.DataFrame([row.to_dict() for row in balance]).to_csv(
            os.path.join(args.out_dir, "balance.csv"), index=False, lineterminator="\n"
        )
        pd.DataFrame(
            [{"variable": name, **res.to_dict()} for name, res in density.items()]
        ).to_csv(os.path.join(args.out_dir, "density_tests.csv"), index=False, lineterminator="\n")
        outputs += ["balance.csv", "density_tests.csv"]
    _write_manifest(
        args,
        "diagnose",
        [args.csv, args.schema] + ([args.config] if args.config else []),
        outputs,
    )
    if args.output_format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(tables.render_first_stage(fs))
        print(tables.render_density_tests(density))
        print(tables.render_balance(balance))
        if excl:
            print(tables.render_exclusion(excl))
    return 0


def cmd_simulate(args) -> int:
    _ensure_out_dir(args)
    if not args.config:
        raise ConfigError("simulate requires --config with generator parameters")
    kv = read_kv(args.config)
    reps = args.reps
    if reps is None and "reps" in kv:
        reps = int(kv.pop("reps"))
    elif "reps" in kv:
        kv.pop("reps")
    if reps is None:
        raise ConfigError("number of replications missing: pass --reps or a reps key")
    reference_f = None
    if "reference_first_stage_f" in kv:
        reference_f = float(kv.pop("reference_first_stage_f"))
    sim_outcome = kv.pop("outcome", None)
    params = DgpParams.from_mapping(kv)
    if args.seed is not None:
        params = DgpParams.from_mapping({**kv, "seed": str(args.seed)})
    outcome = args.outcome or sim_outcome
    result = replicate(
        params,
        reps,
        outcome=outcome,
        degree=args.degree,
        local=args.local,
        n_jobs=_threads(args),
    )
    payload = {
        "params": {
            **{k: v for k, v in asdict(params).items() if k not in ("late", "direct_effect")},
            "late": dict(params.late),
            "direct_effect": dict(params.direct_effect),
        },
        "reps": reps,
        "result": result.to_dict(),
        "weak_iv_benchmarks": reference.WEAK_IV_BENCHMARKS,
        "reference_first_stage_f": reference_f,
    }
    write_json(os.path.join(args.out_dir, "simulate.json"), payload)
    result.records.to_csv(
        os.path.join(args.out_dir, "simulate_records.csv"), index=False, lineterminator="\n"
    )
    _write_manifest(
        args, "simulate", [args.config], ["simulate.json", "simulate_records.csv"]
    )
    if args.output_format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(tables.render_replication(result, reference_f=reference_f))
    return 0


def cmd_report(args) -> int:
    _ensure_out_dir(args)
    sections = []
    for name in ("ingest.json", "design.json", "estimate.json", "diagnose.json", "simulate.json"):
        path = os.path.join(args.results, name)
        if not os.path.exists(path):
            continue
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        sections.append(f"== {name} ==")
        sections.append(json.dumps(payload, sort_keys=True, indent=2))
    if not sections:
        raise UsageError(f"no result files found under {args.results!r}")
    text = "\n".join(sections) + "\n"
    report_path = os.path.join(args.out_dir, "report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="config file (design or generator)")
    common.add_argument("--seed", type=int, default=None, help="override the generator seed")
    common.add_argument(
        "--threads", type=int, default=None, help=f"worker processes (env {ENV_THREADS})"
    )
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--local", action="store_true", help="restrict to the local frontier sample")
    common.add_argument("--fe", choices=sorted(FE_COLUMNS), default="district")
    common.add_argument("--cluster", choices=sorted(FE_COLUMNS), default="district")
    common.add_argument("--tau", type=float, default=None, help="soft-min temperature override")
    common.add_argument(
        "--format",
        dest="output_format",
        choices=["text", "json", "csv"],
        default="text",
    )

    parser = argparse.ArgumentParser(
        prog="frontier-rd",
        description="Multi-threshold fuzzy discontinuity estimation and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", parents=[common], help="validate a raw CSV into a dataset")
    p.add_argument("--csv", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("design", parents=[common], help="compute design columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("estimate", parents=[common], help="first stage, reduced form, 2SLS")
    p.add_argument("--csv", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--degree", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("diagnose", parents=[common], help="validity diagnostics")
    p.add_argument("--csv", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--outcome", default=None, help="outcome for the exclusion check")
    p.add_argument("--jackknife", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", parents=[common], help="monte carlo over the generator")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--outcome", default=None)
    p.add_argument("--degree", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="render stored results as text")
    p.add_argument("--results", required=True, help="directory holding result JSON files")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
