"""Settlement-level census data: schema mapping, ingestion, and crosstabs.

A dataset is a validated table of settlements with one row per settlement id.
Ingestion maps raw CSV columns onto canonical fields through a plain key-value
schema sidecar, derives density from population and area, validates every row,
and records rejected rows in an exclusion log instead of aborting.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from .configio import read_kv
from .errors import DuplicateIdError, InputError, ParseError, SchemaError

ID_FIELDS = ("settlement_id", "state_id", "district_id")

NUMERIC_FIELDS = (
    "population_2001",
    "area_2001",
    "literacy_rate_2001",
    "main_worker_rate_2001",
    "sc_share_2001",
    "st_share_2001",
)

SHARE_FIELDS = (
    "nonag_male_share_2001",
    "literacy_rate_2001",
    "main_worker_rate_2001",
    "sc_share_2001",
    "st_share_2001",
)

INDICATOR_FIELDS = ("ct_2001", "statutory_2011")

# Either nonag_male_share_2001 directly, or both worker-count components.
NONAG_COMPONENT_FIELDS = ("male_main_workers_2001", "nonag_male_main_workers_2001")

OPTIONAL_FIELDS = ("density_2001",) + NONAG_COMPONENT_FIELDS + ("nonag_male_share_2001",)

MANDATORY_FIELDS = ID_FIELDS + NUMERIC_FIELDS + INDICATOR_FIELDS

CANONICAL_COLUMNS = (
    "settlement_id",
    "state_id",
    "district_id",
    "population_2001",
    "area_2001",
    "density_2001",
    "nonag_male_share_2001",
    "literacy_rate_2001",
    "main_worker_rate_2001",
    "sc_share_2001",
    "st_share_2001",
    "ct_2001",
    "statutory_2011",
)

# Relative disagreement between a supplied density column and the derived
# population/area value above which the row is counted as a mismatch.
DENSITY_MISMATCH_TOL = 0.01


@dataclass(frozen=True)
class Settlement:
    """One validated settlement row."""

    settlement_id: str
    state_id: str
    district_id: str
    population_2001: float
    area_2001: float
    density_2001: float
    nonag_male_share_2001: float
    literacy_rate_2001: float
    main_worker_rate_2001: float
    sc_share_2001: float
    st_share_2001: float
    ct_2001: int
    statutory_2011: int
    outcomes: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Schema:
    """Mapping from canonical field names to raw CSV column names."""

    fields: Mapping[str, str]
    outcomes: Mapping[str, str]

    def __post_init__(self):
        missing = [f for f in MANDATORY_FIELDS if f not in self.fields]
        if missing:
            raise SchemaError("schema missing mandatory fields: " + ", ".join(missing))
        has_share = "nonag_male_share_2001" in self.fields
        has_parts = all(f in self.fields for f in NONAG_COMPONENT_FIELDS)
        if not has_share and not has_parts:
            raise SchemaError(
                "schema must map nonag_male_share_2001 or both of "
                + " and ".join(NONAG_COMPONENT_FIELDS)
            )
        unknown = [
            f
            for f in self.fields
            if f not in MANDATORY_FIELDS and f not in OPTIONAL_FIELDS
        ]
        if unknown:
            raise SchemaError("schema has unknown fields: " + ", ".join(unknown))
        for name in self.outcomes:
            if not re.fullmatch(r"[a-z][a-z0-9_]*", name):
                raise SchemaError(f"invalid outcome name {name!r}")


def read_schema(path) -> Schema:
    """Read a schema sidecar (``canonical_field = csv_column`` lines).

    Outcome columns are declared as ``outcome.<name> = csv_column``.
    """
    kv = read_kv(path)
    fields: dict[str, str] = {}
    outcomes: dict[str, str] = {}
    for key, value in kv.items():
        if not value:
            raise SchemaError(f"schema key {key!r} has an empty column name")
        if key.startswith("outcome."):
            outcomes[key[len("outcome."):]] = value
        else:
            fields[key] = value
    return Schema(fields=fields, outcomes=outcomes)


@dataclass(frozen=True)
class Provenance:
    """Ingestion accounting attached to a dataset."""

    source: str
    rows_ingested: int
    rows_retained: int
    rows_excluded: int
    density_mismatches: int = 0
    negative_outcome_cells: int = 0

    def __post_init__(self):
        if self.rows_retained + self.rows_excluded != self.rows_ingested:
            raise InputError("provenance accounting does not balance")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "rows_ingested": self.rows_ingested,
            "rows_retained": self.rows_retained,
            "rows_excluded": self.rows_excluded,
            "density_mismatches": self.density_mismatches,
            "negative_outcome_cells": self.negative_outcome_cells,
        }


class Dataset:
    """Validated settlement table plus outcome columns and provenance.

    The underlying frame uses the canonical column order, one row per
    settlement id, in the order rows appeared in the source. Treat it as
    read-only; methods never mutate it.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        outcome_names: Sequence[str] = (),
        provenance: Provenance | None = None,
        exclusion_log: Sequence[tuple[str, str]] = (),
    ):
        missing = [c for c in CANONICAL_COLUMNS if c not in frame.columns]
        if missing:
            raise InputError("dataset frame missing columns: " + ", ".join(missing))
        for name in outcome_names:
            if name not in frame.columns:
                raise InputError(f"dataset frame missing outcome column {name!r}")
        ids = frame["settlement_id"]
        if ids.duplicated().any():
            dup = ids[ids.duplicated()].iloc[0]
            raise DuplicateIdError(f"duplicate settlement_id {dup!r}")
        ordered = list(CANONICAL_COLUMNS) + [
            n for n in outcome_names if n not in CANONICAL_COLUMNS
        ]
        self._frame = frame.loc[:, ordered].reset_index(drop=True)
        self._outcome_names = tuple(outcome_names)
        self._provenance = provenance or Provenance(
            source="memory",
            rows_ingested=len(self._frame),
            rows_retained=len(self._frame),
            rows_excluded=0,
        )
        self._exclusion_log = tuple(exclusion_log)

    @property
    def frame(self) -> pd.DataFrame:
        return self._frame

    @property
    def outcome_names(self) -> tuple[str, ...]:
        return self._outcome_names

    @property
    def provenance(self) -> Provenance:
        return self._provenance

    @property
    def exclusion_log(self) -> tuple[tuple[str, str], ...]:
        return self._exclusion_log

    @property
    def n(self) -> int:
        return len(self._frame)

    def __len__(self) -> int:
        return len(self._frame)

    def settlements(self) -> Iterator[Settlement]:
        """Yield rows as :class:`Settlement` records (small data only)."""
        cols = list(CANONICAL_COLUMNS)
        for row in self._frame.itertuples(index=False):
            d = dict(zip(self._frame.columns, row))
            yield Settlement(
                **{c: d[c] for c in cols},
                outcomes={n: d[n] for n in self._outcome_names},
            )

    def to_csv(self, path_or_buf) -> None:
        """Serialize the canonical frame deterministically."""
        self._frame.to_csv(path_or_buf, index=False, lineterminator="\n")

    def write_exclusions(self, path_or_buf) -> None:
        """Write the exclusion log as a two-column CSV."""
        log = pd.DataFrame(self._exclusion_log, columns=["settlement_id", "reason"])
        log.to_csv(path_or_buf, index=False, lineterminator="\n")


def _coerce_numeric(raw: pd.Series, label: str, problems: pd.Series) -> pd.Series:
    """Parse strings to floats; record missing/invalid reasons in *problems*."""
    stripped = raw.fillna("").str.strip()
    empty = stripped == ""
    values = pd.to_numeric(stripped, errors="coerce")
    bad = values.isna() & ~empty
    _note(problems, empty, f"missing value: {label}")
    _note(problems, bad, f"invalid value: {label}")
    return values


def _note(problems: pd.Series, mask: pd.Series | np.ndarray, reason: str) -> None:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return
    has = problems.notna() & mask
    fresh = problems.isna() & mask
    problems.loc[has] = problems.loc[has] + "; " + reason
    problems.loc[fresh] = reason


def ingest_csv(path, schema: Schema | str) -> Dataset:
    """Ingest a raw CSV via a schema mapping into a validated :class:`Dataset`.

    Rows that fail validation are dropped and recorded in the exclusion log
    with a reason per failed check. Density is derived as population over
    area; when the schema also maps a ``density_2001`` column, rows whose
    supplied value disagrees with the derived one by more than
    ``DENSITY_MISMATCH_TOL`` (relative) are counted in provenance but kept
    with the derived value. Negative outcome cells are set to missing and
    counted, not excluded.

    Parameters
    ----------
    path : str or file-like
        CSV with a header row.
    schema : Schema or str
        Parsed schema or path to the sidecar file.

    Returns
    -------
    Dataset

    Raises
    ------
    SchemaError
        Header lacks a mapped column.
    ParseError
        CSV cannot be tokenized (carries the offending line number).
    DuplicateIdError
        Two rows share a settlement id.
    """
    if not isinstance(schema, Schema):
        schema = read_schema(schema)
    source = path if isinstance(path, str) else "buffer"
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[""])
    except pd.errors.ParserError as exc:
        msg = str(exc)
        m = re.search(r"line (\d+)", msg)
        raise ParseError(msg, line=int(m.group(1)) if m else None) from exc

    mapped = {**schema.fields, **{f"outcome:{n}": c for n, c in schema.outcomes.items()}}
    absent = sorted(c for c in mapped.values() if c not in raw.columns)
    if absent:
        raise SchemaError("CSV header missing mapped columns: " + ", ".join(absent))

    n_rows = len(raw)
    problems = pd.Series(pd.NA, index=raw.index, dtype="string")

    out = pd.DataFrame(index=raw.index)
    for fld in ID_FIELDS:
        col = raw[schema.fields[fld]].fillna("").str.strip()
        _note(problems, col == "", f"missing value: {fld}")
        out[fld] = col
    ids = out["settlement_id"]
    dup_mask = ids.duplicated(keep=False) & (ids != "")
    if dup_mask.any():
        raise DuplicateIdError(f"duplicate settlement_id {ids[dup_mask].iloc[0]!r}")

    for fld in NUMERIC_FIELDS:
        out[fld] = _coerce_numeric(raw[schema.fields[fld]], fld, problems)

    _note(problems, out["population_2001"] <= 0, "non-positive population")
    _note(problems, out["area_2001"] <= 0, "density undefined: non-positive area")
    with np.errstate(divide="ignore", invalid="ignore"):
        out["density_2001"] = out["population_2001"] / out["area_2001"]
    out.loc[out["area_2001"] <= 0, "density_2001"] = np.nan

    density_mismatches = 0
    if "density_2001" in schema.fields:
        given = _coerce_numeric(
            raw[schema.fields["density_2001"]], "density_2001", pd.Series(pd.NA, index=raw.index, dtype="string")
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(given - out["density_2001"]) / out["density_2001"]
        density_mismatches = int((rel > DENSITY_MISMATCH_TOL).sum())

    if "nonag_male_share_2001" in schema.fields:
        out["nonag_male_share_2001"] = _coerce_numeric(
            raw[schema.fields["nonag_male_share_2001"]], "nonag_male_share_2001", problems
        )
    else:
        total = _coerce_numeric(
            raw[schema.fields["male_main_workers_2001"]], "male_main_workers_2001", problems
        )
        nonag = _coerce_numeric(
            raw[schema.fields["nonag_male_main_workers_2001"]],
            "nonag_male_main_workers_2001",
            problems,
        )
        _note(problems, total <= 0, "non-ag share undefined: no male main workers")
        _note(problems, (nonag < 0) | (nonag > total), "invalid value: nonag_male_main_workers_2001")
        with np.errstate(divide="ignore", invalid="ignore"):
            out["nonag_male_share_2001"] = nonag / total
        out.loc[total <= 0, "nonag_male_share_2001"] = np.nan

    for fld in SHARE_FIELDS:
        vals = out[fld]
        _note(problems, (vals < 0) | (vals > 1), f"share out of range: {fld}")

    for fld in INDICATOR_FIELDS:
        vals = _coerce_numeric(raw[schema.fields[fld]], fld, problems)
        _note(problems, vals.notna() & ~vals.isin([0, 1]), f"invalid indicator: {fld}")
        out[fld] = vals

    negative_outcome_cells = 0
    for name, col in schema.outcomes.items():
        vals = _coerce_numeric(raw[col], f"outcome {name}", problems)
        neg = vals < 0
        negative_outcome_cells += int(neg.sum())
        vals = vals.mask(neg)
        out[name] = vals

    bad = problems.notna()
    exclusion_log = list(
        zip(out.loc[bad, "settlement_id"].astype(str), problems[bad].astype(str))
    )
    kept = out.loc[~bad].reset_index(drop=True)
    for fld in INDICATOR_FIELDS:
        kept[fld] = kept[fld].astype(np.int64)

    provenance = Provenance(
        source=source,
        rows_ingested=n_rows,
        rows_retained=len(kept),
        rows_excluded=int(bad.sum()),
        density_mismatches=density_mismatches,
        negative_outcome_cells=negative_outcome_cells,
    )
    return Dataset(
        kept,
        outcome_names=tuple(schema.outcomes),
        provenance=provenance,
        exclusion_log=exclusion_log,
    )


def crosstab_thresholds(
    d: Dataset,
    cutoffs: tuple[float, float, float] = (5000.0, 400.0, 0.75),
    inclusive: bool = True,
) -> dict[str, pd.DataFrame]:
    """Counts of settlements by 2011 statutory status against each criterion.

    Returns one 2x2 count table per running variable plus an ``all_criteria``
    table for the conjunction. Rows are statutory status (0/1), columns are
    ``below`` and ``at_or_above``.
    """
    frame = d.frame
    pop, den, non = (np.asarray(frame[c], dtype=float) for c in (
        "population_2001", "density_2001", "nonag_male_share_2001"))
    if inclusive:
        marks = {
            "population": pop >= cutoffs[0],
            "density": den >= cutoffs[1],
            "nonag_male_share": non >= cutoffs[2],
        }
    else:
        marks = {
            "population": pop > cutoffs[0],
            "density": den > cutoffs[1],
            "nonag_male_share": non > cutoffs[2],
        }
    marks["all_criteria"] = marks["population"] & marks["density"] & marks["nonag_male_share"]
    statutory = np.asarray(frame["statutory_2011"], dtype=int)
    out = {}
    for name, mask in marks.items():
        table = pd.DataFrame(
            {
                "below": [int(((statutory == s) & ~mask).sum()) for s in (0, 1)],
                "at_or_above": [int(((statutory == s) & mask).sum()) for s in (0, 1)],
            },
            index=pd.Index([0, 1], name="statutory_2011"),
        )
        out[name] = table
    return out


def crosstab_treatment(
    d: Dataset,
    sample: np.ndarray | Callable[[pd.DataFrame], np.ndarray] | None = None,
) -> pd.DataFrame:
    """2001 census-town status against 2011 statutory status.

    ``sample`` restricts the tabulation; it is either a boolean mask aligned
    with the dataset frame or a callable mapping the frame to one.
    """
    frame = d.frame
    if sample is None:
        mask = np.ones(len(frame), dtype=bool)
    elif callable(sample):
        mask = np.asarray(sample(frame), dtype=bool)
    else:
        mask = np.asarray(sample, dtype=bool)
    if mask.shape != (len(frame),):
        raise InputError("sample mask length does not match dataset")
    sub = frame.loc[mask]
    total = len(sub)
    rows = []
    for ct in (0, 1):
        for st in (0, 1):
            n = int(((sub["ct_2001"] == ct) & (sub["statutory_2011"] == st)).sum())
            rows.append(
                {
                    "ct_2001": ct,
                    "statutory_2011": st,
                    "n": n,
                    "share_pct": (100.0 * n / total) if total else 0.0,
                }
            )
    return pd.DataFrame(rows)


def dataset_from_frame(
    frame: pd.DataFrame,
    outcome_names: Sequence[str] = (),
    source: str = "memory",
) -> Dataset:
    """Wrap an already-canonical frame (used by the synthetic generator)."""
    prov = Provenance(
        source=source,
        rows_ingested=len(frame),
        rows_retained=len(frame),
        rows_excluded=0,
    )
    return Dataset(frame, outcome_names=outcome_names, provenance=prov)


def dataset_to_buffer(d: Dataset) -> bytes:
    """Canonical CSV bytes for determinism checks."""
    buf = io.StringIO()
    d.to_csv(buf)
    return buf.getvalue().encode("utf-8")
