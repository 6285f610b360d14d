"""CSV and JSON file formats.

Matched-pairs CSV (one row per matched minutia, header required, UTF-8,
'.'-decimal):

    finger_id,impression_id,minutia_id,x_ref,y_ref,x_query,y_query

Estimate CSV:

    finger_id,impression_id,gamma_hat,beta_hat,tau_hat,lambda_hat,n,iterations,final_F

Floats are written with shortest round-trip precision, so a save/load cycle
preserves every value exactly (well beyond the required 12 significant
digits).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .estimator import EstimateRow, EstimateTable, TAU_MEANINGLESS
from .patterns import Identifier, MatchedPair, MinutiaPattern, StudyDataset

STUDY_HEADER = [
    "finger_id",
    "impression_id",
    "minutia_id",
    "x_ref",
    "y_ref",
    "x_query",
    "y_query",
]

ESTIMATE_HEADER = [
    "finger_id",
    "impression_id",
    "gamma_hat",
    "beta_hat",
    "tau_hat",
    "lambda_hat",
    "n",
    "iterations",
    "final_F",
]


def _parse_id(text: str) -> Identifier:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return text


def _parse_float(text: str, column: str, line_number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError("column %s is not a number: %r" % (column, text), line_number)
    if not math.isfinite(value):
        raise ParseError("column %s must be finite, got %r" % (column, text), line_number)
    return value


def load_study(path, format: str = "csv") -> StudyDataset:
    """Read a matched-pairs CSV into a study dataset.

    Patterns are returned raw (not centered); centering is the estimator's
    first step.  Malformed rows raise :class:`ParseError` naming the line.
    """
    if format != "csv":
        raise ParseError("unsupported format %r" % (format,))
    path = Path(path)
    groups: dict[tuple, dict[int, tuple[complex, complex]]] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1)
        if [h.strip() for h in header] != STUDY_HEADER:
            raise ParseError(
                "expected header %s" % ",".join(STUDY_HEADER), 1
            )
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(STUDY_HEADER):
                raise ParseError(
                    "expected %d fields, got %d" % (len(STUDY_HEADER), len(row)),
                    line_number,
                )
            fid = _parse_id(row[0])
            iid = _parse_id(row[1])
            try:
                mid = int(row[2])
            except ValueError:
                raise ParseError("minutia_id is not an integer: %r" % row[2], line_number)
            xr = _parse_float(row[3], "x_ref", line_number)
            yr = _parse_float(row[4], "y_ref", line_number)
            xq = _parse_float(row[5], "x_query", line_number)
            yq = _parse_float(row[6], "y_query", line_number)
            minutiae = groups.setdefault((fid, iid), {})
            if mid in minutiae:
                raise ParseError(
                    "duplicate minutia_id %d for (%r, %r)" % (mid, fid, iid),
                    line_number,
                )
            minutiae[mid] = (complex(xr, yr), complex(xq, yq))
    pairs = []
    for (fid, iid), minutiae in groups.items():
        ordered = [minutiae[mid] for mid in sorted(minutiae)]
        template = MinutiaPattern(
            [z for z, _ in ordered], finger_id=fid, impression_id=iid
        )
        query = MinutiaPattern(
            [zp for _, zp in ordered], finger_id=fid, impression_id=iid
        )
        pairs.append(MatchedPair(template, query))
    return StudyDataset(tuple(pairs))


def save_study(dataset: StudyDataset, path) -> None:
    """Write a study dataset in the matched-pairs CSV schema."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(STUDY_HEADER)
        for pair in dataset:
            for j in range(pair.n):
                z = pair.template.points[j]
                zp = pair.query.points[j]
                writer.writerow(
                    [
                        pair.finger_id,
                        pair.impression_id,
                        j + 1,
                        repr(float(z.real)),
                        repr(float(z.imag)),
                        repr(float(zp.real)),
                        repr(float(zp.imag)),
                    ]
                )


def save_estimates(table: EstimateTable, path) -> None:
    """Write an estimate table; an empty table produces a header-only file."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(ESTIMATE_HEADER)
        for row in table:
            writer.writerow(
                [
                    row.finger_id,
                    row.impression_id,
                    repr(float(row.gamma)),
                    repr(float(row.beta)),
                    repr(float(row.tau)),
                    repr(float(row.lam)),
                    row.n,
                    row.iterations,
                    repr(float(row.final_objective)),
                ]
            )


def load_estimates(path) -> EstimateTable:
    """Read an estimate CSV back into a table.

    Convergence flags are not part of the file schema; loaded rows are
    assumed converged and the gamma_meaningless diagnostic is recomputed
    from tau.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1)
        if [h.strip() for h in header] != ESTIMATE_HEADER:
            raise ParseError("expected header %s" % ",".join(ESTIMATE_HEADER), 1)
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ESTIMATE_HEADER):
                raise ParseError(
                    "expected %d fields, got %d" % (len(ESTIMATE_HEADER), len(row)),
                    line_number,
                )
            try:
                n = int(row[6])
                iterations = int(row[7])
            except ValueError:
                raise ParseError("n and iterations must be integers", line_number)
            tau = _parse_float(row[4], "tau_hat", line_number)
            rows.append(
                EstimateRow(
                    finger_id=_parse_id(row[0]),
                    impression_id=_parse_id(row[1]),
                    gamma=_parse_float(row[2], "gamma_hat", line_number),
                    beta=_parse_float(row[3], "beta_hat", line_number),
                    tau=tau,
                    lam=_parse_float(row[5], "lambda_hat", line_number),
                    n=n,
                    iterations=iterations,
                    final_objective=_parse_float(row[8], "final_F", line_number),
                    converged=True,
                    gamma_meaningless=tau < TAU_MEANINGLESS,
                )
            )
    return EstimateTable(rows=tuple(rows))


def write_rose_csv(bins, path) -> None:
    """Write rose-diagram bins as `bin_center,count` rows."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_center", "count"])
        for center, count in bins:
            writer.writerow([repr(float(center)), int(count)])


def five_number_summary(values) -> dict[str, float]:
    """min, quartiles (linear interpolation) and max of a sample."""
    values = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return {
        "min": float(values.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(values.max()),
    }


def write_boxplot_csv(series: dict, path) -> None:
    """Write five-number summaries, one row per named series."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["series", "min", "q1", "median", "q3", "max"])
        for name, values in series.items():
            summary = five_number_summary(values)
            writer.writerow(
                [
                    name,
                    repr(summary["min"]),
                    repr(summary["q1"]),
                    repr(summary["median"]),
                    repr(summary["q3"]),
                    repr(summary["max"]),
                ]
            )


def write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
