"""CGM time-series ingestion.

Parses per-subject glucose CSV files, clamps values to the device range,
deduplicates timestamps, partitions records into UTC calendar days, and
drops days whose data gaps exceed the quality rule. Every dropped record
is attributed in the ingest report; nothing is lost silently.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .quantiles import GLUCOSE_HI, GLUCOSE_LO

__all__ = [
    "SubjectSeries",
    "parse_series",
    "parse_labels",
    "parse_cohort",
    "filter_days",
    "ingest_cohort",
    "write_series_csv",
    "write_report_json",
]

SECONDS_PER_DAY = 86400
GAP_MODES = ("single", "cumulative")
# Deltas up to 1.5x the nominal interval are ordinary sampling jitter, not
# data loss; only longer deltas count toward a day's non-acquisition time.
GAP_TOLERANCE_FACTOR = 1.5


@dataclass(eq=False)
class SubjectSeries:
    """One subject's glucose records as parallel arrays.

    times are UTC epoch seconds, strictly increasing after parsing.
    retained_days is set by filter_days (0 before filtering).
    """

    subject_id: str
    times: np.ndarray
    values: np.ndarray
    nominal_interval_minutes: float = 5.0
    retained_days: int = 0

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be equally long 1-d arrays")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.any(~np.isfinite(self.values)):
            raise ValueError("glucose values must be finite")
        if not self.nominal_interval_minutes > 0:
            raise ValueError("nominal interval must be positive")

    @property
    def n_records(self) -> int:
        return int(self.times.size)


def _parse_timestamp(raw: str, path, line_no: int) -> int:
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(
            f"{path} line {line_no}: invalid timestamp {raw!r}"
        ) from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return int(stamp.timestamp())


def parse_series(path, nominal_interval_minutes: float = 5.0):
    """Parse a series CSV into per-subject SubjectSeries.

    Returns (series list in first-appearance order, per-subject parse
    stats {clamped, deduped, records_in}). Rows are sorted by timestamp
    per subject; exact-duplicate timestamps keep the first occurrence;
    out-of-range glucose is clamped to [40, 400] and counted.
    """
    groups: dict[str, list[tuple[int, float]]] = {}
    clamped: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["subject_id", "timestamp", "glucose"]:
            raise ValueError(f"{path}: expected header subject_id,timestamp,glucose")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValueError(f"{path} line {line_no}: expected 3 fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise ValueError(f"{path} line {line_no}: empty subject_id")
            t = _parse_timestamp(row[1], path, line_no)
            try:
                g = float(row[2])
            except ValueError:
                raise ValueError(
                    f"{path} line {line_no}: non-numeric glucose {row[2]!r}"
                ) from None
            if not np.isfinite(g):
                raise ValueError(f"{path} line {line_no}: non-finite glucose {row[2]!r}")
            if g < GLUCOSE_LO or g > GLUCOSE_HI:
                clamped[sid] = clamped.get(sid, 0) + 1
                g = min(max(g, GLUCOSE_LO), GLUCOSE_HI)
            groups.setdefault(sid, []).append((t, g))

    series = []
    stats = {}
    for sid, rows in groups.items():
        times = np.array([t for t, _ in rows], dtype=np.int64)
        values = np.array([g for _, g in rows], dtype=float)
        order = np.argsort(times, kind="stable")
        times, values = times[order], values[order]
        keep = np.concatenate([[True], np.diff(times) > 0])
        series.append(
            SubjectSeries(sid, times[keep], values[keep], nominal_interval_minutes)
        )
        stats[sid] = {
            "records_in": len(rows),
            "deduped": int(len(rows) - keep.sum()),
            "clamped": clamped.get(sid, 0),
        }
    if not series:
        raise ValueError(f"{path}: no data rows")
    return series, stats


def parse_labels(path) -> dict[str, int]:
    labels: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["subject_id", "label"]:
            raise ValueError(f"{path}: expected header subject_id,label")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValueError(f"{path} line {line_no}: expected 2 fields, got {len(row)}")
            sid = row[0].strip()
            raw = row[1].strip()
            if raw not in ("0", "1"):
                raise ValueError(f"{path} line {line_no}: label must be 0 or 1, got {raw!r}")
            if sid in labels:
                raise ValueError(f"{path} line {line_no}: duplicate label for {sid!r}")
            labels[sid] = int(raw)
    if not labels:
        raise ValueError(f"{path}: no label rows")
    return labels


def parse_cohort(series_path, labels_path, nominal_interval_minutes: float = 5.0):
    """Parse series and labels files; returns (series, labels, parse stats)."""
    series, stats = parse_series(series_path, nominal_interval_minutes)
    labels = parse_labels(labels_path)
    return series, labels, stats


def filter_days(
    series: SubjectSeries,
    max_gap_minutes: float = 120.0,
    gap_mode: str = "cumulative",
) -> SubjectSeries:
    """Drop UTC calendar days whose data gaps break the quality rule.

    A day's gaps are the deltas between its consecutive samples plus the
    coverage gaps at the midnight boundaries. Deltas above 1.5x the
    nominal interval count as non-acquisition. Mode "single" discards a
    day when any one delta exceeds max_gap_minutes; "cumulative" (default)
    when the summed non-acquisition time does.
    """
    if gap_mode not in GAP_MODES:
        raise ValueError(f"unknown gap mode: {gap_mode!r}")
    if not max_gap_minutes > 0:
        raise ValueError("max_gap_minutes must be positive")
    t = series.times
    tol = GAP_TOLERANCE_FACTOR * series.nominal_interval_minutes * 60.0
    max_gap = max_gap_minutes * 60.0
    days = t // SECONDS_PER_DAY
    keep = np.zeros(t.size, dtype=bool)
    retained = 0
    for day in np.unique(days):
        mask = days == day
        day_times = t[mask]
        start = day * SECONDS_PER_DAY
        gaps = np.diff(day_times, prepend=start, append=start + SECONDS_PER_DAY).astype(float)
        if gap_mode == "single":
            bad = bool(np.any(gaps > max_gap))
        else:
            missing = gaps[gaps > tol]
            bad = float(missing.sum()) > max_gap
        if not bad:
            keep[mask] = True
            retained += 1
    return SubjectSeries(
        series.subject_id,
        t[keep],
        series.values[keep],
        series.nominal_interval_minutes,
        retained_days=retained,
    )


def ingest_cohort(
    series_path,
    labels_path=None,
    *,
    max_gap_minutes: float = 120.0,
    gap_mode: str = "cumulative",
    min_days: int = 2,
    nominal_interval_minutes: float = 5.0,
):
    """Full ingest pipeline: parse, filter days, apply the inclusion rule.

    Returns (kept series, labels, report). Subjects with fewer than
    min_days retained days are excluded from the kept list but stay in
    the report with excluded=True. Labeled subjects absent from the
    series file are reported as missing, not errors.
    """
    series, stats = parse_series(series_path, nominal_interval_minutes)
    labels = parse_labels(labels_path) if labels_path is not None else {}

    kept = []
    subjects = {}
    for s in series:
        st = stats[s.subject_id]
        days_in = int(np.unique(s.times // SECONDS_PER_DAY).size)
        filtered = filter_days(s, max_gap_minutes, gap_mode)
        excluded = filtered.retained_days < min_days
        n_filtered = filtered.n_records
        subjects[s.subject_id] = {
            "retained_days": int(filtered.retained_days),
            "dropped_days": days_in - int(filtered.retained_days),
            "clamped": st["clamped"],
            "deduped": st["deduped"],
            "excluded": bool(excluded),
            "records_in": st["records_in"],
            "records_dropped_day_filter": s.n_records - n_filtered,
            "records_dropped_exclusion": n_filtered if excluded else 0,
            "records_retained": 0 if excluded else n_filtered,
        }
        if not excluded:
            kept.append(filtered)

    missing = sorted(sid for sid in labels if sid not in stats)
    totals = {
        key: int(sum(rec[key] for rec in subjects.values()))
        for key in (
            "records_in",
            "deduped",
            "clamped",
            "records_dropped_day_filter",
            "records_dropped_exclusion",
            "records_retained",
        )
    }
    report = {
        "subjects": subjects,
        "missing_subjects": missing,
        "totals": totals,
        "config": {
            "max_gap_minutes": max_gap_minutes,
            "gap_mode": gap_mode,
            "min_days": min_days,
            "nominal_interval_minutes": nominal_interval_minutes,
        },
    }
    return kept, labels, report


def write_series_csv(path, series_list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "timestamp", "glucose"])
        for s in series_list:
            for t, v in zip(s.times, s.values):
                iso = datetime.fromtimestamp(int(t), tz=timezone.utc).strftime(
                    "%Y-%m-%dT%H:%M:%SZ"
                )
                writer.writerow([s.subject_id, iso, repr(float(v))])


def write_report_json(path, report) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
