"""Shared test helpers: independent brute-force oracles and fixture builders.

The oracles deliberately use a different algorithmic route than the
library (explicit loops, exhaustive enumeration) so agreement is evidence,
not tautology.
"""

from __future__ import annotations

import csv
import itertools
from datetime import datetime, timezone

import numpy as np

from funcutpoint.ingest import SubjectSeries

DAY = 86400


def brute_force_cutpoint(scores, labels, criterion):
    """Exhaustive cut-point search with the declared tie-break order.

    Scans distinct scores plus a sentinel, computes the confusion counts
    with explicit loops, and returns (c, sensitivity, specificity).
    """
    scores = list(map(float, scores))
    labels = list(map(int, labels))
    candidates = sorted(set(scores))
    candidates.append(candidates[-1] + 1.0)
    n_case = sum(labels)
    n_ctrl = len(labels) - n_case

    best = None
    for c in candidates:
        tp = sum(1 for s, z in zip(scores, labels) if z == 1 and s >= c)
        tn = sum(1 for s, z in zip(scores, labels) if z == 0 and s < c)
        sens = tp / n_case
        spec = tn / n_ctrl
        if criterion == "youden":
            key = (sens + spec - 1.0,)
        elif criterion == "max_sensitivity":
            key = (sens, spec)
        else:
            key = (spec, sens)
        # Strict > keeps the earliest (smallest c) among exact ties.
        if best is None or key > best[0]:
            best = (key, c, sens, spec)
    return best[1], best[2], best[3]


def mann_whitney(scores, labels) -> float:
    """Concordance probability by explicit pair comparison."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    cases = scores[labels == 1]
    ctrls = scores[labels == 0]
    gt = (cases[:, None] > ctrls[None, :]).sum()
    eq = (cases[:, None] == ctrls[None, :]).sum()
    return (gt + 0.5 * eq) / (cases.size * ctrls.size)


def brute_force_isotonic(values, weights=None):
    """Exhaustive weighted monotone least squares over block partitions.

    Enumerates every contiguous partition, keeps those whose block means
    are nondecreasing, and returns the fit with minimal weighted SSE.
    Exponential in the length; intended for length <= ~10.
    """
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    n = v.size
    best_sse = None
    best_fit = None
    for cuts in itertools.product([False, True], repeat=n - 1):
        bounds = [0] + [i + 1 for i, cut in enumerate(cuts) if cut] + [n]
        means = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            means.append(np.sum(v[lo:hi] * w[lo:hi]) / np.sum(w[lo:hi]))
        if any(m2 < m1 for m1, m2 in zip(means[:-1], means[1:])):
            continue
        fit = np.concatenate([
            np.full(hi - lo, m)
            for (lo, hi), m in zip(zip(bounds[:-1], bounds[1:]), means)
        ])
        sse = float(np.sum(w * (v - fit) ** 2))
        if best_sse is None or sse < best_sse - 1e-15:
            best_sse = sse
            best_fit = fit
    return best_fit, best_sse


def curve_above_threshold(curve_values, mu, sigma, c) -> bool:
    """Direct per-point check: Y(rho_k) >= mu(rho_k) + c*sigma(rho_k) for all k."""
    for y, m, s in zip(curve_values, mu, sigma):
        if y < m + c * s:
            return False
    return True


def make_series(subject_id, minute_offsets, values, nominal=5.0,
                start="2024-03-01T00:00:00Z") -> SubjectSeries:
    base = int(
        datetime.fromisoformat(start.replace("Z", "+00:00")).timestamp()
    )
    times = base + np.asarray(minute_offsets, dtype=np.int64) * 60
    return SubjectSeries(subject_id, times, np.asarray(values, dtype=float),
                         nominal_interval_minutes=nominal)


def write_series_file(path, rows) -> None:
    """rows: iterable of (subject_id, iso timestamp, glucose text)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "timestamp", "glucose"])
        writer.writerows(rows)


def write_labels_file(path, labels: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "label"])
        for sid, lab in labels.items():
            writer.writerow([sid, lab])


def uniform_day_rows(subject_id, day_index, level, step_minutes=5,
                     jitter=None, rng=None):
    """One full UTC day of samples at a constant-ish level."""
    rows = []
    base = datetime(2024, 3, 1, tzinfo=timezone.utc).timestamp() + day_index * DAY
    for k in range(0, DAY // 60, step_minutes):
        value = level if jitter is None else level + rng.uniform(-jitter, jitter)
        stamp = datetime.fromtimestamp(base + k * 60, tz=timezone.utc)
        rows.append(
            (subject_id, stamp.strftime("%Y-%m-%dT%H:%M:%SZ"), repr(float(value)))
        )
    return rows
