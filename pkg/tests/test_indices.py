import csv

import numpy as np
import pytest

from conftest import make_series
from funcutpoint.indices import (
    INDEX_COLUMNS,
    basic_indices,
    compute_indices,
    conga,
    mage,
    write_indices_csv,
)

SEED = 20240816


def test_basic_indices_constant_series():
    s = make_series("c", range(0, 120, 5), np.full(24, 100.0))
    mg, sd, cv, iqr, tar140, tar180, auc_index = basic_indices(s)
    assert mg == 100.0
    assert sd == 0.0
    assert cv == 0.0
    assert iqr == 0.0
    assert tar140 == 0.0 and tar180 == 0.0
    assert auc_index == pytest.approx(100.0)


def test_basic_indices_two_points():
    s = make_series("p", [0, 5], [100.0, 200.0])
    mg, sd, cv, iqr, tar140, tar180, auc_index = basic_indices(s)
    assert mg == 150.0
    assert sd == pytest.approx(np.std([100.0, 200.0], ddof=1))
    assert cv == pytest.approx(100.0 * sd / 150.0)
    assert iqr == 100.0
    assert tar140 == 0.5 and tar180 == 0.5
    assert auc_index == pytest.approx(150.0)


def test_tar_threshold_convention():
    s = make_series("t", [0, 5], [180.0, 100.0])
    *_, tar140, tar180, _ = basic_indices(s, tar_inclusive=True)
    assert tar180 == 0.5
    *_, tar140x, tar180x, _ = basic_indices(s, tar_inclusive=False)
    assert tar180x == 0.0
    low = make_series("l", [0, 5], [54.0, 54.0])
    *_, low140, low180, _ = basic_indices(low)
    assert low140 == 0.0 and low180 == 0.0


def test_basic_indices_needs_two_records():
    s = make_series("one", [0], [100.0])
    with pytest.raises(ValueError):
        basic_indices(s)


def test_auc_index_does_not_bridge_long_gaps():
    offs = list(range(0, 125, 5)) + [3 * 1440 + o for o in range(0, 65, 5)]
    values = [100.0] * 25 + [200.0] * 13
    s = make_series("g", offs, values)
    *_, auc_index = basic_indices(s)
    # 2 hours at 100 and 1 hour at 200, the multi-day hole contributes nothing.
    assert auc_index == pytest.approx(400.0 / 3.0)


def test_auc_index_skips_singleton_segments():
    s = make_series("i", [0, 5, 10, 10 * 1440], [100.0, 100.0, 100.0, 400.0])
    *_, auc_index = basic_indices(s)
    assert auc_index == pytest.approx(100.0)


def test_auc_index_requires_a_segment():
    s = make_series("x", [0, 1440], [100.0, 200.0])
    with pytest.raises(ValueError, match="no contiguous segments"):
        basic_indices(s)


def test_mage_alternating_example():
    s = make_series("m", range(0, 25, 5), [100.0, 160.0, 100.0, 160.0, 100.0])
    assert mage(s) == pytest.approx(60.0)


def test_mage_monotone_and_constant_are_zero():
    ramp = make_series("r", range(0, 20, 5), [100.0, 120.0, 140.0, 160.0])
    assert mage(ramp) == 0.0
    flat = make_series("f", range(0, 25, 5), np.full(5, 100.0))
    assert mage(flat) == 0.0


def test_mage_collapses_plateaus():
    s = make_series("p", range(0, 20, 5), [100.0, 160.0, 160.0, 100.0])
    assert mage(s) == pytest.approx(60.0)


def test_mage_skips_sub_sd_excursions():
    # Amplitudes are [60, 10, 10, 60] against a sample SD near 31.3.
    s = make_series("s", range(0, 25, 5), [100.0, 160.0, 150.0, 160.0, 100.0])
    assert mage(s) == pytest.approx(60.0)


def test_mage_threshold_is_strict():
    # Amplitudes [100, 50] with SD exactly 50: only the 100 qualifies.
    s = make_series("e", range(0, 15, 5), [100.0, 200.0, 150.0])
    assert mage(s) == pytest.approx(100.0)


def test_mage_needs_three_records():
    with pytest.raises(ValueError):
        mage(make_series("x", [0, 5], [100.0, 120.0]))


def test_conga_hourly_example():
    s = make_series("c", [0, 60, 120, 180], [100.0, 100.0, 120.0, 100.0],
                    nominal=60.0)
    assert conga(s) == pytest.approx(20.0)


def test_conga_is_zero_for_period_matching_patterns():
    alternating = make_series(
        "a", [0, 30, 60, 90, 120], [100.0, 120.0, 100.0, 120.0, 100.0],
        nominal=30.0,
    )
    assert conga(alternating) == 0.0
    ramp = make_series(
        "r", [0, 30, 60, 90, 120], [100.0, 110.0, 120.0, 130.0, 140.0],
        nominal=30.0,
    )
    assert conga(ramp) == 0.0
    flat = make_series("f", range(0, 130, 10), np.full(13, 95.0), nominal=10.0)
    assert conga(flat) == 0.0


def test_conga_longer_horizon():
    v = [100.0, 120.0, 90.0, 150.0, 110.0]
    s = make_series("h", [0, 60, 120, 180, 240], v, nominal=60.0)
    expect = np.std(np.array(v[2:]) - np.array(v[:-2]), ddof=1)
    assert conga(s, horizon_hours=2.0) == pytest.approx(expect)


def test_conga_span_and_pairing_errors():
    short = make_series("s", [0, 30], [100.0, 120.0], nominal=30.0)
    with pytest.raises(ValueError, match="span"):
        conga(short)
    misaligned = make_series("m", [0, 25, 50, 75], np.full(4, 100.0), nominal=5.0)
    with pytest.raises(ValueError, match="no valid sample pairs"):
        conga(misaligned)
    with pytest.raises(ValueError):
        conga(short, horizon_hours=0.0)


def test_compute_indices_matches_parts():
    rng = np.random.default_rng(SEED)
    values = np.clip(120.0 + np.cumsum(rng.normal(0, 4, 288)), 60.0, 300.0)
    s = make_series("w", range(0, 1440, 5), values)
    vec = compute_indices(s)
    mg, sd, cv, iqr, tar140, tar180, auc_index = basic_indices(s)
    assert vec.subject_id == "w"
    assert vec.mg == mg and vec.sd == sd and vec.cv == cv
    assert vec.iqr == iqr and vec.auc_index == auc_index
    assert vec.tar140 == tar140 and vec.tar180 == tar180
    assert vec.mage == mage(s)
    assert vec.conga == conga(s)


def test_shift_invariance_of_dispersion_indices():
    """Adding a constant moves MG/AUC and leaves the dispersion indices."""
    rng = np.random.default_rng(SEED + 1)
    for _ in range(10):
        values = 150.0 + np.cumsum(rng.normal(0, 3, 288))
        s = make_series("a", range(0, 1440, 5), values)
        k = float(rng.uniform(-30.0, 30.0))
        shifted = make_series("a", range(0, 1440, 5), values + k)
        base = compute_indices(s)
        moved = compute_indices(shifted)
        assert moved.mg == pytest.approx(base.mg + k, abs=1e-9)
        assert moved.auc_index == pytest.approx(base.auc_index + k, abs=1e-9)
        for field in ("sd", "iqr", "mage", "conga"):
            assert getattr(moved, field) == pytest.approx(
                getattr(base, field), abs=1e-9
            ), field


def test_write_indices_csv(tmp_path):
    rng = np.random.default_rng(SEED + 2)
    rows = []
    for sid in ("s1", "s2"):
        values = np.clip(130.0 + np.cumsum(rng.normal(0, 4, 288)), 60.0, 300.0)
        rows.append(compute_indices(make_series(sid, range(0, 1440, 5), values)))
    path = tmp_path / "indices.csv"
    write_indices_csv(path, rows)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["subject_id"] + list(INDEX_COLUMNS)
    assert len(got) == 3
    assert float(got[1][1]) == rows[0].mg
