import numpy as np
import pytest

from ranshare.fairshare import water_fill


def test_capacity_covers_demand():
    d = np.array([1.0, 3.0, 0.5])
    out = water_fill(d, 10.0)
    assert np.array_equal(out, d)


def test_two_flows_water_level():
    # demands (1, 3), capacity 2 -> level 1 -> allocations (1, 1)
    out = water_fill(np.array([1.0, 3.0]), 2.0)
    assert np.allclose(out, [1.0, 1.0])


def test_identical_flows_split_evenly():
    out = water_fill(np.array([4.0, 4.0]), 4.0)
    assert np.allclose(out, [2.0, 2.0])


def test_empty_and_zero_capacity():
    assert water_fill(np.array([]), 5.0).size == 0
    assert np.array_equal(water_fill(np.array([1.0, 2.0]), 0.0), [0.0, 0.0])


def test_order_independent():
    rng = np.random.default_rng(2)
    for _ in range(40):
        d = rng.uniform(0.0, 5.0, int(rng.integers(1, 12)))
        cap = float(rng.uniform(0.0, d.sum() * 1.2))
        perm = rng.permutation(d.size)
        base = water_fill(d, cap)
        permuted = water_fill(d[perm], cap)
        assert np.array_equal(base[perm], permuted)


def test_conservation_and_caps():
    rng = np.random.default_rng(3)
    for _ in range(60):
        d = rng.uniform(0.0, 5.0, int(rng.integers(1, 10)))
        cap = float(rng.uniform(0.0, d.sum() * 1.5 + 0.1))
        out = water_fill(d, cap)
        assert np.all(out <= d + 1e-12)
        assert out.sum() <= min(cap, d.sum()) + 1e-9
        if d.sum() > cap:  # scarce: capacity exhausted at the unique water level
            assert out.sum() == pytest.approx(cap, rel=1e-12, abs=1e-12)
