"""Shared builders for the test suite."""

import numpy as np
import pytest

from ranshare.model import Application, ProblemInstance, RadioElement, expand_bounds


def make_instance(capacities, lower, upper, coeff, kind="linear"):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return ProblemInstance(
        capacities=np.asarray(capacities, dtype=float),
        lower=lower, upper=upper,
        app_lower=lower.sum(axis=0), app_upper=upper.sum(axis=0),
        coeff=np.asarray(coeff, dtype=float),
        utility_kind=kind,
    )


def random_instance(rng, num_elements=None, num_apps=None, kind=None,
                    zero_coeff_prob=0.1):
    """Random share-based instance; invariants hold by construction."""
    ni = num_elements or int(rng.integers(1, 4))
    nk = num_apps or int(rng.integers(1, 3))
    kind = kind or ("linear" if rng.random() < 0.5 else "logarithmic")
    mins = rng.uniform(0.01, 0.5 / nk, nk)
    maxs = np.minimum(mins + rng.uniform(0.05, 0.5, nk), 1.0)
    apps = [Application(id=k, priority=0, qoe_factor=1.0,
                        min_share=float(mins[k]), max_share=float(maxs[k]))
            for k in range(nk)]
    elements = [RadioElement(id=i, capacity=float(rng.uniform(100.0, 300.0)))
                for i in range(ni)]
    lower, upper, app_lower, app_upper = expand_bounds(apps, elements)
    coeff = rng.uniform(0.0, 5.0, (ni, nk))
    coeff[rng.random((ni, nk)) < zero_coeff_prob] = 0.0
    return ProblemInstance(
        capacities=np.array([e.capacity for e in elements]),
        lower=lower, upper=upper, app_lower=app_lower, app_upper=app_upper,
        coeff=coeff, utility_kind=kind,
    )


@pytest.fixture
def tiny_instance():
    """1x1 instance: capacity 10, box [2, 8], aggregate bounds [2, 8], c=1."""
    return make_instance([10.0], [[2.0]], [[8.0]], [[1.0]])
