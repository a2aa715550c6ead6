"""Shared construction helpers for parameter points."""

from fractions import Fraction

import numpy as np
import pytest

from cwlaser.indexsets import S8, local_support


def random_potential_paramset(seed: int, q: int = 2):
    """Random max-entropy-by-construction parameter point (exact rationals)."""
    from cwlaser import optimize as op

    st = op.structure()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    theta = rng.normal(0.0, 0.7, st.n_params)
    return op.rationalize(theta, q)


def random_symmetric_global(seed: int) -> dict:
    """Random j/k-symmetric strictly positive rational weights on S_8.

    Generic such points are *not* entropy-stationary on their projection
    fiber (they are not of exponential-family form).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    w = {}
    for (i, j, k) in S8:
        if j > k:
            continue
        w[i, j, k] = Fraction(int(rng.integers(1, 10_000)), 1)
    full = {}
    for (i, j, k) in S8:
        full[i, j, k] = w[(i, j, k) if j <= k else (i, k, j)]
    total = sum(full.values())
    return {t: v / total for t, v in full.items()}


def random_symmetric_local(seed: int, triple=(2, 3, 3)) -> dict:
    """Random centrally/swap symmetric weights on a local support."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    u, v, w = triple
    support = local_support(u, v, w)
    raw = {}
    for (x, y, z) in support:
        orbit = min((x, y, z), (u - x, v - y, w - z), (x, z, y), (u - x, w - z, v - y))
        if orbit not in raw:
            raw[orbit] = Fraction(int(rng.integers(1, 10_000)), 1)
    full = {}
    for (x, y, z) in support:
        orbit = min((x, y, z), (u - x, v - y, w - z), (x, z, y), (u - x, w - z, v - y))
        full[x, y, z] = raw[orbit]
    total = sum(full.values())
    return {t: val / total for t, val in full.items()}


@pytest.fixture(scope="session")
def sample_paramset():
    """One deterministic feasible-by-construction point, shared per session."""
    return random_potential_paramset(20240817, q=2)
