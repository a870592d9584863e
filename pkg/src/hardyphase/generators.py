"""Synthetic test functions with known factorization."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InputError
from .factorization import BlaschkeProduct
from .sampling import CircleGrid, ComplexSamples, ModulusField

EXAMPLE1_NUM = (0.1867, -0.00869)  # 0.1867 z^6 - 0.00869 z^5
EXAMPLE1_POLES = (0.7842, 0.2669)  # (1 - 0.7842 z)(1 - 0.2669 z)
EXAMPLE1_ZERO = 0.00869 / 0.1867
EXAMPLE2_MAX_RADIUS = 0.9


def example1(z):
    z = np.asarray(z, dtype=complex)
    num = z**5 * (EXAMPLE1_NUM[0] * z + EXAMPLE1_NUM[1])
    return num / ((1.0 - EXAMPLE1_POLES[0] * z) * (1.0 - EXAMPLE1_POLES[1] * z))


def example1_inner() -> BlaschkeProduct:
    return BlaschkeProduct(m=5, zeros=(EXAMPLE1_ZERO,))


def sample_function(func, n: int, radii: Sequence[float]):
    """Evaluate ``func`` on the boundary and every radius in ``radii``.

    Returns the modulus field (pipeline input) and the complex samples
    (ground truth), both keyed by radius.
    """
    radii = sorted({float(r) for r in radii} | {1.0})
    truth = {}
    for rho in radii:
        grid = CircleGrid(n, rho)
        truth[rho] = ComplexSamples(grid, func(grid.points))
    field = ModulusField({rho: s.modulus for rho, s in truth.items()})
    return field, truth


def gen_example1(n: int, radii: Sequence[float]):
    if n < 16:
        raise InputError("example 1 needs n >= 16")
    return sample_function(example1, n, radii)


def draw_zeros(seed: int, count: int = 10, max_radius: float = EXAMPLE2_MAX_RADIUS,
               min_separation: float = 0.05) -> np.ndarray:
    """Seeded zeros: modulus uniform on [0, max_radius], angle uniform.

    Draws violating ``min_separation`` are rejected one at a time.
    """
    rng = np.random.default_rng(seed)
    zeros: list[complex] = []
    while len(zeros) < count:
        a = rng.uniform(0.0, max_radius) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        if all(abs(a - b) >= min_separation for b in zeros):
            zeros.append(complex(a))
    return np.array(zeros)


def blaschke_from_zeros(zeros) -> BlaschkeProduct:
    zeros = np.asarray(zeros, dtype=complex)
    origin = zeros == 0
    return BlaschkeProduct(m=int(origin.sum()), zeros=tuple(zeros[~origin]))


def gen_example2(n: int, radii: Sequence[float], zeros=None, seed: int | None = None):
    """Ten-factor product ``prod (z - a_k)/(1 - conj(a_k) z)``.

    Returns ``(field, truth, zeros)``.
    """
    if zeros is None:
        if seed is None:
            raise InputError("example 2 needs explicit zeros or a seed")
        zeros = draw_zeros(seed)
    zeros = np.asarray(zeros, dtype=complex)
    if np.any(np.abs(zeros) >= 1.0):
        raise InputError("example 2 zeros must lie inside the unit disc")

    def f(z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for a in zeros:
            out = out * (z - a) / (1.0 - np.conj(a) * z)
        return out

    field, truth = sample_function(f, n, radii)
    return field, truth, zeros
