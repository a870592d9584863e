"""Outer/inner factorization ``f = C * O * B`` on the sampled circles.

The outer factor is determined by the boundary log-modulus ``F``:
on the circle ``O = exp(F + i QF)`` with ``Q`` the MQM Hilbert transform,
and inside the disc through the Schwarz integral of ``F``.  The inner
factor is a finite Blaschke product.  The unimodular constant ``C`` is
never recovered from moduli; it is only fitted against a reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, NumericalError
from .hilbert import hilbert_mqm_on_nodes
from .sampling import CircleGrid, ComplexSamples, RealSamples

MODULUS_FLOOR = 1e-13
RIM_MARGIN = 0.02


def max_interior_radius(n: int) -> float:
    """Largest ``|z|`` accepted by :func:`outer_interior` on an n-node grid.

    The margin is 0.02 up to n = 1024 and shrinks in proportion to 1/n
    beyond that.
    """
    return 1.0 - RIM_MARGIN * min(1.0, 1024.0 / n)


@dataclass(frozen=True, eq=False)
class OuterFactor:
    log_modulus: RealSamples
    boundary_trace: ComplexSamples

    @property
    def grid(self) -> CircleGrid:
        return self.log_modulus.grid

    @cached_property
    def _taylor(self) -> np.ndarray:
        # Taylor coefficients of log O for the trigonometric interpolant of F.
        n = self.grid.n
        c = np.fft.fft(self.log_modulus.values) / n
        a = np.empty(n // 2 + 1, dtype=complex)
        a[0] = c[0].real
        a[1 : n // 2] = 2.0 * c[1 : n // 2]
        a[n // 2] = c[n // 2].real
        return a

    def __call__(self, z, quadrature: str = "interpolant"):
        return outer_interior(self, z, quadrature=quadrature)


def outer_boundary(modulus_boundary: RealSamples) -> OuterFactor:
    """Boundary trace ``exp(F + i QF)`` of the outer factor, ``F = log|f|``."""
    if modulus_boundary.grid.rho != 1.0:
        raise InputError("outer_boundary needs samples on the unit circle")
    mod = modulus_boundary.values
    if np.any(mod <= MODULUS_FLOOR):
        raise NumericalError(
            "boundary zero or near-zero; log|f| not integrable at the sampled resolution"
        )
    F = RealSamples(modulus_boundary.grid, np.log(mod))
    QF = hilbert_mqm_on_nodes(F)
    # |f| multiplies the phase factor directly, so |trace| reproduces the
    # input modulus up to the rounding of one complex abs (<= 2 ulp)
    trace = mod * np.exp(1j * QF.values)
    return OuterFactor(F, ComplexSamples(F.grid, trace))


def outer_interior(outer: OuterFactor, z, quadrature: str = "interpolant"):
    """Outer factor inside the disc, with the unimodular constant set to 1.

    ``quadrature="trapezoid"`` applies the trapezoidal rule directly to the
    Schwarz integral ``(1/n) sum_j (e^{ix_j}+z)/(e^{ix_j}-z) F(x_j)``.  Its
    error behaves like ``|z|^n`` times the low Fourier content of ``F``,
    which is poor near the rim on coarse grids.

    ``quadrature="interpolant"`` (default) integrates the trigonometric
    interpolant of ``F`` exactly, i.e. sums its Taylor series.  Its error
    is bounded by the Fourier tail of ``F`` uniformly in ``|z|``.  The two
    agree to rounding for band-limited ``F`` away from the rim.
    """
    z = np.asarray(z, dtype=complex)
    n = outer.grid.n
    if np.any(np.abs(z) > max_interior_radius(n)):
        raise NumericalError("evaluation too near boundary for quadrature accuracy")
    if quadrature == "interpolant":
        # Horner on the Taylor coefficients
        a = outer._taylor
        acc = np.zeros_like(z)
        for coef in a[::-1]:
            acc = acc * z + coef
        return np.exp(acc)
    if quadrature == "trapezoid":
        w = np.exp(1j * outer.grid.nodes)
        F = outer.log_modulus.values
        flat = z.reshape(-1)
        kernel = (w[None, :] + flat[:, None]) / (w[None, :] - flat[:, None])
        return np.exp(kernel @ F / n).reshape(z.shape)
    raise InputError(f"unknown quadrature {quadrature!r}")


@dataclass(frozen=True)
class BlaschkeProduct:
    """``z^m * prod_k (-conj(a_k)/|a_k|) (z - a_k)/(1 - conj(a_k) z)``."""

    m: int = 0
    zeros: tuple = ()

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        if self.m < 0:
            raise InputError("origin multiplicity must be non-negative")
        for a in zeros:
            if not (0.0 < abs(a) < 1.0):
                raise InputError(f"Blaschke zero {a} must satisfy 0 < |a| < 1")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "m", int(self.m))

    @property
    def degree(self) -> int:
        return self.m + len(self.zeros)

    def all_zeros(self) -> np.ndarray:
        """Zero multiset including ``m`` copies of the origin."""
        return np.array([0j] * self.m + list(self.zeros), dtype=complex)

    def __call__(self, z):
        return blaschke_eval(self, z)


def blaschke_factor(a: complex, z):
    """Unnormalized factor ``(z - a)/(1 - conj(a) z)``."""
    z = np.asarray(z, dtype=complex)
    return (z - a) / (1.0 - np.conj(a) * z)


def blaschke_eval(B: BlaschkeProduct, z):
    z = np.asarray(z, dtype=complex)
    out = z**B.m if B.m else np.ones_like(z)
    for a in B.zeros:
        out = out * (-np.conj(a) / abs(a)) * blaschke_factor(a, z)
    return out


def _evaluate_outer_on(outer: OuterFactor, rho: float) -> np.ndarray:
    if rho == 1.0:
        return outer.boundary_trace.values
    return outer_interior(outer, outer.grid.with_radius(rho).points)


def reconstruct(outer: OuterFactor, B: BlaschkeProduct, radii: Iterable[float]):
    """``g = O * B`` sampled on each requested circle."""
    out = {}
    for rho in radii:
        grid = outer.grid.with_radius(rho)
        out[float(rho)] = ComplexSamples(grid, _evaluate_outer_on(outer, rho) * B(grid.points))
    return out


def align_constant(g: ComplexSamples, f_ref: ComplexSamples) -> complex:
    """Unimodular ``C`` minimizing ``||f_ref - C g||``."""
    if g.grid != f_ref.grid:
        raise InputError("alignment needs samples on the same grid")
    inner = np.vdot(g.values, f_ref.values)
    if abs(inner) == 0.0:
        raise NumericalError("alignment undefined (orthogonal reference)")
    return complex(inner / abs(inner))


def _stack(samples) -> tuple[np.ndarray, list]:
    if isinstance(samples, (RealSamples, ComplexSamples)):
        return samples.values, [samples.grid]
    samples = list(samples)
    return np.concatenate([s.values for s in samples]), [s.grid for s in samples]


def relative_error(f_ref, g) -> float:
    """Relative discrete l2 misfit ``||f_ref - g|| / ||f_ref||``.

    Accepts single sample sets or sequences of them (pooled over circles).
    Complex samples are phase-aligned first with one global constant.
    """
    ref, grids_ref = _stack(f_ref)
    got, grids_got = _stack(g)
    if grids_ref != grids_got:
        raise InputError("relative error needs samples on the same grids")
    norm = np.linalg.norm(ref)
    if norm == 0.0:
        raise NumericalError("zero reference norm")
    if np.iscomplexobj(ref) or np.iscomplexobj(got):
        inner = np.vdot(got, ref)
        if abs(inner) == 0.0:
            raise NumericalError("alignment undefined (orthogonal reference)")
        got = got * (inner / abs(inner))
    return float(np.linalg.norm(ref - got) / norm)


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    outer: OuterFactor
    inner: BlaschkeProduct
    constant: complex = 1.0 + 0j
    stage_errors: Sequence[tuple[int, float]] = ()
    reconstructed: Mapping[float, ComplexSamples] = field(default_factory=dict)
    stop_reason: str = ""
    extra: Mapping = field(default_factory=dict)

    @property
    def final_error(self) -> float:
        return self.stage_errors[-1][1] if self.stage_errors else float("nan")


def modulus_misfit(measured: Mapping[float, RealSamples], outer: OuterFactor,
                   B: BlaschkeProduct, radii: Sequence[float]) -> float:
    """Pooled relative misfit of ``|O B|`` against measured ``|f|`` on ``radii``."""
    rec = reconstruct(outer, B, radii)
    return relative_error([measured[r] for r in radii], [rec[r].modulus for r in radii])
