"""Minimum-value zero search with deflation (MQMV).

The inner modulus ``|B| = |f| / |O|`` is formed on a polar grid of measured
circles.  Zeros of ``B`` are taken one at a time from the deepest grid
minimum, located precisely with a local model fit, and divided out.  The
loop stops when no sub-threshold minimum is left, when the interior
modulus misfit of ``g_k = O * B_k`` stops decreasing, or at ``max_zeros``.

Local model: near a zero ``beta`` of multiplicity ``p``,

    log|B(z)| = p log|z - beta| + Re h(z),   h analytic,

and ``h`` is approximated by a quadratic.  For fixed ``beta`` the model is
linear in ``p`` and ``h``, so only ``beta`` is optimized.  A cluster of
zeros (e.g. a high-order zero at the origin next to a small simple zero)
fits as one multiple zero near the cluster's centroid, which the origin
snap then assigns to the origin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InputError, NumericalError
from .factorization import (
    MODULUS_FLOOR,
    BlaschkeProduct,
    OuterFactor,
    ReconstructionResult,
    blaschke_factor,
    modulus_misfit,
    outer_boundary,
    outer_interior,
    reconstruct,
)
from .sampling import ModulusField, RealSamples

log = logging.getLogger(__name__)

DEFAULT_SEARCH_RADII = tuple(float(r) for r in np.linspace(0.05, 0.95, 32))


@dataclass(frozen=True)
class MinSearchConfig:
    epsilon: float = 1e-3
    max_zeros: int = 30
    refine_iters: int = 8
    search_radii: Sequence[float] | None = DEFAULT_SEARCH_RADII
    # neighbourhood radius of the local fit, in units of the radial spacing
    neighbourhood: float = 2.5
    polish_passes: int = 3

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise InputError("epsilon must lie in (0, 1)")
        if self.max_zeros < 1:
            raise InputError("max_zeros must be >= 1")
        if self.search_radii is not None:
            radii = tuple(sorted(float(r) for r in self.search_radii))
            if not radii or radii[0] <= 0.0 or radii[-1] >= 1.0:
                raise InputError("search radii must lie strictly inside (0, 1)")
            object.__setattr__(self, "search_radii", radii)


@dataclass(frozen=True, eq=False)
class InnerModulusField:
    """``|B(r e^{i x_j})|`` on a polar grid; ``values[i, j]`` is circle ``radii[i]``."""

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or values.shape[0] != radii.size or values.ndim != 2:
            raise InputError("inner field shape mismatch")
        if np.any(radii <= 0) or np.any(radii >= 1) or np.any(np.diff(radii) <= 0):
            raise InputError("inner field radii must increase strictly inside (0, 1)")
        if np.any(values < 0):
            raise InputError("inner field values must be non-negative")
        for a in (radii, values):
            a.setflags(write=False)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def points(self) -> np.ndarray:
        x = 2.0 * np.pi * np.arange(self.n) / self.n
        return np.multiply.outer(self.radii, np.exp(1j * x))

    def circle(self, i: int) -> RealSamples:
        from .sampling import CircleGrid

        return RealSamples(CircleGrid(self.n, self.radii[i]), self.values[i])


def inner_modulus_field(measurements: ModulusField, outer: OuterFactor,
                        radii: Sequence[float]) -> InnerModulusField:
    radii = sorted(float(r) for r in radii)
    if not radii:
        raise InputError("no interior circle available")
    rows = []
    for r in radii:
        if r not in measurements:
            raise InputError(f"interior circle at r={r} missing")
        samples = measurements[r]
        o = np.abs(outer_interior(outer, samples.grid.points))
        if np.any(o < MODULUS_FLOOR):
            raise NumericalError(f"outer modulus below floor on circle r={r}")
        rows.append(samples.values / o)
    return InnerModulusField(np.array(radii), np.array(rows))


def deflate(field: InnerModulusField, alpha: complex) -> InnerModulusField:
    """Divide out ``|(z - alpha)/(1 - conj(alpha) z)|``, floored at 1e-13."""
    div = np.abs(blaschke_factor(alpha, field.points))
    return InnerModulusField(field.radii, field.values / np.maximum(div, MODULUS_FLOOR))


# --- local refinement ----------------------------------------------------------


def _radial_step(radii: np.ndarray) -> float:
    return float(np.median(np.diff(radii))) if radii.size > 1 else float(radii[0])


def _quadratic_fit(field: InnerModulusField, i: int, j: int) -> complex:
    """Minimum of a paraboloid fitted to ``|B|^2`` on the 3x3 polar stencil."""
    nr, n = field.values.shape
    lo = min(max(i - 1, 0), max(nr - 3, 0))
    rows = np.arange(lo, min(lo + 3, nr))
    cols = np.arange(j - 1, j + 2) % n
    z = field.points[np.ix_(rows, cols)].ravel()
    v = field.values[np.ix_(rows, cols)].ravel() ** 2
    x, y = z.real, z.imag
    A = np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    _, bx, by, axx, axy, ayy = coef
    H = np.array([[2 * axx, axy], [axy, 2 * ayy]])
    z0 = field.points[i, j]
    try:
        if np.all(np.linalg.eigvalsh(H) > 0):
            sx, sy = np.linalg.solve(H, [-bx, -by])
            cand = complex(sx, sy)
            if abs(cand - z0) <= 2.0 * _radial_step(field.radii) and abs(cand) < 1.0:
                return cand
    except np.linalg.LinAlgError:
        pass
    return complex(z0)


def _neighbourhood(field: InnerModulusField, center: complex, radius: float):
    """Grid samples within ``radius`` of ``center``.

    Near the innermost circle the zero may lie inside every measured
    circle, so the three innermost rings are added in full to enclose it.
    """
    pts = field.points.ravel()
    vals = field.values.ravel()
    mask = np.abs(pts - center) <= radius
    if _near_inner_ring(field, center):
        ring = field.radii[min(2, field.radii.size - 1)]
        mask |= np.abs(pts) <= ring * (1 + 1e-12)
    while mask.sum() < 12:
        radius *= 1.5
        mask = np.abs(pts - center) <= radius
    return pts[mask], np.log(np.maximum(vals[mask], MODULUS_FLOOR)), radius


def _design(z, center, scale, beta, fixed_p):
    w = (z - center) / scale
    cols = [np.ones(z.size), w.real, w.imag, (w * w).real, (w * w).imag]
    if fixed_p is None:
        cols.insert(0, np.log(np.maximum(np.abs(z - beta), 1e-300)))
    return np.column_stack(cols)


def fit_local_zero(z, logv, center, scale, starts, fixed_p=None, max_nfev=200):
    """Fit ``p log|z - beta| + Re(quadratic)`` to log-modulus samples.

    ``starts`` is one or more initial guesses for ``beta``; the best fit
    wins.  Returns ``(beta, p, rms_residual)``, with ``p = fixed_p`` when
    given.
    """

    def solve(beta):
        A = _design(z, center, scale, beta, fixed_p)
        rhs = logv
        if fixed_p is not None:
            rhs = logv - fixed_p * np.log(np.maximum(np.abs(z - beta), 1e-300))
        coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        return coef, A @ coef - rhs

    def residual(params):
        return solve(complex(params[0], params[1]))[1]

    best = None
    for start in np.atleast_1d(starts):
        sol = least_squares(residual, [start.real, start.imag], x_scale=scale,
                            max_nfev=max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        cost = float(np.sum(sol.fun**2))
        if best is None or cost < best[0]:
            best = (cost, complex(sol.x[0], sol.x[1]))
    cost, beta = best
    coef, _ = solve(beta)
    p = float(coef[0]) if fixed_p is None else float(fixed_p)
    return beta, p, float(np.sqrt(cost / z.size))


def _near_inner_ring(field: InnerModulusField, z: complex) -> bool:
    return abs(z) <= field.radii[0] + 0.5 * _radial_step(field.radii)


def _starts(field: InnerModulusField, beta: complex):
    """Initial guesses on both sides of the measured circle nearest ``beta``.

    ``log|z - beta|`` blows up at every sample, so a local optimizer cannot
    carry ``beta`` across a measured circle; starting on both sides avoids
    that barrier.
    """
    r = field.radii
    rho = abs(beta)
    starts = [beta]
    if _near_inner_ring(field, beta):
        starts += [0.5 * beta, 0j]
    if rho > 0:
        i = int(np.argmin(np.abs(r - rho)))
        unit = beta / rho
        edges = np.concatenate([[0.0], r, [1.0]])
        for mid in (0.5 * (edges[i] + edges[i + 1]), 0.5 * (edges[i + 1] + edges[i + 2])):
            if abs(mid - rho) > 1e-12:
                starts.append(mid * unit)
    return starts


@dataclass(frozen=True)
class ZeroCandidate:
    alpha: complex
    grid_value: float
    multiplicity_fit: float
    accepted: bool
    origin: bool


def locate_min(field: InnerModulusField, cfg: MinSearchConfig) -> ZeroCandidate:
    """Deepest grid minimum, refined by the local fits (no acceptance test)."""
    i, j = np.unravel_index(np.argmin(field.values), field.values.shape)
    v0 = float(field.values[i, j])
    step = _radial_step(field.radii)
    beta = _quadratic_fit(field, i, j)
    radius = cfg.neighbourhood * step
    p = 0.0
    for _ in range(max(cfg.refine_iters, 1)):
        z, logv, used = _neighbourhood(field, beta, radius)
        new, p, _ = fit_local_zero(z, logv, beta, used, _starts(field, beta))
        moved = abs(new - beta)
        if abs(new) >= 1.0 or moved > 2.0 * used:
            break
        beta = new
        if moved <= 1e-14:
            break
    in_reach = abs(beta - field.points[i, j]) <= 2.0 * radius
    accepted = v0 <= cfg.epsilon or (p >= 0.5 and in_reach)
    origin = abs(beta) < 0.5 * field.radii[0]
    return ZeroCandidate(0j if origin else beta, v0, p, bool(accepted), bool(origin))


def find_min_zero(field: InnerModulusField, cfg: MinSearchConfig) -> complex | None:
    """Refined location of the deepest zero, or ``None`` when nothing qualifies.

    A candidate qualifies when the grid minimum is at most ``epsilon``, or
    when the local fit finds a zero (fitted multiplicity >= 1/2) within
    reach of the grid minimum.  The second route catches zeros that sit
    between measured circles, where the grid minimum is bounded below by
    the circle spacing.  Candidates closer to the origin than half the
    innermost radius are reported as ``0``.
    """
    cand = locate_min(field, cfg)
    return cand.alpha if cand.accepted else None


def polish_zeros(base: InnerModulusField, zeros: Sequence[complex], cfg: MinSearchConfig) -> list[complex]:
    """Re-fit every nonzero zero with all the others divided out.

    Each pass fits a simple-zero model to the original field deflated by
    the current estimates of the remaining zeros.
    """
    zeros = list(zeros)
    step = _radial_step(base.radii)
    for _ in range(cfg.polish_passes):
        changed = False
        for k, a in enumerate(zeros):
            if a == 0:
                continue
            f = base
            for l, b in enumerate(zeros):
                if l != k:
                    f = deflate(f, b)
            z, logv, used = _neighbourhood(f, a, cfg.neighbourhood * step)
            new, _, _ = fit_local_zero(z, logv, a, used, _starts(f, a), fixed_p=1.0)
            if abs(new) < 1.0 and abs(new - a) <= used:
                if abs(new) < 0.5 * base.radii[0]:
                    new = 0j
                changed |= abs(new - a) > 1e-15
                zeros[k] = new
        if not changed:
            break
    return zeros


def _blaschke(zeros) -> BlaschkeProduct:
    m = sum(1 for a in zeros if a == 0)
    return BlaschkeProduct(m=m, zeros=tuple(a for a in zeros if a != 0))


def mqmv_retrieve(measurements: ModulusField, cfg: MinSearchConfig = MinSearchConfig()) -> ReconstructionResult:
    radii = list(cfg.search_radii) if cfg.search_radii is not None else measurements.interior_radii
    if not radii:
        raise InputError("no interior circle available")
    outer = outer_boundary(measurements.boundary)
    base = inner_modulus_field(measurements, outer, radii)
    measured = {r: measurements[r] for r in radii}

    def err(zs):
        return modulus_misfit(measured, outer, _blaschke(zs), radii)

    zeros: list[complex] = []
    errors = [err(zeros)]
    current = base
    stop = "max_zeros"
    while len(zeros) < cfg.max_zeros:
        alpha = find_min_zero(current, cfg)
        if alpha is None:
            stop = "threshold"
            break
        trial = err(zeros + [alpha])
        if trial >= errors[-1]:
            stop = "error_increase"
            break
        zeros.append(alpha)
        errors.append(trial)
        current = deflate(current, alpha)
        log.debug("zero %d at %s, err %.3e", len(zeros), alpha, trial)

    polished = polish_zeros(base, zeros, cfg)
    if polished != zeros and err(polished) < errors[-1]:
        zeros = polished
        errors = [err(zeros[:k]) for k in range(len(zeros) + 1)]

    B = _blaschke(zeros)
    return ReconstructionResult(
        outer=outer,
        inner=B,
        stage_errors=list(enumerate(errors)),
        reconstructed=reconstruct(outer, B, [*radii, 1.0]),
        stop_reason=stop,
        extra={"extraction_order": [complex(a) for a in zeros]},
    )
