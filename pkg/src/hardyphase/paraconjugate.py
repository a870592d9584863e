"""Para-conjugate pole extraction (MQPC).

For ``B_r(z) = B(rz)`` and its para-conjugate ``B_r*(z) = conj(B_r(1/conj z))``
the product ``P_r = B_r B_r*`` equals ``|B(r e^{it})|^2`` on the unit circle.
A zero ``a`` of ``B`` gives ``P_r`` a pole at ``r a`` (inside) and one at
``1/(r conj a)`` (outside).  The inner poles are read off the principal
part of the Laurent series on ``|z| = 1`` by Hankel/matrix-pencil
identification: for simple poles ``pi_k`` with residues ``rho_k``,

    c_{-q} = sum_k rho_k pi_k^(q-1),   q >= 1.

Zeros at the origin do not produce poles: ``z^m`` contributes the constant
``r^(2m)`` to ``P_r``.  Their count is recovered from the level ``c_0``
once the other zeros are known.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import InputError, NumericalError
from .factorization import (
    BlaschkeProduct,
    ReconstructionResult,
    blaschke_factor,
    modulus_misfit,
    outer_boundary,
    outer_interior,
    reconstruct,
)
from .sampling import CircleGrid, ModulusField, RealSamples

log = logging.getLogger(__name__)

SIGMA_TOL = 1e-8
RANK_FLOOR = 1e-13
MIN_GAP = 1e3
NOISE_FACTOR = 10.0
MAX_PENCIL_COND = 1e12
VERIFY_TOL = 1e-10
MERGE_TOL = 1e-4
ORIGIN_SNAP = 1e-6  # times r
DEFAULT_R = 0.8
DEFAULT_KMAX = 20


def default_order(n: int) -> int:
    return min(n // 2 - 1, 200)


@dataclass(frozen=True, eq=False)
class LaurentCoefficients:
    """Window ``c_{-N} .. c_N``; ``coeffs[N + k]`` holds ``c_k``."""

    N: int
    coeffs: np.ndarray
    r: float

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != (2 * self.N + 1,):
            raise InputError("coefficient window does not match N")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.N:
            raise IndexError(k)
        return self.coeffs[self.N + k]

    @property
    def negative(self) -> np.ndarray:
        """``c_{-1}, c_{-2}, ..., c_{-N}``."""
        return self.coeffs[: self.N][::-1]

    @property
    def positive(self) -> np.ndarray:
        """``c_1, c_2, ..., c_N``."""
        return self.coeffs[self.N + 1 :]


@dataclass(frozen=True)
class PoleSet:
    inner_poles: tuple = ()
    origin_count: int = 0
    discarded_outer: int = 0
    condition: float = 1.0  # S[0]/S[K-1] of the pencil block

    def __post_init__(self):
        object.__setattr__(self, "inner_poles", tuple(complex(p) for p in self.inner_poles))


def pr_boundary(inner_modulus_r: RealSamples) -> RealSamples:
    """``P_r(e^{ix_j}) = |B(r e^{ix_j})|^2`` on the unit-circle lattice."""
    v = inner_modulus_r.values
    if np.any(v < 0):
        raise InputError("modulus samples must be non-negative")
    return RealSamples(CircleGrid(inner_modulus_r.grid.n, 1.0), v * v)


def laurent_coeffs(pr: RealSamples, N: int, r: float) -> LaurentCoefficients:
    n = pr.grid.n
    if N < 1 or 2 * N + 1 > n:
        raise InputError(f"Laurent order N={N} too large for {n} nodes (need 2N+1 <= n)")
    c = np.fft.fft(pr.values) / n
    window = np.concatenate([c[n - N :], c[: N + 1]])
    return LaurentCoefficients(N, window, float(r))


def numerical_rank(S: np.ndarray, rule: str = "gap") -> int:
    """Model order from the Hankel singular values ``S`` (descending).

    ``"threshold"`` counts values above ``SIGMA_TOL * S[0]``.

    ``"noise"`` takes the smallest value as the noise floor and
    counts values more than ``NOISE_FACTOR`` above it.  When even the
    smallest value is above ``RANK_FLOOR * S[0]`` there is no visible noise
    tail and every value counts.

    ``"gap"`` (default) cuts at the largest ratio ``S[k-1]/S[k]`` among values above
    ``RANK_FLOOR * S[0]``, provided the ratio exceeds ``MIN_GAP``.

    Several small poles push genuine singular values to 1e-13 relative
    while round-off sits near 1e-15; the threshold rule drops them and the
    gap rule can be fooled by a larger gap higher up the spectrum.  The
    noise rule in turn overcounts when the data error is structured (outer
    factor quadrature error at small n) rather than round-off, so
    ``mqpc_retrieve`` only uses it as an upper bound and picks the order by
    fitting the data.
    """
    if rule == "threshold":
        return int(np.sum(S > SIGMA_TOL * S[0]))
    if rule == "noise":
        floor = S[-1]
        if floor > RANK_FLOOR * S[0]:
            return int(S.size)
        floor = max(floor, 1e-3 * np.finfo(float).eps * S[0])
        return int(np.sum(S > NOISE_FACTOR * floor))
    if rule != "gap":
        raise InputError(f"unknown rank rule {rule!r}")
    above = int(np.sum(S > RANK_FLOOR * S[0]))
    # gaps between consecutive values, including the drop below the floor
    stop = min(above + 1, S.size)
    ratios = S[: stop - 1] / S[1:stop]
    if ratios.size == 0:
        return above
    k = int(np.argmax(ratios))
    return k + 1 if ratios[k] >= MIN_GAP else above


def _hankel(seq: np.ndarray, K_max: int):
    N = seq.size
    L = max(1, min(K_max, N // 2))
    idx = np.arange(N - L)[:, None] + np.arange(L)[None, :]
    return seq[idx], seq[idx + 1]


def _pencil_poles(seq: np.ndarray, K_max: int, rank_rule: str = "gap",
                  allow_ill_conditioned: bool = False, order: int | None = None) -> tuple[np.ndarray, float]:
    """Poles ``p_k`` of ``seq[q] = sum_k w_k p_k^q`` by the matrix pencil method.

    Returns the poles and the condition ``S[0]/S[K-1]`` of the kept block.
    """
    H0, H1 = _hankel(seq, K_max)
    L = H0.shape[1]
    U, S, Vh = np.linalg.svd(H0, full_matrices=False)
    if S[0] == 0.0:
        return np.array([], dtype=complex), 1.0
    K = numerical_rank(S, rank_rule) if order is None else min(int(order), S.size)
    if K == 0:
        return np.array([], dtype=complex), 1.0
    cond = float(S[0] / S[K - 1])
    if cond > MAX_PENCIL_COND and not allow_ill_conditioned:
        raise NumericalError("pole extraction unstable; increase n or reduce r")
    if K == L:
        log.debug("pole count hit the pencil size %d; K_max may be too small", L)
    Uk, Sk, Vk = U[:, :K], S[:K], Vh[:K].conj().T
    A = (Uk.conj().T @ H1 @ Vk) / Sk[:, None]
    return np.linalg.eigvals(A), cond


def _merge_clusters(poles: np.ndarray, tol: float = MERGE_TOL) -> list[complex]:
    """Replace clusters of mutually close eigenvalues by copies of their mean."""
    poles = list(poles)
    out: list[complex] = []
    while poles:
        seed = poles.pop(0)
        cluster = [seed]
        grew = True
        while grew:
            grew = False
            for p in list(poles):
                if min(abs(p - q) for q in cluster) <= tol:
                    cluster.append(p)
                    poles.remove(p)
                    grew = True
        mean = complex(np.mean(cluster))
        out.extend([mean] * len(cluster))
    return out


def _level_origin_count(lc: LaurentCoefficients, zeros) -> int:
    """Origin multiplicity from ``c_0 = r^(2m) * mean |B_0(r e^{it})|^2``."""
    c0 = lc[0].real
    if c0 <= 0:
        raise NumericalError("non-positive mean of P_r")
    nodes = 4 * max(2 * lc.N + 1, 256)
    z = lc.r * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    model = np.ones(nodes)
    for a in zeros:
        model = model * np.abs(blaschke_factor(a, z)) ** 2
    m_est = np.log(c0 / model.mean()) / (2.0 * np.log(lc.r))
    m = int(round(m_est))
    if abs(m_est - m) > 0.25 or m < 0:
        log.debug("origin multiplicity estimate %.3f is not near an integer", m_est)
    return max(m, 0)


def extract_inner_poles(lc: LaurentCoefficients, K_max: int = DEFAULT_KMAX,
                        rank_rule: str = "gap", allow_ill_conditioned: bool = False,
                        order: int | None = None) -> PoleSet:
    """Poles of ``P_r`` inside ``|z| < r`` plus the origin multiplicity.

    ``order`` fixes the pencil rank instead of ``rank_rule``.  A pencil with condition above ``MAX_PENCIL_COND`` raises unless
    ``allow_ill_conditioned``; the caller must then verify the result
    (``mqpc_retrieve`` does so against the modulus data).
    """
    if K_max < 1:
        raise InputError("K_max must be >= 1")
    h = lc.negative
    # a principal part at round-off level of c_0 means P_r is analytic inside
    if np.max(np.abs(h), initial=0.0) <= RANK_FLOOR * abs(lc[0]):
        poles, cond = np.array([], dtype=complex), 1.0
    else:
        poles, cond = _pencil_poles(h, K_max, rank_rule, allow_ill_conditioned, order)
    poles = _merge_clusters(poles)
    snap = ORIGIN_SNAP * lc.r
    at_origin = sum(1 for p in poles if abs(p) < snap)
    inner = [p for p in poles if snap <= abs(p) < lc.r]
    discarded = sum(1 for p in poles if abs(p) >= lc.r)
    m = at_origin + _level_origin_count(lc, [p / lc.r for p in inner])
    return PoleSet(tuple(inner), m, discarded, cond)


def extract_outer_poles(lc: LaurentCoefficients, K_max: int = DEFAULT_KMAX) -> np.ndarray:
    """Poles outside the unit circle, from the positive-index coefficients.

    An outer pole ``w`` contributes ``c_q ~ w^(-q)``, so the pencil on
    ``c_1, c_2, ...`` returns ``1/w``.
    """
    h = lc.positive
    if not np.any(h):
        return np.array([], dtype=complex)
    inv, _ = _pencil_poles(h, K_max, rank_rule="noise", allow_ill_conditioned=True)
    inv = inv[np.abs(inv) > 0]
    return 1.0 / inv


def zeros_from_poles(poles: PoleSet, r: float) -> BlaschkeProduct:
    zeros = [p / r for p in poles.inner_poles]
    if any(abs(a) >= 1.0 for a in zeros):
        raise NumericalError("inconsistent pole radius; r too small or spurious pole")
    return BlaschkeProduct(m=poles.origin_count, zeros=tuple(zeros))


def pr_residual(inner_modulus_r: RealSamples, B: BlaschkeProduct) -> float:
    """Relative misfit of ``|B(r e^{it})|^2`` against the data."""
    target = inner_modulus_r.values**2
    model = np.abs(B(inner_modulus_r.grid.points)) ** 2
    return float(np.linalg.norm(model - target) / np.linalg.norm(target))


def polish_zeros(inner_modulus_r: RealSamples, B: BlaschkeProduct, max_move: float = 1e-2) -> BlaschkeProduct:
    """Least-squares refinement of the pencil zeros against ``|B(r e^{it})|^2``.

    Several small poles near the origin make the Hankel pencil lose digits
    (smallest kept singular value near 1e-11), while the modulus data
    itself still pins each zero down.  The origin multiplicity is kept
    fixed.  The refinement is discarded if it does not lower the residual
    or moves any zero by more than ``max_move``.
    """
    if not B.zeros:
        return B
    pts = inner_modulus_r.grid.points
    target = inner_modulus_r.values**2
    base = np.abs(pts) ** (2 * B.m)

    def residual(params):
        v = base.copy()
        for a in params[0::2] + 1j * params[1::2]:
            v = v * np.abs(blaschke_factor(a, pts)) ** 2
        return v - target

    start = np.array(B.zeros)
    x0 = np.column_stack([start.real, start.imag]).ravel()
    sol = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    new = sol.x[0::2] + 1j * sol.x[1::2]
    if (np.linalg.norm(sol.fun) >= np.linalg.norm(residual(x0))
            or np.any(np.abs(new - start) > max_move)
            or np.any(np.abs(new) >= 1.0) or np.any(new == 0)):
        log.debug("zero polish rejected")
        return B
    return BlaschkeProduct(m=B.m, zeros=tuple(new))


ORDER_SLACK = 10.0
RAW_SLACK = 1e3


def select_order(lc: LaurentCoefficients, inner_modulus_r: RealSamples,
                 K_max: int = DEFAULT_KMAX) -> tuple[PoleSet, BlaschkeProduct, float]:
    """Pencil order chosen by how well the polished zeros fit the data.

    Candidates run from 0 up to the noise-rule rank.  Each is turned into
    zeros and scored by :func:`pr_residual`; those within ``RAW_SLACK`` of
    the best raw score are polished and re-scored, and the smallest order
    within ``ORDER_SLACK`` of the best polished score wins.
    """
    h = lc.negative
    if np.max(np.abs(h), initial=0.0) <= RANK_FLOOR * abs(lc[0]):
        top = 0
    else:
        S = np.linalg.svd(_hankel(h, K_max)[0], compute_uv=False)
        top = numerical_rank(S, "noise") if S[0] > 0 else 0
    raw = []
    for K in range(top + 1):
        poles = extract_inner_poles(lc, K_max, allow_ill_conditioned=True, order=K)
        try:
            B = zeros_from_poles(poles, lc.r)
        except NumericalError:
            continue
        raw.append((K, poles, B, pr_residual(inner_modulus_r, B)))
    # polishing is the expensive step; skip candidates that start far behind
    cut = RAW_SLACK * min((f[3] for f in raw), default=np.inf)
    fits = []
    for K, poles, B, res in raw:
        if res <= cut:
            B = polish_zeros(inner_modulus_r, B)
            fits.append((K, poles, B, pr_residual(inner_modulus_r, B)))
    if not fits:
        raise NumericalError("pole extraction unstable; increase n or reduce r")
    best = min(f[3] for f in fits)
    K, poles, B, res = next(f for f in fits if f[3] <= ORDER_SLACK * best)
    log.debug("pencil order %d of %d candidates, residual %.2e", K, top, res)
    return poles, B, res


def mqpc_retrieve(measurements: ModulusField, r: float = DEFAULT_R, N: int | None = None,
                  K_max: int = DEFAULT_KMAX, polish: bool = True) -> ReconstructionResult:
    r = float(r)
    if not (0.0 < r < 1.0):
        raise InputError("MQPC radius must lie in (0, 1)")
    if r not in measurements:
        raise InputError("interior circle at r missing")
    n = measurements.n
    N = default_order(n) if N is None else int(N)
    outer = outer_boundary(measurements.boundary)
    samples = measurements[r]
    inner_mod = RealSamples(samples.grid, samples.values / np.abs(outer_interior(outer, samples.grid.points)))
    pr = pr_boundary(inner_mod)
    lc = laurent_coeffs(pr, N, r)
    if polish:
        poles, B, res = select_order(lc, inner_mod, K_max)
        # an ill-conditioned pencil is kept only if the polished zeros
        # reproduce the data
        if poles.condition > MAX_PENCIL_COND and res > VERIFY_TOL:
            raise NumericalError("pole extraction unstable; increase n or reduce r")
    else:
        poles = extract_inner_poles(lc, K_max)
        B = zeros_from_poles(poles, r)

    radii = measurements.interior_radii
    measured = {rho: measurements[rho] for rho in radii}
    stages = [(0, modulus_misfit(measured, outer, BlaschkeProduct(), radii))]
    if B.degree:
        stages.append((B.degree, modulus_misfit(measured, outer, B, radii)))
    return ReconstructionResult(
        outer=outer,
        inner=B,
        stage_errors=stages,
        reconstructed=reconstruct(outer, B, [*radii, 1.0]),
        stop_reason="poles",
        extra={"laurent": lc, "poles": poles},
    )
