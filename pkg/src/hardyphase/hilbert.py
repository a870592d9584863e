"""Mechanical quadrature for the circular Hilbert transform.

The transform is

    (H f)(t) = 1/(2 pi) p.v. int_0^{2 pi} f(x) cot((t - x)/2) dx,

so that ``H cos = sin`` and ``H sin = -cos``.  Subtracting ``f(t)`` removes
the singularity; the remaining periodic integrand is handled by the
trapezoidal rule on the lattice ``x_j = 2 pi j / n`` and the subtracted
term is summed in closed form with ``(1/n) sum_j cot((t - x_j)/2) = cot(n t / 2)``.
At a node the subtracted term degenerates to a derivative correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .sampling import RealSamples

# Off-grid evaluations closer than NODE_TOL_FACTOR / n radians to a node are
# answered by the on-node formula.
NODE_TOL_FACTOR = 2.0 * np.pi / 1e6


def _check(f: RealSamples) -> np.ndarray:
    n = f.grid.n
    if n < 4 or n % 2:
        raise InputError(f"MQM Hilbert transform needs an even node count >= 4, got {n}")
    if not np.all(np.isfinite(f.values)):
        raise InputError("non-finite sample values")
    return f.values


def _wavenumbers(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0  # Nyquist mode differentiates to zero
    return k


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """Derivative of the trigonometric interpolant at the nodes."""
    values = np.asarray(values, dtype=float)
    return np.fft.ifft(1j * _wavenumbers(len(values)) * np.fft.fft(values)).real


def trig_interpolate(values: np.ndarray, t) -> np.ndarray:
    """Evaluate the degree-n/2 trigonometric interpolant at angles ``t``.

    The Nyquist coefficient is split evenly between ``+n/2`` and ``-n/2``,
    which keeps the interpolant real.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    c = np.fft.fft(values) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(t, k))
    out = phase @ c
    if n % 2 == 0:
        # fftfreq puts the Nyquist mode at -n/2; replace it by the cosine.
        nyq = c[n // 2]
        out = out - nyq * np.exp(-1j * (n // 2) * t) + nyq * np.cos((n // 2) * t)
    return out.real


def _cot_kernel(n: int) -> np.ndarray:
    m = np.arange(1, n)
    ker = np.zeros(n)
    ker[1:] = 1.0 / np.tan(np.pi * m / n)
    return ker


def hilbert_mqm_on_nodes(f: RealSamples) -> RealSamples:
    """MQM Hilbert transform at the lattice nodes.

    ``(Qf)(x_k) = (1/n) sum_{j != k} cot((x_k - x_j)/2) f(x_j) - (2/n) f'(x_k)``

    The cotangent sum is a circular convolution and is done with FFTs.
    """
    values = _check(f)
    n = len(values)
    conv = np.fft.ifft(np.fft.fft(_cot_kernel(n)) * np.fft.fft(values)).real / n
    return RealSamples(f.grid, conv - (2.0 / n) * spectral_derivative(values))


def hilbert_mqm_on_nodes_direct(f: RealSamples) -> RealSamples:
    """Same as :func:`hilbert_mqm_on_nodes`, O(n^2) with no FFT in the sum."""
    values = _check(f)
    n = len(values)
    x = f.grid.nodes
    diff = np.subtract.outer(x, x) / 2.0
    np.fill_diagonal(diff, np.pi / 2.0)  # cot = 0 on the diagonal
    total = (1.0 / np.tan(diff)) @ values / n
    return RealSamples(f.grid, total - (2.0 / n) * spectral_derivative(values))


def hilbert_mqm_offgrid(f: RealSamples, t: float) -> float:
    """MQM Hilbert transform at an angle between nodes.

    ``f(t)`` is taken from the trigonometric interpolant.  Angles within
    ``2 pi / (1e6 n)`` of a node are answered by the on-node formula.
    """
    values = _check(f)
    n = len(values)
    t = float(np.mod(t, 2.0 * np.pi))
    h = 2.0 * np.pi / n
    k = int(np.rint(t / h)) % n
    dist = abs((t - k * h + np.pi) % (2.0 * np.pi) - np.pi)
    if dist <= NODE_TOL_FACTOR / n:
        return float(hilbert_mqm_on_nodes(f).values[k])
    x = f.grid.nodes
    ft = float(trig_interpolate(values, t))
    s = np.sum(values / np.tan((t - x) / 2.0)) / n
    return float(s - ft / np.tan(n * t / 2.0))


def hilbert_pv_oracle(func: Callable[[np.ndarray], np.ndarray], t: float, m: int = 4096) -> float:
    """Brute-force principal value by singularity subtraction.

    Uses ``m`` trapezoid nodes shifted half a step off ``t`` so the
    subtracted integrand is never evaluated at its removable singularity.
    Slow and independent of the MQM code path; meant for tests.
    """
    if m < 4:
        raise InputError("oracle needs at least 4 nodes")
    x = t + np.pi / m + 2.0 * np.pi * np.arange(m) / m
    ft = func(np.array([t]))[0]
    fx = func(x)
    if not (np.all(np.isfinite(fx)) and np.isfinite(ft)):
        raise InputError("non-finite density")
    return float(np.sum((fx - ft) / np.tan((t - x) / 2.0)) / m)


@dataclass(frozen=True)
class HilbertResult:
    samples: RealSamples
    offgrid_evaluator: Callable[[float], float]

    def __call__(self, t: float) -> float:
        return self.offgrid_evaluator(t)


def hilbert_mqm(f: RealSamples) -> HilbertResult:
    return HilbertResult(hilbert_mqm_on_nodes(f), lambda t: hilbert_mqm_offgrid(f, t))
