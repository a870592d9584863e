"""Circle grids, sample containers and their CSV formats.

Every circle is sampled on the same equispaced angular lattice
``x_j = 2*pi*j/n``.  Angles are never written to disk: a row carries the
radius and the node index ``j`` only, so a file re-parses to exactly the
same lattice.

Modulus CSV::

    rho,j,modulus

Complex CSV::

    rho,j,re,im

Values are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import BinaryIO, Mapping

import numpy as np

from .errors import InputError

MIN_NODES = 4
MODULUS_HEADER = ("rho", "j", "modulus")
COMPLEX_HEADER = ("rho", "j", "re", "im")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CircleGrid:
    """``n`` equispaced nodes on the circle ``|z| = rho``."""

    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise InputError(f"node count must be an integer >= {MIN_NODES}, got {self.n}")
        if not (0.0 < self.rho <= 1.0):
            raise InputError(f"radius must lie in (0, 1], got {self.rho}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def points(self) -> np.ndarray:
        """Complex sample locations ``rho * exp(i x_j)``."""
        return self.rho * np.exp(1j * self.nodes)

    def with_radius(self, rho: float) -> "CircleGrid":
        return CircleGrid(self.n, rho)


def make_circle_grid(n: int, rho: float = 1.0) -> CircleGrid:
    return CircleGrid(n, rho)


@dataclass(frozen=True)
class RealSamples:
    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, float)
        if values.shape != (self.grid.n,):
            raise InputError(f"expected {self.grid.n} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ComplexSamples:
    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, complex)
        if values.shape != (self.grid.n,):
            raise InputError(f"expected {self.grid.n} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def modulus(self) -> RealSamples:
        return RealSamples(self.grid, np.abs(self.values))


@dataclass(frozen=True)
class ModulusField:
    """Measured ``|f|`` on a finite set of circles sharing one lattice.

    ``circles`` maps radius to samples; the boundary circle ``rho = 1`` is
    mandatory.
    """

    circles: Mapping[float, RealSamples] = field(default_factory=dict)

    def __post_init__(self):
        circles = {float(r): s for r, s in sorted(self.circles.items())}
        if 1.0 not in circles:
            raise InputError("missing boundary circle")
        counts = {s.grid.n for s in circles.values()}
        if len(counts) != 1:
            raise InputError(f"circles disagree on node count: {sorted(counts)}")
        for r, s in circles.items():
            if s.grid.rho != r:
                raise InputError(f"circle keyed {r} carries grid radius {s.grid.rho}")
            if np.any(s.values < 0) or not np.all(np.isfinite(s.values)):
                raise InputError(f"negative or non-finite modulus on circle {r}")
        object.__setattr__(self, "circles", circles)

    @property
    def n(self) -> int:
        return next(iter(self.circles.values())).grid.n

    @property
    def radii(self) -> list[float]:
        return list(self.circles)

    @property
    def interior_radii(self) -> list[float]:
        return [r for r in self.circles if r < 1.0]

    @property
    def boundary(self) -> RealSamples:
        return self.circles[1.0]

    def __getitem__(self, rho: float) -> RealSamples:
        try:
            return self.circles[float(rho)]
        except KeyError:
            raise InputError(f"interior circle at r={rho} missing") from None

    def __contains__(self, rho) -> bool:
        return float(rho) in self.circles

    @classmethod
    def from_arrays(cls, n: int, values: Mapping[float, np.ndarray]) -> "ModulusField":
        return cls({r: RealSamples(CircleGrid(n, r), v) for r, v in values.items()})


# --- CSV I/O -----------------------------------------------------------------


def _write(sink: BinaryIO, header, rows) -> None:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    sink.write(buf.getvalue().encode("utf-8"))
    flush = getattr(sink, "flush", None)
    if flush is not None:
        flush()


def _sample_rows(samples):
    rho = _fmt(samples.grid.rho)
    if isinstance(samples, ComplexSamples):
        return [(rho, j, _fmt(v.real), _fmt(v.imag)) for j, v in enumerate(samples.values)]
    return [(rho, j, _fmt(v)) for j, v in enumerate(samples.values)]


def store_samples(samples, sink: BinaryIO) -> None:
    """Write one circle of real or complex samples to a binary stream."""
    header = COMPLEX_HEADER if isinstance(samples, ComplexSamples) else MODULUS_HEADER
    _write(sink, header, _sample_rows(samples))


def store_many(samples_list, sink: BinaryIO) -> None:
    """Write several circles of the same kind, grouped by circle."""
    samples_list = list(samples_list)
    if not samples_list:
        raise InputError("nothing to store")
    kinds = {type(s) for s in samples_list}
    if len(kinds) != 1:
        raise InputError("cannot mix real and complex samples in one file")
    header = COMPLEX_HEADER if ComplexSamples in kinds else MODULUS_HEADER
    rows = []
    for s in sorted(samples_list, key=lambda s: s.grid.rho):
        rows.extend(_sample_rows(s))
    _write(sink, header, rows)


def store_modulus_field(mf: ModulusField, sink: BinaryIO) -> None:
    store_many(mf.circles.values(), sink)


def _read_rows(source: BinaryIO, header):
    text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        first = next(reader)
    except StopIteration:
        raise InputError("row 1: empty file") from None
    if tuple(h.strip() for h in first) != header:
        raise InputError(f"row 1: expected header {','.join(header)}, got {','.join(first)}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            rho = float(row[0])
            j = int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise InputError(f"row {lineno}: {exc}") from None
        yield lineno, rho, j, vals


def _group(rows):
    """Group parsed rows by circle, enforcing contiguous ascending indices."""
    circles: dict[float, list] = {}
    current = None
    for lineno, rho, j, vals in rows:
        if rho != current:
            if rho in circles:
                raise InputError(f"row {lineno}: circle rho={rho} is not contiguous")
            if not (0.0 < rho <= 1.0):
                raise InputError(f"row {lineno}: radius {rho} outside (0, 1]")
            circles[rho] = []
            current = rho
        if j != len(circles[rho]):
            raise InputError(f"row {lineno}: node index {j} out of order on circle {rho}")
        circles[rho].append((lineno, vals))
    if not circles:
        raise InputError("no data rows")
    counts = {len(v) for v in circles.values()}
    if len(counts) != 1:
        last = max(line for v in circles.values() for line, _ in v)
        raise InputError(f"row {last}: inconsistent node counts across circles {sorted(counts)}")
    return circles


def load_modulus_field(source: BinaryIO) -> ModulusField:
    circles = _group(_read_rows(source, MODULUS_HEADER))
    for rho, rows in circles.items():
        for lineno, (v,) in rows:
            if v < 0 or not np.isfinite(v):
                raise InputError(f"row {lineno}: negative or non-finite modulus {v}")
    if 1.0 not in circles:
        raise InputError("missing boundary circle")
    n = len(next(iter(circles.values())))
    return ModulusField.from_arrays(n, {r: [v for _, (v,) in rows] for r, rows in circles.items()})


def load_complex_samples(source: BinaryIO) -> dict[float, ComplexSamples]:
    circles = _group(_read_rows(source, COMPLEX_HEADER))
    out = {}
    for rho, rows in circles.items():
        vals = np.array([complex(re, im) for _, (re, im) in rows])
        out[rho] = ComplexSamples(CircleGrid(len(vals), rho), vals)
    return out


def load_real_samples(source: BinaryIO) -> dict[float, RealSamples]:
    """Like :func:`load_modulus_field` but without sign or boundary checks."""
    circles = _group(_read_rows(source, MODULUS_HEADER))
    return {
        rho: RealSamples(CircleGrid(len(rows), rho), [v for _, (v,) in rows])
        for rho, rows in circles.items()
    }
