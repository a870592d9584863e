"""Run orchestration: configs, reports, output files, comparison tables."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError
from .factorization import ReconstructionResult, relative_error
from .generators import gen_example1, gen_example2
from .minvalue import DEFAULT_SEARCH_RADII, MinSearchConfig, mqmv_retrieve
from .paraconjugate import DEFAULT_KMAX, DEFAULT_R, mqpc_retrieve
from .sampling import ModulusField, store_many, store_modulus_field

METHODS = ("mqmv", "mqpc")


@dataclass(frozen=True)
class RunConfig:
    method: str = "mqmv"
    n: int = 64
    radii: tuple | None = None
    r: float = DEFAULT_R
    epsilon: float = 1e-3
    max_zeros: int = 30
    laurent_order: int | None = None
    kmax: int = DEFAULT_KMAX
    seed: int | None = None
    example: int | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        if self.n < 4 or self.n % 2:
            raise InputError("n must be an even integer >= 4")
        if self.radii is not None:
            object.__setattr__(self, "radii", tuple(float(x) for x in self.radii))
        if self.example not in (None, 1, 2):
            raise InputError("example must be 1 or 2")
        if self.method == "mqpc":
            if not (0.0 < self.r < 1.0):
                raise InputError("r must lie in (0, 1)")
            if self.kmax < 1:
                raise InputError("kmax must be >= 1")
            if self.laurent_order is not None and 2 * self.laurent_order + 1 > self.n:
                raise InputError("laurent order too large for n (need 2N+1 <= n)")
        else:
            if not (0.0 < self.epsilon < 1.0):
                raise InputError("epsilon must lie in (0, 1)")
            if self.max_zeros < 1:
                raise InputError("max_zeros must be >= 1")

    def generator_radii(self) -> tuple:
        if self.radii is not None:
            return self.radii
        return DEFAULT_SEARCH_RADII if self.method == "mqmv" else (self.r,)


@dataclass
class RunReport:
    method: str
    n: int
    zeros: list  # [re, im, multiplicity] for each distinct nonzero zero
    m: int
    stage_errors: list  # [k, err_k]
    final_error: float
    stop_reason: str
    wall_time: float
    config: dict = field(default_factory=dict)

    def zero_multiset(self) -> np.ndarray:
        out = [0j] * self.m
        for re, im, mult in self.zeros:
            out.extend([complex(re, im)] * int(mult))
        return np.array(out, dtype=complex)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def comparable(self) -> dict:
        """Everything except wall time, for determinism checks."""
        d = asdict(self)
        d.pop("wall_time")
        return d


def _group_zeros(zeros) -> list:
    groups: list[list] = []
    for a in zeros:
        for g in groups:
            if g[0] == a:
                g[1] += 1
                break
        else:
            groups.append([complex(a), 1])
    return [[a.real, a.imag, k] for a, k in groups]


def make_report(cfg: RunConfig, res: ReconstructionResult, wall_time: float) -> RunReport:
    return RunReport(
        method=cfg.method,
        n=cfg.n,
        zeros=_group_zeros(res.inner.zeros),
        m=res.inner.m,
        stage_errors=[[int(k), float(e)] for k, e in res.stage_errors],
        final_error=float(res.final_error),
        stop_reason=res.stop_reason,
        wall_time=wall_time,
        config=asdict(cfg),
    )


def retrieve(cfg: RunConfig, measurements: ModulusField) -> ReconstructionResult:
    if measurements.n != cfg.n:
        raise InputError(f"input has {measurements.n} nodes but config says n={cfg.n}")
    if cfg.method == "mqmv":
        search = cfg.radii if cfg.radii is not None else measurements.interior_radii
        mcfg = MinSearchConfig(epsilon=cfg.epsilon, max_zeros=cfg.max_zeros, search_radii=search)
        return mqmv_retrieve(measurements, mcfg)
    return mqpc_retrieve(measurements, r=cfg.r, N=cfg.laurent_order, K_max=cfg.kmax)


def generate(cfg: RunConfig, zeros=None):
    """Synthetic measurements for ``cfg.example``: ``(field, truth, true_zeros)``."""
    radii = cfg.generator_radii()
    if cfg.example == 1:
        from .generators import example1_inner

        field_, truth = gen_example1(cfg.n, radii)
        return field_, truth, example1_inner().all_zeros()
    if cfg.example == 2:
        seed = cfg.seed if cfg.seed is not None else 42
        return gen_example2(cfg.n, radii, zeros=zeros, seed=None if zeros is not None else seed)
    raise InputError("no example selected")


def match_zeros(found, truth) -> dict:
    """Optimal assignment between two zero multisets."""
    found = np.asarray(found, dtype=complex)
    truth = np.asarray(truth, dtype=complex)
    if found.size == 0 or truth.size == 0:
        return {"distances": [], "max_distance": float("inf") if truth.size or found.size else 0.0,
                "unmatched_found": int(found.size), "unmatched_truth": int(truth.size)}
    cost = np.abs(found[:, None] - truth[None, :])
    i, j = linear_sum_assignment(cost)
    d = cost[i, j]
    return {
        "distances": [float(x) for x in d],
        "max_distance": float(d.max()),
        "unmatched_found": int(found.size - i.size),
        "unmatched_truth": int(truth.size - j.size),
    }


def compare_report(report: RunReport, truth_zeros, truth_samples: Mapping | None = None,
                   reconstructed: Mapping | None = None) -> dict:
    out = {
        "n": report.n,
        "method": report.method,
        "stage_errors": report.stage_errors,
        "final_error": report.final_error,
        "zero_matching": match_zeros(report.zero_multiset(), truth_zeros),
    }
    if truth_samples is not None and reconstructed is not None:
        common = sorted(set(truth_samples) & set(reconstructed))
        out["complex_relative_error"] = {
            str(r): relative_error(truth_samples[r], reconstructed[r]) for r in common
        }
    return out


def error_table(reports: Sequence[RunReport]) -> dict:
    """``{n: [err_1, err_2, ...]}``, the stage errors by sampling size."""
    return {rep.n: [e for k, e in rep.stage_errors if k >= 1] for rep in reports}


def format_error_table(table: Mapping[int, Sequence[float]]) -> str:
    width = max((len(v) for v in table.values()), default=0)
    head = "n".rjust(6) + "".join(f"{k:>13d}" for k in range(1, width + 1))
    lines = [head]
    for n, errs in sorted(table.items()):
        lines.append(f"{n:>6d}" + "".join(f"{e:>13.4e}" for e in errs))
    return "\n".join(lines)


PLOT_DESCRIPTIONS = {
    "modulus_overlay": {
        "files": ["measured_modulus.csv", "reconstructed_modulus.csv"],
        "x": "node index j (angle 2*pi*j/n)",
        "y": "modulus",
        "series": "one curve per circle rho, measured vs reconstructed",
    },
    "error_curve": {
        "files": ["errors.csv"],
        "x": "number of recovered zeros k",
        "y": "relative error err_k (log scale)",
    },
}


def write_outputs(out_dir: Path, report: RunReport, measurements: ModulusField,
                  res: ReconstructionResult, comparison: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    with open(out_dir / "reconstructed.csv", "wb") as fh:
        store_many(res.reconstructed.values(), fh)
    with open(out_dir / "measured_modulus.csv", "wb") as fh:
        store_modulus_field(measurements, fh)
    recon_mod = [s.modulus for s in res.reconstructed.values()]
    with open(out_dir / "reconstructed_modulus.csv", "wb") as fh:
        store_many(recon_mod, fh)
    with open(out_dir / "errors.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,err\n")
        for k, e in report.stage_errors:
            fh.write(f"{k},{format(e, '.17g')}\n")
    (out_dir / "plots.json").write_text(json.dumps(PLOT_DESCRIPTIONS, indent=2) + "\n", encoding="utf-8")
    if comparison is not None:
        (out_dir / "comparison.json").write_text(json.dumps(comparison, indent=2) + "\n", encoding="utf-8")


def run(cfg: RunConfig, measurements: ModulusField | None = None, zeros=None):
    """Execute one pipeline; returns ``(report, result, comparison)``.

    With ``measurements=None`` the configured example generator supplies
    the input and a ground-truth comparison is attached.
    """
    truth = truth_zeros = None
    if measurements is None:
        measurements, truth, truth_zeros = generate(cfg, zeros)
    start = time.perf_counter()
    res = retrieve(cfg, measurements)
    report = make_report(cfg, res, time.perf_counter() - start)
    comparison = None
    if truth_zeros is not None:
        comparison = compare_report(report, truth_zeros, truth, res.reconstructed)
    if cfg.output_dir is not None:
        write_outputs(Path(cfg.output_dir), report, measurements, res, comparison)
    return report, res, comparison
