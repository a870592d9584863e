"""``retrieve`` command line entry point.

Exit status: 0 success, 2 input/config error, 3 numerical failure.  On
failure a JSON error object is printed to stderr (and written to
``<out>/error.json`` when the directory is usable).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import InputError, RetrievalError
from .report import RunConfig, run
from .sampling import load_modulus_field


def _radii(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad radius list {text!r}") from None


def load_zeros(path: Path) -> np.ndarray:
    """Zeros file: CSV with header ``re,im``, one zero per row."""
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "re,im":
        raise InputError(f"{path}: expected header re,im")
    zeros = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            re_, im_ = (float(x) for x in line.split(","))
        except ValueError:
            raise InputError(f"{path}: row {lineno}: expected two numbers") from None
        zeros.append(complex(re_, im_))
    return np.array(zeros)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="retrieve", description="Phase retrieval in H^2 of the disc from modulus data.")
    p.add_argument("--method", choices=["mqmv", "mqpc"], required=True)
    p.add_argument("--n", type=int, required=True, help="angular nodes per circle")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="modulus CSV (rho,j,modulus)")
    src.add_argument("--example", type=int, choices=[1, 2])
    seeding = p.add_mutually_exclusive_group()
    seeding.add_argument("--zeros", type=Path, help="zeros for example 2 (CSV re,im)")
    seeding.add_argument("--seed", type=int)
    p.add_argument("--r", type=float, default=0.8, help="MQPC circle radius")
    p.add_argument("--radii", type=_radii, help="comma-separated interior radii")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--max-zeros", type=int, default=30)
    p.add_argument("--laurent-order", type=int)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fail(exc: Exception, status: int, out: Path | None) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_status": status}
    text = json.dumps(payload)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(
            method=args.method, n=args.n, radii=args.radii, r=args.r, epsilon=args.epsilon,
            max_zeros=args.max_zeros, laurent_order=args.laurent_order, kmax=args.kmax,
            seed=args.seed, example=args.example, output_dir=str(args.out),
        )
        zeros = None
        if args.zeros is not None:
            if args.example != 2:
                raise InputError("--zeros only applies to --example 2")
            zeros = load_zeros(args.zeros)
        measurements = None
        if args.input is not None:
            with open(args.input, "rb") as fh:
                measurements = load_modulus_field(fh)
        report, _, comparison = run(cfg, measurements, zeros)
    except RetrievalError as exc:
        return _fail(exc, exc.exit_code if exc.exit_code in (2, 3) else 3, args.out)
    except OSError as exc:
        return _fail(exc, 2, args.out)
    summary = {
        "m": report.m,
        "zeros": report.zeros,
        "final_error": report.final_error,
        "stop_reason": report.stop_reason,
    }
    if comparison is not None:
        summary["max_zero_distance"] = comparison["zero_matching"]["max_distance"]
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
