"""Stage-error table for Example 1 (MQMV, n = 64 and 256).

Prints err_k for k = 1..m next to the reference values for the
final stage.  Usage: python3 scripts/example1_errors.py [--sizes 64 256]
"""

import argparse

from hardyphase.report import RunConfig, error_table, format_error_table, run

REFERENCE_FINAL = {64: 1.8965e-5, 256: 1.8667e-7}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256])
    args = ap.parse_args()
    reports = []
    for n in args.sizes:
        rep, _, cmp_ = run(RunConfig(method="mqmv", n=n, example=1))
        reports.append(rep)
        ref = REFERENCE_FINAL.get(n)
        ref_txt = f"  reference {ref:.4e}" if ref else ""
        print(f"n={n}: {rep.stop_reason}, final {rep.final_error:.4e}{ref_txt}, "
              f"max zero distance {cmp_['zero_matching']['max_distance']:.2e}, {rep.wall_time:.2f}s")
    print()
    print(format_error_table(error_table(reports)))


if __name__ == "__main__":
    main()
