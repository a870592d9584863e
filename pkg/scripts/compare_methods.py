"""MQMV vs MQPC on seeded Example 2 products.

For each seed both pipelines run on the same modulus field (the MQMV search
radii plus the MQPC circle) and the zero multisets are matched against each
other and against the truth.
"""

import argparse
import time

from hardyphase.generators import gen_example2
from hardyphase.minvalue import DEFAULT_SEARCH_RADII, MinSearchConfig, mqmv_retrieve
from hardyphase.paraconjugate import mqpc_retrieve
from hardyphase.report import match_zeros


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--r", type=float, default=0.8)
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    args = ap.parse_args()
    radii = sorted(set(DEFAULT_SEARCH_RADII) | {args.r})
    print(f"{'seed':>6}{'mv-pc':>12}{'mv-true':>12}{'pc-true':>12}{'t_mv':>8}{'t_pc':>8}")
    for seed in args.seeds:
        field, _, zeros = gen_example2(args.n, radii, seed=seed)
        t0 = time.perf_counter()
        mv = mqmv_retrieve(field, MinSearchConfig(search_radii=DEFAULT_SEARCH_RADII)).inner.all_zeros()
        t1 = time.perf_counter()
        pc = mqpc_retrieve(field, r=args.r).inner.all_zeros()
        t2 = time.perf_counter()
        d = [match_zeros(a, b)["max_distance"] for a, b in ((mv, pc), (mv, zeros), (pc, zeros))]
        print(f"{seed:>6}" + "".join(f"{x:>12.2e}" for x in d) + f"{t1 - t0:>8.2f}{t2 - t1:>8.2f}")


if __name__ == "__main__":
    main()
