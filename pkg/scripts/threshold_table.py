"""Print the unique-mean sample threshold for the built-in norms.

    python3 scripts/threshold_table.py --linf 2 3 4 5 --l1 2 3 4
"""

import argparse
import time

from polymean.polytope import l1, linf
from polymean.uniqueness import ThresholdNotFound, threshold_search


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--linf", type=int, nargs="*", default=[2, 3, 4, 5])
    ap.add_argument("--l1", type=int, nargs="*", default=[2, 3, 4])
    args = ap.parse_args(argv)

    norms = [linf(k) for k in args.linf] + [l1(k) for k in args.l1]
    print(f"{'norm':8s} {'N':>3s} {'seconds':>8s}  witness faces")
    for norm in norms:
        t0 = time.perf_counter()
        try:
            cert = threshold_search(norm)
        except ThresholdNotFound as exc:
            print(f"{norm.name:8s} {'-':>3s} {time.perf_counter() - t0:8.2f}  {exc}")
            continue
        faces = " ".join(F.label(norm) for F in cert.witness_faces)
        print(f"{norm.name:8s} {cert.N:3d} {time.perf_counter() - t0:8.2f}  {faces}")


if __name__ == "__main__":
    main()
