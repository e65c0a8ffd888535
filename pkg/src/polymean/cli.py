"""Command-line entry point.

Exit codes: 0 success, 1 invariant or oracle failure, 2 input error,
3 internal infeasibility.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from gmpy2 import mpq

from . import experiments as ex
from . import frechet as fr
from . import uniqueness as un
from .linalg import parse_rational
from .lp import LPError
from .polytope import NormError, enumerate_polar_faces, parse_norm

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _q(x) -> str:
    return str(mpq(x))


def _approx(x) -> str:
    return f"{float(x):.6g}"


def _vec_text(v, approx=False) -> str:
    s = " ".join(_q(a) for a in v)
    if approx:
        s += "  (~ " + " ".join(_approx(a) for a in v) + ")"
    return s


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("POLYMEAN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"POLYMEAN_THREADS must be an integer, got {env!r}")
    return 1


def _load(args):
    norm = parse_norm(args.norm)
    sample = fr.load_sample(args.data)
    if sample.k != norm.k:
        raise InputError(f"sample dimension {sample.k} does not match norm dimension {norm.k}")
    return norm, sample


def _faces_arg(norm, text: str):
    """``"0,2;1;3"`` -> polar faces with those vertex indices."""
    faces = []
    for part in text.split(";"):
        try:
            idx = [int(t) for t in part.split(",") if t.strip()]
        except ValueError:
            raise InputError(f"malformed face {part!r}")
        if not idx or any(not 0 <= i < norm.r for i in idx):
            raise InputError(f"face {part!r} has no valid vertex indices")
        faces.append(norm.face(idx))
    return faces


def _fm_json(norm, sample, res):
    return {
        "norm": norm.name or "",
        "k": norm.k,
        "n": sample.n,
        "distances": [_q(d) for d in res.distances],
        "fm_dim": res.fm_dim,
        "unique": res.unique,
        "witness": [_q(a) for a in res.witness],
        "hrep": {
            "A": [[_q(a) for a in row] for row in res.fm_hrep.A],
            "b": [_q(b) for b in res.fm_hrep.b],
            "implicit_equalities": sorted(res.implicit),
        },
        "face_type": None
        if res.face_type is None
        else [list(F.vertex_indices) for F in res.face_type],
    }


def cmd_fm(args) -> int:
    norm, sample = _load(args)
    res = fr.fm_set(norm, sample, projection=args.projection)
    if args.json:
        print(json.dumps(_fm_json(norm, sample, res), indent=2))
        return EXIT_OK
    print(f"norm {norm.name or args.norm}")
    print(f"distances {_vec_text(res.distances, args.approx)}")
    print(f"dimension {res.fm_dim}")
    print(f"unique {'yes' if res.unique else 'no'}")
    print(f"witness {_vec_text(res.witness, args.approx)}")
    if res.face_type is None:
        print("face_type undefined")
    else:
        for i, F in enumerate(res.face_type, 1):
            print(f"G{i} {F.label(norm)}")
    print("constraints")
    for i, (row, b) in enumerate(zip(res.fm_hrep.A, res.fm_hrep.b)):
        op = "=" if i in res.implicit else "<="
        print(f"  {' '.join(_q(a) for a in row)} {op} {_q(b)}")
    return EXIT_OK


def cmd_face_type(args) -> int:
    norm, sample = _load(args)
    res = fr.fm_set(norm, sample, projection=args.projection)
    if res.face_type is None:
        raise fr.FaceTypeUndefined("face type undefined: data point is a Fréchet mean")
    if args.json:
        print(json.dumps([list(F.vertex_indices) for F in res.face_type]))
    else:
        for i, F in enumerate(res.face_type, 1):
            print(f"G{i} dim {F.dim} {F.label(norm)}")
    return EXIT_OK


def cmd_check(args) -> int:
    norm = parse_norm(args.norm)
    faces = _faces_arg(norm, args.faces)
    rep = un.condition_report(norm, faces)
    doc = {
        "possible": rep.possible,
        "positive_probability": rep.positive_probability,
        "unique": rep.unique,
        "predicted_fm_dim": rep.predicted_fm_dim,
    }
    if args.json:
        print(json.dumps(doc))
    else:
        for key, val in doc.items():
            print(f"{key} {str(val).lower() if isinstance(val, bool) else val}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    norm = parse_norm(args.norm)
    try:
        cert = un.threshold_search(norm, args.n_max, force=args.force)
    except un.ThresholdNotFound as err:
        print(f"error: {err}", file=sys.stderr)
        for n, (total, tested) in sorted(err.refutations.items()):
            print(f"refuted n={n} multisets={total} tested={tested}", file=sys.stderr)
        return EXIT_INVARIANT
    text = cert.to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.json:
        print(
            json.dumps(
                {
                    "norm": cert.norm_name,
                    "hash": cert.norm_hash,
                    "N": cert.N,
                    "witness": [list(F.vertex_indices) for F in cert.witness_faces],
                    "refutations": {str(n): list(v) for n, v in sorted(cert.refutations.items())},
                }
            )
        )
    else:
        print(f"N = {cert.N}")
        for F in cert.witness_faces:
            print(f"  {F.label(norm)}")
        for n, (total, tested) in sorted(cert.refutations.items()):
            print(f"refuted n={n} multisets={total} tested={tested}")
    return EXIT_OK


def _k_values(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def cmd_experiment(args) -> int:
    if args.config:
        cfgs = [ex.load_config(args.config)]
    else:
        try:
            ks = _k_values(args.k)
        except ValueError:
            raise InputError(f"malformed --k {args.k!r}")
        cfgs = [
            ex.ExperimentConfig(
                norm=args.norm,
                k=k,
                n_range=(args.n_from, args.n_to),
                trials=args.trials,
                seed=args.seed,
                denominator_bits=args.bits,
                force=args.force,
            )
            for k in ks
        ]
    result = ex.ExperimentResult()
    for cfg in cfgs:
        result = result.merge(ex.run_uniqueness_experiment(cfg, workers=_threads(args)))
    if args.csv:
        ex.emit_csv(result, args.csv, timings=args.timings)
    if args.svg:
        ex.emit_plot(result, args.svg)
    if not args.csv or args.csv == "-":
        sys.stdout.write(ex.csv_text(result, timings=args.timings))
    return EXIT_OK


def _box_arg(text: str, k: int):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise InputError("box must be written lo1,..,lok:hi1,..,hik")
    lo = [parse_rational(t) for t in lo.split(",")]
    hi = [parse_rational(t) for t in hi.split(",")]
    if len(lo) != k or len(hi) != k or any(a > b for a, b in zip(lo, hi)):
        raise InputError("box bounds do not match the dimension")
    return tuple(lo), tuple(hi)


def cmd_oracle_check(args) -> int:
    norm, sample = _load(args)
    step = parse_rational(args.step)
    box = _box_arg(args.box, norm.k) if args.box else None
    problems = fr.oracle_check(norm, sample, step, box)
    if problems:
        print(f"FAIL {problems[0]}")
        return EXIT_INVARIANT
    print("PASS")
    return EXIT_OK


def cmd_faces(args) -> int:
    norm = parse_norm(args.norm)
    faces = enumerate_polar_faces(norm, max_dim=args.max_dim, force=args.force)
    if args.json:
        print(json.dumps([{"dim": F.dim, "vertices": list(F.vertex_indices)} for F in faces]))
    else:
        for F in faces:
            print(f"dim {F.dim} {' '.join(map(str, F.vertex_indices))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polymean", description="Exact Fréchet means under polytope norms.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_output(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--json", action="store_true")
        g.add_argument("--text", action="store_true", help="plain text (default)")
        sp.add_argument("--approx", action="store_true", help="add decimal renderings")

    def with_data(sp):
        sp.add_argument("--norm", required=True, help="linf:<k>, l1:<k> or a norm file")
        sp.add_argument("--data", required=True, help="sample file")
        sp.add_argument("--projection", choices=("fourier-motzkin", "lifted"), default="fourier-motzkin")

    sp = sub.add_parser("fm", help="Fréchet mean set of a sample")
    with_data(sp)
    with_output(sp)
    sp.set_defaults(func=cmd_fm)

    sp = sub.add_parser("face-type", help="face type of a sample")
    with_data(sp)
    with_output(sp)
    sp.set_defaults(func=cmd_face_type)

    sp = sub.add_parser("check", help="uniqueness conditions for a face tuple")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--faces", required=True, help='polar vertex indices, e.g. "0,2;1;3"')
    with_output(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("threshold", help="smallest sample size with a unique mean")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--n-max", type=int, default=None)
    sp.add_argument("--out", help="write the certificate here")
    sp.add_argument("--force", action="store_true", help="lift the face enumeration guard")
    sp.add_argument("--threads", type=int, default=None)
    with_output(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("experiment", help="Monte Carlo uniqueness proportions")
    sp.add_argument("--norm", default="linf")
    sp.add_argument("--k", default="2", help="a value, a list a,b or a range a..b")
    sp.add_argument("--n-from", type=int, default=2)
    sp.add_argument("--n-to", type=int, default=10)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=lambda s: int(s, 0), default=0)
    sp.add_argument("--bits", type=int, default=53, help="dyadic rounding precision")
    sp.add_argument("--csv")
    sp.add_argument("--svg")
    sp.add_argument("--config", help="key=value config file")
    sp.add_argument("--timings", action="store_true", help="record elapsed_ms in the CSV")
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("oracle-check", help="cross-check against a grid search")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--step", required=True, help="grid step, a rational")
    sp.add_argument("--box", help="lo1,..,lok:hi1,..,hik (default: bounding box of the data)")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("faces", help="list polar faces of the unit ball")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--max-dim", type=int, default=None)
    sp.add_argument("--force", action="store_true")
    with_output(sp)
    sp.set_defaults(func=cmd_faces)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, NormError, fr.FaceTypeUndefined, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (fr.SolverError, LPError) as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
