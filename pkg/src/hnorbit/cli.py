"""Command-line front end: ``hnorbit {minima,hnf,orbit,random,cover}``.

Exit codes: 0 success, 1 input error, 2 resource error, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .convex import cover_condition_check
from .errors import BudgetExhausted, IntegrityError, PreconditionError, ResourceError
from .filtration import grayson_profile, hn_filtration
from .generate import random_lattice
from .io import (
    atomic_write,
    digest_bytes,
    dumps,
    family_from_dict,
    grayson_svg,
    lattice_to_dict,
    read_lattice_file,
    run_record,
)
from .lattice import NormSpec, successive_minima
from .orbit import SearchOptions, find_stable, find_well_rounded

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_BUDGET = 0, 1, 2, 3


def _fmt(v):
    return format(v, ".12g")


def _emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _record(args, command, digest, seed, options, payload, timings=None):
    if getattr(args, "record", None):
        rec = run_record(command, sys.argv[1:] if args.argv is None else args.argv, digest, seed,
                         options, payload, timings)
        atomic_write(args.record, dumps(rec, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------- commands


def cmd_minima(args):
    L, _, raw = read_lattice_file(args.file)
    norm = NormSpec.by_name(args.norm, L.n)
    m = successive_minima(L, norm)
    print(" ".join(_fmt(v) for v in m.values))
    for i, (c, v) in enumerate(zip(m.witnesses, m.values), 1):
        print(f"lambda_{i} = {_fmt(v)}  coefficients {list(c)}")
    payload = {"norm": norm.kind, "minima": list(m.values), "witnesses": [list(c) for c in m.witnesses]}
    _record(args, "minima", digest_bytes(raw), None, {"norm": args.norm}, payload)
    return EXIT_OK


def cmd_hnf(args):
    L, info, raw = read_lattice_file(args.file)
    prof = grayson_profile(L, args.tol)
    hn = hn_filtration(L, args.tol, profile=prof)
    print(f"HN filtration ranks: {' < '.join(str(r) for r in hn.ranks)}")
    print("trivial (stable)" if hn.is_trivial else "nontrivial")
    for k, y, isv in prof.csv_rows():
        mark = "*" if isv else " "
        if prof.exact_sq is not None:
            sq = prof.exact_sq[k]
            print(f"{mark} rank {k}: min log covolume = 1/2*log({sq}) = {_fmt(y)}")
        else:
            print(f"{mark} rank {k}: min log covolume = {_fmt(y)}")
    for g in hn.proper_members():
        print(f"  member rank {g.rank}: generators {[list(c) for c in g.gens]}")
    if args.csv:
        atomic_write(args.csv, prof.to_csv())
    if args.svg:
        atomic_write(args.svg, grayson_svg(prof))
    payload = {
        "ranks": hn.ranks,
        "vertices": list(prof.vertex_ranks),
        "profile": [[k, y] for k, y in prof.points],
        "exact_squared_covolumes": None if prof.exact_sq is None else [str(q) for q in prof.exact_sq],
        "members": [[list(c) for c in g.gens] for g in hn.proper_members()],
    }
    _record(args, "hnf", digest_bytes(raw), None, {"tol": args.tol}, payload)
    return EXIT_OK


def cmd_orbit(args):
    L, _, raw = read_lattice_file(args.file)
    opts = SearchOptions(seed=args.seed, certify=args.certify)
    if args.budget is not None:
        opts.max_time = args.budget
    if args.max_iter is not None:
        opts.max_iter = args.max_iter
    if args.tol is not None:
        opts.tol = args.tol
    norm = NormSpec.by_name(args.norm, L.n)
    code = EXIT_OK
    try:
        if args.target == "stable":
            res = find_stable(L, opts)
        else:
            res = find_well_rounded(L, norm, opts)
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        res = exc.result
        code = EXIT_BUDGET
    text = res.to_json(indent=2) + "\n"
    _emit(text, args.out)
    if args.out:
        status = "success" if res.success else "failure"
        print(f"{status}: margin {res.margin:.3e} at x = {[_fmt(v) for v in res.witness.x]}")
    _record(args, "orbit", digest_bytes(raw), args.seed, {"target": args.target, "norm": args.norm,
            "options": res.options}, res.to_dict(timings=False), {"wall_time": res.wall_time})
    return code


def cmd_random(args):
    L = random_lattice(args.n, args.seed, args.dist)
    meta = {"generator": args.dist, "seed": args.seed, "n": args.n}
    d = lattice_to_dict(L, meta, unimodular=True)
    text = json.dumps(d, indent=2) + "\n"
    _emit(text, args.out)
    _record(args, "random", None, args.seed, {"n": args.n, "dist": args.dist}, d)
    return EXIT_OK


def cmd_cover(args):
    raw = Path(args.file).read_bytes()
    try:
        d = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"{args.file}: not valid JSON ({exc})") from None
    n, family = family_from_dict(d)
    depth = args.depth
    rep = cover_condition_check(family, n, depth=depth)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    payload = rep.to_dict()
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    _record(args, "cover", digest_bytes(raw), None, {"depth": depth}, payload)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="hnorbit", description="Lattices, HN filtrations and diagonal orbits.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--record", help="write a JSON run record here")

    s = sub.add_parser("minima", help="successive minima with witnesses")
    s.add_argument("file")
    s.add_argument("--norm", default="euclidean", choices=["euclidean", "linf", "l1"])
    s.add_argument("--tol", type=float, default=1e-9)
    common(s)
    s.set_defaults(func=cmd_minima)

    s = sub.add_parser("hnf", help="Harder-Narasimhan filtration and Grayson profile")
    s.add_argument("file")
    s.add_argument("--csv", help="write the Grayson profile CSV here")
    s.add_argument("--svg", help="write an SVG of the Grayson polygon here")
    s.add_argument("--tol", type=float, default=1e-9)
    common(s)
    s.set_defaults(func=cmd_hnf)

    s = sub.add_parser("orbit", help="search the diagonal orbit for a stable or well-rounded point")
    s.add_argument("file")
    s.add_argument("--target", choices=["stable", "wr"], default="stable")
    s.add_argument("--norm", default="euclidean", choices=["euclidean", "linf", "l1"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=float, default=None, help="time budget in seconds (default 60)")
    s.add_argument("--max-iter", type=int, default=None, help="iteration budget (default 10000)")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--certify", action="store_true", help="re-check the witness with brute force")
    s.add_argument("--out", help="write the SearchResult JSON here instead of stdout")
    common(s)
    s.set_defaults(func=cmd_orbit)

    s = sub.add_parser("random", help="seeded random lattice file")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dist", choices=["gaussian-qr", "integer-unimodular"], default="gaussian-qr")
    s.add_argument("--out")
    common(s)
    s.set_defaults(func=cmd_random)

    s = sub.add_parser("cover", help="check the cover hypotheses on a polyhedron family")
    s.add_argument("file")
    s.add_argument("--depth", type=int, default=None)
    s.add_argument("--out")
    common(s)
    s.set_defaults(func=cmd_cover)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PreconditionError, IntegrityError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
