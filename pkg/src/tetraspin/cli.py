"""Command-line entry point: ``tetraspin <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .harness import CHECKS, ANCHORS, Record, Report, SuiteConfig, dump_operator, preset, run_suite
from .oscillator import parse_word
from .reduction import BracketForm, build_reduced_r, check_selection_rules
from .scalars import ResourceGuard, TetraspinError, make_params


def _globals(sub: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    d = argparse.SUPPRESS if sub else None
    p.add_argument("--tol", type=float, default=d if sub else 1e-10)
    p.add_argument("--tail-tol", type=float, default=d if sub else 1e-14)
    p.add_argument("--format", choices=("json", "csv", "text"), default=d if sub else "text")
    p.add_argument("--out", default=d)
    return p


def _num(text: str) -> complex | float:
    z = complex(text.replace(" ", ""))
    return z.real if z.imag == 0 else z


def _common(p, *, x=True, y=False, cutoff=False):
    p.add_argument("--q", type=float, default=0.4)
    if x:
        p.add_argument("--x", type=_num, default=0.3)
    if y:
        p.add_argument("--y", type=_num, default=0.2)
    if cutoff:
        p.add_argument("--cutoff", type=int, default=12)


def build_parser() -> argparse.ArgumentParser:
    sub_globals = _globals(True)
    parser = argparse.ArgumentParser(prog="tetraspin", parents=[_globals(False)], allow_abbrev=False,
                                     description="Verification tools for 3d-reduced spin R matrices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    cmds = parser.add_subparsers(dest="cmd", required=True)

    check = cmds.add_parser("check", allow_abbrev=False, help="run one family of checks")
    kinds = check.add_subparsers(dest="kind", required=True)
    p = kinds.add_parser("tetra", parents=[sub_globals], allow_abbrev=False)
    _common(p, x=False, cutoff=True)
    p.add_argument("--layers", type=int, default=1)
    p = kinds.add_parser("chi", parents=[sub_globals], allow_abbrev=False)
    _common(p, y=True, cutoff=True)
    p.add_argument("--s", type=int, choices=(1, 2), default=1)
    p.add_argument("--margin", type=int, default=4)
    p = kinds.add_parser("ybe", parents=[sub_globals], allow_abbrev=False)
    _common(p, y=True)
    p.add_argument("--s", type=int, choices=(1, 2), required=True)
    p.add_argument("--t", type=int, choices=(1, 2), required=True)
    p.add_argument("--n", type=int, default=1)
    p = kinds.add_parser("intertwiner", parents=[sub_globals], allow_abbrev=False)
    _common(p)
    p.add_argument("--algebra", choices=("B1", "D1", "D2"), required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--oracle", action="store_true")
    p = kinds.add_parser("spectrum", parents=[sub_globals], allow_abbrev=False)
    _common(p)
    p.add_argument("--algebra", choices=("D2",), default="D2")
    p.add_argument("--n", type=int, default=2)
    p = kinds.add_parser("z", parents=[sub_globals], allow_abbrev=False)
    _common(p)
    p.add_argument("--kind", dest="zkind", choices=("zi", "zn", "znp", "z0", "z0p"), required=True)
    p.add_argument("--seed", type=int, default=0)

    p = cmds.add_parser("bracket", parents=[sub_globals], allow_abbrev=False, help="evaluate a bracket <word>_st")
    _common(p, cutoff=True)
    p.add_argument("--s", type=int, choices=(1, 2), required=True)
    p.add_argument("--t", type=int, choices=(1, 2), required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--method", choices=("closed", "contract"), default=None)

    p = cmds.add_parser("build-r", parents=[sub_globals], allow_abbrev=False, help="assemble a reduced R matrix")
    _common(p)
    p.add_argument("--s", type=int, choices=(1, 2), required=True)
    p.add_argument("--t", type=int, choices=(1, 2), required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--dump")

    p = cmds.add_parser("suite", parents=[sub_globals], allow_abbrev=False, help="run a verification suite")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--preset")
    return parser


def _single(name: str, P, item: dict, args) -> Report:
    cfg = SuiteConfig(name=f"check {name}", q=[P.q], x=[P.x], y=[P.y], seed=getattr(args, "seed", 0))
    rep = Report(cfg.name, cfg.seed, {"q": P.q, "x": P.x, "y": P.y})
    for suffix, extra, res, thr, note in CHECKS[name](P, item, cfg):
        res = float(res)
        rep.records.append(Record(f"{name}: {suffix}", ANCHORS[name], extra, res, thr, res <= thr, 0.0, note))
    return rep


def _emit(text: str, args) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args) -> int:
    tol, tail = args.tol, args.tail_tol
    if args.cmd == "suite":
        cfg = SuiteConfig.load(args.config) if args.config else preset(args.preset)
        cfg.tol, cfg.tail_tol = tol, tail
        rep = run_suite(cfg)
        _emit(rep.render(args.format), args)
        return 0 if rep.ok else 1

    if args.cmd == "bracket":
        P = make_params(args.q, args.x, cutoff=args.cutoff, tol=tol, tail_tol=tail)
        form = BracketForm(args.s, args.t, args.x, P)
        method = args.method or ("contract" if (args.s, args.t) == (1, 2) else "closed")
        val = form(parse_word(form.ring, args.word), method)
        out = {"s": args.s, "t": args.t, "word": args.word, "method": method,
               "q": args.q, "x": str(args.x), "value": [val.real, val.imag]}
        if args.format == "json":
            text = json.dumps(out) + "\n"
        elif args.format == "csv":
            text = "s,t,word,method,re,im\n" + f"{args.s},{args.t},{args.word},{method},{val.real!r},{val.imag!r}\n"
        else:
            text = f"<{args.word}>_{args.s}{args.t} = {val.real!r} + {val.imag!r}j  ({method})\n"
        _emit(text, args)
        return 0

    if args.cmd == "build-r":
        P = make_params(args.q, args.x, tol=tol, tail_tol=tail)
        R = build_reduced_r(args.s, args.t, args.n, args.x, P)
        if args.dump:
            dump_operator(R, args.dump)
        sel = check_selection_rules(R)
        info = {"s": args.s, "t": args.t, "n": args.n, "dim": R.dim, "method": R.method,
                "exploratory": R.exploratory, **sel}
        if args.format == "json":
            text = json.dumps(info) + "\n"
        else:
            text = "".join(f"{k}: {v}\n" for k, v in info.items())
        _emit(text, args)
        return 0

    # check <kind>
    k = args.kind
    if k == "tetra":
        P = make_params(args.q, cutoff=max(args.cutoff, 4), tol=tol, tail_tol=tail)
        rep = _single("tetra", P, {"cases": [[args.cutoff, args.layers, 1e-10 if args.layers == 1 else 1e-9]]}, args)
    elif k == "chi":
        P = make_params(args.q, args.x, args.y, cutoff=args.cutoff, tol=tol, tail_tol=tail)
        rep = _single("chi", P, {"N": args.cutoff, "margin": args.margin, "species": [args.s]}, args)
    elif k == "ybe":
        P = make_params(args.q, args.x, args.y, tol=tol, tail_tol=tail)
        rep = _single("ybe", P, {"pairs": [[args.s, args.t]], "ranks": [args.n]}, args)
    elif k == "intertwiner":
        P = make_params(args.q, args.x, tol=tol, tail_tol=tail)
        rep = _single("intertwiner", P, {"algebras": [[args.algebra, args.n]], "oracle": args.oracle}, args)
    elif k == "spectrum":
        P = make_params(args.q, args.x, tol=tol, tail_tol=tail)
        rep = _single("spectrum", P, {"ranks": [args.n]}, args)
    else:
        P = make_params(args.q, args.x, tol=tol, tail_tol=tail)
        rep = _single("z", P, {"kinds": [args.zkind]}, args)
    _emit(rep.render(args.format), args)
    return 0 if rep.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ResourceGuard as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TetraspinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
