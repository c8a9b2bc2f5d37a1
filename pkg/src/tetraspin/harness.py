"""Verification suites, JSON/CSV/text reports and operator dumps."""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .oscillator import OscElement, check_boundary_relations, parse_word
from .reduction import FORMS, BracketForm, build_reduced_r, check_selection_rules, check_yang_baxter
from .scalars import Params, ResourceGuard, TailWarning, TetraspinError, make_params
from .spinrep import (PAIRING, AlgebraId, GeneratorSet, build_generators, check_affine_intertwiner,
                      check_classical_intertwiner, check_spectrum, check_z_identities,
                      normalization_entries, solve_r_oracle)
from .threed import (ThreeDR, block_states, check_adjoint_map, check_chi_eigenvector,
                     check_involution, check_r_symmetry, check_tetrahedron)


# --- configuration ---------------------------------------------------------

@dataclass
class SuiteConfig:
    """A suite: a parameter grid and a list of check items run at every grid point.

    Each check item is a dict ``{"check": name, ...options}``; options fall back
    to the top-level ``ranks``, ``cutoffs``, ``pairs`` and ``algebras``.
    """

    name: str = "custom"
    q: list = field(default_factory=lambda: [0.4])
    x: list = field(default_factory=lambda: [0.3])
    y: list = field(default_factory=lambda: [0.2])
    ranks: list = field(default_factory=lambda: [1, 2])
    cutoffs: list = field(default_factory=lambda: [12])
    pairs: list = field(default_factory=lambda: [list(st) for st in FORMS])
    algebras: list = field(default_factory=lambda: [["B1", 2], ["D2", 2], ["D1", 3]])
    checks: list = field(default_factory=list)
    tol: float = 1e-10
    tail_tol: float = 1e-14
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "SuiteConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def grid(self):
        return list(itertools.product(self.q, self.x, self.y))


# --- report ----------------------------------------------------------------

@dataclass
class Record:
    id: str
    anchor: str
    params: dict
    residual: float | None
    threshold: float
    passed: bool | None  # None means skipped
    ms: float
    note: str = ""

    def to_json(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "params": self.params,
                "residual": self.residual, "threshold": self.threshold,
                "pass": self.passed, "ms": round(self.ms, 3), "note": self.note}


@dataclass
class Report:
    suite: str
    seed: int
    params: dict
    records: list = field(default_factory=list)
    version: str = __version__

    @property
    def summary(self) -> dict:
        return {"pass": sum(r.passed is True for r in self.records),
                "fail": sum(r.passed is False for r in self.records),
                "skip": sum(r.passed is None for r in self.records)}

    @property
    def ok(self) -> bool:
        return self.summary["fail"] == 0

    def to_json(self) -> dict:
        return {"suite": self.suite, "version": self.version, "seed": self.seed,
                "params": self.params, "records": [r.to_json() for r in self.records],
                "summary": self.summary}

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, default=_json_default) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["id", "anchor", "params", "residual", "threshold", "pass", "ms"])
            for r in self.records:
                w.writerow([r.id, r.anchor, json.dumps(r.params, default=_json_default),
                            r.residual, r.threshold, r.passed, round(r.ms, 3)])
            return buf.getvalue()
        if fmt == "text":
            lines = []
            for r in self.records:
                tag = {True: "PASS", False: "FAIL", None: "SKIP"}[r.passed]
                res = "-" if r.residual is None else f"{r.residual:.3e}"
                lines.append(f"{tag}  {r.id:<48} residual={res} threshold={r.threshold:.0e}"
                             + (f"  [{r.note}]" if r.note else ""))
            s = self.summary
            lines.append(f"{self.suite}: {s['pass']} pass, {s['fail']} fail, {s['skip']} skip")
            return "\n".join(lines) + "\n"
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, path: str | Path | None, fmt: str = "json") -> str:
        text = self.render(fmt)
        if path:
            Path(path).write_text(text)
        return text


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _num(z) -> float | list:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


# --- checks ----------------------------------------------------------------

# each check yields (suffix, extra params, residual, threshold, note)
CHECKS: dict = {}
ANCHORS: dict = {}


def _check(name: str, anchor: str):
    def deco(fn):
        CHECKS[name] = fn
        ANCHORS[name] = anchor
        return fn
    return deco


def _opt(item: dict, cfg: SuiteConfig, key: str):
    return item.get(key, getattr(cfg, key))


@_check("involution", "3d R: R^2 = 1 on finite blocks")
def _c_involution(P, item, cfg):
    cmax = item.get("cmax", 12)
    yield f"cmax={cmax}", {"cmax": cmax}, check_involution(P, cmax), item.get("threshold", 1e-12), ""
    yield f"symmetry cmax={cmax}", {"cmax": cmax}, check_r_symmetry(P, cmax), item.get("threshold", 1e-12), ""


@_check("adjoint", "3d R: adjoint action on oscillator generators")
def _c_adjoint(P, item, cfg):
    for N in _opt(item, cfg, "cutoffs"):
        res = check_adjoint_map(P, N)
        yield f"N={N}", {"N": N}, max(res.values()), item.get("threshold", 1e-10), ""


@_check("tetra", "tetrahedron equation RLLL = LLLR")
def _c_tetra(P, item, cfg):
    for N, layers, thr in item.get("cases", [[8, 1, 1e-10], [6, 2, 1e-9]]):
        res = check_tetrahedron(P, N, layers)
        yield f"N={N} layers={layers}", {"N": N, "layers": layers}, res["frobenius"], thr, ""


@_check("chi", "boundary vectors are eigenvectors of the 3d R")
def _c_chi(P, item, cfg):
    N, margin = item.get("N", 16), item.get("margin", 4)
    for s in item.get("species", [1, 2]):
        res = check_chi_eigenvector(s, P.x, P.y, P, N, margin)
        for side in ("ket", "bra"):
            yield f"s={s} {side}", {"s": s, "N": N, "margin": margin}, res[side], item.get("threshold", 1e-9), ""


@_check("boundary", "boundary vector annihilation relations")
def _c_boundary(P, item, cfg):
    N = item.get("N", 16)
    for s in (1, 2):
        res = check_boundary_relations(s, P.x, N, P)
        yield f"s={s}", {"s": s, "N": N}, max(res.values()), item.get("threshold", 1e-12), ""


def golden_table(x: complex, params: Params) -> dict:
    """Closed rational forms of ``<(a+)^2>``, ``<a+ k>``, ``<k^2>`` for the three forms."""
    p, h = params.p, params.half_p
    return {
        (2, 1): {"a+ a+": x * (1 + p) * (1 - p + p * x + p ** 3 * x) / ((1 + p * x) * (1 + p ** 3 * x)),
                 "a+ k": x * (1 - x) * h ** 3 * (1 + p) / ((1 + p * x) * (1 + p ** 3 * x)),
                 "k k": (1 - x) * p * (1 - p * p * x) / ((1 + p * x) * (1 + p ** 3 * x))},
        (1, 1): {"a+ a+": x * x * (1 + p) * (1 + p * p) / ((1 + p * x) * (1 + p * p * x)),
                 "a+ k": x * (1 - x) * h * (1 + p) / ((1 + p * x) * (1 + p * p * x)),
                 "k k": (1 - x) * p * (1 - p * x) / ((1 + p * x) * (1 + p * p * x))},
        (2, 2): {"a+ a+": x * (1 - p * p) / (1 - p * p * x),
                 "a+ k": 0.0,
                 "k k": (1 - x) * p / (1 - p * p * x)},
    }


@_check("golden", "worked example table of bracket values")
def _c_golden(P, item, cfg):
    for st, row in golden_table(P.x, P).items():
        form = BracketForm(*st, P.x, P)
        for word, val in row.items():
            e = parse_word(form.ring, word)
            pp = {"s": st[0], "t": st[1], "word": word}
            yield f"{st[0]}{st[1]} <{word}> closed", pp, abs(form(e, "closed") - val), 1e-12, ""
            yield f"{st[0]}{st[1]} <{word}> contract", pp, abs(form(e, "contract") - val), 1e-10, ""
        ka = form(parse_word(form.ring, "k a+"))
        ak = form(parse_word(form.ring, "a+ k"))
        yield f"{st[0]}{st[1]} <k a+> = p <a+ k>", {"s": st[0], "t": st[1]}, abs(ka - P.p * ak), 1e-12, ""


@_check("paths", "closed forms agree with contraction on monomials")
def _c_paths(P, item, cfg):
    jmax, mmax = item.get("jmax", 4), item.get("mmax", 4)
    for st in ((1, 1), (2, 1), (2, 2)):
        form = BracketForm(*st, P.x, P)
        worst = 0.0
        for sign, j, m in itertools.product((1, -1), range(jmax + 1), range(mmax + 1)):
            e = OscElement.monomial(form.ring, sign if j else 0, j, m)
            worst = max(worst, abs(form(e, "closed") - form(e, "contract")))
        yield f"{st[0]}{st[1]} j,m<={jmax},{mmax}", {"s": st[0], "t": st[1]}, worst, item.get("threshold", 1e-10), ""


@_check("norms", "norm factors as infinite products")
def _c_norms(P, item, cfg):
    for xv in item.get("xs", [0.1, 0.3, 0.5, 0.7]):
        Px = P.with_(x=xv, y=None)
        for st in ((1, 1), (2, 1), (2, 2)):
            form = BracketForm(*st, xv, Px)
            closed = form.closed_denominators()
            for par, val in closed.items():
                res = abs(form.denominators[par] - val)
                yield (f"{st[0]}{st[1]} x={xv} parity={par:+d}", {"s": st[0], "t": st[1], "x": xv},
                       res, item.get("threshold", 1e-10), "")


@_check("ybe", "Yang-Baxter equation for the reduced R")
def _c_ybe(P, item, cfg):
    for st, n in itertools.product(_opt(item, cfg, "pairs"), _opt(item, cfg, "ranks")):
        res = check_yang_baxter(st[0], st[1], n, P.x, P.y, P)
        note = "exploratory" if tuple(st) == (1, 2) else ""
        yield (f"{st[0]}{st[1]} n={n}", {"s": st[0], "t": st[1], "n": n},
               max(res.values()), item.get("threshold", 1e-9), note)


@_check("intertwiner", "reduced R equals the quantum R matrix of the spin representation")
def _c_intertwiner(P, item, cfg):
    oracle = item.get("oracle", True)
    for fam, n in _opt(item, cfg, "algebras"):
        thr = item.get("threshold", 1e-9 if n <= 2 or fam == "D1" else 1e-8)
        alg = AlgebraId(fam, n)
        gens = build_generators(alg, P.q)
        R = build_reduced_r(*PAIRING[fam], n, P.x, P)
        Rc = R.checked
        pp = {"algebra": fam, "n": n, "s": PAIRING[fam][0], "t": PAIRING[fam][1]}
        yield f"{fam} n={n} classical", pp, check_classical_intertwiner(Rc, gens)["max"], thr, ""
        yield f"{fam} n={n} affine", pp, check_affine_intertwiner(Rc, gens, P.x)["max"], thr, ""
        norm = max(abs(Rc[r, c] - 1) for r, c in normalization_entries(gens).values())
        yield f"{fam} n={n} normalization", pp, float(norm), 1e-12, ""
        if oracle:
            O = solve_r_oracle(gens, P.x)
            yield f"{fam} n={n} oracle", pp, float(np.abs(O - Rc).max()), 1e-8, "nullspace dim 1 per block"


@_check("spectrum", "eigenvalues rho_j of the D2 R matrix")
def _c_spectrum(P, item, cfg):
    xs = item.get("xs", [P.x, item.get("x2", -0.45 + 0.1j)])
    for n in item.get("ranks", [1, 2]):
        alg = AlgebraId("D2", n)
        mults = []
        for xv in xs:
            R = build_reduced_r(1, 1, n, xv, P.with_(x=xv, y=None)).checked
            data = check_spectrum(R, alg, xv, P.q)
            mults.append(sorted(data.multiplicities))
            yield f"D2 n={n} x={_num(xv)}", {"n": n, "x": _num(xv), "mult": sorted(data.multiplicities)}, \
                data.max_deviation, item.get("threshold", 1e-8), ""
        expect = item.get("expect", {}).get(str(n))
        consistent = all(m == mults[0] for m in mults) and (expect is None or mults[0] == sorted(expect))
        yield f"D2 n={n} multiplicities", {"n": n, "mult": mults[0]}, 0.0 if consistent else 1.0, 0.0, ""


@_check("z", "local Z identities behind the intertwining relations")
def _c_z(P, item, cfg):
    for kind in item.get("kinds", ["zi", "zn", "znp", "z0", "z0p"]):
        rep = check_z_identities(kind, P, seed=cfg.seed, words=item.get("words", 24))
        led = rep["ledger"]
        fams = {k: v for k, v in led["families"].items() if v}
        note = f"{led['zero']}/{led['total']} zero; families {fams}"
        yield f"{kind} exact ledger", {"kind": kind}, 0.0 if rep["exact_ok"] else 1.0, 0.0, note
        if kind != "zi":
            yield f"{kind} bracket battery", {"kind": kind, "words": rep["words"]}, rep["residual"], \
                item.get("threshold", 1e-10), ""


@_check("stability", "values independent of the Fock cutoff")
def _c_stability(P, item, cfg):
    N1, N2 = item.get("cutoffs", [12, 16])
    thr = item.get("threshold", 1e-10)
    for st, n in itertools.product(_opt(item, cfg, "pairs"), _opt(item, cfg, "ranks")):
        A = build_reduced_r(st[0], st[1], n, P.x, P.with_(cutoff=N1, y=None), method="contract").matrix
        B = build_reduced_r(st[0], st[1], n, P.x, P.with_(cutoff=N2, y=None), method="contract").matrix
        yield f"R {st[0]}{st[1]} n={n} N={N1}->{N2}", {"s": st[0], "t": st[1], "n": n}, \
            float(np.abs(A - B).max()), thr, ""
    for st in ((1, 1), (2, 1), (2, 2)):
        f1 = BracketForm(*st, P.x, P.with_(cutoff=N1, y=None))
        f2 = BracketForm(*st, P.x, P.with_(cutoff=N2, y=None))
        worst = 0.0
        for w in golden_table(P.x, P)[st]:
            worst = max(worst, abs(f1.contract(parse_word(f1.ring, w)) - f2.contract(parse_word(f2.ring, w))))
        yield f"brackets {st[0]}{st[1]} N={N1}->{N2}", {"s": st[0], "t": st[1]}, worst, thr, ""


@_check("selection", "structural zeros of the reduced R")
def _c_selection(P, item, cfg):
    n = item.get("n", 2)
    for st in _opt(item, cfg, "pairs"):
        rep = check_selection_rules(build_reduced_r(st[0], st[1], n, P.x, P))
        viol = rep["site_violations"] + rep["parity_violations"] + (rep["weight_commutator"] > 0)
        note = f"{rep['nonzero']} nonzero, {rep['structural_zero']} structural zeros"
        yield f"{st[0]}{st[1]} n={n}", {"s": st[0], "t": st[1], "n": n}, float(viol), 0.0, note


PRESETS = {
    "paper-full": dict(
        name="paper-full", q=[0.4], x=[0.3], y=[0.2], ranks=[1, 2], cutoffs=[12],
        pairs=[[1, 1], [2, 1], [2, 2], [1, 2]],
        algebras=[["B1", 2], ["D2", 2], ["D1", 3], ["B1", 3], ["D2", 3]],
        checks=[{"check": "involution", "cmax": 12}, {"check": "adjoint"}, {"check": "tetra"},
                {"check": "chi"}, {"check": "boundary"}, {"check": "golden"}, {"check": "paths"},
                {"check": "norms"}, {"check": "ybe"}, {"check": "intertwiner"},
                {"check": "spectrum", "expect": {"1": [1, 3], "2": [1, 5, 10]}},
                {"check": "z"}, {"check": "stability"}, {"check": "selection"}],
    ),
    "quick": dict(
        name="quick", q=[0.4], x=[0.3], y=[0.2], ranks=[1], cutoffs=[8],
        pairs=[[1, 1], [2, 1], [2, 2], [1, 2]], algebras=[["B1", 2], ["D2", 2]],
        checks=[{"check": "involution", "cmax": 6}, {"check": "golden"}, {"check": "ybe"},
                {"check": "intertwiner"}, {"check": "selection"}],
    ),
}


def preset(name: str) -> SuiteConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    data = json.loads(json.dumps(PRESETS[name]))
    if name == "paper-full":
        # YBE also at x = y = 0.5
        data["checks"].insert(9, {"check": "ybe", "xy": [0.5, 0.5]})
    return SuiteConfig.from_dict(data)


def run_suite(config: SuiteConfig) -> Report:
    """Run every check item at every grid point.

    Per-check errors become failed records; :class:`ResourceGuard` aborts.
    """
    report = Report(config.name, config.seed,
                    {"q": config.q, "x": [_num(v) for v in config.x],
                     "y": [_num(v) for v in config.y], "tol": config.tol, "tail_tol": config.tail_tol})
    points = []
    for q, x, y in config.grid():
        gp = {"q": q, "x": _num(x), "y": _num(y)}
        try:
            P = make_params(q, x, y, cutoff=max(config.cutoffs or [12]), tol=config.tol,
                            tail_tol=config.tail_tol)
            points.append((gp, P))
        except TetraspinError as exc:
            report.records.append(Record(f"params q={q} x={x} y={y}", "parameter validation", gp,
                                         None, 0.0, False, 0.0, f"{type(exc).__name__}: {exc}"))
    for (gp, P), item in itertools.product(points, config.checks):
        name = item["check"]
        if name not in CHECKS:
            raise ValueError(f"unknown check {name!r}")
        Pi = P
        if "xy" in item:
            Pi = P.with_(x=item["xy"][0], y=item["xy"][1])
        gpi = dict(gp, **({"x": item["xy"][0], "y": item["xy"][1]} if "xy" in item else {}))
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", TailWarning)
                for suffix, extra, res, thr, note in CHECKS[name](Pi, item, config):
                    ms = (time.perf_counter() - t0) * 1e3
                    res = None if res is None else float(res)
                    ok = res is not None and res <= thr
                    report.records.append(Record(f"{name}: {suffix}", ANCHORS[name], {**gpi, **extra},
                                                 res, thr, ok, ms, note))
                    t0 = time.perf_counter()
        except ResourceGuard as exc:
            raise ResourceGuard(f"check {name!r} exceeds the size budget: {exc}") from exc
        except (TetraspinError, TailWarning, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            report.records.append(Record(f"{name}: error", ANCHORS[name], gpi, None, 0.0, False,
                                         (time.perf_counter() - t0) * 1e3,
                                         f"{type(exc).__name__}: {exc}"))
    return report


# --- operator dumps ----------------------------------------------------------

def _write_coo(fh, M: np.ndarray, dense: bool = False) -> None:
    for r, c in itertools.product(range(M.shape[0]), range(M.shape[1])):
        v = complex(M[r, c])
        if dense or v != 0:
            fh.write(f"{r} {c} {v.real!r} {v.imag!r}\n")


def dump_operator(obj, path: str | Path, params: Params | None = None, label: str = "",
                  dense: bool | None = None) -> Path:
    """Write ``obj`` as ``row col re im`` records after ``#`` header lines.

    Accepts a :class:`ReducedRMatrix`, a ``(ThreeDR, c12, c23)`` triple, a
    :class:`GeneratorSet` (one section per generator) or a bare matrix.
    """
    from .reduction import ReducedRMatrix

    path = Path(path)
    header: dict = {}
    sections: list = []
    if isinstance(obj, ReducedRMatrix):
        header.update(object="reduced R", s=obj.s, t=obj.t, n=obj.n, x=_num(obj.x), q=obj.params.q,
                      convention="row (alpha',beta') col (alpha,beta); alpha_1 most significant",
                      anchor="matrix product R^{s,t}(x)")
        sections.append(("R", obj.matrix))
        dense = False if dense is None else dense
    elif isinstance(obj, tuple) and isinstance(obj[0], ThreeDR):
        R3, c12, c23 = obj
        header.update(object="3d R block", c12=c12, c23=c23, q=R3.params.q,
                      states=" ".join(",".join(map(str, s)) for s in block_states(c12, c23)),
                      convention="entry (i,j) = <n_i|R|n_j>, states ordered by n2",
                      anchor="3d R on F (x) F (x) F")
        sections.append(("block", R3.block(c12, c23)))
        dense = True if dense is None else dense
    elif isinstance(obj, GeneratorSet):
        header.update(object="generators", algebra=obj.algebra.family, n=obj.n, q=obj.q,
                      convention="basis index sum_i alpha_i 2^(n-i)",
                      anchor="spin representation generators")
        for i in range(obj.n + 1):
            sections += [(f"X+_{i}", obj.xp[i]), (f"X-_{i}", obj.xm[i]), (f"H_{i}", np.diag(obj.h[i]))]
        dense = False if dense is None else dense
    else:
        M = np.asarray(obj)
        header.update(object=label or "matrix")
        if params is not None:
            header.update(q=params.q, x=_num(params.x))
        sections.append(("matrix", M))
        dense = False if dense is None else dense
    with path.open("w") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {json.dumps(v)}\n")
        for name, M in sections:
            fh.write(f"# section: {json.dumps(name)}\n")
            fh.write(f"# shape: {json.dumps(list(M.shape))}\n")
            _write_coo(fh, M, dense)
    return path


def load_operator(path: str | Path) -> tuple[dict, dict]:
    """Inverse of :func:`dump_operator`: ``(header, {section: matrix})``."""
    header: dict = {}
    sections: dict = {}
    current = None
    shape = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            val = json.loads(val)
            if key == "section":
                current = val
            elif key == "shape":
                shape = tuple(val)
                sections[current] = np.zeros(shape, dtype=complex)
            else:
                header[key] = val
            continue
        if not line.strip():
            continue
        r, c, re, im = line.split()
        sections[current][int(r), int(c)] = complex(float(re), float(im))
    return header, sections


__all__ = ["SuiteConfig", "Record", "Report", "CHECKS", "ANCHORS", "PRESETS", "preset",
           "run_suite", "golden_table", "dump_operator", "load_operator"]
