"""q-oscillator algebra: normal forms, Fock representation, boundary vectors.

The algebra is generated by ``a+``, ``a-``, ``k`` with

    k a+ = p a+ k,   k a- = p^-1 a- k,
    a+ a- = 1 - p^-1 k^2,   a- a+ = 1 - p k^2.

Every element has a unique normal form as a combination of the monomials
``(a+)^j k^m``, ``(a-)^j k^m`` (``j >= 1``) and ``k^m``.  Monomials are keyed
``(sign, j, m)`` with ``sign`` in ``{+1, -1}`` for ``j >= 1`` and ``sign = 0``
for the pure ``k`` powers.

Coefficients live in a :class:`FloatRing` (complex doubles at a numeric ``q``)
or an :class:`ExactRing` (sympy expressions in a formal ``q`` and ``x`` with
``p^(1/2) = i q``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy

from .scalars import Params, qpoch_infinite

Key = tuple  # (sign, j, m)


class FloatRing:
    """Complex double coefficients at a fixed numeric ``q`` (and optional ``x``)."""

    exact = False

    def __init__(self, q: float, x: complex | None = None, drop: float = 0.0):
        self.q = float(q)
        self.x = None if x is None else complex(x)
        self.drop = float(drop)
        self.p = complex(-self.q * self.q)
        self.half_p = complex(0.0, self.q)
        self.i = 1j
        self.zero = 0j
        self.one = 1 + 0j

    def coerce(self, c) -> complex:
        return complex(c)

    def normalize(self, c) -> complex:
        return complex(c)

    def is_zero(self, c) -> bool:
        return abs(c) <= self.drop

    def p_pow(self, e: int) -> complex:
        return self.p ** e

    def q_pow(self, e) -> float:
        return self.q ** float(e)

    def __eq__(self, other):
        return (isinstance(other, FloatRing) and other.q == self.q
                and other.x == self.x and other.drop == self.drop)

    def __hash__(self):
        return hash(("float", self.q, self.x, self.drop))

    def __repr__(self):
        return f"FloatRing(q={self.q}, x={self.x})"


class ExactRing:
    """Sympy coefficients: Laurent polynomials in formal ``q``, ``x`` over Q(i)."""

    exact = True

    def __init__(self):
        self.q = sympy.Symbol("q", positive=True)
        self.x = sympy.Symbol("x")
        self.p = -self.q ** 2
        self.half_p = sympy.I * self.q
        self.i = sympy.I
        self.zero = sympy.Integer(0)
        self.one = sympy.Integer(1)

    def coerce(self, c):
        return sympy.sympify(c)

    def normalize(self, c):
        return sympy.expand(c)

    def is_zero(self, c) -> bool:
        return sympy.expand(c) == 0

    def p_pow(self, e: int):
        return self.p ** e

    def q_pow(self, e):
        return self.q ** sympy.Rational(e)

    def __eq__(self, other):
        return isinstance(other, ExactRing)

    def __hash__(self):
        return hash("exact")

    def __repr__(self):
        return "ExactRing()"


def _k2_factor(ring, sign_left: int, length: int, depth: int):
    """Polynomial in ``k^2`` produced by cancelling ``depth`` adjacent pairs.

    Returns a list ``c`` with ``c[d]`` the coefficient of ``k^(2d)`` in
    ``prod_{u<depth} (1 - p^(e_u) k^2)``, where ``e_u = 1 - 2(l-u)`` for
    ``(a+)^j (a-)^l`` and ``e_u = 2(l-u) - 1`` for ``(a-)^j (a+)^l``.
    """
    poly = [ring.one]
    for u in range(depth):
        e = (1 - 2 * (length - u)) if sign_left > 0 else (2 * (length - u) - 1)
        f = -ring.p_pow(e)
        nxt = [ring.zero] * (len(poly) + 1)
        for d, c in enumerate(poly):
            nxt[d] = nxt[d] + c
            nxt[d + 1] = nxt[d + 1] + c * f
        poly = nxt
    return poly


class OscElement:
    """Immutable normal-ordered element of the oscillator algebra."""

    __slots__ = ("ring", "_terms")

    def __init__(self, ring, terms: dict | None = None):
        self.ring = ring
        clean = {}
        for key, c in (terms or {}).items():
            sign, j, m = key
            if j < 0 or m < 0:
                raise ValueError(f"negative exponent in {key}")
            if j == 0:
                sign = 0
            elif sign not in (1, -1):
                raise ValueError(f"bad sign in {key}")
            key = (sign, j, m)
            c = ring.normalize(clean.get(key, ring.zero) + ring.coerce(c))
            clean[key] = c
        self._terms = {k: c for k, c in clean.items() if not ring.is_zero(c)}

    # construction helpers
    @classmethod
    def scalar(cls, ring, c=1) -> "OscElement":
        return cls(ring, {(0, 0, 0): c})

    @classmethod
    def monomial(cls, ring, sign: int, j: int, m: int, c=1) -> "OscElement":
        return cls(ring, {(sign, j, m): c})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def plus_terms(self) -> dict:
        return {(j, m): c for (s, j, m), c in self._terms.items() if s == 1}

    @property
    def minus_terms(self) -> dict:
        return {(j, m): c for (s, j, m), c in self._terms.items() if s == -1}

    @property
    def diag_terms(self) -> dict:
        return {m: c for (s, j, m), c in self._terms.items() if s == 0}

    @property
    def a_degree(self) -> int:
        return max((j for (_, j, _) in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    # arithmetic
    def _check(self, other: "OscElement"):
        if other.ring != self.ring:
            raise ValueError("elements live over different coefficient rings")

    def __add__(self, other):
        if not isinstance(other, OscElement):
            other = OscElement.scalar(self.ring, other)
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, self.ring.zero) + c
        return OscElement(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return OscElement(self.ring, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, OscElement):
            return osc_normal_product(self, other)
        c = self.ring.coerce(other)
        return OscElement(self.ring, {k: v * c for k, v in self._terms.items()})

    def __rmul__(self, other):
        c = self.ring.coerce(other)
        return OscElement(self.ring, {k: c * v for k, v in self._terms.items()})

    def __pow__(self, e: int):
        out = OscElement.scalar(self.ring)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, OscElement):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def allclose(self, other: "OscElement", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(complex(c)) <= atol for c in diff._terms.values())

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for (s, j, m), c in sorted(self._terms.items()):
            mono = []
            if j:
                mono.append(f"a{'+' if s > 0 else '-'}" + (f"^{j}" if j > 1 else ""))
            if m:
                mono.append("k" + (f"^{m}" if m > 1 else ""))
            parts.append(f"({c})" + ("*" + " ".join(mono) if mono else ""))
        return " + ".join(parts)


def _monomial_product(ring, left: Key, right: Key) -> dict:
    s1, j, m = left
    s2, l, r = right
    # k^m (a^s2)^l = p^(s2*m*l) (a^s2)^l k^m
    coeff = ring.p_pow(s2 * m * l) if (s2 and m) else ring.one
    if s1 == 0 or s2 == 0 or s1 == s2:
        sign = s1 or s2
        return {(sign, j + l, m + r): coeff}
    depth = min(j, l)
    poly = _k2_factor(ring, s1, l, depth)
    if j > depth:
        sign, rest = s1, j - depth
    elif l > depth:
        sign, rest = s2, l - depth
    else:
        sign, rest = 0, 0
    return {(sign, rest, m + r + 2 * d): coeff * c for d, c in enumerate(poly)}


def osc_normal_product(lhs: OscElement, rhs: OscElement) -> OscElement:
    """Normal form of ``lhs * rhs``."""
    lhs._check(rhs)
    ring = lhs.ring
    out: dict = {}
    for k1, c1 in lhs._terms.items():
        for k2, c2 in rhs._terms.items():
            for key, c in _monomial_product(ring, k1, k2).items():
                out[key] = out.get(key, ring.zero) + c1 * c2 * c
    return OscElement(ring, out)


def generators(ring) -> tuple[OscElement, OscElement, OscElement]:
    """``(a+, a-, k)`` over ``ring``."""
    return (OscElement.monomial(ring, 1, 1, 0), OscElement.monomial(ring, -1, 1, 0),
            OscElement.monomial(ring, 0, 0, 1))


_TOKEN = re.compile(r"^(a\+|a-|-ik|k|1)(?:\^(\d+))?$")


def parse_word(ring, text: str) -> OscElement:
    """Parse a space separated word such as ``"a+ a+ k"`` or ``"a-^2 -ik"``."""
    ap, am, k = generators(ring)
    atoms = {"a+": ap, "a-": am, "k": k, "-ik": (-ring.i) * k,
             "1": OscElement.scalar(ring)}
    out = OscElement.scalar(ring)
    for tok in text.split():
        m = _TOKEN.match(tok)
        if not m:
            raise ValueError(f"cannot parse token {tok!r}")
        out = out * atoms[m.group(1)] ** int(m.group(2) or 1)
    return out


# --- parity grading -------------------------------------------------------

@dataclass(frozen=True)
class ParityGrade:
    eps1: int  # parity of the a-degree
    eps2: int  # parity of the k-degree

    def __mul__(self, other: "ParityGrade") -> "ParityGrade":
        return ParityGrade(self.eps1 * other.eps1, self.eps2 * other.eps2)

    def __str__(self):
        return ("+" if self.eps1 > 0 else "-") + ("+" if self.eps2 > 0 else "-")


def _grade_of(key: Key) -> ParityGrade:
    _, j, m = key
    return ParityGrade(1 if j % 2 == 0 else -1, 1 if m % 2 == 0 else -1)


def graded_components(e: OscElement) -> dict[ParityGrade, OscElement]:
    """Split ``e`` into its joint eigencomponents of the two parity involutions."""
    parts: dict = {}
    for key, c in e._terms.items():
        parts.setdefault(_grade_of(key), {})[key] = c
    return {g: OscElement(e.ring, t) for g, t in parts.items()}


def osc_parity(e: OscElement):
    """The grade of a homogeneous element, else its graded decomposition."""
    parts = graded_components(e)
    if len(parts) == 1:
        return next(iter(parts))
    if not parts:
        return ParityGrade(1, 1)
    return parts


# --- Fock representation --------------------------------------------------

@lru_cache(maxsize=256)
def _fock_generators(q: float, N: int):
    p = -q * q
    dim = N + 1
    ap = np.zeros((dim, dim), dtype=complex)
    am = np.zeros((dim, dim), dtype=complex)
    for m in range(N):
        v = math.sqrt(1 - p ** (2 * m + 2))
        ap[m + 1, m] = v
        am[m, m + 1] = v
    kd = np.array([(1j * q) ** (2 * m + 1) for m in range(dim)])
    for a in (ap, am, kd):
        a.setflags(write=False)
    return ap, am, kd


def fock_generators(params_or_q, N: int):
    """Matrices of ``a+``, ``a-`` and the diagonal of ``k`` on ``|0>..|N>``."""
    q = params_or_q.q if isinstance(params_or_q, (Params, FloatRing)) else float(params_or_q)
    return _fock_generators(q, int(N))


def fock_matrix(e: OscElement, N: int) -> np.ndarray:
    """Matrix of ``e`` on the truncated Fock space ``|0>..|N>``.

    Truncation drops components above ``|N>``; products agree with the
    algebra only on inputs of degree ``<= N - (total a-degree)``.
    """
    if e.ring.exact:
        raise TypeError("fock_matrix needs a FloatRing element")
    ap, am, kd = fock_generators(e.ring.q, N)
    dim = N + 1
    out = np.zeros((dim, dim), dtype=complex)
    powers = {1: [np.eye(dim)], -1: [np.eye(dim)]}
    for (s, j, m), c in e._terms.items():
        if s == 0:
            out[np.diag_indices(dim)] += c * kd ** m
            continue
        stack = powers[s]
        gen = ap if s > 0 else am
        while len(stack) <= j:
            stack.append(stack[-1] @ gen)
        out += c * stack[j] * (kd ** m)[None, :]
    return out


# --- boundary vectors -----------------------------------------------------

@dataclass(frozen=True)
class BoundaryVector:
    """Truncated coefficients of a boundary ket ``|chi_s(x)>`` or bra ``<chi_s(x)|``."""

    species: int
    side: str  # "ket" or "bra"
    argument: complex
    coeffs: np.ndarray
    tail_bound: float

    @property
    def cutoff(self) -> int:
        return len(self.coeffs) - 1


@lru_cache(maxsize=64)
def envelope_constant(s: int, q: float) -> float:
    """``C`` with ``|coeff| <= C |x|^(degree)`` for species ``s``; ``inf`` on underflow."""
    a = q * q if s == 1 else q ** 8
    prod = qpoch_infinite(a, a).real
    return math.inf if prod <= 0 else 1.0 / prod


def boundary_tail(s: int, x: complex, N: int, q: float) -> float:
    """Upper bound on the sum of ``|coeff|`` dropped beyond ``|N>``."""
    r = abs(x)
    if r >= 1:
        return math.inf
    C = envelope_constant(s, q)
    if not math.isfinite(C):
        return math.inf
    first = N + 1 if s == 1 else N // 2 + 1
    return C * r ** first / (1 - r)


def _boundary_coeffs(s: int, x: complex, N: int, q: float) -> np.ndarray:
    p = -q * q
    c = np.zeros(N + 1, dtype=complex)
    c[0] = 1.0
    if s == 1:
        for j in range(1, N + 1):
            c[j] = c[j - 1] * x * math.sqrt(1 - p ** (2 * j)) / (1 - p ** j)
    elif s == 2:
        for j in range(1, N // 2 + 1):
            c[2 * j] = (c[2 * j - 2] * x * math.sqrt((1 - p ** (4 * j - 2)) * (1 - p ** (4 * j)))
                        / (1 - p ** (4 * j)))
    else:
        raise ValueError(f"species must be 1 or 2, got {s}")
    return c


def boundary_ket(s: int, x: complex, N: int, params) -> BoundaryVector:
    """``|chi_1(x)> = 1/(x a+; p)_inf |0>`` or ``|chi_2(x)> = 1/(x (a+)^2; p^4)_inf |0>``.

    The q-exponential series gives the coefficients
    ``x^j sqrt((p^2;p^2)_j)/(p;p)_j`` on ``|j>`` (s=1) and
    ``x^j sqrt((p^2;p^2)_2j)/(p^4;p^4)_j`` on ``|2j>`` (s=2).
    """
    q = params.q
    return BoundaryVector(s, "ket", complex(x), _boundary_coeffs(s, x, N, q),
                          boundary_tail(s, x, N, q))


def boundary_bra(s: int, x: complex, N: int, params) -> BoundaryVector:
    """Dual vector ``<0| 1/(x a-; p)_inf`` etc.; same coefficients on ``<j|``."""
    q = params.q
    return BoundaryVector(s, "bra", complex(x), _boundary_coeffs(s, x, N, q),
                          boundary_tail(s, x, N, q))


def boundary_relations(s: int, x: complex, ring: FloatRing) -> dict[str, tuple[str, OscElement]]:
    """Annihilating elements of the boundary vectors, keyed by name.

    Values are ``(side, element)``; ket elements act from the left on the
    ket, bra elements act from the right on the bra.
    """
    ap, am, k = generators(ring)
    one = OscElement.scalar(ring)
    p, hp = ring.p, ring.half_p
    if s == 1:
        return {
            "ket a+": ("ket", ap - (1 / x) * (one - (1 / hp) * k)),
            "ket a-": ("ket", am - x * (one + hp * k)),
            "ket mixed": ("ket", (1 / x) * am + (p * x) * ap - (1 + p) * one),
            "bra a-": ("bra", am - (1 / x) * (one - (1 / hp) * k)),
            "bra a+": ("bra", ap - x * (one + hp * k)),
            "bra mixed": ("bra", (1 / x) * ap + (p * x) * am - (1 + p) * one),
        }
    if s == 2:
        return {"ket": ("ket", am - x * ap), "bra": ("bra", ap - x * am)}
    raise ValueError(f"species must be 1 or 2, got {s}")


def check_boundary_relations(s: int, x: complex, N: int, params) -> dict[str, float]:
    """Max component of each annihilation relation on degrees ``<= N - 2``."""
    ring = FloatRing(params.q)
    guard = N - 2
    out = {}
    for name, (side, elem) in boundary_relations(s, complex(x), ring).items():
        mat = fock_matrix(elem, N)
        if side == "ket":
            vec = mat @ boundary_ket(s, x, N, params).coeffs
        else:
            vec = boundary_bra(s, x, N, params).coeffs @ mat
        out[name] = float(np.max(np.abs(vec[: guard + 1])))
    return out
