"""2d reduction: bracket forms, matrix-product elements and the reduced R matrices.

``R^{s,t}(x)`` sends ``v_alpha (x) v_beta`` to
``sum W(alpha', beta' | alpha, beta) v_alpha' (x) v_beta'`` where ``W`` is the
bracket ``<L(a1',b1'|a1,b1) ... L(an',bn'|an,bn)>_st`` of the L-entry word.

Two independent evaluation paths exist for brackets: closed q-series
formulas (``method="closed"``) and direct contraction of truncated boundary
vectors (``method="contract"``).  The ``(1, 2)`` pairing has no closed form
and is always contracted.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .oscillator import (FloatRing, OscElement, boundary_bra, boundary_ket,
                         boundary_tail, envelope_constant, fock_matrix,
                         graded_components)
from .scalars import (Params, ResourceGuard, TailWarning, TetraspinError, qpoch_finite,
                      qpoch_infinite)
from .threed import l_entries


class UnsupportedForm(TetraspinError, ValueError):
    pass


FORMS = ((1, 1), (2, 1), (2, 2), (1, 2))
EXPLORATORY = {(1, 2)}
MAX_CONTRACTION_CUTOFF = 512


def _qp(z, b, j):
    return qpoch_finite(z, b, j)


def _closed_monomial(s, t, sign, j, m, x, p, hp):
    """Closed q-series for one normal-ordered monomial; ring-generic."""
    up = sign >= 0  # j = 0 makes the two branches agree
    if (s, t) == (1, 1):
        xf = x ** j if up else 1.0
        pw = hp ** m * (1 if up else p ** (m * j))
        return xf * pw * _qp(-p, p, j) * _qp(x, p, m) / _qp(-p * x, p, j + m)
    if (s, t) == (2, 1):
        sg = 1 if up else -1
        pre = hp ** m * p ** (-sg * j * m) * _qp(x, p * p, m) * _qp(p, p, j) / _qp(-p * x, p * p, j + m)
        total = 0j
        for i in range(j + 1):
            e2 = i * (i - (1 + sg) * j + 1)  # twice the exponent, always even
            total += ((-sg) ** i * p ** (e2 // 2)
                      * _qp(p ** (2 * m) * x, p * p, i) * _qp(-p ** (2 * m + 2 * i + 1) * x, p * p, j - i)
                      / (_qp(p, p, i) * _qp(p, p, j - i)))
        return pre * total
    # (2, 2)
    if j % 2:
        return 0j
    J = j // 2
    p4 = p ** 4
    xf = x ** J if up else 1.0
    if m % 2 == 0:
        M = m // 2
        pre = xf * p ** (M + (0 if up else 4) * M * J)
        total = sum((-1) ** i * p ** (2 * i * i) * _qp(p4, p4, J) * _qp(x, p4, M + i)
                    / (_qp(p4, p4, i) * _qp(p4, p4, J - i) * _qp(x * p * p, p4, M + i))
                    for i in range(J + 1))
        return pre * total
    M = (m - 1) // 2
    pre = 1j * xf * p ** (M + (0 if up else 2) * (2 * M + 1) * J)
    total = sum((-1) ** i * p ** (2 * i * i) * _qp(p4, p4, J) * _qp(x * p * p, p4, M + i)
                / (_qp(p4, p4, i) * _qp(p4, p4, J - i) * _qp(x * p4, p4, M + i))
                for i in range(J + 1))
    return pre * total


class BracketForm:
    """The normalized linear form ``<O>_st`` at spectral parameter ``x``.

    ``<O>_s1 = <chi_s(x)| O |chi_1(1)> / <chi_s(x)|chi_1(1)>``; for ``(2, 2)``
    the denominator is ``<chi_2(x)| (-ik)^e |chi_2(1)>`` with ``e`` the parity
    of the k-degree, and odd a-degree words vanish.
    """

    def __init__(self, s: int, t: int, x: complex, params: Params):
        if (s, t) not in FORMS:
            raise ValueError(f"(s, t) must be one of {FORMS}")
        self.s, self.t = s, t
        self.x = complex(x)
        self.params = params
        self.ring = FloatRing(params.q)
        self._contract_cache: dict = {}
        self._denoms = self._contract_denominators()

    # -- closed forms ----------------------------------------------------

    def closed_monomial(self, sign: int, j: int, m: int) -> complex:
        """Closed value of ``<(a^sign)^j k^m>`` (``sign = 0`` means ``j = 0``).

        The ``p**(-j*m)`` prefactors cancel against the sums, so evaluation
        runs in extended precision sized to that cancellation.
        """
        if (self.s, self.t) == (1, 2):
            raise UnsupportedForm("no closed form for (s, t) = (1, 2); use method='contract'")
        lost = 2 * (j + 1) * (m + 1) * -math.log10(self.params.q)
        with mpmath.workdps(25 + int(lost)):
            q = mpmath.mpf(self.params.q)
            val = _closed_monomial(self.s, self.t, sign, j, m, mpmath.mpc(self.x), -q * q,
                                   mpmath.mpc(0, q))
            return complex(val)

    # -- contraction -----------------------------------------------------

    def effective_cutoff(self, N: int) -> int:
        """Smallest cutoff ``>= N`` whose bra tail keeps the error under ``tail_tol``."""
        q = self.params.q
        c_ket = envelope_constant(self.t, q)
        M = max(int(N), 4)
        # written so that nan (an unusable bound) never counts as converged
        while not boundary_tail(self.s, self.x, M, q) * c_ket <= self.params.tail_tol:
            if M >= MAX_CONTRACTION_CUTOFF:
                warnings.warn(f"bracket tail not certified below tail_tol at cutoff {M}", TailWarning)
                break
            M += 1
        return M

    def _raw_contract(self, elem: OscElement, N: int) -> complex:
        """``<chi_s(x)| elem |chi_t(1)>`` with the bra truncated at ``|N>``."""
        deg = elem.a_degree
        Nk = N + deg
        bra = boundary_bra(self.s, self.x, N, self.params).coeffs
        ket = boundary_ket(self.t, 1.0, Nk, self.params).coeffs
        mat = fock_matrix(elem, Nk)[: N + 1, :]
        return complex(bra @ (mat @ ket))

    def _contract_denominators(self) -> dict:
        N = self.effective_cutoff(self.params.cutoff)
        one = OscElement.scalar(self.ring)
        out = {1: self._raw_contract(one, N)}
        if (self.s, self.t) == (2, 2):
            mik = OscElement.monomial(self.ring, 0, 0, 1, -1j)
            out[-1] = self._raw_contract(mik, N)
        return out

    def closed_denominators(self) -> dict:
        """Norm factors as infinite products (not available for ``(1, 2)``)."""
        x, p, tt = self.x, self.params.p, self.params.tail_tol * 1e-2
        if self.t == 1:
            ps = p ** self.s
            return {1: qpoch_infinite(-p * x, ps, tt) / qpoch_infinite(x, ps, tt)}
        if self.s == 2:
            p4 = p ** 4
            return {1: qpoch_infinite(p * p * x, p4, tt) / qpoch_infinite(x, p4, tt),
                    -1: self.params.q * qpoch_infinite(p4 * x, p4, tt)
                    / qpoch_infinite(p * p * x, p4, tt)}
        raise UnsupportedForm("no closed norm formula for (s, t) = (1, 2)")

    @property
    def denominators(self) -> dict:
        return dict(self._denoms)

    def contract(self, elem: OscElement, N: int | None = None, adaptive: bool = True) -> complex:
        """Bracket by contraction.  ``adaptive`` raises the cutoff to meet ``tail_tol``."""
        N = self.params.cutoff if N is None else int(N)
        if adaptive:
            N = self.effective_cutoff(N)
            denoms = self._denoms
        else:
            one = OscElement.scalar(self.ring)
            denoms = {1: self._raw_contract(one, N)}
            if (self.s, self.t) == (2, 2):
                denoms[-1] = self._raw_contract(OscElement.monomial(self.ring, 0, 0, 1, -1j), N)
        total = 0j
        for grade, part in graded_components(elem).items():
            if (self.s, self.t) == (2, 2):
                if grade.eps1 < 0:
                    continue
                den = denoms[grade.eps2]
            else:
                den = denoms[1]
            total += self._raw_contract(part, N) / den
        return total

    # -- public ----------------------------------------------------------

    def closed(self, elem: OscElement) -> complex:
        return sum((c * self.closed_monomial(s, j, m) for (s, j, m), c in elem.terms.items()), 0j)

    def __call__(self, elem: OscElement, method: str = "closed") -> complex:
        if method == "closed":
            return self.closed(elem)
        if method == "contract":
            return self.contract(elem)
        raise ValueError(f"unknown method {method!r}")


def default_method(s: int, t: int) -> str:
    return "contract" if (s, t) == (1, 2) else "closed"


# --- matrix product elements ------------------------------------------------

SITE_PATTERNS = tuple(sorted(l_entries(FloatRing(0.5)).keys()))  # (a', b', a, b)


def l_word(ring, alpha_p, beta_p, alpha, beta) -> OscElement | None:
    """Product ``L(a1',b1'|a1,b1)...L(an',bn'|an,bn)``; ``None`` if an entry is zero."""
    ent = l_entries(ring)
    word = OscElement.scalar(ring)
    for key in zip(alpha_p, beta_p, alpha, beta):
        e = ent.get(tuple(int(v) for v in key))
        if e is None:
            return None
        word = word * e
    return word


def w_element(s, t, x, alpha_p, beta_p, alpha, beta, params, method: str | None = None,
              form: BracketForm | None = None) -> complex:
    """Matrix-product element ``W_st(x | alpha' beta' ; alpha beta)``."""
    if not (len(alpha_p) == len(beta_p) == len(alpha) == len(beta)):
        raise ValueError("bit strings must share one length")
    form = form or BracketForm(s, t, x, params)
    word = l_word(form.ring, alpha_p, beta_p, alpha, beta)
    if word is None:
        return 0j
    return form(word, method or default_method(s, t))


def bits_to_index(bits) -> int:
    out = 0
    for b in bits:
        out = 2 * out + int(b)
    return out


def index_to_bits(i: int, n: int) -> tuple[int, ...]:
    return tuple((i >> (n - 1 - k)) & 1 for k in range(n))


def swap_halves(n: int) -> np.ndarray:
    """Permutation matrix ``P(u (x) v) = v (x) u`` on ``V^n (x) V^n``."""
    return swap_halves_dim(2 ** n)


@dataclass
class ReducedRMatrix:
    """``R^{s,t}(x)`` on ``V^n (x) V^n``: row ``(alpha', beta')``, column ``(alpha, beta)``."""

    s: int
    t: int
    n: int
    x: complex
    params: Params
    matrix: np.ndarray
    computed: np.ndarray = field(repr=False)  # bool mask of entries evaluated
    method: str = "closed"

    @property
    def checked(self) -> np.ndarray:
        """``P R``."""
        return swap_halves(self.n) @ self.matrix

    @property
    def exploratory(self) -> bool:
        return (self.s, self.t) in EXPLORATORY

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_reduced_r(s: int, t: int, n: int, x: complex, params: Params,
                    method: str | None = None, max_rank: int = 4) -> ReducedRMatrix:
    """Fill ``R^{s,t}(x)`` entry by entry over per-site conserving index patterns only."""
    if n < 1:
        raise ValueError("rank n must be >= 1")
    if n > max_rank:
        raise ResourceGuard(f"rank {n} exceeds budget {max_rank}")
    method = method or default_method(s, t)
    form = BracketForm(s, t, x, params)
    d = 2 ** n
    mat = np.zeros((d * d, d * d), dtype=complex)
    computed = np.zeros((d * d, d * d), dtype=bool)
    ent = l_entries(form.ring)
    for combo in itertools.product(SITE_PATTERNS, repeat=n):
        ap, bp, a, b = zip(*combo)
        word = OscElement.scalar(form.ring)
        for key in combo:
            word = word * ent[key]
        row = bits_to_index(ap) * d + bits_to_index(bp)
        col = bits_to_index(a) * d + bits_to_index(b)
        mat[row, col] = form(word, method)
        computed[row, col] = True
    return ReducedRMatrix(s, t, n, complex(x), params, mat, computed, method)


# --- Yang-Baxter -----------------------------------------------------------

def swap_halves_dim(d: int) -> np.ndarray:
    """Permutation matrix of ``u (x) v -> v (x) u`` on ``C^d (x) C^d``."""
    P = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            P[b * d + a, a * d + b] = 1.0
    return P


def _on_pair(R: np.ndarray, d: int, pair: str) -> np.ndarray:
    """Embed ``R`` on ``V_a V_b``-type pair ``"ab"``, ``"ac"`` or ``"bc"`` of three copies."""
    I = np.eye(d)
    if pair == "ab":
        return np.kron(R, I)
    if pair == "bc":
        return np.kron(I, R)
    # swap b and c, act on (a, b), swap back
    P = np.kron(I, swap_halves_dim(d))
    return P @ np.kron(R, I) @ P


def check_yang_baxter(s: int, t: int, n: int, x: complex, y: complex, params: Params,
                      method: str | None = None) -> dict[str, float]:
    """Operator-norm residuals of both forms of the Yang-Baxter equation."""
    d = 2 ** n
    Rx = build_reduced_r(s, t, n, x, params, method).matrix
    Rxy = build_reduced_r(s, t, n, x * y, params, method).matrix
    Ry = build_reduced_r(s, t, n, y, params, method).matrix
    lhs = _on_pair(Rx, d, "ab") @ _on_pair(Rxy, d, "ac") @ _on_pair(Ry, d, "bc")
    rhs = _on_pair(Ry, d, "bc") @ _on_pair(Rxy, d, "ac") @ _on_pair(Rx, d, "ab")
    P = swap_halves_dim(d)
    I = np.eye(d)
    cx, cxy, cy = P @ Rx, P @ Rxy, P @ Ry
    blhs = np.kron(cx, I) @ np.kron(I, cxy) @ np.kron(cy, I)
    brhs = np.kron(I, cy) @ np.kron(cxy, I) @ np.kron(I, cx)
    return {"ybe": float(np.linalg.norm(lhs - rhs, 2)),
            "braid": float(np.linalg.norm(blhs - brhs, 2))}


# --- selection rules ---------------------------------------------------------

def check_selection_rules(R: ReducedRMatrix) -> dict:
    """Structural-zero audit of a reduced R matrix.

    Returns counts plus the number of violations, each of which must be 0.
    Zeros are tested exactly (``!= 0``), not against a tolerance.
    """
    n, d = R.n, 2 ** R.n
    site_viol = parity_viol = nonzero = 0
    for row in range(d * d):
        ap, bp = index_to_bits(row // d, n), index_to_bits(row % d, n)
        for col in range(d * d):
            v = R.matrix[row, col]
            if v == 0:
                continue
            nonzero += 1
            a, b = index_to_bits(col // d, n), index_to_bits(col % d, n)
            if any(ap[i] + bp[i] != a[i] + b[i] for i in range(n)):
                site_viol += 1
            if (R.s, R.t) == (2, 2) and (sum(ap) - sum(a)) % 2:
                parity_viol += 1
    # total weight: sum_i (alpha_i + beta_i), diagonal on V^n (x) V^n
    weight = np.array([sum(index_to_bits(i // d, n)) + sum(index_to_bits(i % d, n))
                       for i in range(d * d)], dtype=float)
    W = np.diag(weight)
    comm = R.checked @ W - W @ R.checked
    return {
        "computed": int(R.computed.sum()),
        "structural_zero": int(R.matrix.size - R.computed.sum()),
        "nonzero": nonzero,
        "site_violations": site_viol,
        "parity_violations": parity_viol,
        "weight_commutator": float(np.abs(comm).max()),
    }


__all__ = [
    "UnsupportedForm", "FORMS", "BracketForm", "default_method", "l_word", "w_element",
    "bits_to_index", "index_to_bits", "swap_halves", "ReducedRMatrix", "build_reduced_r",
    "check_yang_baxter", "check_selection_rules", "SITE_PATTERNS",
]
