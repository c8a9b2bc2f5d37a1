"""The 3d R matrix on F x F x F, the fermionic L operator, and their checks.

The R matrix conserves ``n1 + n2`` and ``n2 + n3``, so it is a direct sum of
finite blocks labelled by ``(c12, c23)``.  Any set of states closed under
these two sums (a :class:`SectorSpace`) carries R exactly, with no Fock
truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .oscillator import (FloatRing, OscElement, boundary_bra, boundary_ket,
                         fock_generators, fock_matrix, generators)
from .scalars import Params, ResourceGuard, TetraspinError, qpoch_finite


class SlotMismatch(TetraspinError, ValueError):
    pass


# --- matrix elements ------------------------------------------------------

@lru_cache(maxsize=4096)
def _pp(q: float, n: int) -> float:
    p2 = q ** 4
    return qpoch_finite(p2, p2, n)


def r3d_element(n: tuple[int, int, int], n_prime: tuple[int, int, int], params) -> float:
    """``<n1,n2,n3| R |n1',n2',n3'>`` from the closed formula.

    The negative powers inside ``(p^(-2n); p^2)_k`` are folded into one
    non-negative power of ``p`` per summand, which keeps every term bounded.
    """
    q = params.q
    p = -q * q
    n1, n2, n3 = n
    m1, m2, m3 = n_prime
    if min(n + n_prime) < 0:
        raise ValueError("occupation numbers must be non-negative")
    if n1 + n2 != m1 + m2 or n2 + n3 != m2 + m3:
        return 0.0
    pref = math.sqrt(_pp(q, m1) * _pp(q, m2) * _pp(q, m3)
                     / (_pp(q, n1) * _pp(q, n2) * _pp(q, n3)))
    total = 0.0
    for k in range(max(0, m2 - n2), min(n1, n3, m2) + 1):
        e = n1 * n3 + m2 * (n1 + n3 + 1) + 2 * k - 2 * k * (n1 + n3 + m2) + 3 * k * (k - 1)
        term = (_pp(q, n1) / _pp(q, n1 - k) * _pp(q, n3) / _pp(q, n3 - k)
                * _pp(q, m2) / _pp(q, m2 - k) / _pp(q, k)
                * qpoch_finite(p ** (2 * (n2 - m2 + k + 1)), p * p, m2 - k))
        total += (-1) ** k * p ** e * term
    return pref * (-1) ** m2 / _pp(q, m2) * total


def block_states(c12: int, c23: int) -> list[tuple[int, int, int]]:
    """States of the conserved sector, ordered by ``n2``."""
    return [(c12 - b, b, c23 - b) for b in range(min(c12, c23) + 1)]


@dataclass
class ThreeDR:
    """Lazily built block table of the 3d R matrix at fixed ``q``."""

    params: Params
    _blocks: dict = field(default_factory=dict, repr=False)

    def block(self, c12: int, c23: int) -> np.ndarray:
        if c12 < 0 or c23 < 0:
            raise ValueError("sector labels must be non-negative")
        key = (c12, c23)
        if key not in self._blocks:
            st = block_states(c12, c23)
            b = np.array([[r3d_element(a, c, self.params) for c in st] for a in st])
            b.setflags(write=False)
            self._blocks[key] = b
        return self._blocks[key]

    def element(self, n, n_prime) -> float:
        return r3d_element(tuple(n), tuple(n_prime), self.params)


def r3d_block(c12: int, c23: int, params) -> np.ndarray:
    return ThreeDR(params).block(c12, c23)


# --- sector spaces --------------------------------------------------------

class SectorSpace:
    """All states with ``n1 + n2 <= C`` and ``n2 + n3 <= C``."""

    def __init__(self, C: int):
        self.C = int(C)
        self.states = [s for c12 in range(C + 1) for c23 in range(C + 1)
                       for s in block_states(c12, c23)]
        self.index = {s: i for i, s in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    def guard(self, C: int) -> np.ndarray:
        """Indices of the states inside the smaller sector space ``S_C``."""
        return np.array([i for i, (a, b, c) in enumerate(self.states)
                         if a + b <= C and b + c <= C], dtype=int)

    def mode_operator(self, mode: int, fock: np.ndarray) -> sp.csr_matrix:
        """Single-mode matrix ``fock`` (on |0>..|C>) acting on ``mode`` (0, 1, 2).

        Images leaving the sector space are dropped.
        """
        rows, cols, vals = [], [], []
        for col, st in enumerate(self.states):
            for new, v in zip(*_column(fock, st[mode])):
                tgt = list(st)
                tgt[mode] = new
                row = self.index.get(tuple(tgt))
                if row is not None:
                    rows.append(row)
                    cols.append(col)
                    vals.append(v)
        n = len(self.states)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)

    def r_matrix(self, R: ThreeDR) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for c12 in range(self.C + 1):
            for c23 in range(self.C + 1):
                st = block_states(c12, c23)
                idx = [self.index[s] for s in st]
                b = R.block(c12, c23)
                for a, ia in enumerate(idx):
                    for c, ic in enumerate(idx):
                        if b[a, c] != 0.0:
                            rows.append(ia)
                            cols.append(ic)
                            vals.append(b[a, c])
        n = len(self.states)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)


def _column(mat: np.ndarray, j: int):
    nz = np.nonzero(mat[:, j])[0]
    return nz, mat[nz, j]


def _sector_ops(space: SectorSpace, params):
    ring = FloatRing(params.q)
    ap, am, k = generators(ring)
    out = {}
    for mode in range(3):
        for name, el in (("a+", ap), ("a-", am), ("k", k)):
            out[name, mode] = space.mode_operator(mode, fock_matrix(el, space.C))
    return out


def check_adjoint_map(params, N: int) -> dict[str, float]:
    """Residuals of the adjoint action ``R X R = Y`` (``R^-1 = R``).

    Columns are restricted to ``S_(N-2)``; on them every intermediate state
    stays inside ``S_N`` where R is exact, so the residual is truncation-free.
    """
    space = SectorSpace(N)
    R = space.r_matrix(ThreeDR(params))
    ops = _sector_ops(space, params)
    guard = space.guard(N - 2)

    def a(sign, mode):
        return ops["a+" if sign > 0 else "a-", mode]

    def k(mode):
        return ops["k", mode]

    rels = {}
    for sign, tag in ((1, "+"), (-1, "-")):
        rels[f"k2 a1{tag}"] = (k(1) @ a(sign, 0), k(2) @ a(sign, 0) + k(0) @ a(sign, 1) @ a(-sign, 2))
        rels[f"a2{tag}"] = (a(sign, 1), a(sign, 0) @ a(sign, 2) - k(0) @ k(2) @ a(sign, 1))
        rels[f"k2 a3{tag}"] = (k(1) @ a(sign, 2), k(0) @ a(sign, 2) + k(2) @ a(-sign, 0) @ a(sign, 1))
    rels["k1 k2"] = (k(0) @ k(1), k(0) @ k(1))
    rels["k2 k3"] = (k(1) @ k(2), k(1) @ k(2))
    out = {}
    for name, (x, y) in rels.items():
        diff = (R @ x @ R - y)[:, guard]
        out[name] = float(abs(diff).max()) if diff.nnz else 0.0
    return out


def check_involution(params, cmax: int) -> float:
    """Max entry of ``B B - 1`` over all blocks with ``c12, c23 <= cmax``."""
    R = ThreeDR(params)
    worst = 0.0
    for c12 in range(cmax + 1):
        for c23 in range(cmax + 1):
            b = R.block(c12, c23)
            worst = max(worst, float(np.abs(b @ b - np.eye(len(b))).max()))
    return worst


def check_r_symmetry(params, cmax: int) -> float:
    """Both index symmetries: transpose, and reversal ``(n1,n2,n3) -> (n3,n2,n1)``."""
    R = ThreeDR(params)
    worst = 0.0
    for c12 in range(cmax + 1):
        for c23 in range(cmax + 1):
            b = R.block(c12, c23)
            worst = max(worst, float(np.abs(b - b.T).max()))
            # reversal maps sector (c12, c23) to (c23, c12) with the same n2 order
            worst = max(worst, float(np.abs(b - R.block(c23, c12)).max()))
    return worst


# --- tensor operators -----------------------------------------------------

@dataclass(frozen=True)
class TensorOperator:
    """Sparse operator on an ordered tensor product (leftmost factor most significant)."""

    factors: tuple  # ("F", dim) or ("V", 2)
    matrix: sp.csr_matrix

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    def __matmul__(self, other: "TensorOperator") -> "TensorOperator":
        if other.factors != self.factors:
            raise SlotMismatch("factor lists differ")
        return TensorOperator(self.factors, (self.matrix @ other.matrix).tocsr())

    def __sub__(self, other: "TensorOperator") -> "TensorOperator":
        if other.factors != self.factors:
            raise SlotMismatch("factor lists differ")
        return TensorOperator(self.factors, (self.matrix - other.matrix).tocsr())


def embed(local: sp.spmatrix, slots: tuple[int, ...], dims: tuple[int, ...]) -> sp.csr_matrix:
    """Lift ``local`` acting on ``slots`` (in that order) to the full product."""
    local = sp.coo_matrix(local)
    dims = tuple(dims)
    total = int(np.prod(dims))
    rest = [i for i in range(len(dims)) if i not in slots]
    strides = np.cumprod((dims[1:] + (1,))[::-1])[::-1]
    local_dims = [dims[s] for s in slots]
    # multi-index of local rows/cols
    lr = np.array(np.unravel_index(local.row, local_dims)) if local.nnz else np.zeros((len(slots), 0), int)
    lc = np.array(np.unravel_index(local.col, local_dims)) if local.nnz else np.zeros((len(slots), 0), int)
    off_local_r = sum(lr[i] * strides[s] for i, s in enumerate(slots))
    off_local_c = sum(lc[i] * strides[s] for i, s in enumerate(slots))
    if rest:
        grids = np.array(np.unravel_index(np.arange(int(np.prod([dims[r] for r in rest]))),
                                          [dims[r] for r in rest]))
        off_rest = sum(grids[i] * strides[r] for i, r in enumerate(rest))
    else:
        off_rest = np.zeros(1, dtype=int)
    rows = (off_rest[:, None] + off_local_r[None, :]).ravel()
    cols = (off_rest[:, None] + off_local_c[None, :]).ravel()
    vals = np.broadcast_to(local.data, (len(off_rest), local.nnz)).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(total, total), dtype=complex)


def l_entries(ring) -> dict[tuple[int, int, int, int], OscElement]:
    """Nonzero entries ``L(a', b' | a, b)`` of the L operator as algebra elements."""
    ap, am, k = generators(ring)
    one = OscElement.scalar(ring)
    mik = (-ring.i) * k
    return {
        (0, 0, 0, 0): one,
        (1, 1, 1, 1): one,
        (1, 0, 1, 0): mik,
        (0, 1, 0, 1): mik,
        (1, 0, 0, 1): ap,
        (0, 1, 1, 0): am,
    }


DISPLAY_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


def l_display(ring) -> list[list[OscElement]]:
    """The 4x4 L matrix in the row/column order (0,0), (1,0), (0,1), (1,1)."""
    ent = l_entries(ring)
    zero = OscElement(ring)
    return [[ent.get(r + c, zero) for c in DISPLAY_ORDER] for r in DISPLAY_ORDER]


def l_local_matrix(N: int, params) -> sp.csr_matrix:
    """L on ``F x V x V`` with composite index ``(n, alpha, beta)``."""
    ring = FloatRing(params.q)
    dim = 4 * (N + 1)
    out = sp.lil_matrix((dim, dim), dtype=complex)
    for (a1, b1, a0, b0), el in l_entries(ring).items():
        m = fock_matrix(el, N)
        for r, c in zip(*np.nonzero(m)):
            out[4 * r + 2 * a1 + b1, 4 * c + 2 * a0 + b0] = m[r, c]
    return out.tocsr()


def build_l_operator(slots: tuple[int, int, int], factors: tuple, N: int, params) -> TensorOperator:
    """L acting on ``(fock, V_a, V_b)`` slots of the factor list, identity elsewhere."""
    fi, va, vb = slots
    if len(set(slots)) != 3 or max(slots) >= len(factors) or min(slots) < 0:
        raise SlotMismatch(f"invalid slots {slots} for {len(factors)} factors")
    if factors[fi] != ("F", N + 1) or factors[va] != ("V", 2) or factors[vb] != ("V", 2):
        raise SlotMismatch(f"slots {slots} do not address (F, V, V)")
    dims = tuple(d for _, d in factors)
    return TensorOperator(tuple(factors), embed(l_local_matrix(N, params), slots, dims))


def r3d_box_matrix(N: int, params) -> sp.csr_matrix:
    """R on the box ``n_i <= N``, exact on ``S_N`` and zero on the remaining states."""
    R = ThreeDR(params)
    d = N + 1
    rows, cols, vals = [], [], []
    for c12 in range(N + 1):
        for c23 in range(N + 1):
            st = block_states(c12, c23)
            idx = [(a * d + b) * d + c for a, b, c in st]
            b = R.block(c12, c23)
            for i, ia in enumerate(idx):
                for j, ja in enumerate(idx):
                    if b[i, j] != 0.0:
                        rows.append(ia)
                        cols.append(ja)
                        vals.append(b[i, j])
    return sp.csr_matrix((vals, (rows, cols)), shape=(d ** 3, d ** 3), dtype=complex)


def check_tetrahedron(params, N: int, layers: int = 1, budget: int = 250_000) -> dict[str, float]:
    """``R L_1ab L_2ac L_3bc - L_3bc L_2ac L_1ab R`` on the guard band.

    Factors are ``F1 F2 F3 a_1..a_n b_1..b_n c_1..c_n``.  Columns are limited
    to Fock states in ``S_(N - 2*layers)``, so every intermediate state stays in
    ``S_N`` where both R and the truncated oscillators are exact.
    """
    if layers < 1:
        raise ValueError("layers must be >= 1")
    d = N + 1
    factors = (("F", d),) * 3 + (("V", 2),) * (3 * layers)
    total = d ** 3 * 8 ** layers
    if total > budget:
        raise ResourceGuard(f"composite dimension {total} exceeds budget {budget}")
    dims = tuple(x for _, x in factors)
    A = [3 + i for i in range(layers)]
    B = [3 + layers + i for i in range(layers)]
    C = [3 + 2 * layers + i for i in range(layers)]
    local = l_local_matrix(N, params)

    def layered(fock, first, second):
        out = sp.identity(total, dtype=complex, format="csr")
        for u, v in zip(first, second):
            out = out @ embed(local, (fock, u, v), dims)
        return out.tocsr()

    L1 = layered(0, A, B)
    L2 = layered(1, A, C)
    L3 = layered(2, B, C)
    R = embed(r3d_box_matrix(N, params), (0, 1, 2), dims)
    guard_fock = [(a * d + b) * d + c for a in range(d) for b in range(d) for c in range(d)
                  if a + b <= N - 2 * layers and b + c <= N - 2 * layers]
    vdim = 8 ** layers
    cols = np.array([f * vdim + v for f in guard_fock for v in range(vdim)], dtype=int)
    diff = ((R @ L1 @ L2 @ L3) - (L3 @ L2 @ L1 @ R)).tocsc()[:, cols]
    frob = float(sp.linalg.norm(diff)) if diff.nnz else 0.0
    maxabs = float(abs(diff).max()) if diff.nnz else 0.0
    lhs = (R @ L1 @ L2 @ L3).tocsc()[:, cols]
    return {"frobenius": frob, "max_entry": maxabs,
            "vacuum": float(abs(lhs[0, 0] - 1.0)) if len(cols) else 0.0}


def chi3_vector(s: int, x: complex, y: complex, space: SectorSpace, params, side: str) -> np.ndarray:
    """Components of ``chi_s(x) (x) chi_s(xy) (x) chi_s(y)`` on a sector space."""
    make = boundary_ket if side == "ket" else boundary_bra
    C = space.C
    cs = [make(s, u, C, params).coeffs for u in (x, x * y, y)]
    return np.array([cs[0][a] * cs[1][b] * cs[2][c] for a, b, c in space.states])


def check_chi_eigenvector(s: int, x: complex, y: complex, params, N: int,
                          margin: int = 4) -> dict[str, float]:
    """Componentwise ``R chi - chi`` and ``chi-bar R - chi-bar`` on ``S_(N - margin)``.

    The boundary coefficients are closed-form for every index, and R only
    mixes states within a sector, so these components carry no truncation.
    """
    space = SectorSpace(N)
    R = space.r_matrix(ThreeDR(params))
    guard = space.guard(N - margin)
    ket = chi3_vector(s, x, y, space, params, "ket")
    bra = chi3_vector(s, x, y, space, params, "bra")
    rk = R @ ket - ket
    rb = R.T @ bra - bra
    return {"ket": float(np.abs(rk[guard]).max()), "bra": float(np.abs(rb[guard]).max()),
            "vacuum": float(max(abs(rk[0]), abs(rb[0])))}


def check_l_conservation(N: int, params) -> float:
    """``[L, n + alpha]`` vanishes, where ``alpha`` counts V_a; also ``n - beta``."""
    local = l_local_matrix(N, params).toarray()
    idx = [(n, a, b) for n in range(N + 1) for a in (0, 1) for b in (0, 1)]
    worst = 0.0
    for charge in (lambda n, a, b: a + b, lambda n, a, b: n + b):
        diag = np.diag([charge(*t) for t in idx]).astype(complex)
        worst = max(worst, float(np.abs(local @ diag - diag @ local).max()))
    return worst


__all__ = [
    "SlotMismatch", "r3d_element", "r3d_block", "block_states", "ThreeDR", "SectorSpace",
    "check_adjoint_map", "check_involution", "check_r_symmetry", "TensorOperator", "embed",
    "l_entries", "l_display", "l_local_matrix", "build_l_operator", "r3d_box_matrix",
    "check_tetrahedron", "chi3_vector", "check_chi_eigenvector", "check_l_conservation",
    "fock_generators",
]
