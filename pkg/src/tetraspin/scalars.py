"""Scalar conventions, parameter validation and q-Pochhammer products.

All half-integer powers of ``p`` are taken as odd powers of ``half_p = 1j*q``,
so ``p = -q**2`` and no complex branch choice is ever made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class TetraspinError(Exception):
    """Base class for all errors raised by this package."""


class OutOfRange(TetraspinError, ValueError):
    pass


class PoleGuard(TetraspinError, ValueError):
    """A spectral parameter sits on (or within tol of) a pole."""


class NoConvergence(TetraspinError, ArithmeticError):
    pass


class ResourceGuard(TetraspinError, MemoryError):
    """Requested object exceeds the configured size budget."""


class TailWarning(UserWarning):
    """A truncated series could not be brought below ``tail_tol``."""


DEFAULT_X_MAX = 0.7


@dataclass(frozen=True)
class Params:
    """Validated parameter bundle. Build it with :func:`make_params`."""

    q: float
    x: complex
    y: complex | None = None
    cutoff: int = 12
    tol: float = 1e-10
    tail_tol: float = 1e-14
    x_max: float = DEFAULT_X_MAX
    p: complex = field(init=False)
    half_p: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", complex(-self.q * self.q))
        object.__setattr__(self, "half_p", complex(0.0, self.q))

    def p_half_pow(self, m: int) -> complex:
        """``p**(m/2)``; odd ``m`` goes through ``half_p``."""
        return half_power(self.half_p, m)

    def with_(self, **changes) -> "Params":
        fields = dict(q=self.q, x=self.x, y=self.y, cutoff=self.cutoff, tol=self.tol,
                      tail_tol=self.tail_tol, x_max=self.x_max)
        fields.update(changes)
        return make_params(**fields)


def half_power(half_p: complex, m: int) -> complex:
    """Integer power of ``half_p``; ``m = 2k+1`` gives ``p**(k+1/2)``."""
    return half_p ** m


def _check_pole(name: str, z: complex, p: complex, cutoff: int, tol: float) -> None:
    if abs(z - 1) < tol:
        raise PoleGuard(f"{name}={z!r} is within {tol:g} of 1")
    # zeros of (z; p^s)_inf for s = 1, 2, 4 inside the truncation range
    for s in (1, 2, 4):
        base = p ** s
        for i in range(1, 2 * cutoff + 1):
            if abs(1 - z * base ** i) < tol:
                raise PoleGuard(f"{name}={z!r} hits a zero of ({name}; p^{s})_inf")


def make_params(q: float, x: complex = 0.3, y: complex | None = None, cutoff: int = 12,
                tol: float = 1e-10, tail_tol: float = 1e-14,
                x_max: float = DEFAULT_X_MAX) -> Params:
    """Validate and bundle the working parameters.

    Raises:
        OutOfRange: ``q`` outside (0, 1), ``cutoff < 4``, non-positive
            tolerances or ``|x|``/``|y|`` above ``x_max``.
        PoleGuard: ``x``, ``y`` or ``x*y`` at a pole of the norm factors.
    """
    q = float(q)
    if not 0.0 < q < 1.0:
        raise OutOfRange(f"q must lie in (0, 1), got {q}")
    if int(cutoff) != cutoff or cutoff < 4:
        raise OutOfRange(f"cutoff must be an integer >= 4, got {cutoff}")
    if tol <= 0 or tail_tol <= 0:
        raise OutOfRange("tolerances must be positive")
    x = complex(x)
    p = complex(-q * q)
    spectral = [("x", x)]
    if y is not None:
        y = complex(y)
        spectral += [("y", y), ("xy", x * y)]
    for name, z in spectral:
        _check_pole(name, z, p, int(cutoff), tol)
        if abs(z) > x_max:
            raise OutOfRange(f"|{name}| = {abs(z):.3g} exceeds x_max = {x_max}")
    for m in range(1, 2 * int(cutoff) + 1):
        if (1 - p ** (2 * m)).real <= 0:
            raise OutOfRange("1 - p^(2m) must have positive real part")
    return Params(q=q, x=x, y=y, cutoff=int(cutoff), tol=float(tol),
                  tail_tol=float(tail_tol), x_max=float(x_max))


def qpoch_finite(z, base, j: int):
    """``(z; base)_j = prod_{i=1..j} (1 - z*base**(i-1))``; 1 for ``j = 0``.

    Works for any ring supporting ``*`` and ``-`` (floats, complex, sympy).
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    out = 1
    term = z
    for _ in range(j):
        out = out * (1 - term)
        term = term * base
    return out


def qpoch_infinite(z: complex, base: complex, tail_tol: float = 1e-15,
                   max_terms: int = 100_000) -> complex:
    """``(z; base)_inf`` truncated once the neglected tail is below ``tail_tol``.

    The stopping rule bounds the relative change from all remaining factors:
    with ``u_i = z*base**i`` and ``S = sum_{i>=K} |u_i|/(1-|u_i|)``, the
    product of the tail lies within ``exp(S) - 1`` of one.
    """
    b = abs(base)
    if b >= 1:
        raise NoConvergence(f"|base| = {b} >= 1")
    out = complex(1.0)
    term = complex(z)
    for _ in range(max_terms):
        t = abs(term)
        if t < 0.5:
            tail = t / ((1 - b) * (1 - t))
            if math.expm1(tail) < tail_tol:
                return out
        out *= 1 - term
        term *= base
    raise NoConvergence("product did not settle within max_terms factors")
