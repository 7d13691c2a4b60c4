"""Laurent polynomials and rational operators in the backward shift z^-1.

A :class:`LaurentPoly` stores a dense coefficient vector together with the
exponent of its first entry, so ``LaurentPoly([1, -1])`` is ``1 - z^-1`` and
``LaurentPoly([1, 2], lo_exp=-1)`` is ``z + 2``.  Positive powers of ``z``
(negative ``lo_exp``) appear naturally when a controller looks ahead along a
known reference; filtering through such operators needs the future samples.

Steady-state limits are computed by substituting ``z^-1 = 1 - w`` and reading
leading Taylor coefficients at ``w = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonCausalError, UnstableLoopError
from .kernels import allpole_filter

TRIM_TOL = 1e-12
UNIT_CIRCLE_TOL = 1e-9
# relative to the absolute sum of the terms that produced a series coefficient
SERIES_ZERO_TOL = 1e-12
MAX_INPUT_POWER = 3

UNBOUNDED = math.inf


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """Finite sum ``sum_i coeffs[i] * z^-(lo_exp + i)``."""

    coeffs: np.ndarray
    lo_exp: int = 0

    def __init__(self, coeffs: Sequence[float] | np.ndarray = (), lo_exp: int = 0):
        c = np.array(coeffs, dtype=float).ravel()
        nz = np.flatnonzero(np.abs(c) > TRIM_TOL)
        if nz.size == 0:
            c, lo_exp = np.zeros(0), 0
        else:
            lo_exp = int(lo_exp) + int(nz[0])
            c = c[nz[0] : nz[-1] + 1].copy()
        object.__setattr__(self, "coeffs", _freeze(c))
        object.__setattr__(self, "lo_exp", lo_exp)

    @classmethod
    def monomial(cls, power: int, coeff: float = 1.0) -> "LaurentPoly":
        """``coeff * z^-power``."""
        return cls([coeff], lo_exp=power)

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def hi_exp(self) -> int:
        return self.lo_exp + max(self.coeffs.size - 1, 0)

    @property
    def span(self) -> int:
        return max(self.coeffs.size - 1, 0)

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``z^-k``."""
        return LaurentPoly(self.coeffs, self.lo_exp + k)

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients of ``z^-lo ... z^-hi`` (zero outside the support)."""
        out = np.zeros(hi - lo + 1)
        for i, c in enumerate(self.coeffs):
            e = self.lo_exp + i
            if lo <= e <= hi:
                out[e - lo] = c
        return out

    def __add__(self, other):
        return poly_add(self, as_poly(other))

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(-self.coeffs, self.lo_exp)

    def __sub__(self, other):
        return poly_add(self, -as_poly(other))

    def __rsub__(self, other):
        return poly_add(as_poly(other), -self)

    def __mul__(self, other):
        return poly_mul(self, as_poly(other))

    __rmul__ = __mul__

    def __call__(self, z_inv):
        return poly_eval(self, z_inv)

    def __repr__(self):
        if self.is_zero:
            return "LaurentPoly(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            e = self.lo_exp + i
            terms.append(f"{c:+.12g}" + ("" if e == 0 else f"*z^{-e}"))
        return "LaurentPoly(" + " ".join(terms) + ")"

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.lo_exp == other.lo_exp and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.lo_exp, self.coeffs.tobytes()))

    def allclose(self, other: "LaurentPoly", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))


def as_poly(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    return LaurentPoly([float(x)])


ONE = LaurentPoly([1.0])
ZERO = LaurentPoly()
DELTA = LaurentPoly([1.0, -1.0])
Z_INV = LaurentPoly.monomial(1)
Z = LaurentPoly.monomial(-1)


def poly_add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    lo = min(a.lo_exp, b.lo_exp)
    hi = max(a.hi_exp, b.hi_exp)
    return LaurentPoly(a.dense(lo, hi) + b.dense(lo, hi), lo)


def poly_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    if a.is_zero or b.is_zero:
        return ZERO
    return LaurentPoly(np.convolve(a.coeffs, b.coeffs), a.lo_exp + b.lo_exp)


def poly_sum(terms) -> LaurentPoly:
    out = ZERO
    for t in terms:
        out = out + t
    return out


def poly_eval(p: LaurentPoly, z_inv: complex) -> complex:
    """Evaluate ``p`` at a given value of ``z^-1`` (Horner)."""
    if p.is_zero:
        return 0.0
    if p.lo_exp < 0 and z_inv == 0:
        raise ZeroDivisionError("positive powers of z evaluated at z^-1 = 0")
    acc = 0.0
    for c in p.coeffs[::-1]:
        acc = acc * z_inv + c
    return acc * z_inv**p.lo_exp


def poly_roots_in_z(p: LaurentPoly) -> np.ndarray:
    """All z-plane roots of ``p``, via companion-matrix eigenvalues.

    ``p * z^(lo_exp + span)`` is the ordinary polynomial
    ``c0 z^s + c1 z^(s-1) + ... + cs`` whose roots are returned.
    """
    if p.is_zero:
        raise ValueError("roots of the zero polynomial are undefined")
    c = p.coeffs
    s = c.size - 1
    if s == 0:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((s, s))
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(s - 1)
    return np.linalg.eigvals(comp).astype(complex)


def poly_from_roots_in_z(roots, lead: float, lo_exp: int = 0) -> LaurentPoly:
    """Inverse of :func:`poly_roots_in_z` up to the leading coefficient."""
    c = np.array([1.0 + 0j])
    for r in roots:
        c = np.convolve(c, [1.0, -r])
    return LaurentPoly(lead * c.real, lo_exp)


@dataclass(frozen=True)
class WSeries:
    """Taylor coefficients in ``w = 1 - z^-1`` up to ``order``."""

    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.coeffs) != self.order + 1:
            raise ValueError("WSeries needs order + 1 coefficients")


def _binomial_rows(exps: np.ndarray, order: int) -> np.ndarray:
    # g[i, j] = coefficient of w^j in (1 - w)^exps[i]
    g = np.zeros((exps.size, order + 1))
    g[:, 0] = 1.0
    for j in range(1, order + 1):
        g[:, j] = g[:, j - 1] * (j - 1 - exps) / j
    return g


def _wseries_and_scale(p: LaurentPoly, order: int):
    if p.is_zero:
        return np.zeros(order + 1), np.zeros(order + 1)
    exps = p.lo_exp + np.arange(p.coeffs.size, dtype=float)
    terms = p.coeffs[:, None] * _binomial_rows(exps, order)
    return terms.sum(axis=0), np.abs(terms).sum(axis=0)


def wseries_of(p: LaurentPoly, order: int) -> WSeries:
    if order < 0:
        raise ValueError("order must be >= 0")
    coeffs, _ = _wseries_and_scale(p, order)
    return WSeries(order, coeffs)


def _leading_order(coeffs: np.ndarray, scale: np.ndarray) -> int:
    """Index of the first coefficient that is not roundoff; len() if none."""
    for j, (c, s) in enumerate(zip(coeffs, scale)):
        if abs(c) > SERIES_ZERO_TOL * s:
            return j
    return len(coeffs)


@dataclass(frozen=True)
class RationalTF:
    """Ratio ``num / den`` of Laurent polynomials."""

    num: LaurentPoly
    den: LaurentPoly = ONE

    def __post_init__(self):
        if self.den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")

    def normalized(self) -> "RationalTF":
        """Scale both sides by a power of z so ``den`` starts at ``z^0``."""
        k = -self.den.lo_exp
        return RationalTF(self.num.shift(k), self.den.shift(k))

    @property
    def advance(self) -> int:
        """Number of future input samples needed to realize the operator."""
        g = self.normalized()
        if g.num.is_zero:
            return 0
        return max(0, -g.num.lo_exp)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def poles(self) -> np.ndarray:
        return poly_roots_in_z(self.normalized().den)

    def __mul__(self, other):
        if isinstance(other, RationalTF):
            return RationalTF(self.num * other.num, self.den * other.den)
        return RationalTF(self.num * as_poly(other), self.den)

    __rmul__ = __mul__

    def __neg__(self):
        return RationalTF(-self.num, self.den)

    def __call__(self, z_inv):
        return poly_eval(self.num, z_inv) / poly_eval(self.den, z_inv)


def tf_filter(g: RationalTF, x, future=None) -> np.ndarray:
    """Output of ``den * y = num * x`` for a finite input with zero pre-history.

    Operators with positive powers of ``z`` read ahead; ``future`` must then
    hold at least ``g.advance`` samples that follow ``x``.
    """
    g = g.normalized()
    x = np.asarray(x, dtype=float)
    n = x.size
    if g.num.is_zero or n == 0:
        return np.zeros(n)
    adv = max(0, -g.num.lo_exp)
    if adv:
        fut = np.zeros(0) if future is None else np.asarray(future, dtype=float)
        if fut.size < adv:
            raise NonCausalError(
                f"operator reads {adv} samples ahead; {fut.size} future samples given"
            )
        x = np.concatenate([x, fut[:adv]])
    # f[k] = sum_i c_i x[k - lo - i]
    full = np.convolve(x, g.num.coeffs)
    lo = g.num.lo_exp
    f = np.zeros(n)
    src = np.arange(n) - lo
    ok = (src >= 0) & (src < full.size)
    f[ok] = full[src[ok]]
    return allpole_filter(np.ascontiguousarray(g.den.coeffs), f)


def _deflate_delta(p: LaurentPoly, times: int) -> LaurentPoly:
    """Divide an ordinary polynomial in z^-1 by ``(1 - z^-1)^times``."""
    c = p.coeffs.copy()
    for _ in range(times):
        c = np.cumsum(c)[:-1]
    return LaurentPoly(c, p.lo_exp)


def final_value_limit(g: RationalTF, input_power: int) -> float:
    """``lim_{z->1} (1 - z^-1) g(z^-1) Z{k^n}``.

    Returns :data:`UNBOUNDED` when ``g`` does not have enough zeros at
    ``z = 1`` to absorb the input's poles.  Raises
    :class:`~gpclab.errors.UnstableLoopError` if any pole of ``g`` other than
    ``z = 1`` lies on or outside the unit circle.
    """
    n = int(input_power)
    if not 0 <= n <= MAX_INPUT_POWER:
        raise ValueError(f"input power must be in 0..{MAX_INPUT_POWER}, got {n}")
    g = g.normalized()
    if g.num.lo_exp < 0:
        # multiply through by z^-adv; (1 - w)^adv is 1 at w = 0
        adv = -g.num.lo_exp
        g = RationalTF(g.num.shift(adv), g.den.shift(adv))
    den_c, den_s = _wseries_and_scale(g.den, g.den.hi_exp)
    p = _leading_order(den_c, den_s)
    if p == den_c.size:
        raise ValueError("denominator vanishes identically in w")
    rest = _deflate_delta(g.den, p)
    roots = poly_roots_in_z(rest)
    if roots.size and np.max(np.abs(roots)) >= 1.0 - UNIT_CIRCLE_TOL:
        raise UnstableLoopError(
            f"pole of modulus {np.max(np.abs(roots)):.12g} outside the open unit disc"
        )
    if g.num.is_zero:
        return 0.0
    target = p + n
    num_c, num_s = _wseries_and_scale(g.num, target)
    m = _leading_order(num_c, num_s)
    if m < target:
        return UNBOUNDED
    if m > target:
        return 0.0
    return float(num_c[target] * math.factorial(n) / den_c[p])
