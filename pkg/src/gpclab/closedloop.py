"""Polynomial-level analysis of the closed loop.

With ``p`` the applied gain row, the control law

    du(k) = p [Y*(k) - E y(k) - PsiT dx(k) - PhiwT dchi_hat(k+1)]

becomes, after collecting the shift-operator terms,

    S du(k) = R y*(k+1) - z^-1 (e0 + F Delta) y(k+1) - Rw dchi_hat(k+1)

with ``S = 1 + z^-1 p PsiT2 T_u``, ``F = p PsiT1 T_y``, ``e0 = p E``,
``R = p H`` and ``Rw = p PhiwT H``.  Substituting into the differenced plant
``A Delta y(k+1) = B du(k) + Delta chi(k+1)`` gives

    T y(k+1) = B R y*(k+1) + S Delta chi(k+1) - B Rw Delta chi_hat(k+1)
    T = A Delta S + z^-1 B F Delta + z^-1 B e0.

For ``N = d`` the same loop can be written from the stationarity condition
with ``T1 = lam1 A Delta + B G1`` and ``G1 = g' PhiT' Q H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .carima import CarimaModel, Signal
from .controller import GainSet
from .errors import UnstableLoopError
from .prediction import PredictionSet
from .zpoly import (
    DELTA,
    ONE,
    UNIT_CIRCLE_TOL,
    Z_INV,
    LaurentPoly,
    RationalTF,
    final_value_limit,
    poly_roots_in_z,
    tf_filter,
)


def _row_poly(row, first_power: int = 0, step: int = 1) -> LaurentPoly:
    """``sum_i row[i] z^-(first_power + step*i)``."""
    out = LaurentPoly()
    for i, c in enumerate(row):
        out = out + LaurentPoly.monomial(first_power + step * i, float(c))
    return out


@dataclass(frozen=True, eq=False)
class LoopOperators:
    A: LaurentPoly
    B: LaurentPoly
    S: LaurentPoly
    F: LaurentPoly
    e0: float
    R: LaurentPoly
    Rw: LaurentPoly
    T: LaurentPoly
    T1: Optional[LaurentPoly]
    G1: Optional[LaurentPoly]
    G1w: Optional[LaurentPoly]
    lam1: float
    gains: GainSet = field(repr=False)

    @property
    def compensated(self) -> bool:
        return self.gains.spec.compensated

    @property
    def error_bracket(self) -> LaurentPoly:
        """``A Delta S + z^-1 B F Delta - B p (H - z^-1 E)``; equals ``T - B R``."""
        p = self.gains.p_row
        pe = _row_poly(p * self.gains.ps.E[self.gains.rows], first_power=1, step=0)
        return (self.A * DELTA * self.S + Z_INV * self.B * self.F * DELTA
                - self.B * (self.R - pe))


def loop_operators(model: CarimaModel, ps: PredictionSet, gains: GainSet) -> LoopOperators:
    A, B = model.A_poly, model.B_poly
    p = gains.p_row
    F = _row_poly(gains.psi1_row)
    S = ONE + Z_INV * _row_poly(gains.psi2_row)
    e0 = gains.e0
    # row i predicts y(k+1+i) = z^i y(k+1)
    R = LaurentPoly()
    for pi, r in zip(p, gains.rows):
        R = R + LaurentPoly.monomial(-int(r), float(pi))
    Rw = _row_poly(gains.w_row, first_power=0, step=-1)
    T = A * DELTA * S + Z_INV * B * F * DELTA + Z_INV * B * e0
    T1 = G1 = G1w = None
    lam1 = float(gains.spec.lam[0])
    if ps.N == gains.delay:
        # first row of PhiT' Q acts on the full prediction vector
        g_row = ps.PhiT[:, 0] * gains.spec.Q
        G1 = _row_poly(g_row, first_power=0, step=-1)
        G1w = _row_poly(g_row @ ps.PhiwT, first_power=0, step=-1)
        T1 = lam1 * A * DELTA + B * G1
    return LoopOperators(A=A, B=B, S=S, F=F, e0=e0, R=R, Rw=Rw, T=T, T1=T1, G1=G1,
                         G1w=G1w, lam1=lam1, gains=gains)


@dataclass(frozen=True)
class Verdict:
    label: str  # stable | marginal | unstable
    roots: np.ndarray

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.roots))) if self.roots.size else 0.0

    def __str__(self):
        return self.label


def classify_roots(roots) -> str:
    roots = np.asarray(roots)
    if roots.size == 0:
        return "stable"
    mod = np.abs(roots)
    if np.all(mod < 1.0 - UNIT_CIRCLE_TOL):
        return "stable"
    if np.any(np.abs(mod - 1.0) <= UNIT_CIRCLE_TOL) and np.all(mod <= 1.0 + UNIT_CIRCLE_TOL):
        return "marginal"
    return "unstable"


def _charpoly(ops: LoopOperators, which: str) -> LaurentPoly:
    if which == "T":
        return ops.T
    if which == "T1":
        if ops.T1 is None:
            raise ValueError("T1 exists only when the horizon equals the delay")
        return ops.T1
    raise ValueError(f"unknown characteristic polynomial {which!r}")


def stability(ops: LoopOperators, which: str = "T") -> Verdict:
    poly = _charpoly(ops, which)
    if poly.is_zero:
        raise ValueError("characteristic polynomial is identically zero")
    roots = poly_roots_in_z(poly)
    return Verdict(classify_roots(roots), roots)


def reference_error_tf(ops: LoopOperators, which: str = "T") -> RationalTF:
    """``y* -> e`` operator."""
    if which == "T1":
        return RationalTF(_charpoly(ops, "T1") - ops.B * ops.G1, ops.T1)
    return RationalTF(ops.error_bracket, ops.T)


def disturbance_tf(ops: LoopOperators, which: str = "T",
                   kappa: Optional[float] = None) -> RationalTF:
    """``chi -> y`` operator.

    ``kappa`` scales the forecast term of compensated loops (1 for an exact
    forecast, 0 for none); by default it is 1 for compensated variants with an
    exact source and 0 otherwise.
    """
    if which == "T1":
        num = (ops.lam1 * ONE + ops.B * ops.G1w) * DELTA
        return RationalTF(num, _charpoly(ops, "T1"))
    if kappa is None:
        spec = ops.gains.spec
        kappa = 1.0 if spec.compensated and spec.compensation == "exact" else 0.0
    num = ops.S * DELTA
    if kappa:
        num = num - kappa * ops.B * ops.Rw * DELTA
    return RationalTF(num, ops.T)


def reference_error_ss(ops: LoopOperators, model: CarimaModel, n: int,
                       which: str = "T") -> float:
    """Steady-state error for ``y*(k) = k^n`` (``UNBOUNDED`` if it grows)."""
    verdict = stability(ops, which)
    if verdict.label != "stable":
        raise UnstableLoopError(f"loop is {verdict.label}; final value theorem inapplicable")
    return final_value_limit(reference_error_tf(ops, which), n)


def disturbance_error_ss(ops: LoopOperators, n: int, which: str = "T",
                         kappa: Optional[float] = None) -> float:
    verdict = stability(ops, which)
    if verdict.label != "stable":
        raise UnstableLoopError(f"loop is {verdict.label}; final value theorem inapplicable")
    return final_value_limit(-disturbance_tf(ops, which, kappa), n)


@dataclass(frozen=True)
class SteadyStateReport:
    reference_error: float
    disturbance_error: float
    total: float
    input_powers: tuple

    @property
    def finite(self) -> bool:
        return math.isfinite(self.total)


def _scaled(value: float, scale: float) -> float:
    if scale == 0.0:
        return 0.0
    return value * scale


def steady_state(ops: LoopOperators, model: CarimaModel, n_ref: Optional[int],
                 n_dist: Optional[int], ref_scale: float = 1.0,
                 dist_scale: float = 1.0, which: str = "T") -> SteadyStateReport:
    """Superposed steady-state error for polynomial reference and disturbance.

    ``None`` for an input class means that input is absent (zero).
    """
    ref = 0.0 if n_ref is None else _scaled(reference_error_ss(ops, model, n_ref, which), ref_scale)
    dist = 0.0 if n_dist is None else _scaled(disturbance_error_ss(ops, n_dist, which), dist_scale)
    return SteadyStateReport(ref, dist, ref + dist, (n_ref, n_dist))


def reference_drive(gains: GainSet, ref, K: int) -> np.ndarray:
    """``r(k) = p . [y*(k+1+row) for kept rows]`` for ``k = 1..K``.

    ``ref`` is a :class:`Signal` or a callable ``k -> y*(k)``.  The drive is
    zero before ``k = 1`` because the controller starts acting there.
    """
    at = ref.at if isinstance(ref, Signal) else ref
    offs = gains.ref_offsets
    window = np.array([[at(k + o) for o in offs] for k in range(1, K + 1)])
    return window @ gains.p_row if K else np.zeros(0)


def forecast_drive(gains: GainSet, forecast, K: int) -> np.ndarray:
    """``q(k) = p . PhiwT_sel dchi_hat(k+1)`` for ``k = 1..K`` (zero if uncompensated)."""
    if not gains.spec.compensated or forecast is None:
        return np.zeros(K)
    N = gains.ps.N
    F = np.array([forecast(k, N) for k in range(1, K + 1)])
    return F @ gains.w_row if K else np.zeros(0)


def error_signal(ops: LoopOperators, model: CarimaModel, ref, chi: Signal,
                 forecast=None, which: str = "T") -> Signal:
    """Analytic tracking error ``E(k) = y*(k) - y(k)`` for ``k = 1..len(chi)``.

    The reference part is driven through ``z^-1 B / T`` by the gain-projected
    reference window (so the controller switches on at ``k = 1`` exactly as in
    simulation); the disturbance part is ``chi`` filtered by the loop's
    disturbance operator.  ``forecast`` supplies ``dchi_hat`` for compensated
    loops.  ``which="T1"`` uses the horizon-equals-delay form instead.
    """
    K = len(chi)
    at = ref.at if isinstance(ref, Signal) else ref
    gains = ops.gains
    pole = _charpoly(ops, which)
    verdict = classify_roots(poly_roots_in_z(pole))
    if verdict != "stable":
        raise UnstableLoopError(f"loop is {verdict}; error signal would diverge")
    if which == "T1":
        g_row = gains.ps.PhiT[:, 0] * gains.spec.Q
        drive = np.array([[at(k + 1 + i) for i in range(gains.ps.N)]
                          for k in range(1, K + 1)]) @ g_row if K else np.zeros(0)
        y_dist = tf_filter(disturbance_tf(ops, "T1"), chi.samples)
    else:
        drive = reference_drive(gains, at, K) - forecast_drive(gains, forecast, K)
        y_dist = tf_filter(RationalTF(ops.S * DELTA, ops.T), chi.samples)
    y_ref = tf_filter(RationalTF(Z_INV * ops.B, pole), drive)
    yref_k = np.array([at(k) for k in range(1, K + 1)])
    return Signal(yref_k - y_ref - y_dist, start_index=1)
