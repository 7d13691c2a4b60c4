"""Receding-horizon control laws built on the stacked predictor.

All variants solve the same weighted least-squares problem

    minimize  (Y* - Y)' Q (Y* - Y) + dU' lam dU

and apply only the first increment.  They differ in which prediction rows and
which increments enter the problem:

``full`` / ``compensated-full``
    every row and every increment.
``reduced`` / ``compensated-reduced``
    a plant with delay ``d`` cannot influence the first ``d-1`` predictions and
    the last ``d-1`` increments influence nothing inside the horizon, so both
    are deleted.  The inverted matrix shrinks to order ``N - d + 1`` and
    ``lam = 0`` becomes admissible.
``igmvc``
    the reduced form with ``N = d``; the gain is a scalar.

The ``compensated-*`` variants subtract a forecast of future disturbance
increments from the prediction error before projecting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SingularGainError
from .prediction import PredictionSet

VARIANTS = ("full", "reduced", "igmvc", "compensated-full", "compensated-reduced")
COMPENSATION_SOURCES = ("exact", "hold", "none")
COND_LIMIT = 1e12


def _diag_entries(value, N: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).ravel()
    if arr.size == 1:
        arr = np.full(N, arr[0])
    if arr.size != N:
        raise ValueError(f"{name} needs 1 or {N} entries, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ControllerSpec:
    """Horizon, weights and variant.  ``Q`` and ``lam`` are diagonals (scalars broadcast)."""

    N: int
    Q: np.ndarray
    lam: np.ndarray
    variant: str = "full"
    compensation: str = "none"

    def __init__(self, N, Q=1.0, lam=1.0, variant="full", compensation="none"):
        if int(N) != N or N < 1:
            raise ValueError("N must be a positive integer")
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if compensation not in COMPENSATION_SOURCES:
            raise ValueError(
                f"unknown compensation {compensation!r}; expected one of {COMPENSATION_SOURCES}"
            )
        N = int(N)
        q = _diag_entries(Q, N, "Q")
        if np.any(q < 0):
            raise ValueError("Q entries must be >= 0")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "lam", _diag_entries(lam, N, "lambda"))
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "compensation", compensation)

    @property
    def compensated(self) -> bool:
        return self.variant.startswith("compensated")

    @property
    def reduced(self) -> bool:
        return self.variant in ("reduced", "igmvc", "compensated-reduced")

    def replace(self, **changes) -> "ControllerSpec":
        kw = dict(N=self.N, Q=self.Q, lam=self.lam, variant=self.variant,
                  compensation=self.compensation)
        kw.update(changes)
        return ControllerSpec(**kw)


@dataclass(frozen=True, eq=False)
class GainSet:
    """Gain matrix of the selected subproblem plus the cached applied row.

    ``rows`` are the prediction rows kept (0-based, so row ``i`` is
    ``y(k+1+i)``); ``cols`` the increments kept.  ``p_row`` has one entry per
    kept row.
    """

    spec: ControllerSpec
    ps: PredictionSet
    delay: int
    rows: np.ndarray
    cols: np.ndarray
    P: np.ndarray
    p_row: np.ndarray
    psi_row: np.ndarray
    e0: float
    w_row: np.ndarray
    cond: float

    @property
    def psi1_row(self) -> np.ndarray:
        return self.psi_row[: self.ps.na]

    @property
    def psi2_row(self) -> np.ndarray:
        return self.psi_row[self.ps.na :]

    @property
    def ref_offsets(self) -> np.ndarray:
        """Reference samples used at time k are ``y*(k + ref_offsets)``."""
        return self.rows + 1

    @property
    def PhiT_sel(self) -> np.ndarray:
        return self.ps.PhiT[np.ix_(self.rows, self.cols)]


def build_gains(ps: PredictionSet, spec: ControllerSpec) -> GainSet:
    if spec.N != ps.N:
        raise ValueError(f"spec horizon {spec.N} != prediction horizon {ps.N}")
    N = ps.N
    d = ps.delay
    if spec.variant == "igmvc" and N != d:
        raise ValueError(f"igmvc requires N == d (N={N}, d={d})")
    if spec.reduced:
        if d > N:
            raise SingularGainError(spec.variant, np.inf)
        rows = np.arange(d - 1, N)
        cols = np.arange(0, N - d + 1)
        lam = spec.lam[: N - d + 1]
    else:
        rows = np.arange(N)
        cols = np.arange(N)
        lam = spec.lam
    q = spec.Q[rows]
    Phi = ps.PhiT[np.ix_(rows, cols)]
    rhs = Phi.T * q  # Phi' Q
    M = rhs @ Phi + np.diag(lam)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularGainError(spec.variant, cond)
    P = np.linalg.solve(M, rhs)
    p_row = P[0].copy()
    psi_row = p_row @ ps.PsiT[rows]
    e0 = float(p_row @ ps.E[rows])
    w_row = p_row @ ps.PhiwT[rows]
    for arr in (rows, cols, P, p_row, psi_row, w_row):
        arr.setflags(write=False)
    return GainSet(spec=spec, ps=ps, delay=d, rows=rows, cols=cols, P=P, p_row=p_row,
                   psi_row=psi_row, e0=e0, w_row=w_row, cond=cond)


@dataclass
class LoopState:
    """Controller memory.  Everything before the first sample is zero.

    ``dy[i]`` is ``dy(k-1-i)`` and ``du[j]`` is ``du(k-1-j)`` between steps;
    :meth:`observe` folds a new measurement in and returns ``dx(k)``.
    """

    na: int
    nb: int
    y_prev: float = 0.0
    u_prev: float = 0.0
    chi_prev: float = 0.0
    dy: np.ndarray = field(default=None)
    du: np.ndarray = field(default=None)
    _dx: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dy is None:
            self.dy = np.zeros(self.na)
        if self.du is None:
            self.du = np.zeros(self.nb + 1)

    @classmethod
    def for_prediction(cls, ps: PredictionSet) -> "LoopState":
        return cls(na=ps.na, nb=ps.nb)

    def observe(self, y_now: float) -> np.ndarray:
        dy = np.concatenate([[y_now - self.y_prev], self.dy[:-1]]) if self.na else self.dy
        self._pending_dy = dy
        self._y_now = y_now
        self._dx = np.concatenate([dy, self.du])
        return self._dx

    def commit(self, du: float) -> float:
        u = self.u_prev + du
        self.dy = self._pending_dy
        self.y_prev = self._y_now
        self.du = np.concatenate([[du], self.du[:-1]])
        self.u_prev = u
        self._dx = None
        return u


def plan(gains: GainSet, dx, y_now: float, ref_window, dchi_forecast=None) -> np.ndarray:
    """Optimal increment sequence over the kept columns (first entry is applied)."""
    v = _prediction_error(gains, dx, y_now, ref_window, dchi_forecast)
    return gains.P @ v


def _select_ref(gains: GainSet, ref_window) -> np.ndarray:
    ref = np.asarray(ref_window, dtype=float).ravel()
    if ref.size == gains.ps.N:
        return ref[gains.rows]
    if ref.size == gains.rows.size:
        return ref
    raise ValueError(
        f"reference window must have {gains.ps.N} or {gains.rows.size} samples, got {ref.size}"
    )


def _prediction_error(gains, dx, y_now, ref_window, dchi_forecast):
    ps = gains.ps
    dx = np.asarray(dx, dtype=float)
    if dx.shape != (ps.PsiT.shape[1],):
        raise ValueError(f"dx must have length {ps.PsiT.shape[1]}")
    free = (ps.PsiT @ dx)[gains.rows]
    v = _select_ref(gains, ref_window) - ps.E[gains.rows] * y_now - free
    if gains.spec.compensated:
        if dchi_forecast is None:
            raise ValueError(f"{gains.spec.variant} needs a disturbance forecast")
        dchi = np.asarray(dchi_forecast, dtype=float).ravel()
        if dchi.shape != (ps.N,):
            raise ValueError(f"disturbance forecast must have length {ps.N}")
        v = v - (ps.PhiwT @ dchi)[gains.rows]
    return v


def gpc_step(gains: GainSet, state: LoopState, y_now: float, ref_window,
             dchi_forecast=None) -> tuple[float, float]:
    """Measure ``y(k)``, return ``(u(k), du(k))`` and advance ``state``."""
    dx = state.observe(y_now)
    v = _prediction_error(gains, dx, y_now, ref_window, dchi_forecast)
    du = float(gains.p_row @ v)
    return state.commit(du), du


def igmvc_step(gains: GainSet, state: LoopState, y_now: float,
               ref_at_kplusd: float) -> tuple[float, float]:
    """Scalar minimum-variance law for ``N = d``."""
    ps = gains.ps
    d = gains.delay
    if ps.N != d:
        raise ValueError(f"igmvc_step requires N == d (N={ps.N}, d={d})")
    b = ps.PhiT[d - 1, 0]
    q = gains.spec.Q[d - 1]
    bq = b * q
    gain = bq / (bq * b + gains.spec.lam[0])
    dx = state.observe(y_now)
    free = (ps.PsiT @ dx)[d - 1]
    du = float(gain * (ref_at_kplusd - ps.E[d - 1] * y_now - free))
    return state.commit(du), du


def objective_value(ps: PredictionSet, spec: ControllerSpec, ref_window, dx,
                    y_now: float, dU, dchi=None) -> float:
    """Quadratic cost of a candidate increment sequence.

    For reduced variants ``dU`` holds the ``N - d + 1`` kept increments and the
    cost runs over rows ``d..N`` with ``Q_d`` and ``lam_d``.
    """
    dU = np.asarray(dU, dtype=float).ravel()
    dx = np.asarray(dx, dtype=float)
    ref = np.asarray(ref_window, dtype=float).ravel()
    N = ps.N
    if spec.reduced:
        d = ps.delay
        rows, cols = np.arange(d - 1, N), np.arange(N - d + 1)
        lam = spec.lam[: N - d + 1]
    else:
        rows, cols = np.arange(N), np.arange(N)
        lam = spec.lam
    if dU.size != cols.size:
        raise ValueError(f"dU must have length {cols.size}")
    if ref.size == N:
        ref = ref[rows]
    pred = ps.E[rows] * y_now + (ps.PsiT @ dx)[rows] + ps.PhiT[np.ix_(rows, cols)] @ dU
    if dchi is not None:
        pred = pred + (ps.PhiwT @ np.asarray(dchi, dtype=float))[rows]
    err = ref - pred
    return float(err @ (spec.Q[rows] * err) + dU @ (lam * dU))


# -- disturbance forecasts -------------------------------------------------

Forecast = Callable[[int, int], np.ndarray]


def make_forecast(kind: str, chi: Callable[[int], float]) -> Forecast:
    """Return ``f(k, N) -> [dchi(k+1) .. dchi(k+N)]`` estimates.

    ``exact`` reads the true future disturbance, ``hold`` repeats the last
    observed increment ``chi(k) - chi(k-1)``, ``none`` forecasts zero.
    """
    if kind == "exact":
        def exact(k, N):
            vals = np.array([chi(k + i) for i in range(N + 1)])
            return np.diff(vals)
        return exact
    if kind == "hold":
        def hold(k, N):
            return np.full(N, chi(k) - chi(k - 1))
        return hold
    if kind == "none":
        return lambda k, N: np.zeros(N)
    raise ValueError(f"unknown forecast source {kind!r}")
