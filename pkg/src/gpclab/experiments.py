"""Scenario-level analysis, the reference lambda table, and sweep points."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .carima import CarimaModel
from .closedloop import (
    LoopOperators,
    Verdict,
    disturbance_tf,
    error_signal,
    loop_operators,
    stability,
    steady_state,
)
from .controller import ControllerSpec, make_forecast
from .errors import SingularGainError
from .scenario import Scenario
from .simkit import SignalGen, SimRecord, as_signal, controller_for, gen, run
from .zpoly import RationalTF

# Expected steady offsets for the three-sample delay plant under a ramp
# reference and ramp disturbance, N = 4, Q = I.
TABLE1_MODEL = CarimaModel(a=[-0.5, -0.8], b=[0, 0, 2, 1, 0.5])
TABLE1_EXPECTED = {-0.1: -4.8827413127, 1.0: -5.9632653061, 2.0: -6.3657142857}
TABLE1_WINDOW = (70, 400)
PERTURBED_A1 = -0.5 + 1e-3


def input_class(g: SignalGen) -> tuple[str, Optional[int]]:
    """``("absent", None)``, ``("power", n)`` or ``("other", None)``."""
    if g.is_zero:
        return "absent", None
    n = g.input_power
    return ("power", n) if n is not None else ("other", None)


@dataclass(frozen=True)
class Analysis:
    scenario: Scenario
    ops: LoopOperators
    verdict: Verdict
    G_w: RationalTF
    reference_error: Optional[float]
    disturbance_error: Optional[float]
    total: Optional[float]
    note: str = ""

    @property
    def applicable(self) -> bool:
        return self.total is not None


def analyze(sc: Scenario) -> Analysis:
    """Roots, verdict, steady-state errors and disturbance operator of a scenario.

    Steady-state fields are None when the loop is not stable or an input has
    no polynomial class (square wave, noise, custom samples).
    """
    gains = controller_for(sc.model, sc.controller)
    ops = loop_operators(sc.model, gains.ps, gains)
    verdict = stability(ops)
    G_w = disturbance_tf(ops)
    rk, rn = input_class(sc.reference)
    dk, dn = input_class(sc.disturbance)
    if verdict.label != "stable":
        return Analysis(sc, ops, verdict, G_w, None, None, None,
                        note=f"loop is {verdict.label}")
    ref_e = dist_e = None
    if rk != "other":
        ref_e = steady_state(ops, sc.model, rn, None, ref_scale=sc.reference.scale).total
    if dk != "other":
        dist_e = steady_state(ops, sc.model, None, dn, dist_scale=sc.disturbance.scale).total
    total = ref_e + dist_e if ref_e is not None and dist_e is not None else None
    note = "" if total is not None else "non-polynomial input; no steady state"
    return Analysis(sc, ops, verdict, G_w, ref_e, dist_e, total, note)


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return "inapplicable"
    if math.isinf(x):
        return "unbounded" if x > 0 else "-unbounded"
    return f"{x:.10f}"


def _vec(x) -> str:
    return "[" + ", ".join(f"{float(v):g}" for v in x) + "]"


def _coeffs(p) -> str:
    return " ".join(f"{c:.12g}" for c in p.coeffs) + f"   (lowest power z^-{p.lo_exp})"


def format_report(an: Analysis) -> str:
    sc = an.scenario
    spec = sc.controller
    T = an.ops.T
    lines = [
        f"scenario: {sc.name}",
        f"model: a={_vec(sc.model.a)} b={_vec(sc.model.b)} (delay {sc.model.delay})",
        f"controller: variant={spec.variant} N={spec.N} Q={_vec(spec.Q)} "
        f"lambda={_vec(spec.lam)} compensation={spec.compensation}",
        "",
        "characteristic polynomial T(z^-1), ascending powers of z^-1:",
        "  " + _coeffs(T),
        "roots in z (re, im, modulus):",
    ]
    for r in sorted(an.verdict.roots, key=lambda r: (-abs(r), r.real, r.imag)):
        lines.append(f"  {r.real: .12f} {r.imag: .12f} {abs(r):.12f}")
    if not len(an.verdict.roots):
        lines.append("  (none)")
    lines += [
        f"verdict: {an.verdict.label} (max modulus {an.verdict.max_modulus:.12f})",
        "",
        f"reference class: {_class_label(sc.reference)}",
        f"disturbance class: {_class_label(sc.disturbance)}",
        f"steady-state error (reference): {_fmt(an.reference_error)}",
        f"steady-state error (disturbance): {_fmt(an.disturbance_error)}",
        f"steady-state error (total): {_fmt(an.total)}",
    ]
    if an.note:
        lines.append(f"note: {an.note}")
    lines += [
        "",
        "disturbance operator G_w (chi -> y), ascending powers of z^-1:",
        "  num: " + _coeffs(an.G_w.num),
        "  den: " + _coeffs(an.G_w.den),
    ]
    return "\n".join(lines) + "\n"


def _class_label(g: SignalGen) -> str:
    kind, n = input_class(g)
    if kind == "absent":
        return "absent"
    if kind == "power":
        return f"k^{n} (scale {g.scale:g})"
    return f"{g.kind} (no polynomial class)"


def summarize(rec: SimRecord) -> dict:
    """Final error and max |e| over the last quarter of the horizon."""
    n = len(rec)
    start = max(0, n - max(1, rec.horizon // 4))
    tail = np.abs(rec.e[start:])
    return {
        "steps": n,
        "final_e": float(rec.e[-1]) if n else math.nan,
        "max_abs_e_tail": float(tail.max()) if tail.size else math.nan,
        "tail_start_k": start + 1,
        "diverged": rec.diverged,
        "first_divergent_k": rec.first_divergent_k,
    }


def simulate(sc: Scenario) -> SimRecord:
    return run(sc.model, sc.controller, sc.reference, sc.disturbance, sc.horizon)


# -- lambda table -----------------------------------------------------------

@dataclass(frozen=True)
class Table1Cell:
    lam: float
    row: str  # "e" simulated, "E" analytic
    value: float  # value at the window start
    worst: float  # largest deviation from the expected value over the window
    expected: float


def table1(perturb: bool = False) -> list[Table1Cell]:
    model = TABLE1_MODEL
    if perturb:
        model = CarimaModel(a=[PERTURBED_A1, -0.8], b=list(model.b))
    ramp = SignalGen("ramp")
    lo, hi = TABLE1_WINDOW
    cells = []
    for lam, expected in TABLE1_EXPECTED.items():
        spec = ControllerSpec(N=4, Q=1.0, lam=lam)
        gains = controller_for(model, spec)
        rec = run(model, spec, ramp, ramp, hi, gains=gains)
        ops = loop_operators(model, gains.ps, gains)
        E = error_signal(ops, model, lambda k: float(k), as_signal(ramp, hi)).samples
        for row, series in (("e", rec.e), ("E", E)):
            win = np.asarray(series[lo - 1 : hi])
            worst = float(np.max(np.abs(win - expected))) if win.size == hi - lo + 1 else math.inf
            cells.append(Table1Cell(lam, row, float(series[lo - 1]), worst, expected))
    return cells


# -- sweeps -----------------------------------------------------------------

SWEEP_PARAMS = ("lambda", "N")


def _uniform(arr) -> float:
    arr = np.asarray(arr)
    if not np.all(arr == arr[0]):
        raise ValueError("sweeping N needs scalar Q and lambda")
    return float(arr[0])


def with_param(sc: Scenario, param: str, value: float) -> Scenario:
    spec = sc.controller
    if param == "lambda":
        return replace(sc, controller=spec.replace(lam=float(value)))
    if param == "N":
        if int(value) != value:
            raise ValueError(f"N must be an integer, got {value}")
        return replace(sc, controller=spec.replace(N=int(value), Q=_uniform(spec.Q),
                                                   lam=_uniform(spec.lam)))
    raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


REDUCED_OF = {"full": "reduced", "compensated-full": "compensated-reduced"}


@dataclass(frozen=True)
class SweepRow:
    value: float
    variant: str
    verdict: str
    steady_state: Optional[float]
    max_abs_e: float
    diverged: bool

    def as_csv(self, param: str) -> list[str]:
        ss = self.steady_state
        ss = f"{ss:.15g}" if ss is not None and math.isfinite(ss) else _fmt(ss)
        return [f"{self.value:.15g}" if param == "lambda" else str(int(self.value)),
                self.variant, self.verdict, ss, f"{self.max_abs_e:.15g}",
                "1" if self.diverged else "0"]


SWEEP_HEADER = ("value", "variant", "verdict", "steady_state_error", "max_abs_e_tail", "diverged")


def sweep_point(sc: Scenario, param: str, value: float) -> SweepRow:
    """Run and analyze one grid point.

    A singular full-horizon gain matrix (every increment past the delay
    window is free at zero weight) falls back to the equivalent reduced
    variant; the ``variant`` field records what actually ran.
    """
    point = with_param(sc, param, value)
    try:
        controller_for(point.model, point.controller)
    except SingularGainError:
        alt = REDUCED_OF.get(point.controller.variant)
        if alt is None:
            return SweepRow(value, point.controller.variant, "singular", None, math.nan, False)
        point = replace(point, controller=point.controller.replace(variant=alt))
        try:
            controller_for(point.model, point.controller)
        except SingularGainError:
            return SweepRow(value, alt, "singular", None, math.nan, False)
    an = analyze(point)
    rec = simulate(point)
    summ = summarize(rec)
    mx = math.inf if rec.diverged else summ["max_abs_e_tail"]
    return SweepRow(value, point.controller.variant, an.verdict.label, an.total, mx, rec.diverged)


def analytic_error(sc: Scenario, which: str = "T"):
    """Analytic E(k) for a stable scenario (raises UnstableLoopError otherwise)."""
    gains = controller_for(sc.model, sc.controller)
    ops = loop_operators(sc.model, gains.ps, gains)
    chi = as_signal(sc.disturbance, sc.horizon)
    forecast = None
    if sc.controller.compensated:
        forecast = make_forecast(sc.controller.compensation, lambda k: gen(sc.disturbance, k))
    return error_signal(ops, sc.model, lambda k: gen(sc.reference, k), chi, forecast, which)


__all__ = [
    "Analysis", "analyze", "format_report", "summarize", "simulate", "table1",
    "sweep_point", "with_param", "analytic_error",
]
