"""Closed-loop simulation: signal generators, the runner and trace I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .carima import CarimaModel, Signal, plant_step, realize
from .closedloop import forecast_drive, reference_drive
from .controller import (
    ControllerSpec,
    GainSet,
    LoopState,
    build_gains,
    gpc_step,
    igmvc_step,
    make_forecast,
)
from .kernels import closed_loop
from .prediction import build

DIVERGENCE_LIMIT = 1e12
SIGNAL_KINDS = ("zero", "step", "ramp", "power", "square", "noise", "custom")
NOISE_DISTS = ("normal", "uniform")
TRACE_COLUMNS = ("k", "y_ref", "y", "u", "du", "chi", "e")


@dataclass(frozen=True)
class SignalGen:
    """Deterministic test signal, sampled for ``k >= 1`` (zero before).

    ``power`` is ``k**n``; ``square`` is ``(-1)**round(k / period)`` with
    halves rounded away from zero; ``custom`` holds its last sample past the
    end of the list.
    """

    kind: str
    scale: float = 1.0
    n: int = 1
    period: float = 100.0
    seed: int = 0
    dist: str = "normal"
    samples: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}; expected one of {SIGNAL_KINDS}")
        if self.kind == "power" and self.n not in (1, 2, 3):
            raise ValueError("power signals need n in {1, 2, 3}")
        if self.kind == "square" and not self.period > 0:
            raise ValueError("square period must be > 0")
        if self.kind == "noise" and self.dist not in NOISE_DISTS:
            raise ValueError(f"noise dist must be one of {NOISE_DISTS}")
        if self.kind == "custom":
            if not self.samples:
                raise ValueError("custom signals need a nonempty sample list")
            object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))

    @property
    def input_power(self) -> Optional[int]:
        """Polynomial class for steady-state analysis (None: no steady state)."""
        return {"step": 0, "ramp": 1, "power": self.n}.get(self.kind)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.scale == 0.0


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _square(k: int, period: float) -> float:
    if float(period).is_integer():
        p = int(period)
        r = (2 * k + p) // (2 * p)  # exact for k >= 0
    else:
        r = round_half_away(k / period)
    return -1.0 if r % 2 else 1.0


def noise(seed: int, k: int, dist: str = "normal") -> float:
    """``k``-th sample of a seeded stream; random access via a Philox counter."""
    bitgen = np.random.Philox(key=int(seed), counter=int(k) << 128)
    g = np.random.Generator(bitgen)
    if dist == "normal":
        return float(g.standard_normal())
    if dist == "uniform":
        return float(g.random())
    raise ValueError(f"unknown noise distribution {dist!r}")


def gen(g: SignalGen, k: int) -> float:
    if k < 1:
        return 0.0
    kind = g.kind
    if kind == "zero":
        v = 0.0
    elif kind == "step":
        v = 1.0
    elif kind == "ramp":
        v = float(k)
    elif kind == "power":
        v = float(k) ** g.n
    elif kind == "square":
        v = _square(k, g.period)
    elif kind == "noise":
        v = noise(g.seed, k, g.dist)
    else:
        v = g.samples[min(k, len(g.samples)) - 1]
    return g.scale * v


def sample(g: SignalGen, K: int, start: int = 1) -> np.ndarray:
    return np.array([gen(g, k) for k in range(start, start + K)])


def as_signal(g: SignalGen, K: int) -> Signal:
    return Signal(sample(g, K), start_index=1)


@dataclass(frozen=True, eq=False)
class SimRecord:
    """Aligned series for ``k = 1..len``; ``e = y_ref - y`` exactly."""

    k: np.ndarray
    y_ref: np.ndarray
    y: np.ndarray
    u: np.ndarray
    du: np.ndarray
    chi: np.ndarray
    e: np.ndarray
    horizon: int
    diverged: bool = False
    first_divergent_k: Optional[int] = None

    def __post_init__(self):
        for name in TRACE_COLUMNS:
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return self.k.size

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def write_csv(self, path) -> None:
        write_trace(path, {c: self.column(c) for c in TRACE_COLUMNS})


def _record(K, y_ref, y, u, du, chi, steps):
    diverged = steps < K
    n = steps
    ks = np.arange(1, n + 1, dtype=float)
    y_ref, y, u, du, chi = (np.array(s[:n], dtype=float) for s in (y_ref, y, u, du, chi))
    if diverged:
        u[-1] = du[-1] = np.nan
    return SimRecord(k=ks, y_ref=y_ref, y=y, u=u, du=du, chi=chi, e=y_ref - y,
                     horizon=K, diverged=diverged,
                     first_divergent_k=int(steps) if diverged else None)


def controller_for(model: CarimaModel, spec: ControllerSpec) -> GainSet:
    ps = build(realize(model), spec.N)
    return build_gains(ps, spec)


def run(model: CarimaModel, spec: ControllerSpec, ref: SignalGen, dist: SignalGen,
        K: int, engine: str = "kernel", gains: Optional[GainSet] = None) -> SimRecord:
    """Simulate ``K`` samples of plant plus controller from rest.

    ``engine="kernel"`` projects the reference and forecast windows through
    the gain row up front and runs the compiled loop; ``engine="step"``
    drives :func:`gpc_step` / :func:`igmvc_step` sample by sample.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if gains is None:
        gains = controller_for(model, spec)
    ref_fn = lambda k: gen(ref, k)  # noqa: E731
    chi_fn = lambda k: gen(dist, k)  # noqa: E731
    chi = sample(dist, K)
    y_ref = sample(ref, K)
    forecast = make_forecast(spec.compensation, chi_fn) if spec.compensated else None
    if engine == "kernel":
        r = reference_drive(gains, ref_fn, K)
        w = forecast_drive(gains, forecast, K)
        y, u, du, steps = closed_loop(
            np.ascontiguousarray(model.a), np.ascontiguousarray(model.b),
            np.ascontiguousarray(gains.psi_row), float(gains.e0), r, w, chi,
            DIVERGENCE_LIMIT)
        return _record(K, y_ref, y, u, du, chi, steps)
    if engine != "step":
        raise ValueError(f"unknown engine {engine!r}")
    return _run_stepwise(model, spec, gains, ref_fn, chi, y_ref, forecast, K)


def _run_stepwise(model, spec, gains, ref_fn, chi, y_ref, forecast, K):
    ps = gains.ps
    state = LoopState.for_prediction(ps)
    y = np.zeros(K)
    u = np.zeros(K)
    du = np.zeros(K)
    steps = K
    for i in range(K):
        k = i + 1
        y_hist = y[:i][::-1]
        u_hist = u[:i][::-1]
        y[i] = plant_step(model, y_hist, u_hist, chi[i])
        if not abs(y[i]) <= DIVERGENCE_LIMIT:
            steps = k
            break
        if spec.variant == "igmvc":
            u[i], du[i] = igmvc_step(gains, state, y[i], ref_fn(k + gains.delay))
        else:
            window = [ref_fn(k + j) for j in range(1, ps.N + 1)]
            fc = forecast(k, ps.N) if forecast is not None else None
            u[i], du[i] = gpc_step(gains, state, y[i], window, fc)
    return _record(K, y_ref, y, u, du, chi, steps)


# -- trace format -----------------------------------------------------------

def write_trace(path, columns: dict) -> None:
    names = list(TRACE_COLUMNS)
    n = len(columns["k"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            row = []
            for c in names:
                v = float(columns[c][i])
                row.append(str(int(v)) if c == "k" else f"{v:.15g}")
            w.writerow(row)


class TraceFormatError(ValueError):
    pass


def read_trace(path, required: Sequence[str] = TRACE_COLUMNS) -> dict:
    """Parse a trace CSV into ``{column: float array}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TraceFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise TraceFormatError(f"{path}: missing columns {missing}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise TraceFormatError(f"{path}: no data rows")
    data = {h: [] for h in header}
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise TraceFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
        for h, v in zip(header, r):
            try:
                data[h].append(float(v))
            except ValueError:
                raise TraceFormatError(f"{path}:{lineno}: bad number {v!r} in column {h}") from None
    return {h: np.array(v) for h, v in data.items()}
