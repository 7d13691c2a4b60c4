"""CARIMA plant ``A(z^-1) y(k) = B(z^-1) u(k-1) + chi(k)`` and its
incremental state-space realization.

Coefficient conventions: ``a = [a1, ..., a_na]`` so that
``A = 1 + a1 z^-1 + ... + a_na z^-na`` and ``b = [b0, ..., b_nb]`` with
``B = b0 + b1 z^-1 + ...``.  The plant ``y(k) - 0.5 y(k-1) - 0.8 y(k-2) =
2 u(k-3) + ...`` is therefore ``a = [-0.5, -0.8]``, ``b = [0, 0, 2, ...]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .zpoly import LaurentPoly


@dataclass(frozen=True, eq=False)
class CarimaModel:
    a: np.ndarray
    b: np.ndarray

    def __init__(self, a, b):
        a = np.array(a, dtype=float).ravel()
        b = np.array(b, dtype=float).ravel()
        if a.size < 1:
            raise ValueError("need at least one a-coefficient (na >= 1)")
        if b.size < 1 or not np.any(b != 0.0):
            raise ValueError("b must contain at least one nonzero coefficient")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def na(self) -> int:
        return self.a.size

    @property
    def nb(self) -> int:
        return self.b.size - 1

    @property
    def delay(self) -> int:
        """Samples before an input change reaches the output (d >= 1)."""
        return 1 + int(np.flatnonzero(self.b != 0.0)[0])

    @property
    def order(self) -> int:
        """State dimension of the incremental realization."""
        return self.na + self.nb + 1

    @property
    def A_poly(self) -> LaurentPoly:
        return LaurentPoly(np.concatenate([[1.0], self.a]))

    @property
    def B_poly(self) -> LaurentPoly:
        return LaurentPoly(self.b)

    def __eq__(self, other):
        if not isinstance(other, CarimaModel):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.a.tobytes(), self.b.tobytes()))

    def __repr__(self):
        return f"CarimaModel(a={self.a.tolist()}, b={self.b.tolist()})"


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``dx(k+1) = A dx(k) + B du(k) + T dchi(k+1)``, ``dy(k+1) = C dx(k+1)``.

    State layout: ``[dy(k) .. dy(k-na+1), du(k-1) .. du(k-nb-1)]``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T: np.ndarray
    na: int
    nb: int
    layout: tuple = field(default=())


def realize(model: CarimaModel) -> StateSpace:
    na, nb = model.na, model.nb
    n = model.order
    A = np.zeros((n, n))
    A[0, :na] = -model.a
    A[0, na : na + nb] = model.b[1:]
    for i in range(1, na):
        A[i, i - 1] = 1.0
    # row na receives du(k) through B; rows below shift the input history
    for i in range(na + 1, n):
        A[i, i - 1] = 1.0
    B = np.zeros(n)
    B[0] = model.b[0]
    B[na] = 1.0
    C = np.zeros(n)
    C[0] = 1.0
    layout = tuple(f"dy(k-{i})" for i in range(na)) + tuple(
        f"du(k-{j + 1})" for j in range(nb + 1)
    )
    for arr in (A, B, C):
        arr.setflags(write=False)
    return StateSpace(A=A, B=B, C=C, T=C, na=na, nb=nb, layout=layout)


def markov(model: CarimaModel, count: int) -> np.ndarray:
    """Impulse response ``h_1..h_count`` of ``B/A`` (``h_j = C A^(j-1) B``)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    h = np.zeros(count + 1)  # h[0] is h_0 = 0
    for j in range(1, count + 1):
        acc = model.b[j - 1] if j - 1 <= model.nb else 0.0
        for i in range(1, min(model.na, j) + 1):
            acc -= model.a[i - 1] * h[j - i]
        h[j] = acc
    return h[1:]


def plant_step(model: CarimaModel, y_hist, u_hist, chi: float) -> float:
    """One sample of the undifferenced plant.

    ``y_hist[0]`` is ``y(k-1)``, ``y_hist[1]`` is ``y(k-2)`` ...;
    ``u_hist[0]`` is ``u(k-1)`` and so on.  Missing history counts as zero.
    """
    acc = float(chi)
    for i, ai in enumerate(model.a):
        if i < len(y_hist):
            acc -= ai * y_hist[i]
    for j, bj in enumerate(model.b):
        if j < len(u_hist):
            acc += bj * u_hist[j]
    return acc


@dataclass(frozen=True)
class Signal:
    """Samples of a sequence starting at time ``start_index``."""

    samples: np.ndarray
    start_index: int = 1

    def __post_init__(self):
        s = np.array(self.samples, dtype=float).ravel()
        if not np.all(np.isfinite(s)):
            raise ValueError("signal samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    def at(self, k: int) -> float:
        i = k - self.start_index
        if 0 <= i < self.samples.size:
            return float(self.samples[i])
        return 0.0
