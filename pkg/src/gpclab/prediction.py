"""Stacked N-step output prediction for the incremental CARIMA realization.

``Y(k+1) = E y(k) + PsiT dx(k) + PhiT dU(k) + PhiwT dchi(k+1)`` where the
tilded matrices are running sums (down each column) of the one-step
increment predictors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .carima import StateSpace


@dataclass(frozen=True, eq=False)
class PredictionSet:
    N: int
    na: int
    nb: int
    Psi: np.ndarray
    Phi: np.ndarray
    Phiw: np.ndarray
    PsiT: np.ndarray
    PhiT: np.ndarray
    PhiwT: np.ndarray
    E: np.ndarray

    @property
    def Psi1T(self) -> np.ndarray:
        return self.PsiT[:, : self.na]

    @property
    def Psi2T(self) -> np.ndarray:
        return self.PsiT[:, self.na :]

    @property
    def delay(self) -> int:
        """Delay read off the first nonzero Markov parameter (N+1 if none in range)."""
        nz = np.flatnonzero(self.Phi[:, 0] != 0.0)
        return int(nz[0]) + 1 if nz.size else self.N + 1


def _toeplitz_lower(h: np.ndarray) -> np.ndarray:
    N = h.size
    M = np.zeros((N, N))
    for j in range(N):
        M[j:, j] = h[: N - j]
    return M


def build(ss: StateSpace, N: int) -> PredictionSet:
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    n = ss.A.shape[0]
    Psi = np.zeros((N, n))
    h = np.zeros(N)
    hw = np.zeros(N)
    row = ss.C.copy()  # C A^j, propagated without forming A^j
    for j in range(N):
        h[j] = row @ ss.B
        hw[j] = row @ ss.T
        row = row @ ss.A
        Psi[j] = row
    Phi = _toeplitz_lower(h)
    Phiw = _toeplitz_lower(hw)
    mats = dict(
        Psi=Psi,
        Phi=Phi,
        Phiw=Phiw,
        PsiT=np.cumsum(Psi, axis=0),
        PhiT=np.cumsum(Phi, axis=0),
        PhiwT=np.cumsum(Phiw, axis=0),
        E=np.ones(N),
    )
    for m in mats.values():
        m.setflags(write=False)
    return PredictionSet(N=N, na=ss.na, nb=ss.nb, **mats)


def predict(ps: PredictionSet, y_now: float, dx, dU, dchi=None) -> np.ndarray:
    """Predicted ``[y(k+1) .. y(k+N)]``."""
    dx = np.asarray(dx, dtype=float)
    dU = np.asarray(dU, dtype=float)
    if dx.shape != (ps.PsiT.shape[1],):
        raise ValueError(f"dx must have length {ps.PsiT.shape[1]}, got {dx.shape}")
    if dU.shape != (ps.N,):
        raise ValueError(f"dU must have length {ps.N}, got {dU.shape}")
    out = ps.E * y_now + ps.PsiT @ dx + ps.PhiT @ dU
    if dchi is not None:
        dchi = np.asarray(dchi, dtype=float)
        if dchi.shape != (ps.N,):
            raise ValueError(f"dchi must have length {ps.N}, got {dchi.shape}")
        out = out + ps.PhiwT @ dchi
    return out
