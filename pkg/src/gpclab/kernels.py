"""Per-sample recursions that dominate runtime.

Each function here is a scalar loop over float64 arrays so it compiles under
numba unchanged; see :mod:`gpclab._accel` for the switch.
"""

from __future__ import annotations

import numpy as np

from ._accel import kernel


@kernel
def allpole_filter(den, f):
    """Solve ``den[0]*y[k] + den[1]*y[k-1] + ... = f[k]`` with zero initial state."""
    n = f.shape[0]
    m = den.shape[0]
    y = np.zeros(n)
    d0 = den[0]
    for k in range(n):
        acc = f[k]
        top = m if m <= k + 1 else k + 1
        for j in range(1, top):
            acc -= den[j] * y[k - j]
        y[k] = acc / d0
    return y


@kernel
def plant_response(a, b, u, chi):
    """Undifferenced CARIMA output for a known input sequence (open loop)."""
    n = chi.shape[0]
    na = a.shape[0]
    nb1 = b.shape[0]
    y = np.zeros(n)
    for i in range(n):
        acc = chi[i]
        for j in range(1, na + 1):
            if i - j >= 0:
                acc -= a[j - 1] * y[i - j]
        for j in range(nb1):
            if i - 1 - j >= 0:
                acc += b[j] * u[i - 1 - j]
        y[i] = acc
    return y


@kernel
def closed_loop(a, b, psi_row, e0, r, w, chi, limit):
    """Run plant and receding-horizon law together.

    ``r[i]`` and ``w[i]`` are the reference and disturbance-forecast drives
    already projected through the applied gain row, so the law reduces to
    ``du = r - e0*y - psi_row . dx - w``.  Index ``i`` is time ``k = i + 1``;
    everything before ``k = 1`` is zero.

    Returns ``(y, u, du, steps)`` where ``steps < len(chi)`` means ``|y|``
    exceeded ``limit`` at sample ``steps`` (1-based) and the loop stopped.
    """
    n = chi.shape[0]
    na = a.shape[0]
    nb1 = b.shape[0]
    y = np.zeros(n)
    u = np.zeros(n)
    du = np.zeros(n)
    for i in range(n):
        acc = chi[i]
        for j in range(1, na + 1):
            if i - j >= 0:
                acc -= a[j - 1] * y[i - j]
        for j in range(nb1):
            if i - 1 - j >= 0:
                acc += b[j] * u[i - 1 - j]
        y[i] = acc
        if not abs(acc) <= limit:
            return y, u, du, i + 1

        fb = 0.0
        for m in range(na):
            y0 = y[i - m] if i - m >= 0 else 0.0
            y1 = y[i - m - 1] if i - m - 1 >= 0 else 0.0
            fb += psi_row[m] * (y0 - y1)
        for m in range(nb1):
            if i - 1 - m >= 0:
                fb += psi_row[na + m] * du[i - 1 - m]
        step = r[i] - e0 * acc - fb - w[i]
        du[i] = step
        u[i] = (u[i - 1] if i > 0 else 0.0) + step
    return y, u, du, n
