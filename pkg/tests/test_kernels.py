import os
import subprocess
import sys

import numpy as np
import pytest

from gpclab import _accel
from gpclab.kernels import allpole_filter, closed_loop, plant_response


def _case(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-0.5, 0.5, 3)
    b = np.array([0.0, 1.0, 0.4])
    psi = rng.uniform(-0.3, 0.3, 3 + 3)
    r, w, chi = rng.normal(size=(3, 300))
    return a, b, psi, r, w, chi


def test_py_func_always_available():
    for k in (allpole_filter, plant_response, closed_loop):
        assert callable(k.py_func)


@pytest.mark.parametrize("seed", range(5))
def test_compiled_and_python_paths_agree(seed):
    a, b, psi, r, w, chi = _case(seed)
    out = closed_loop(a, b, psi, 0.4, r, w, chi, 1e12)
    ref = closed_loop.py_func(a, b, psi, 0.4, r, w, chi, 1e12)
    assert out[3] == ref[3]
    for x, y in zip(out[:3], ref[:3]):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
    den = np.array([1.0, -0.3, 0.1])
    np.testing.assert_allclose(allpole_filter(den, chi), allpole_filter.py_func(den, chi),
                               rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(plant_response(a, b, r, chi), plant_response.py_func(a, b, r, chi),
                               rtol=1e-13, atol=1e-13)


def test_closed_loop_stops_at_limit():
    a = np.array([-2.0])  # open-loop unstable, no feedback
    b = np.array([1.0])
    n = 100
    y, u, du, steps = closed_loop.py_func(a, b, np.zeros(2), 0.0, np.zeros(n), np.zeros(n),
                                          np.ones(n), 1e6)
    assert steps < n and abs(y[steps - 1]) > 1e6


def test_backend_reports_state():
    assert _accel.backend() in ("numba", "python")


def test_env_flag_disables_numba():
    env = dict(os.environ, GPCLAB_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from gpclab import _accel, kernels; print(_accel.backend(), "
         "kernels.closed_loop is kernels.closed_loop.py_func)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "True"]
