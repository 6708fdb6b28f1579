import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisonls import _kernels_py, kernels

try:
    from anisonls import _kernels as compiled
except ImportError:
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
seeds = st.integers(0, 2**32 - 1)


def data(seed, n=257):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@needs_ext
@given(seeds, st.floats(-3, 3), st.sampled_from([1.0, 2.0, 3.0, 2.5]))
def test_nonlinear_phase_backends_agree(seed, c, p):
    u = data(seed)
    a = kernels.nonlinear_phase_(u.copy(), c, p, impl=compiled)
    b = kernels.nonlinear_phase_(u.copy(), c, p, impl=_kernels_py)
    assert np.max(np.abs(a - b)) <= 1e-13 * (1 + np.max(np.abs(u)) * abs(c) * np.max(np.abs(u)) ** (p - 1))
    assert np.allclose(np.abs(a), np.abs(u), rtol=1e-14)


@needs_ext
@given(seeds, st.sampled_from([1.0, 2.0, 3.0, 1.5]))
def test_power_nonlinearity_backends_agree(seed, p):
    u = data(seed)
    a = kernels.power_nonlinearity(u, p, impl=compiled)
    b = kernels.power_nonlinearity(u, p, impl=_kernels_py)
    assert np.allclose(a, b, rtol=1e-14, atol=0)
    assert np.allclose(b, np.abs(u) ** (p - 1) * u, rtol=1e-14)


@needs_ext
@given(seeds)
def test_cubic_polar_abs2_backends_agree(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(300) * 10.0 ** rng.uniform(-8, 8, 300)
    assert np.allclose(kernels.cubic_root(v, impl=compiled), kernels.cubic_root(v, impl=_kernels_py), rtol=1e-15)
    amp, ph = rng.random(50), rng.uniform(-100, 100, 50)
    assert np.allclose(kernels.polar(amp, ph, impl=compiled), kernels.polar(amp, ph, impl=_kernels_py), rtol=1e-14)
    u = data(seed)
    assert kernels.abs2_sum(u, impl=compiled) == pytest.approx(kernels.abs2_sum(u, impl=_kernels_py), rel=1e-13)


def test_non_contiguous_rejected():
    u = data(0, 64).reshape(8, 8)[:, ::2]
    with pytest.raises(ValueError):
        kernels.nonlinear_phase_(u, 1.0, 2.0)


def test_environment_forces_fallback():
    env = dict(os.environ, ANISONLS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import anisonls.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
