import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisonls.amplitudes import CallableAmplitude, GaussianAmplitude, GridAmplitude, InterpolationError, as_amplitude
from anisonls.grid import Domain, Field, GridSpec, forward_transform, norm

# [DERIVED] mpmath 2D quadrature of ||(1 - Laplacian) exp(-|xi|^2/(2*0.25))||, 30 digits
UNIT_H02_SIGMA_HALF = 5.67462110623214919630514282915
STANDARD_PEAK = 0.00881116096810191084901306134261


def test_h02_norm_matches_quadrature_oracle():
    assert GaussianAmplitude(1.0, 0.5).h02_norm() == pytest.approx(UNIT_H02_SIGMA_HALF, rel=1e-14)


def test_standard_datum_peak():
    amp = GaussianAmplitude.with_h02_norm(0.05, 0.5)
    assert amp.a == pytest.approx(STANDARD_PEAK, rel=1e-14)
    assert amp.h02_norm() == pytest.approx(0.05, rel=1e-14)


@given(st.floats(0.3, 1.5), st.floats(0.3, 1.5), st.floats(-1.0, 1.0))
def test_h02_norm_agrees_with_grid(s1, s2, c1):
    amp = GaussianAmplitude(1.0, (s1, s2), center=(c1, 0.0))
    g = GridSpec.square(512, 60.0)
    # ||(1 - Lap_xi) psi_hat|| = ||<x>^2 psi|| by Plancherel
    psi = amp.space_field(g).values
    x1, x2 = g.mesh("x")
    val = math.sqrt(np.sum(np.abs((1 + x1**2 + x2**2) * psi) ** 2) * g.cell)
    assert val == pytest.approx(amp.h02_norm(), rel=1e-9)


def test_space_function_is_inverse_transform():
    amp = GaussianAmplitude(0.7, (0.8, 1.3), center=(0.5, -0.25))
    g = GridSpec.square(256, 25.0)
    fh = forward_transform(amp.space_field(g))
    assert np.max(np.abs(fh.values - amp.sample(g).values)) <= 1e-10


def test_l2_norm_closed_form():
    amp = GaussianAmplitude(2.0, (0.5, 1.5))
    g = GridSpec.square(256, 40.0)
    assert norm(amp.space_field(g)) == pytest.approx(amp.l2_norm(), rel=1e-12)


def test_xi2_integral_against_trapezoid():
    amp = GaussianAmplitude(1.0, (1.0, 0.7), center=(0.0, 0.3))
    xi = np.linspace(-12, 12, 200001)
    for t, x2 in [(0.0, 0.0), (3.0, 1.5), (10.0, -4.0)]:
        ref = np.trapezoid(np.exp(1j * x2 * xi - 0.5j * t * xi * xi) * amp.factor2(xi), xi)
        assert abs(amp.xi2_integral(t, x2) - ref) <= 1e-9


def test_grid_amplitude_interpolates_smooth_data():
    g = GridSpec.square(128, 20.0)
    amp = GaussianAmplitude(1.0, 1.0)
    ga = GridAmplitude(amp.sample(g))
    q1, q2 = np.array([0.1234, -0.77, 1.5]), np.array([0.05, 0.33, -1.1])
    assert np.max(np.abs(ga(q1, q2) - amp(q1, q2))) <= 1e-5
    assert ga(100.0, 0.0) == 0


def test_grid_amplitude_rejects_non_finite():
    g = GridSpec.square(16, 4.0)
    vals = np.ones(g.shape, dtype=complex)
    vals[3, 3] = np.nan
    ga = GridAmplitude(Field(g, Domain.FREQUENCY, vals))
    with pytest.raises(InterpolationError):
        ga(np.array([0.0]), np.array([0.0]))


def test_as_amplitude_dispatch():
    g = GridSpec.square(16, 4.0)
    f = Field.zeros(g)
    assert isinstance(as_amplitude(f), GridAmplitude)
    assert isinstance(as_amplitude(lambda a, b: a + b), CallableAmplitude)
    with pytest.raises(TypeError):
        as_amplitude(3.0)


def test_invalid_width():
    with pytest.raises(ValueError):
        GaussianAmplitude(1.0, 0.0)
