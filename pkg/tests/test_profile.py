import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisonls.amplitudes import GaussianAmplitude
from anisonls.grid import Domain, Field, GridSpec, norm
from anisonls.profile import (
    IllConditionedDerivativeWarning,
    ProfileSpec,
    duhamel_source_data,
    h2_xi_norm,
    log_growth_ratio,
    modified_free_data,
    modified_profile,
    phase_correction,
    residual_source,
)
from anisonls.propagator import plan_grid
from anisonls.stationary import leading_term_field

AMP = GaussianAmplitude.with_h02_norm(0.05, 0.5)
SPEC = ProfileSpec(AMP, lam=0.5)
GF = GridSpec.square(64, 24.0)


def test_phase_correction_closed_form():
    xi = (0.4, -0.2)
    t = 50.0
    expected = -0.5 * abs(AMP(*xi)) / math.sqrt(3 * 0.16 + 1) * math.log(t)
    assert phase_correction(xi, t, SPEC) == pytest.approx(expected, rel=1e-14)
    assert phase_correction(np.array(xi), t, SPEC) == pytest.approx(expected, rel=1e-14)
    assert phase_correction(xi, 1.0, SPEC) == 0.0


@given(st.floats(3.0, 1e4), st.floats(-2.0, 2.0))
def test_free_data_keeps_modulus(t, lam):
    spec = ProfileSpec(AMP, lam=lam)
    w = modified_free_data(t, spec, GF).values
    assert np.allclose(np.abs(w), np.abs(AMP.sample(GF).values), rtol=1e-14, atol=0)


@given(st.floats(3.0, 1e3))
def test_free_data_derivative_is_source(t):
    # d/dt w = -i lam h
    eps = 1e-5 * t
    dw = (modified_free_data(t + eps, SPEC, GF).values - modified_free_data(t - eps, SPEC, GF).values) / (2 * eps)
    h = duhamel_source_data(t, SPEC, GF).values
    assert np.max(np.abs(dw + 1j * SPEC.lam * h)) <= 1e-8 * np.max(np.abs(h))


def test_profile_mass_is_data_mass():
    g = plan_grid(AMP, 100.0)
    for t in (10.0, 100.0):
        m = norm(modified_profile(t, SPEC, g)) ** 2
        assert m == pytest.approx(AMP.l2_norm() ** 2, rel=1e-8)


def test_zero_coupling_profile_is_leading_term():
    g = GridSpec.square(64, 40.0)
    spec = ProfileSpec(AMP, lam=0.0)
    a = modified_profile(10.0, spec, g).values
    b = leading_term_field(AMP, 10.0, g).values
    assert np.max(np.abs(a - b)) <= 1e-15


def test_profile_time_guards():
    for fn in (modified_profile, log_growth_ratio, residual_source):
        with pytest.raises(ValueError):
            fn(2.0, SPEC, GF)
    with pytest.raises(ValueError):
        residual_source(10.0, ProfileSpec(AMP, p=3.0), GF)
    with pytest.raises(ValueError):
        ProfileSpec(AMP, p=0.5)


def test_residual_source_vanishes_without_coupling():
    f, v = residual_source(10.0, ProfileSpec(AMP, lam=0.0), GF)
    assert v == 0.0 and not np.any(f.values)


def test_residual_source_is_linear_in_coupling():
    g = plan_grid(AMP, 20.0, tail=1e-8)
    # the coupling also enters the log phase, so linearity holds as lam -> 0
    a = residual_source(20.0, ProfileSpec(AMP, lam=1e-4), g)[1]
    b = residual_source(20.0, ProfileSpec(AMP, lam=2e-4), g)[1]
    assert b == pytest.approx(2 * a, rel=1e-3)


def test_h2_norm_of_gaussian():
    g = GridSpec.square(256, 40.0)
    amp = GaussianAmplitude(1.0, 1.0)
    assert h2_xi_norm(amp.sample(g)) == pytest.approx(amp.h02_norm(), rel=1e-10)
    with pytest.raises(ValueError):
        h2_xi_norm(amp.space_field(g))


def test_h2_norm_warns_when_underresolved():
    g = GridSpec.square(32, 4.0)
    with pytest.warns(IllConditionedDerivativeWarning):
        # a point mass at x1 = 3.75, inside the outer band of the box
        h2_xi_norm(Field.from_function(g, lambda a, b: np.exp(-3.75j * a) + 0 * b, Domain.FREQUENCY))


def test_growth_ratios_bounded_above():
    g = GridSpec.square(256, 48.0)
    spec = ProfileSpec(AMP, lam=1.0)
    r = np.array([log_growth_ratio(t, spec, g) for t in (3.0, 10.0, 100.0, 1000.0)])
    assert np.all(r > 0)
    # the norms grow at most like (log t)^2: the ratios never increase
    assert np.all(np.diff(r[:, 0]) < 0) and np.all(np.diff(r[:, 1]) < 0)
