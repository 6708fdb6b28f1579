import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisonls.amplitudes import CallableAmplitude, GaussianAmplitude
from anisonls.grid import Domain, Field, GridSpec, forward_transform, norm
from anisonls.propagator import (
    OracleFailure,
    QuadSpec,
    WrapAroundWarning,
    dispersion_phase,
    kernel_quadrature,
    plan_grid,
    propagate,
    propagator_symbol,
    sup_decay_series,
)

# [DERIVED] mpmath quadrature (30 digits) of (2 pi)^(-1/2) int exp(i x xi - i t omega(xi) - xi^2/2) d xi
W1_AT_07 = complex(0.623320572266669545921707844418, -0.207191051190407350783349620599)
W10_AT_3 = complex(0.263502452432945334545447081146, -0.0817069275111996884054317278319)

G = GridSpec.square(64, 10.0)
dyadic = st.integers(-100 * 2**20, 100 * 2**20).map(lambda k: k / 2.0**20)


def random_field(seed, g=G):
    rng = np.random.default_rng(seed)
    return Field(g, Domain.SPACE, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))


def test_dispersion_phase():
    assert dispersion_phase(2.0, 1.0) == pytest.approx(0.5 * 5 + 4.0)
    assert dispersion_phase(0.0) == 0.0


@given(st.integers(0, 2**32 - 1), st.floats(-100, 100))
def test_unitarity(seed, t):
    f = random_field(seed)
    assert abs(norm(propagate(f, t)) - norm(f)) <= 1e-13 * norm(f)


@given(st.integers(0, 2**32 - 1), dyadic, dyadic)
def test_group_law(seed, s, t):
    f = random_field(seed)
    lhs = propagate(propagate(f, s), t)
    assert norm(lhs - propagate(f, s + t)) <= 1e-12 * norm(f)


def test_group_inverse():
    f = random_field(7)
    assert norm(propagate(propagate(f, 5.0), -5.0) - f) <= 1e-12 * norm(f)


def test_propagate_zero_time_and_domains():
    f = random_field(3)
    assert propagate(f, 0.0) is f
    fh = forward_transform(f)
    a = forward_transform(propagate(f, 2.5)).values
    b = propagate(fh, 2.5).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_symbol_has_unit_modulus():
    s = propagator_symbol(GridSpec.square(256, 40.0), 1234.5)
    assert np.max(np.abs(np.abs(s) - 1.0)) <= 1e-15


def test_one_dimensional_oracle_against_mpmath():
    amp = GaussianAmplitude(1.0, 1.0, d=1)
    assert abs(kernel_quadrature(amp, 1.0, 0.7) - W1_AT_07) <= 1e-10
    assert abs(kernel_quadrature(amp, 10.0, 3.0) - W10_AT_3) <= 1e-10


def test_one_dimensional_grid_against_mpmath():
    g = GridSpec(n1=65536, l1=4096.0, d=1)  # box beyond the reach of the 1e-10 tail
    amp = GaussianAmplitude(1.0, 1.0, d=1)
    u = propagate(amp.space_field(g), 10.0)
    j = int(np.argmin(np.abs(g.x(0) - 3.0)))
    assert g.x(0)[j] == 3.0 or abs(g.x(0)[j] - 3.0) < 1e-12
    assert abs(u.values[j] - W10_AT_3) <= 1e-9


def test_gaussian_and_generic_oracles_agree():
    amp = GaussianAmplitude(1.0, (1.0, 0.8))
    generic = CallableAmplitude(lambda a, b: amp(a, b))
    x = (0.6, -0.4)
    a = kernel_quadrature(amp, 2.0, x, QuadSpec(tol=1e-10))
    b = kernel_quadrature(generic, 2.0, x, QuadSpec(radius=8.0, initial_nodes=512, tol=1e-8))
    assert abs(a - b) <= 1e-7 * abs(a)


def test_periodic_oracle_matches_grid():
    g = GridSpec.square(256, 20.0)
    amp = GaussianAmplitude(1.0, 1.0)
    u = propagate(amp.space_field(g), 10.0).values
    for j2, j1 in [(128, 128), (140, 170), (100, 200)]:
        x = (g.x(0)[j1], g.x(1)[j2])
        ref = kernel_quadrature(amp, 10.0, x, periods=(2 * g.l1, 2 * g.l2))
        assert abs(u[j2, j1] - ref) <= 1e-8 * abs(ref)


def test_zero_amplitude_oracle():
    assert kernel_quadrature(GaussianAmplitude(0.0, 1.0), 3.0, (1.0, 2.0)) == 0


def test_oracle_failure_reports_history():
    amp = GaussianAmplitude(1.0, 1.0)
    with pytest.raises(OracleFailure) as exc:
        kernel_quadrature(amp, 50.0, (3.0, 1.0), QuadSpec(initial_nodes=16, max_doublings=0, tol=1e-15))
    assert exc.value.history


def test_oracle_rejects_bad_input():
    amp = GaussianAmplitude(1.0, 1.0)
    with pytest.raises(ValueError):
        kernel_quadrature(amp, 0.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        kernel_quadrature(amp, 1.0, (0.0,))


def test_decay_series_p2_is_constant():
    amp = GaussianAmplitude(1.0, 0.25)
    g = plan_grid(amp, 80.0)
    psi = amp.space_field(g)
    ser = sup_decay_series(psi, [10.0, 20.0, 40.0, 80.0], 2.0)
    assert np.max(np.abs(ser.values - norm(psi))) <= 1e-12 * norm(psi)
    assert not ser.warnings


def test_decay_series_warns_on_wrap():
    amp = GaussianAmplitude(1.0, 1.0)
    psi = amp.space_field(GridSpec.square(64, 10.0))
    with pytest.warns(WrapAroundWarning):
        ser = sup_decay_series(psi, [5.0, 50.0])
    assert ser.warnings


def test_decay_series_validates_input():
    psi = GaussianAmplitude(1.0, 1.0).space_field(G)
    with pytest.raises(ValueError):
        sup_decay_series(psi, [1.0], 1.5)
    with pytest.raises(ValueError):
        sup_decay_series(psi, [2.0, 1.0])


def test_plan_grid_standard_sizes():
    # [DERIVED] group-velocity reach of the standard datum at the acceptance times
    amp = GaussianAmplitude.with_h02_norm(0.05, 0.5)
    g = plan_grid(amp, 200.0)
    assert (g.n1, g.n2) == (8192, 1024)
    assert g.steps[0] == pytest.approx(math.pi / amp.radius(1e-8, 0))
    g = plan_grid(amp, 160.0, tail=1e-8)
    assert (g.n1, g.n2) == (4096, 1024)


# [DERIVED] converged refinement ladder, confirmed by a 25-digit mpmath quadrature
W50_AT_20_0 = complex(-0.009329207618581625, 0.013003191733223008)


def test_oracle_reference_value():
    amp = GaussianAmplitude(1.0, 1.0)
    assert abs(kernel_quadrature(amp, 50.0, (20.0, 0.0)) - W50_AT_20_0) <= 1e-9 * abs(W50_AT_20_0)


def test_grid_matches_oracle_at_origin():
    g = GridSpec.square(512, 40.0)
    amp = GaussianAmplitude(1.0, 1.0)
    u = propagate(amp.space_field(g), 10.0).values[256, 256]
    ref = kernel_quadrature(amp, 10.0, (0.0, 0.0), periods=(80.0, 80.0))
    assert abs(u - ref) <= 1e-6 * abs(ref)


def test_oracle_is_continuous_at_zero_time():
    # d/dt W(t)psi(0) = i (Lap/2 - d1^4/4) psi(0) = -1.75 i for exp(-|x|^2/2)
    amp = GaussianAmplitude(1.0, 1.0)
    for t in (1e-2, 1e-3):
        v = kernel_quadrature(amp, t, (0.0, 0.0))
        assert abs((v - 1.0) / t - (-1.75j)) <= 10.0 * t
