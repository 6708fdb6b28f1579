import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisonls.amplitudes import GaussianAmplitude
from anisonls.grid import Domain, Field, GridSpec, forward_transform, inverse_transform, norm
from anisonls.integrator import (
    ConfigurationError,
    FinalStateDivergence,
    MassDriftError,
    NumericalError,
    SolverConfig,
    final_state_seed,
    mass,
    nonlinear_phase_step,
    pairing_series,
    picard_refine,
    solve_final_state,
    solve_ivp,
    strang_step,
)
from anisonls.profile import ProfileSpec, modified_profile
from anisonls.propagator import plan_grid, propagate

G = GridSpec.square(64, 16.0)


def gaussian(g=G, a=1.0, w=2.0):
    return Field.from_function(g, lambda x, y: a * np.exp(-(x * x + y * y) / (2 * w * w)) + 0j)


@given(st.floats(-1.0, 1.0), st.floats(-3, 3), st.sampled_from([2.0, 3.0]))
def test_strang_step_preserves_mass(dt, lam, p):
    u = gaussian()
    v = strang_step(u, dt, SolverConfig(lam=lam, p=p))
    assert abs(mass(v) - mass(u)) <= 1e-13 * mass(u)


@given(st.floats(0.01, 1.0), st.floats(-3, 3))
def test_strang_step_is_time_reversible(dt, lam):
    u = gaussian()
    cfg = SolverConfig(lam=lam)
    back = strang_step(strang_step(u, dt, cfg), -dt, cfg)
    assert norm(back - u) <= 1e-12 * norm(u)


def test_strang_step_zero_coupling_is_linear_flow():
    u = gaussian()
    v = strang_step(u, 0.7, SolverConfig(lam=0.0))
    assert norm(v - propagate(u, 0.7)) <= 1e-14 * norm(u)
    vf = strang_step(forward_transform(u), 0.7, SolverConfig(lam=0.0))
    assert vf.domain is Domain.FREQUENCY


def test_nonlinear_phase_step_is_exact():
    u = gaussian(a=2.0)
    v = nonlinear_phase_step(u, 0.3, 1.5, 2.0)
    expected = u.values * np.exp(-1j * 1.5 * 0.3 * np.abs(u.values))
    assert np.allclose(v.values, expected, rtol=1e-14, atol=0)


def test_second_order_convergence():
    u = gaussian(a=1.0)
    finals = [solve_ivp(u, SolverConfig(dt=dt, t_end=2.0, lam=1.0)).final for dt in (0.2, 0.1, 0.05)]
    e1, e2 = norm(finals[0] - finals[1]), norm(finals[1] - finals[2])
    assert 3.5 <= e1 / e2 <= 4.5


def test_solver_records_requested_times():
    cfg = SolverConfig(dt=0.3, t_end=2.0, record_times=(0.5, 1.0, 1.7), lam=1.0)
    rec = solve_ivp(gaussian(), cfg)
    assert rec.times == pytest.approx([0.0, 0.5, 1.0, 1.7, 2.0])
    assert rec.steps >= 7
    drift = max(abs(m - rec.mass[0]) for m in rec.mass) / rec.mass[0]
    assert drift <= 1e-13


def test_record_stride():
    rec = solve_ivp(gaussian(), SolverConfig(dt=0.1, t_end=1.0, record_stride=2))
    assert len(rec.times) == 6


def test_backward_run():
    u = gaussian()
    fwd = solve_ivp(u, SolverConfig(dt=0.05, t_start=0.0, t_end=1.0, lam=1.0)).final
    back = solve_ivp(fwd, SolverConfig(dt=0.05, t_start=1.0, t_end=0.0, lam=1.0)).final
    assert norm(back - u) <= 1e-12 * norm(u)


def test_trajectory_csv(tmp_path):
    rec = solve_ivp(gaussian(), SolverConfig(dt=0.5, t_end=1.0))
    rec.to_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert tuple(rows[0]) == rec.CSV_COLUMNS
    assert len(rows) == 1 + len(rec.times)
    assert float(rows[-1][0]) == 1.0


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(p=0.5)


def test_non_finite_data_raises():
    vals = np.ones(G.shape, dtype=complex)
    vals[0, 0] = np.inf
    with pytest.raises(NumericalError):
        solve_ivp(Field(G, Domain.SPACE, vals), SolverConfig(dt=0.5, t_end=1.0))


def test_mass_drift_guard_carries_partial_record():
    rng = np.random.default_rng(0)
    rough = Field(G, Domain.SPACE, rng.standard_normal(G.shape) + 0j)
    with pytest.raises(MassDriftError) as exc:
        solve_ivp(rough, SolverConfig(dt=0.1, t_end=1.0, lam=1.0, dealias=True, record_stride=1))
    assert exc.value.record is not None and len(exc.value.record.times) >= 1


def test_crop_accounts_for_removed_mass():
    g = GridSpec.square(128, 40.0)
    cfg = SolverConfig(dt=0.25, t_end=2.0, lam=0.5, crop_tol=1e-11, box_check_every=2, record_stride=1,
                       profile_size=(32, 32))
    rec = solve_ivp(gaussian(g, w=1.5), cfg)
    assert rec.final.grid.n2 < 128  # quartic dispersion spreads x1, so only x2 is cropped
    assert rec.meta["removed_mass"] < 1e-10
    full = solve_ivp(gaussian(g, w=1.5), SolverConfig(dt=0.25, t_end=2.0, lam=0.5)).final
    assert abs(norm(rec.final) - norm(full)) <= 1e-9


AMP = GaussianAmplitude.with_h02_norm(0.05, 0.5)
SPEC = ProfileSpec(AMP, lam=0.5)


@pytest.fixture(scope="module")
def backward():
    g = plan_grid(AMP, 40.0, tail=1e-8)
    cfg = SolverConfig(dt=1.0, record_times=(10.0, 20.0, 30.0), profile_times=tuple(np.geomspace(5.0, 40.0, 12)),
                       store_fields=True)
    return solve_final_state(SPEC, 40.0, 5.0, cfg, g, compare_seeds=True), g


def test_final_state_distances(backward):
    rec, g = backward
    t, dp = rec.series("l2_dist_to_profile", 10.0, 30.0)
    assert {10.0, 20.0, 30.0} <= set(t.tolist())
    assert np.all(np.diff(dp) < 0)
    assert rec.meta["seed"] == "free" and rec.meta["T"] == 40.0
    assert rec.meta["seed_gap_final"] < dp[0]


def test_final_state_seeds(backward):
    _, g = backward
    free = final_state_seed(SPEC, 40.0, g, "free")
    prof = final_state_seed(SPEC, 40.0, g, "profile")
    assert norm(prof - modified_profile(40.0, SPEC, g)) == 0.0
    assert norm(free - prof) < 0.1 * norm(prof)
    with pytest.raises(ConfigurationError):
        final_state_seed(SPEC, 40.0, g, "other")


def test_final_state_guards():
    with pytest.raises(ConfigurationError):
        solve_final_state(SPEC, 10.0, 2.0, SolverConfig(), G)


def test_final_state_divergence_wraps_numerical_error():
    g = GridSpec.square(64, 16.0)
    big = ProfileSpec(GaussianAmplitude(50.0, 1.0), lam=5.0)
    with pytest.raises(FinalStateDivergence) as exc:
        solve_final_state(big, 20.0, 5.0, SolverConfig(dt=2.0, tol_mass_drift=1e-16), g)
    assert exc.value.lam == 5.0


def test_picard_contracts(backward):
    rec, _ = backward
    pr = picard_refine(rec, SPEC)
    assert 0 < pr.contraction_ratio < 1
    assert pr.tail_exponent > 1
    assert len(pr.rows()) == len(rec.profile_times)


def test_picard_guards(backward):
    rec, _ = backward
    with pytest.raises(ConfigurationError):
        picard_refine(rec, ProfileSpec(AMP, p=3.0))
    plain = solve_ivp(gaussian(), SolverConfig(dt=0.5, t_end=1.0))
    with pytest.raises(ConfigurationError):
        picard_refine(plain, SPEC)


def test_pairing_series_starts_at_zero(backward):
    rec, _ = backward
    psi = inverse_transform(AMP.sample(rec.profile_grid))
    s = rec.profile_times[-1]
    ser = pairing_series(rec, psi, s)
    assert dict(ser)[s] == 0
    with pytest.raises(ValueError):
        pairing_series(rec, gaussian(), s)
