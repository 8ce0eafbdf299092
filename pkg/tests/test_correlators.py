import math

import numpy as np
import pytest

from pwcorr.bohm import integrate_trajectories, sample_initial_positions
from pwcorr.correlators import (CorrelationRecord, analytic_ground_correlation,
                                bohm_two_time_correlation, complex_expectation_decomposition,
                                contradiction_report, correlation_sweep,
                                fock_two_time_correlation, heisenberg_local_expectation,
                                qm_symmetrized_correlation, qm_two_time_correlation, sign_flag,
                                worker_count)
from pwcorr.errors import ConsistencyError, HorizonError
from pwcorr.fock import build_fock_operators
from pwcorr.grid import Grid, position_moment
from pwcorr.oscillator import OscillatorParams, StateSpec

from conftest import SUPERPOSITION


@pytest.fixture(scope="module")
def ground_paths(ground, V, T, dt):
    ens = sample_initial_positions(ground, 10_000)
    return integrate_trajectories(ens, ground, V, 1.5 * T, dt)


@pytest.mark.parametrize("t", [0.0, 0.7])
def test_qm_ground_examples(ground, V, T, dt, t):
    eq = qm_two_time_correlation(ground, V, t, t, dt)
    assert eq.method == "grid_qm"
    assert abs(eq.value - 0.5) <= 1e-5
    half = qm_two_time_correlation(ground, V, t + T / 2, t, dt)
    assert abs(half.value + 0.5) <= 1e-4
    assert half.value.real < 0
    quarter = qm_two_time_correlation(ground, V, t + math.pi / 2, t, dt)
    assert abs(quarter.value + 0.5j) <= 1e-4


def test_qm_backward_ordering(ground, V, T, dt):
    # s < t needs backward evolution inside the sandwich
    r = qm_two_time_correlation(ground, V, 0.2, 0.2 + math.pi / 2, dt)
    assert abs(r.value - 0.5j) <= 1e-4


def test_symmetrized_ground(ground, V, T, dt):
    assert abs(qm_symmetrized_correlation(ground, V, T / 2, 0.0, dt).symmetrized + 1) <= 2e-4
    assert abs(qm_symmetrized_correlation(ground, V, 0.3, 0.3, dt).symmetrized - 1) <= 2e-5
    assert abs(qm_symmetrized_correlation(ground, V, T / 4, 0.0, dt).symmetrized) <= 2e-4


def test_symmetrized_is_twice_real_part(coherent, V, T, dt):
    r = qm_symmetrized_correlation(coherent, V, T / 3, T / 7, dt)
    assert abs(r.symmetrized - 2 * r.value.real) <= 1e-6


def test_grid_matches_fock(ground, coherent, superposition, V, T, params):
    ops = build_fock_operators(48, params)
    fine = T / 4000
    for psi, spec in ((ground, StateSpec.eigen(0)), (coherent, StateSpec.coherent(1.0)),
                      (superposition, SUPERPOSITION)):
        g = qm_two_time_correlation(psi, V, 0.9, 0.25, fine).value
        f = fock_two_time_correlation(spec.eigen_coefficients(), 0.9, 0.25, ops).value
        assert abs(g - f) <= 1e-5


def test_hermitian_symmetry(ground, coherent, V, T, dt):
    for psi in (ground, coherent):
        a = qm_two_time_correlation(psi, V, T / 5, T / 3, dt).value
        b = qm_two_time_correlation(psi, V, T / 3, T / 5, dt).value
        assert abs(a - np.conj(b)) <= 1e-6


def test_classical_shape(ground, V, T, dt):
    taus = np.linspace(0, T, 8)
    sym = [qm_two_time_correlation(ground, V, tau, 0.0, dt).symmetrized for tau in taus]
    assert np.max(np.abs(np.array(sym) - np.cos(taus))) <= 1e-4


def test_bohm_ground(ground_paths, T):
    r = bohm_two_time_correlation(ground_paths, T / 2, 0.0)
    assert r.method == "bohm" and r.value.imag == 0.0
    assert abs(r.value.real - 0.5) <= 1e-3 and r.value.real > 0
    assert r.symmetrized == 2 * r.value.real
    for s, t in ((0.3, 1.1), (T, 0.2), (1.4 * T, 0.9 * T)):
        assert abs(bohm_two_time_correlation(ground_paths, s, t).value - 0.5) <= 1e-3


def test_bohm_interpolates_between_steps(ground_paths, dt):
    # lags off the step lattice use linear interpolation of each path
    a = bohm_two_time_correlation(ground_paths, 0.37 * dt, 0.0).value
    assert abs(a - 0.5) <= 1e-3


def test_bohm_horizon(ground_paths, T):
    with pytest.raises(HorizonError):
        bohm_two_time_correlation(ground_paths, 2 * T, 0.0)


def test_bohm_coherent_equal_time(coherent, V, T, dt):
    ens = integrate_trajectories(sample_initial_positions(coherent, 10_000), coherent, V,
                                 T / 3, dt)
    for t in (0.0, T / 3):
        b = bohm_two_time_correlation(ens, t, t).value.real
        q = qm_two_time_correlation(coherent, V, t, t, dt).value.real
        assert abs(b - q) <= 2e-3


def test_decomposition(ground, V, dt):
    for lag, expected in ((math.pi / 2, (0.0, -0.5)),
                          (math.pi / 4, (0.5 * math.cos(math.pi / 4), -0.5 * math.sin(math.pi / 4)))):
        rec = qm_two_time_correlation(ground, V, lag, 0.0, dt)
        re, im = complex_expectation_decomposition(rec, ground, V, lag, 0.0, dt)
        assert abs(re - expected[0]) <= 1e-4 and abs(im - expected[1]) <= 1e-4
    rec = qm_two_time_correlation(ground, V, 0.4, 0.4, dt)
    re, im = complex_expectation_decomposition(rec, ground, V, 0.4, 0.4, dt)
    assert abs(im) <= 1e-6
    assert abs(re - position_moment(ground, lambda x: x**2)) <= 1e-5


def test_decomposition_detects_inconsistency(ground, V, dt):
    wrong = CorrelationRecord(1.0, 0.0, 0.3 + 0.1j, 0.6, "grid_qm")
    with pytest.raises(ConsistencyError):
        complex_expectation_decomposition(wrong, ground, V, 1.0, 0.0, dt)


def test_heisenberg_local_examples(params, ground, T):
    assert heisenberg_local_expectation(1.0, 0.0, params) == 1.0
    assert heisenberg_local_expectation(1.0, T / 2, params) == pytest.approx(-1.0, abs=1e-15)
    assert abs(heisenberg_local_expectation(0.7, T / 4, params)) <= 1e-12
    for xi in (-1.0, 0.3, 2.0):
        for s in (0.0, T / 8, T / 2):
            heisenberg_local_expectation(xi, s, params, psi0=ground)  # cross-checked inside


def test_sign_flag():
    assert sign_flag(-1.0, 1.0) == "CONTRADICTION"
    assert sign_flag(1.0, 1.0) == "AGREE"
    assert sign_flag(1e-5, 1.0) == "NEUTRAL"


def test_contradiction_report(params, grid, T):
    rep = contradiction_report(params, grid, [0.0, T / 4, T / 2, T], n_particles=2000, seed=0)
    assert rep.ground_q2 == pytest.approx(0.5, abs=1e-9)
    half, zero, full = rep.row_at(T / 2), rep.row_at(0.0), rep.row_at(T)
    assert half.flag == "CONTRADICTION"
    assert abs(half.qm.symmetrized + 1) <= 2e-4 and abs(half.bohm.symmetrized - 1) <= 1e-3
    assert abs(half.fock.symmetrized + 1) <= 1e-12
    assert zero.flag == "AGREE" and abs(zero.qm.symmetrized - 1) <= 2e-5
    assert full.flag == "AGREE" and abs(full.qm.symmetrized - 1) <= 2e-4
    assert rep.row_at(T / 4).flag == "NEUTRAL"
    d = rep.as_dict()
    assert set(d) >= {"params", "grid", "lags"}
    assert set(d["lags"][0]) == {"tau", "qm_re", "qm_im", "qm_sym", "bohm", "fock_re",
                                 "fock_im", "flag"}


def test_sweep_is_independent_of_worker_count(params, grid, T):
    kw = dict(n_particles=300, dt=T / 500)
    a = correlation_sweep(SUPERPOSITION, params, grid, [0.0, T / 3, T / 2], workers=1, **kw)
    b = correlation_sweep(SUPERPOSITION, params, grid, [0.0, T / 3, T / 2], workers=3, **kw)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]


def test_other_units():
    params = OscillatorParams(mass=2.0, omega=3.0)
    grid = Grid(-6.0, 6.0, 512)
    T = params.period
    rep = contradiction_report(params, grid, [T / 2], n_particles=2000, dt=T / 1000)
    row = rep.rows[0]
    assert abs(abs(row.qm.symmetrized) - 1 / 6) <= 1e-3
    assert abs(abs(row.bohm.symmetrized) - 1 / 6) <= 1e-3
    assert row.flag == "CONTRADICTION"
    assert analytic_ground_correlation(T / 2, 0, params).value == pytest.approx(-1 / 12)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("PWC_THREADS", "3")
    assert worker_count(8) == 3
    assert worker_count(2) == 2
    assert worker_count() <= 3
    monkeypatch.setenv("PWC_THREADS", "0")
    assert worker_count(4) == 1
    monkeypatch.delenv("PWC_THREADS")
    assert worker_count(5) == 5
