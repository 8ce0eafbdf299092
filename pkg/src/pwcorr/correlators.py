"""Two-time position correlations: grid quantum mechanics, Fock oracle, Bohm ensembles."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bohm import (TrajectoryEnsemble, integrate_trajectories, local_expectation,
                   sample_initial_positions)
from .errors import ConsistencyError
from .evolution import evolve_for
from .fock import TAIL_MARGIN, build_fock_operators, oracle_two_time_correlation
from .grid import Grid, RealField, Wavefunction, inner_product, position_moment
from .oscillator import (OscillatorParams, StateSpec, build_state, eigenstate,
                         oscillator_potential)

METHODS = ("grid_qm", "fock_qm", "bohm", "analytic")
ZERO_BAND = 1e-3


@dataclass(frozen=True)
class CorrelationRecord:
    s: float
    t: float
    value: complex
    symmetrized: float
    method: str

    def as_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "re": self.value.real,
                "im": self.value.imag, "symmetrized": self.symmetrized,
                "method": self.method}


def worker_count(default: int | None = None) -> int:
    """`default` workers (CPU count if None), capped by PWC_THREADS when set."""
    n = default if default is not None else (os.cpu_count() or 1)
    env = os.environ.get("PWC_THREADS")
    if env:
        try:
            n = min(n, int(env))
        except ValueError:
            pass
    return max(1, n)


def _position_times(psi: Wavefunction) -> Wavefunction:
    return psi.with_amplitudes(psi.grid.x * psi.amplitudes)


def _grid_correlation(psi0, potential, s, t, dt, hbar, mass) -> complex:
    # <psi0| q(s) q(t) |psi0> = < q psi(s) | U(s - t) | q psi(t) >
    psi_t = evolve_for(psi0, potential, t - psi0.time, dt, hbar, mass)
    right = evolve_for(_position_times(psi_t), potential, s - t, dt, hbar, mass)
    psi_s = evolve_for(psi0, potential, s - psi0.time, dt, hbar, mass)
    return inner_product(_position_times(psi_s), right)


def qm_two_time_correlation(psi0: Wavefunction, potential: RealField, s: float,
                            t: float, dt: float, *, hbar: float = 1.0,
                            mass: float = 1.0) -> CorrelationRecord:
    """<q(s) q(t)> by evolve, multiply by x, evolve by s - t, overlap."""
    v = _grid_correlation(psi0, potential, s, t, dt, hbar, mass)
    return CorrelationRecord(s, t, v, 2.0 * v.real, "grid_qm")


def qm_symmetrized_correlation(psi0: Wavefunction, potential: RealField, s: float,
                               t: float, dt: float, *, hbar: float = 1.0,
                               mass: float = 1.0) -> CorrelationRecord:
    """<q(s)q(t) + q(t)q(s)> from both orderings computed separately."""
    st = _grid_correlation(psi0, potential, s, t, dt, hbar, mass)
    ts = _grid_correlation(psi0, potential, t, s, dt, hbar, mass)
    return CorrelationRecord(s, t, st, (st + ts).real, "grid_qm")


def fock_two_time_correlation(coefficients, s: float, t: float, ops) -> CorrelationRecord:
    v = oracle_two_time_correlation(coefficients, s, t, ops)
    return CorrelationRecord(s, t, v, 2.0 * v.real, "fock_qm")


def analytic_ground_correlation(s: float, t: float,
                                params: OscillatorParams) -> CorrelationRecord:
    """(hbar / 2 m omega) exp(-i omega (s - t)) for the oscillator ground state."""
    v = params.ground_q2 * complex(np.exp(-1j * params.omega * (s - t)))
    return CorrelationRecord(s, t, v, 2.0 * v.real, "analytic")


def bohm_two_time_correlation(ensemble: TrajectoryEnsemble, s: float,
                              t: float) -> CorrelationRecord:
    """sum_j w_j x_j(s) x_j(t); real by construction."""
    v = float(np.sum(ensemble.weights * ensemble.positions_at(s) * ensemble.positions_at(t)))
    return CorrelationRecord(s, t, complex(v, 0.0), 2.0 * v, "bohm")


def complex_expectation_decomposition(record: CorrelationRecord, psi0: Wavefunction,
                                      potential: RealField, s: float, t: float,
                                      dt: float, *, hbar: float = 1.0,
                                      mass: float = 1.0,
                                      tol: float = 1e-6) -> tuple[float, float]:
    """Expectations of the Hermitian parts (f + f^dag)/2 and (f - f^dag)/2i of f = q(s)q(t).

    Checks that <Re f> + i <Im f> reproduces record.value.
    """
    f = _grid_correlation(psi0, potential, s, t, dt, hbar, mass)
    f_dag = _grid_correlation(psi0, potential, t, s, dt, hbar, mass)
    re_op = 0.5 * (f + f_dag)
    im_op = (f - f_dag) / 2j
    # both are expectations of Hermitian operators, so their imaginary parts are noise
    for name, z in (("Re f", re_op), ("Im f", im_op)):
        if abs(z.imag) > tol:
            raise ConsistencyError(f"<{name}> has imaginary part {z.imag:.3g}")
    rebuilt = complex(re_op.real, im_op.real)
    if abs(rebuilt - record.value) > tol:
        raise ConsistencyError(
            f"<Re f> + i<Im f> = {rebuilt} differs from record value {record.value}")
    return re_op.real, im_op.real


def heisenberg_local_expectation(xi: float, s: float, params: OscillatorParams,
                                 psi0: Wavefunction | None = None,
                                 tol: float = 1e-6) -> float:
    """Local value of q(s) for a ground-state particle sitting at xi: xi cos(omega s).

    If psi0 is given, the same number is recomputed through the generic
    local-expectation route and a mismatch beyond tol raises ConsistencyError.
    """
    value = xi * math.cos(params.omega * s)
    if psi0 is not None:
        generic = local_expectation("heisenberg_q", psi0, xi, hbar=params.hbar,
                                    mass=params.mass, omega=params.omega, s=s)
        if abs(generic - value) > tol:
            raise ConsistencyError(
                f"generic local q(s) = {generic!r} vs closed form {value!r}")
    return value


# contradiction sweep ---------------------------------------------------------

def sign_flag(qm_sym: float, bohm_sym: float, band: float = ZERO_BAND) -> str:
    if abs(qm_sym) <= band or abs(bohm_sym) <= band:
        return "NEUTRAL"
    return "AGREE" if (qm_sym > 0) == (bohm_sym > 0) else "CONTRADICTION"


@dataclass
class ContradictionRow:
    tau: float
    qm: CorrelationRecord
    fock: CorrelationRecord
    bohm: CorrelationRecord
    flag: str

    def as_dict(self) -> dict:
        return {"tau": self.tau, "qm_re": self.qm.value.real,
                "qm_im": self.qm.value.imag, "qm_sym": self.qm.symmetrized,
                "bohm": self.bohm.symmetrized, "fock_re": self.fock.value.real,
                "fock_im": self.fock.value.imag, "flag": self.flag}


@dataclass
class ContradictionReport:
    params: OscillatorParams
    grid: Grid
    rows: list[ContradictionRow]
    ground_q2: float  # quadrature of x^2 |psi0|^2
    extras: dict = field(default_factory=dict)

    def row_at(self, tau: float) -> ContradictionRow:
        return min(self.rows, key=lambda r: abs(r.tau - tau))

    def as_dict(self) -> dict:
        return {"params": self.params.to_dict(), "grid": self.grid.to_dict(),
                "ground_q2": self.ground_q2,
                "lags": [r.as_dict() for r in self.rows], **self.extras}


def correlation_sweep(state: StateSpec, params: OscillatorParams, grid: Grid, lags, *,
                      dt: float | None = None, n_particles: int = 10_000,
                      scheme: str = "quantile", seed: int | None = None,
                      fock_dim: int = 16, workers: int | None = None,
                      t_ref: float = 0.0) -> list[ContradictionRow]:
    """<q(t_ref + tau) q(t_ref)> for each lag from grid QM, the Fock oracle and Bohm paths."""
    dt = params.period / 1000 if dt is None else dt
    lags = [float(x) for x in lags]
    psi0 = build_state(state, params, grid)
    potential = oscillator_potential(params, grid)
    coeffs = state.eigen_coefficients()
    ops = build_fock_operators(max(fock_dim, coeffs.size + TAIL_MARGIN), params)

    ens = sample_initial_positions(psi0, n_particles, scheme, seed, source_state=state)
    horizon = t_ref + max([0.0] + lags)
    if horizon > psi0.time:
        ens = integrate_trajectories(ens, psi0, potential, horizon, dt,
                                     hbar=params.hbar, mass=params.mass,
                                     workers=worker_count(workers))

    def one(tau):
        s = t_ref + tau
        qm = qm_symmetrized_correlation(psi0, potential, s, t_ref, dt,
                                        hbar=params.hbar, mass=params.mass)
        fk = fock_two_time_correlation(coeffs, s, t_ref, ops)
        bm = bohm_two_time_correlation(ens, s, t_ref)
        return ContradictionRow(tau, qm, fk, bm, sign_flag(qm.symmetrized, bm.symmetrized))

    n_workers = min(len(lags), worker_count(workers)) if lags else 1
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            return list(pool.map(one, lags))
    return [one(tau) for tau in lags]


def contradiction_report(params: OscillatorParams, grid: Grid, lags, **kw) -> ContradictionReport:
    """Ground-state lag sweep; keyword arguments as for correlation_sweep."""
    rows = correlation_sweep(StateSpec.eigen(0), params, grid, lags, **kw)
    psi0 = eigenstate(0, params, grid)
    return ContradictionReport(params, grid, rows,
                               position_moment(psi0, lambda x: x**2))
