"""Bohmian side: guidance velocity, trajectory ensembles and local expectation values."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, DomainError, HorizonError, NodeError
from .evolution import SplitStepper, step_plan
from .grid import (Grid, RealField, Wavefunction, apply_operator,
                   probability_current, spectral_derivative)
from .oscillator import StateSpec

NODE_EPS = 1e-12
MAX_SUBSTEPS = 64
LOCAL_KINDS = ("position", "momentum", "kinetic", "hamiltonian", "heisenberg_q")


def node_mask(density: np.ndarray) -> np.ndarray:
    """Points treated as nodes: P <= NODE_EPS * max(P)."""
    return density <= NODE_EPS * density.max()


def _fill_nodes(values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Replace node entries by linear interpolation (in index) from the good points."""
    if not nodes.any():
        return values
    good = ~nodes
    if not good.any():
        return np.zeros_like(values)
    idx = np.arange(values.size)
    out = values.copy()
    out[nodes] = np.interp(idx[nodes], idx[good], values[good])
    return out


@dataclass(frozen=True, eq=False)
class VelocityField(RealField):
    nodes: np.ndarray = None


@dataclass(frozen=True, eq=False)
class PhaseField(RealField):
    reliable: np.ndarray = None


def velocity_field(psi: Wavefunction, hbar: float = 1.0, mass: float = 1.0) -> VelocityField:
    """v = J / P, with node points filled from their neighbours."""
    p = psi.density()
    j = probability_current(psi, hbar, mass).values
    nodes = node_mask(p)
    v = np.zeros_like(p)
    v[~nodes] = j[~nodes] / p[~nodes]
    return VelocityField(psi.grid, _fill_nodes(v, nodes), psi.time, nodes=nodes)


def phase_field(psi: Wavefunction, hbar: float = 1.0) -> PhaseField:
    """S = hbar * arg(psi), unwrapped outward from the density maximum.

    Points at or beyond a node (seen from the maximum) are marked unreliable.
    """
    p = psi.density()
    i0 = int(np.argmax(p))
    arg = np.angle(psi.amplitudes)
    right = np.unwrap(arg[i0:])
    left = np.unwrap(arg[i0::-1])[::-1]
    s = hbar * np.concatenate([left[:-1], right])
    nodes = node_mask(p)
    bad_right = np.cumsum(nodes[i0:]) > 0
    bad_left = (np.cumsum(nodes[i0::-1]) > 0)[::-1]
    reliable = ~np.concatenate([bad_left[:-1], bad_right])
    return PhaseField(psi.grid, s, psi.time, reliable=reliable)


def quantum_potential(psi: Wavefunction, hbar: float = 1.0, mass: float = 1.0) -> RealField:
    """Q = -(hbar^2 / 2m) lap|psi| / |psi|."""
    r = np.abs(psi.amplitudes)
    lap = spectral_derivative(r, psi.grid, order=2)
    nodes = node_mask(r**2)
    q = np.zeros_like(r)
    q[~nodes] = -(hbar**2 / (2.0 * mass)) * lap[~nodes] / r[~nodes]
    return RealField(psi.grid, _fill_nodes(q, nodes), psi.time)


# local expectation values ---------------------------------------------------

def _applied(kind: str, psi: Wavefunction, *, potential, hbar, mass, omega, s) -> np.ndarray:
    if kind in ("momentum", "kinetic", "hamiltonian"):
        return apply_operator(kind, psi, potential=potential, hbar=hbar,
                              mass=mass).amplitudes
    if kind == "heisenberg_q":
        # q(s) = q cos(ws) + p sin(ws) / (w m), applied linearly
        qpsi = psi.grid.x * psi.amplitudes
        ppsi = apply_operator("momentum", psi, hbar=hbar).amplitudes
        return math.cos(omega * s) * qpsi + math.sin(omega * s) / (omega * mass) * ppsi
    raise ConfigurationError(f"unknown local-expectation kind {kind!r}")


def local_field(kind: str, psi: Wavefunction, *, potential: RealField | None = None,
                hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0,
                s: float = 0.0) -> RealField:
    """Re[(A psi)(x) / psi(x)] on the grid points, node points interpolated."""
    if kind == "position":
        return RealField(psi.grid, psi.grid.x, psi.time)
    a_psi = _applied(kind, psi, potential=potential, hbar=hbar, mass=mass,
                     omega=omega, s=s)
    nodes = node_mask(psi.density())
    vals = np.zeros(psi.grid.n_points)
    vals[~nodes] = np.real(a_psi[~nodes] / psi.amplitudes[~nodes])
    return RealField(psi.grid, _fill_nodes(vals, nodes), psi.time)


def local_expectation(kind: str, psi: Wavefunction, x, *,
                      potential: RealField | None = None, hbar: float = 1.0,
                      mass: float = 1.0, omega: float = 1.0, s: float = 0.0):
    """Local expectation value Re[(A psi)(x) / psi(x)] at arbitrary positions.

    Both psi and A psi are cubic-spline interpolated to x before dividing.
    Raises NodeError if any x sits where the density is below the node threshold.
    """
    x_arr = np.asarray(x, dtype=float)
    if kind == "position":
        return x_arr.copy() if x_arr.ndim else float(x_arr)
    a_psi = _applied(kind, psi, potential=potential, hbar=hbar, mass=mass,
                     omega=omega, s=s)
    g = psi.grid.x
    psi_x = CubicSpline(g, psi.amplitudes)(x_arr)
    a_x = CubicSpline(g, a_psi)(x_arr)
    p_x = np.abs(psi_x) ** 2
    bad = np.atleast_1d(p_x <= NODE_EPS * psi.density().max())
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise NodeError(f"local {kind} value requested at a node "
                        f"(index {j}, x = {np.atleast_1d(x_arr)[j]:.6g})")
    out = np.real(a_x / psi_x)
    return out if out.ndim else float(out)


# ensembles ------------------------------------------------------------------

@dataclass(frozen=True)
class Particle:
    id: int
    xi: float
    weight: float
    path: np.ndarray  # columns: time, position


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    xi: np.ndarray
    weights: np.ndarray
    times: np.ndarray
    positions: np.ndarray  # shape (len(times), n_particles)
    scheme: str = "quantile"
    seed: int | None = None
    source_state: StateSpec | None = None
    final_state: Wavefunction | None = None

    def __post_init__(self):
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ConfigurationError("ensemble weights must sum to 1")
        if np.any(self.weights < 0):
            raise ConfigurationError("ensemble weights must be nonnegative")
        if self.positions.shape != (self.times.size, self.xi.size):
            raise ConfigurationError("positions must have shape (n_times, n_particles)")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("recorded times must be strictly increasing")

    @property
    def n_particles(self) -> int:
        return self.xi.size

    @property
    def horizon(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def particle(self, j: int) -> Particle:
        return Particle(j, float(self.xi[j]), float(self.weights[j]),
                        np.column_stack([self.times, self.positions[:, j]]))

    @property
    def particles(self) -> list[Particle]:
        return [self.particle(j) for j in range(self.n_particles)]

    def positions_at(self, t: float) -> np.ndarray:
        """Particle positions at time t, linear in time between recorded samples."""
        t0, t1 = self.horizon
        tol = 1e-9 * max(1.0, abs(t0), abs(t1))
        if t < t0 - tol or t > t1 + tol:
            raise HorizonError(f"t = {t} outside recorded window [{t0}, {t1}]")
        if self.times.size == 1:
            return self.positions[0].copy()
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1,
                        0, self.times.size - 2))
        theta = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        theta = min(max(theta, 0.0), 1.0)
        return (1.0 - theta) * self.positions[i] + theta * self.positions[i + 1]


def inverse_cdf(psi: Wavefunction, u: np.ndarray) -> np.ndarray:
    """Positions with cumulative |psi|^2 equal to u.

    Each grid sample carries its probability mass over its own cell, so the
    CDF is piecewise linear between cell edges.
    """
    g = psi.grid
    p = psi.density()
    edges = g.x_min - 0.5 * g.dx + np.arange(g.n_points + 1) * g.dx
    cdf = np.concatenate([[0.0], np.cumsum(p)])
    cdf /= cdf[-1]
    return np.interp(u, cdf, edges)


def density_cdf(psi: Wavefunction):
    """Callable CDF of |psi|^2 consistent with inverse_cdf."""
    g = psi.grid
    edges = g.x_min - 0.5 * g.dx + np.arange(g.n_points + 1) * g.dx
    cdf = np.concatenate([[0.0], np.cumsum(psi.density())])
    cdf /= cdf[-1]
    return lambda x: np.interp(x, edges, cdf)


def sample_initial_positions(psi0: Wavefunction, n: int, scheme: str = "quantile",
                             seed: int | None = None,
                             source_state: StateSpec | None = None) -> TrajectoryEnsemble:
    if int(n) != n or n < 1:
        raise ConfigurationError(f"need at least one particle, got {n}")
    n = int(n)
    if scheme == "quantile":
        u = (np.arange(n) + 0.5) / n
    elif scheme == "random":
        if seed is None:
            raise ConfigurationError("random sampling needs an explicit seed")
        u = np.random.default_rng(seed).random(n)
    else:
        raise ConfigurationError(f"unknown sampling scheme {scheme!r}")
    xi = inverse_cdf(psi0, u)
    return TrajectoryEnsemble(
        xi=xi, weights=np.full(n, 1.0 / n), times=np.array([psi0.time]),
        positions=xi[None, :].copy(), scheme=scheme,
        seed=seed if scheme == "random" else None, source_state=source_state)


def _rk4_chunk(x, h, v_a, v_mid, v_b):
    k1 = v_a(x)
    k2 = v_mid(x + 0.5 * h * k1)
    k3 = v_mid(x + 0.5 * h * k2)
    k4 = v_b(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_substeps(x, h, n_sub, v_a, v_b):
    """n_sub RK4 substeps through the time-blended field (1-theta) v_a + theta v_b."""
    def v(theta, y):
        return (1.0 - theta) * v_a(y) + theta * v_b(y)

    hs = h / n_sub
    for k in range(n_sub):
        th0, th1 = k / n_sub, (k + 1) / n_sub
        thm = 0.5 * (th0 + th1)
        k1 = v(th0, x)
        k2 = v(thm, x + 0.5 * hs * k1)
        k3 = v(thm, x + 0.5 * hs * k2)
        k4 = v(th1, x + hs * k3)
        x = x + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def _particle_step(x, h, n_sub, v_a, v_mid, v_b):
    if n_sub == 1:
        return _rk4_chunk(x, h, v_a, v_mid, v_b)
    return _rk4_substeps(x, h, n_sub, v_a, v_b)


def _check_inside(x: np.ndarray, grid: Grid, t: float) -> None:
    out = (x < grid.x_min) | (x > grid.x_max)
    if out.any():
        j = int(np.flatnonzero(out)[0])
        raise DomainError(
            f"particle {j} left [{grid.x_min}, {grid.x_max}] at t = {t:.6g} "
            f"(x = {x[j]:.6g})")


def integrate_trajectories(ensemble: TrajectoryEnsemble, psi0: Wavefunction,
                           potential: RealField, t_final: float, dt: float, *,
                           hbar: float = 1.0, mass: float = 1.0,
                           workers: int = 1) -> TrajectoryEnsemble:
    """Co-evolve psi with the split-operator stepper and move particles by RK4.

    Integration starts at the ensemble's last recorded time, which must equal
    psi0.time, and runs to the absolute time t_final. The velocity at RK4
    substages is the cubic spline of a linear blend of the two bracketing
    snapshots. Particles are independent, so chunks may run on separate
    threads without changing the result.
    """
    t_start = float(ensemble.times[-1])
    if abs(psi0.time - t_start) > 1e-9 * max(1.0, abs(t_start)):
        raise ConfigurationError(
            f"psi0 is at t = {psi0.time}, ensemble ends at t = {t_start}")
    if t_final <= t_start:
        raise ConfigurationError(f"t_final must exceed {t_start}, got {t_final}")
    grid = psi0.grid
    n_steps, h = step_plan(t_final - t_start, dt)
    stepper = SplitStepper(grid, potential, h, hbar, mass)

    n = ensemble.n_particles
    chunks = np.array_split(np.arange(n), max(1, min(workers, n)))
    pool = ThreadPoolExecutor(len(chunks)) if len(chunks) > 1 else None

    positions = np.empty((n_steps + 1, n))
    positions[0] = ensemble.positions[-1]
    times = t_start + h * np.arange(n_steps + 1)
    times[-1] = t_final

    psi = psi0
    v_prev = velocity_field(psi, hbar, mass).values
    v_a = CubicSpline(grid.x, v_prev)
    x = positions[0].copy()
    try:
        for i in range(n_steps):
            psi = psi.with_amplitudes(stepper.step_amplitudes(psi.amplitudes), times[i + 1])
            v_next = velocity_field(psi, hbar, mass).values
            v_mid = CubicSpline(grid.x, 0.5 * (v_prev + v_next))
            v_b = CubicSpline(grid.x, v_next)
            # near nodes the guidance field gets sharp: keep each substep's
            # displacement within one grid cell (global count, so chunking
            # cannot change results)
            v_max = max(np.max(np.abs(v_a(x))), np.max(np.abs(v_b(x))))
            n_sub = max(1, math.ceil(v_max * abs(h) / grid.dx))
            n_sub = min(n_sub, MAX_SUBSTEPS)
            if pool is None:
                x = _particle_step(x, h, n_sub, v_a, v_mid, v_b)
            else:
                parts = pool.map(
                    lambda idx: _particle_step(x[idx], h, n_sub, v_a, v_mid, v_b), chunks)
                x = np.concatenate(list(parts))
            _check_inside(x, grid, times[i + 1])
            positions[i + 1] = x
            v_prev, v_a = v_next, v_b
    finally:
        if pool is not None:
            pool.shutdown()

    all_times = np.concatenate([ensemble.times[:-1], times])
    all_pos = np.concatenate([ensemble.positions[:-1], positions])
    return TrajectoryEnsemble(ensemble.xi, ensemble.weights, all_times, all_pos,
                              ensemble.scheme, ensemble.seed, ensemble.source_state,
                              final_state=psi)


def bohm_expectation(kind: str, ensemble: TrajectoryEnsemble, psi_t: Wavefunction, *,
                     potential: RealField | None = None, hbar: float = 1.0,
                     mass: float = 1.0, omega: float = 1.0, s: float = 0.0) -> float:
    """Weighted ensemble mean of the local value of A at time psi_t.time."""
    x = ensemble.positions_at(psi_t.time)
    try:
        vals = local_expectation(kind, psi_t, x, potential=potential, hbar=hbar,
                                 mass=mass, omega=omega, s=s)
    except NodeError as exc:
        raise NodeError(f"particle at a node: {exc}") from exc
    return float(np.sum(ensemble.weights * vals))
