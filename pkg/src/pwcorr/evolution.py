"""Time evolution under a static potential: Strang split-operator stepping."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, EigenrelationError
from .grid import Grid, RealField, Wavefunction, apply_operator


class SplitStepper:
    """Second-order Strang step: half potential kick, kinetic drift, half kick.

    The phase factors are cached, so repeated stepping costs one FFT pair per
    step. A stepper built with -dt is the exact inverse of one built with dt.
    """

    def __init__(self, grid: Grid, potential: RealField, dt: float,
                 hbar: float = 1.0, mass: float = 1.0):
        if potential.grid != grid:
            raise ConfigurationError("potential lives on a different grid")
        if not np.isfinite(dt) or dt == 0.0:
            raise ConfigurationError(f"time step must be finite and nonzero, got {dt}")
        self.grid = grid
        self.dt = float(dt)
        self.half_kick = np.exp(-0.5j * dt / hbar * potential.values)
        self.drift = np.exp(-0.5j * dt * hbar / mass * grid.wavenumbers**2)

    def step_amplitudes(self, amps: np.ndarray) -> np.ndarray:
        out = self.half_kick * amps
        out = np.fft.ifft(self.drift * np.fft.fft(out))
        return self.half_kick * out

    def step(self, psi: Wavefunction, n_steps: int = 1) -> Wavefunction:
        amps = psi.amplitudes
        for _ in range(n_steps):
            amps = self.step_amplitudes(amps)
        return psi.with_amplitudes(amps, psi.time + n_steps * self.dt)


def evolve(psi: Wavefunction, potential: RealField, dt: float, n_steps: int,
           hbar: float = 1.0, mass: float = 1.0) -> Wavefunction:
    """Advance psi by n_steps Strang steps of size dt (negative dt runs backward)."""
    if n_steps < 0 or int(n_steps) != n_steps:
        raise ConfigurationError(f"n_steps must be a nonnegative integer, got {n_steps}")
    if n_steps == 0:
        return psi
    return SplitStepper(psi.grid, potential, dt, hbar, mass).step(psi, int(n_steps))


def step_plan(duration: float, dt: float) -> tuple[int, float]:
    """Number of steps and the signed step that cover `duration` with |step| <= |dt|.

    Durations that are an integer multiple of dt (to 1e-9 relative) keep dt exactly.
    """
    dt = abs(dt)
    if dt == 0.0:
        raise ConfigurationError("dt must be nonzero")
    if duration == 0.0:
        return 0, dt
    ratio = abs(duration) / dt
    n = round(ratio)
    if n == 0 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        n = math.ceil(ratio)
    return n, duration / n


def evolve_for(psi: Wavefunction, potential: RealField, duration: float, dt: float,
               hbar: float = 1.0, mass: float = 1.0) -> Wavefunction:
    """Evolve by a (possibly negative) duration using steps no larger than dt."""
    n, h = step_plan(duration, dt)
    if n == 0:
        return psi
    out = evolve(psi, potential, h, n, hbar, mass)
    # pin the timestamp so repeated calls do not accumulate rounding
    return out.with_amplitudes(out.amplitudes, psi.time + duration)


def evolve_eigenstate_analytic(psi_n: Wavefunction, energy: float, t: float, *,
                               hbar: float = 1.0, validate: bool = False,
                               potential: RealField | None = None,
                               mass: float = 1.0) -> Wavefunction:
    """Stationary-state evolution: multiply by exp(-i E (t - t0) / hbar)."""
    if validate:
        if potential is None:
            raise ConfigurationError("validation needs the potential")
        h_psi = apply_operator("hamiltonian", psi_n, potential=potential,
                               hbar=hbar, mass=mass).amplitudes
        resid = np.sqrt(np.sum(np.abs(h_psi - energy * psi_n.amplitudes) ** 2)
                        * psi_n.grid.dx)
        if resid > 1e-5:
            raise EigenrelationError(
                f"||H psi - E psi|| = {resid:.3g} for E = {energy}")
    phase = np.exp(-1j * energy * (t - psi_n.time) / hbar)
    return psi_n.with_amplitudes(psi_n.amplitudes * phase, t)
