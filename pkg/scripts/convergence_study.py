"""Time-step convergence of the split-operator stepper and of the ground-state trajectories.

    python scripts/convergence_study.py

For dt = T/250 ... T/8000 prints the one-period error of the ground state
against its exact phase rotation, the successive error ratios (about 4 for a
second-order method), and the largest drift of 16 ground-state particles.
"""
import numpy as np

from pwcorr import (OscillatorParams, eigenstate, evolve_eigenstate_analytic,
                    integrate_trajectories, oscillator_potential, sample_initial_positions)
from pwcorr.evolution import evolve_for
from pwcorr.grid import Grid


def main():
    params = OscillatorParams()
    grid = Grid(-10.0, 10.0, 1024)
    V = oscillator_potential(params, grid)
    T = params.period
    psi0 = eigenstate(0, params, grid)
    exact = evolve_eigenstate_analytic(psi0, params.energy(0), T)

    print(f"{'steps/T':>8} {'state error':>12} {'ratio':>6} {'particle drift':>15}")
    prev = None
    for steps in (250, 500, 1000, 2000, 4000, 8000):
        dt = T / steps
        err = np.max(np.abs(evolve_for(psi0, V, T, dt).amplitudes - exact.amplitudes))
        ens = integrate_trajectories(sample_initial_positions(psi0, 16), psi0, V, T, dt)
        drift = np.max(np.abs(ens.positions - ens.xi))
        ratio = f"{prev / err:6.2f}" if prev else " " * 6
        print(f"{steps:8d} {err:12.3e} {ratio} {drift:15.3e}")
        prev = err


if __name__ == "__main__":
    main()
