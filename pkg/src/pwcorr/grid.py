"""Uniform periodic grid, wavefunctions and the spectral operators acting on them.

All derivatives are taken spectrally, so the grid is implicitly periodic and
states must decay to (numerically) zero at the edges.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ShapeError

NORM_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ConfigurationError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ConfigurationError(
                f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        n = self.n_points
        if int(n) != n or n < 8 or (int(n) & (int(n) - 1)) != 0:
            raise ConfigurationError(
                f"n_points must be a power of two >= 8, got {n}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        xs = self.x_min + np.arange(self.n_points) * self.dx
        xs.flags.writeable = False
        return xs

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in numpy's FFT ordering."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max,
                "n_points": self.n_points}


def make_grid(x_min: float, x_max: float, n_points: int) -> Grid:
    return Grid(x_min, x_max, n_points)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Wavefunction:
    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.n_points,):
            raise ShapeError(
                f"expected {self.grid.n_points} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", _readonly(amps))
        object.__setattr__(self, "time", float(self.time))

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def normalized(self) -> Wavefunction:
        nrm = self.norm()
        if nrm == 0.0:
            raise ConfigurationError("cannot normalize a zero wavefunction")
        return self.with_amplitudes(self.amplitudes / np.sqrt(nrm))

    def with_amplitudes(self, amplitudes, time: float | None = None) -> Wavefunction:
        return Wavefunction(self.grid, amplitudes,
                            self.time if time is None else time)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n_points,):
            raise ShapeError(
                f"expected {self.grid.n_points} values, got {vals.shape}")
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "time", float(self.time))

    def sup_norm(self, mask: np.ndarray | None = None) -> float:
        v = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(v))) if v.size else 0.0


# spectral helpers -----------------------------------------------------------

def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """d^order/dx^order of periodic samples; returns complex for complex input."""
    fk = np.fft.fft(values) * (1j * grid.wavenumbers) ** order
    out = np.fft.ifft(fk)
    return out if np.iscomplexobj(values) else out.real


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ShapeError(f"grid mismatch: {a} vs {b}")


def inner_product(phi: Wavefunction, psi: Wavefunction) -> complex:
    _check_same_grid(phi.grid, psi.grid)
    return complex(np.sum(np.conj(phi.amplitudes) * psi.amplitudes) * psi.grid.dx)


OPERATOR_KINDS = ("position", "momentum", "kinetic", "potential", "hamiltonian")


def apply_operator(kind: str, psi: Wavefunction, *,
                   potential: RealField | None = None,
                   hbar: float = 1.0, mass: float = 1.0) -> Wavefunction:
    """Apply a primitive operator; the result is not renormalized."""
    g = psi.grid
    amps = psi.amplitudes
    if kind == "position":
        out = g.x * amps
    elif kind == "momentum":
        out = hbar * np.fft.ifft(g.wavenumbers * np.fft.fft(amps))
    elif kind == "kinetic":
        out = np.fft.ifft(hbar**2 * g.wavenumbers**2 / (2.0 * mass) * np.fft.fft(amps))
    elif kind in ("potential", "hamiltonian"):
        if potential is None:
            raise ConfigurationError(f"operator '{kind}' needs a potential field")
        _check_same_grid(g, potential.grid)
        out = potential.values * amps
        if kind == "hamiltonian":
            out = out + apply_operator("kinetic", psi, hbar=hbar, mass=mass).amplitudes
    else:
        raise ConfigurationError(f"unknown operator kind {kind!r}")
    return psi.with_amplitudes(out)


def expectation(kind: str, psi: Wavefunction, **kw) -> float:
    """Re <psi|A|psi> for a primitive Hermitian operator."""
    return inner_product(psi, apply_operator(kind, psi, **kw)).real


def position_moment(psi: Wavefunction, f=lambda x: x) -> float:
    """<f(q)> = sum f(x_k) P_k dx."""
    return float(np.sum(f(psi.grid.x) * psi.density()) * psi.grid.dx)


def probability_density(psi: Wavefunction) -> RealField:
    return RealField(psi.grid, psi.density(), psi.time)


def probability_current(psi: Wavefunction, hbar: float = 1.0,
                        mass: float = 1.0) -> RealField:
    # Re[conj(psi) (hbar/(i m)) psi'] = (hbar/m) (R I' - I R') for psi = R + iI.
    # J ignores a global phase, so rotate the peak onto the real axis and
    # differentiate R and I separately: a state that is real up to a constant
    # phase then gets J = 0 to roundoff, even far out in the tails.
    amps = psi.amplitudes
    amps = amps * np.exp(-1j * np.angle(amps[np.argmax(np.abs(amps))]))
    re, im = amps.real, amps.imag
    d_re = spectral_derivative(re, psi.grid)
    d_im = spectral_derivative(im, psi.grid)
    j = (hbar / mass) * (re * d_im - im * d_re)
    return RealField(psi.grid, j, psi.time)


def continuity_residual(psi_before: Wavefunction, psi_after: Wavefunction,
                        hbar: float = 1.0, mass: float = 1.0) -> RealField:
    """dP/dt + dJ/dx with a midpoint current; a discretization diagnostic."""
    _check_same_grid(psi_before.grid, psi_after.grid)
    dt = psi_after.time - psi_before.time
    if dt == 0.0:
        raise ConfigurationError("continuity residual needs distinct timestamps")
    dpdt = (psi_after.density() - psi_before.density()) / dt
    j_mid = 0.5 * (probability_current(psi_before, hbar, mass).values
                   + probability_current(psi_after, hbar, mass).values)
    div_j = spectral_derivative(j_mid, psi_before.grid)
    return RealField(psi_before.grid, dpdt + div_j,
                     0.5 * (psi_before.time + psi_after.time))


def write_wavefunction_csv(psi: Wavefunction, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re", "im", "p_density"])
        for x, a, p in zip(psi.grid.x, psi.amplitudes, psi.density()):
            w.writerow([f"{x:.17g}", f"{a.real:.17g}", f"{a.imag:.17g}", f"{p:.17g}"])
    return path


def read_wavefunction_csv(path: str | Path, grid: Grid, time: float = 0.0) -> Wavefunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n_points or not np.allclose(data[:, 0], grid.x):
        raise ShapeError(f"{path} does not match grid {grid}")
    return Wavefunction(grid, data[:, 1] + 1j * data[:, 2], time)
