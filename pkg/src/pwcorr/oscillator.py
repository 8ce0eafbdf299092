"""Harmonic oscillator parameters, potential and state constructors."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import Grid, RealField, Wavefunction

EDGE_TOL = 1e-12
COHERENT_TAIL = 1e-14
MAX_LEVELS = 200


@dataclass(frozen=True)
class OscillatorParams:
    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega", "hbar"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, float(v))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def length_scale(self) -> float:
        """sqrt(hbar / (m omega)), the ground-state width."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def ground_q2(self) -> float:
        """<q^2> in the ground state, hbar / (2 m omega)."""
        return self.hbar / (2.0 * self.mass * self.omega)

    def energy(self, n: int) -> float:
        return self.hbar * self.omega * (n + 0.5)

    def to_dict(self) -> dict:
        return {"mass": self.mass, "omega": self.omega, "hbar": self.hbar}


def oscillator_potential(params: OscillatorParams, grid: Grid) -> RealField:
    return RealField(grid, 0.5 * params.mass * params.omega**2 * grid.x**2)


def hermite_functions(n_max: int, x: np.ndarray, params: OscillatorParams) -> np.ndarray:
    """Rows 0..n_max of normalized Hermite functions sampled at x.

    Uses the three-term recurrence on the normalized functions, which stays
    finite for large orders where raw Hermite polynomials overflow.
    """
    xi = np.asarray(x, dtype=float) / params.length_scale
    out = np.empty((n_max + 1, xi.size))
    out[0] = (math.pi ** -0.25 / math.sqrt(params.length_scale)) * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = (math.sqrt(2.0 / (n + 1)) * xi * out[n]
                      - math.sqrt(n / (n + 1)) * out[n - 1])
    return out


def _check_edges(amps: np.ndarray, what: str) -> None:
    edge = max(abs(amps[0]), abs(amps[-1]))
    if edge >= EDGE_TOL:
        raise DomainError(
            f"{what}: edge amplitude {edge:.3g} >= {EDGE_TOL}; widen the grid")


def eigenstate(n: int, params: OscillatorParams, grid: Grid) -> Wavefunction:
    if n < 0 or int(n) != n:
        raise ConfigurationError(f"eigenstate index must be a nonnegative integer, got {n}")
    amps = hermite_functions(int(n), grid.x, params)[int(n)]
    _check_edges(amps, f"eigenstate({n})")
    return Wavefunction(grid, amps.astype(np.complex128), 0.0).normalized()


def coherent_coefficients(alpha: complex, tail: float = COHERENT_TAIL) -> np.ndarray:
    """Eigenbasis amplitudes exp(-|a|^2/2) a^n / sqrt(n!), cut once the tail weight < tail."""
    alpha = complex(alpha)
    c = [math.exp(-0.5 * abs(alpha) ** 2) + 0j]
    weight = abs(c[0]) ** 2
    while 1.0 - weight >= tail:
        n = len(c)
        if n > MAX_LEVELS:
            raise DomainError(
                f"coherent({alpha}): tail weight {1 - weight:.3g} after {MAX_LEVELS} levels")
        c.append(c[-1] * alpha / math.sqrt(n))
        weight += abs(c[-1]) ** 2
    return np.array(c)


_COMPLEX_RE = re.compile(r"\s+")


def parse_complex(text: str) -> complex:
    s = _COMPLEX_RE.sub("", str(text)).replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse complex number {text!r}") from exc


def format_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


@dataclass(frozen=True)
class StateSpec:
    """Which oscillator state to build: an eigenstate, coherent state or superposition."""

    kind: str
    n: int = 0
    alpha: complex = 0j
    coefficients: tuple[complex, ...] = ()

    def __post_init__(self):
        if self.kind not in ("eigenstate", "coherent", "superposition"):
            raise ConfigurationError(f"unknown state kind {self.kind!r}")
        if self.kind == "eigenstate" and (self.n < 0 or int(self.n) != self.n):
            raise ConfigurationError(f"bad eigenstate index {self.n}")
        if self.kind == "coherent" and abs(self.alpha) > 3.0:
            raise ConfigurationError(f"|alpha| must be <= 3, got {abs(self.alpha):.4g}")
        if self.kind == "superposition":
            coeffs = tuple(complex(c) for c in self.coefficients)
            if not coeffs:
                raise ConfigurationError("superposition needs coefficients")
            total = sum(abs(c) ** 2 for c in coeffs)
            if abs(total - 1.0) > 1e-12:
                raise ConfigurationError(
                    f"superposition weights sum to {total!r}, not 1")
            object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def eigen(cls, n: int) -> StateSpec:
        return cls("eigenstate", n=n)

    @classmethod
    def coherent(cls, alpha: complex) -> StateSpec:
        return cls("coherent", alpha=complex(alpha))

    @classmethod
    def superposition(cls, coefficients) -> StateSpec:
        return cls("superposition", coefficients=tuple(coefficients))

    @classmethod
    def parse(cls, text: str) -> StateSpec:
        kind, sep, arg = str(text).partition(":")
        kind = kind.strip()
        if not sep:
            raise ConfigurationError(f"state must look like 'kind:arg', got {text!r}")
        if kind == "eigenstate":
            try:
                return cls.eigen(int(arg))
            except ValueError as exc:
                raise ConfigurationError(f"bad eigenstate index in {text!r}") from exc
        if kind == "coherent":
            return cls.coherent(parse_complex(arg))
        if kind == "superposition":
            body = arg.strip()
            if not (body.startswith("[") and body.endswith("]")):
                raise ConfigurationError(f"superposition needs [c0,c1,...], got {arg!r}")
            items = [s for s in body[1:-1].split(",") if s.strip()]
            return cls.superposition(parse_complex(s) for s in items)
        raise ConfigurationError(f"unknown state kind {kind!r}")

    def __str__(self) -> str:
        if self.kind == "eigenstate":
            return f"eigenstate:{self.n}"
        if self.kind == "coherent":
            return f"coherent:{format_complex(self.alpha)}"
        return "superposition:[" + ",".join(format_complex(c) for c in self.coefficients) + "]"

    def eigen_coefficients(self) -> np.ndarray:
        """Amplitudes in the oscillator eigenbasis."""
        if self.kind == "eigenstate":
            c = np.zeros(self.n + 1, dtype=complex)
            c[self.n] = 1.0
            return c
        if self.kind == "coherent":
            return coherent_coefficients(self.alpha)
        return np.array(self.coefficients, dtype=complex)


def build_state(spec: StateSpec, params: OscillatorParams, grid: Grid) -> Wavefunction:
    if spec.kind == "eigenstate":
        return eigenstate(spec.n, params, grid)
    coeffs = spec.eigen_coefficients()
    basis = hermite_functions(len(coeffs) - 1, grid.x, params)
    amps = coeffs @ basis
    _check_edges(amps, str(spec))
    return Wavefunction(grid, amps, 0.0).normalized()
