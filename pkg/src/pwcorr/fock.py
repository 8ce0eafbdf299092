"""Dense truncated-eigenbasis oracle for the harmonic oscillator.

Everything here is built from ladder-operator matrix elements only; no grid
or time stepping is involved, which is what makes it useful as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TruncationError
from .oscillator import OscillatorParams

TAIL_MARGIN = 2


@dataclass(frozen=True, eq=False)
class FockOperators:
    dimension: int
    q_matrix: np.ndarray
    p_matrix: np.ndarray
    h_matrix: np.ndarray
    params: OscillatorParams

    @property
    def energies(self) -> np.ndarray:
        return np.real(np.diag(self.h_matrix))


def annihilator(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def build_fock_operators(N: int, params: OscillatorParams | None = None) -> FockOperators:
    params = params or OscillatorParams()
    if int(N) != N or N < 2:
        raise ConfigurationError(f"Fock dimension must be an integer >= 2, got {N}")
    N = int(N)
    a = annihilator(N)
    ad = a.conj().T
    m, w, hb = params.mass, params.omega, params.hbar
    q = np.sqrt(hb / (2 * m * w)) * (a + ad)
    p = 1j * np.sqrt(hb * m * w / 2) * (ad - a)
    h = np.diag(hb * w * (np.arange(N) + 0.5)).astype(complex)
    return FockOperators(N, q, p, h, params)


def heisenberg_operator(which: str, t: float, ops: FockOperators) -> np.ndarray:
    """exp(iHt/hbar) A exp(-iHt/hbar), done as an elementwise phase since H is diagonal."""
    if which == "position":
        a = ops.q_matrix
    elif which == "momentum":
        a = ops.p_matrix
    else:
        raise ConfigurationError(f"unknown operator {which!r}")
    e = ops.energies
    phases = np.exp(1j * np.subtract.outer(e, e) * t / ops.params.hbar)
    return a * phases


def _padded(coeffs, ops: FockOperators) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size > ops.dimension:
        raise TruncationError(
            f"{c.size} coefficients do not fit in dimension {ops.dimension}")
    out = np.zeros(ops.dimension, dtype=complex)
    out[: c.size] = c
    if np.any(out[ops.dimension - TAIL_MARGIN:] != 0):
        raise TruncationError(
            f"state occupies the top {TAIL_MARGIN} levels of a "
            f"{ops.dimension}-level truncation; increase N")
    return out


def oracle_expectation(coeffs, which: str, t: float, ops: FockOperators) -> complex:
    c = _padded(coeffs, ops)
    return complex(c.conj() @ heisenberg_operator(which, t, ops) @ c)


def oracle_two_time_correlation(coeffs, s: float, t: float,
                                ops: FockOperators) -> complex:
    """<c| q(s) q(t) |c>."""
    c = _padded(coeffs, ops)
    qs = heisenberg_operator("position", s, ops)
    qt = heisenberg_operator("position", t, ops)
    return complex(c.conj() @ (qs @ (qt @ c)))
