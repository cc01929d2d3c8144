"""Exchange symmetry of two identical particles, read as a projection.

A two-particle register is split in half: the first half of the nodes encodes
particle 1 and the second half particle 2, so particles are qudits of
dimension ``2**(n/2)``.
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .errors import AnnihilatedError, RegisterError
from .hilbert import ZERO_NORM, LinearOperator, StateVector


def _particle_dim(register) -> int:
    n = len(register)
    if n == 0 or n % 2:
        raise RegisterError(f"a two-particle register needs an even number of nodes, got {n}")
    return 2 ** (n // 2)


def permutation_operator(register) -> LinearOperator:
    """P_12: swaps the two particles' halves of ``register``."""
    register = tuple(register)
    d = _particle_dim(register)
    p = np.eye(d * d).reshape(d, d, d, d).transpose(0, 1, 3, 2).reshape(d * d, d * d)
    return LinearOperator(register, p)


def _swap(v: StateVector) -> np.ndarray:
    d = _particle_dim(v.register)
    return v.amplitudes.reshape(d, d).T.reshape(-1)


def _project_exchange(v: StateVector, sign: int, name: str) -> StateVector:
    w = v.amplitudes + sign * _swap(v)
    norm = float(np.linalg.norm(w))
    if norm < ZERO_NORM * max(1.0, v.norm()):
        raise AnnihilatedError(f"{name} annihilates this state")
    return StateVector(v.register, w / norm)


def symmetrize(v: StateVector) -> StateVector:
    """Renormalized (1 + P_12) v."""
    return _project_exchange(v, +1, "symmetrization")


def antisymmetrize(v: StateVector) -> StateVector:
    """Renormalized (1 - P_12) v."""
    return _project_exchange(v, -1, "antisymmetrization")


def exchange_eigenvalue(v: StateVector) -> float:
    """<v|P_12|v> / <v|v>: +1 for symmetric, -1 for antisymmetric states."""
    return float(np.vdot(v.amplitudes, _swap(v)).real / np.vdot(v.amplitudes, v.amplitudes).real)


def watchdog_check(trajectory: Iterable[StateVector], op: LinearOperator) -> float:
    """Largest ``|op psi - psi|`` along a trajectory (0 means op fixes every state)."""
    worst = 0.0
    for psi in trajectory:
        if psi.register != op.register:
            raise RegisterError(f"state register {psi.register} does not match {op.register}")
        worst = max(worst, float(np.linalg.norm(op.matrix @ psi.amplitudes - psi.amplitudes)))
    return worst


def spatial_density(k: float, x: float, sector: str) -> float:
    """Relative weight of finding the pair at separation ``x``.

    ``cos(k x)**2`` for the spin singlet (symmetric spatial factor) and
    ``sin(k x)**2`` for the triplet, normalized so the two sectors sum to 1.
    Here ``k`` is *half* the wavenumber difference, ``(k_A - k_B) / 2``, and
    ``x = x_1 - x_2``; :func:`plane_wave_density` is the same quantity
    computed from the plane waves themselves.
    """
    if sector == "singlet":
        return math.cos(k * x) ** 2
    if sector == "triplet":
        return math.sin(k * x) ** 2
    raise ValueError(f"sector must be 'singlet' or 'triplet', not {sector!r}")


def plane_wave_density(k_a: float, k_b: float, x1: float, x2: float, sector: str) -> float:
    """|exp(i k_a x1) exp(i k_b x2) +- exp(i k_a x2) exp(i k_b x1)|**2 / 4."""
    sign = {"singlet": 1.0, "triplet": -1.0}.get(sector)
    if sign is None:
        raise ValueError(f"sector must be 'singlet' or 'triplet', not {sector!r}")
    psi = np.exp(1j * (k_a * x1 + k_b * x2)) + sign * np.exp(1j * (k_a * x2 + k_b * x1))
    return float(abs(psi) ** 2 / 4.0)
