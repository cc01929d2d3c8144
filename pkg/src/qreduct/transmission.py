"""Two-qubit quantum transmission: a NOT constraint kept by continuous projection.

The allowed states of a transmission between nodes ``r`` and ``s`` are the
superpositions of ``|0>_r|1>_s`` and ``|1>_r|0>_s``.  Rotating the reduced
state of ``r`` while projecting onto that plane rotates the whole state, and
the rotation shows up, with its eigenvalues interchanged, on ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _dynamics
from ._dynamics import EvolutionTrace
from .errors import InfeasibleError, RegisterError
from .hilbert import DensityMatrix, LinearOperator, StateVector, Subspace

DEFAULT_STEPS_PER_QUARTER_TURN = 2000


@dataclass(frozen=True)
class Transmission:
    """A wire between nodes ``r`` and ``s`` (Boolean NOT between them)."""

    r: str
    s: str

    def __post_init__(self):
        if self.r == self.s:
            raise RegisterError(f"a transmission needs two distinct nodes, got {self.r!r} twice")

    @property
    def register(self) -> tuple[str, str]:
        return (self.r, self.s)


DEFAULT = Transmission("r", "s")


@dataclass(frozen=True)
class DriveRotation:
    """Prescribed rotation of one node's reduced density matrix.

    At time ``t`` the node reads ``from_bit`` with probability
    ``cos(theta0 + omega * t)**2``; the angle stops advancing after ``duration``.
    """

    node: str
    theta0: float = 0.0
    omega: float = 1.0
    duration: float = math.pi / 2
    from_bit: int = 0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("drive duration must be nonnegative")
        if self.from_bit not in (0, 1):
            raise ValueError("from_bit must be 0 or 1")

    def angle(self, t: float) -> float:
        return self.theta0 + self.omega * min(max(t, 0.0), self.duration)

    def p_one(self, t: float) -> float:
        """Probability that the node reads 1 at time ``t``."""
        a = self.angle(t)
        return math.sin(a) ** 2 if self.from_bit == 0 else math.cos(a) ** 2

    def target(self, t: float) -> DensityMatrix:
        p1 = self.p_one(t)
        return DensityMatrix.diagonal((self.node,), [1.0 - p1, p1])


def default_steps(phi_total: float) -> int:
    return max(1, math.ceil(DEFAULT_STEPS_PER_QUARTER_TURN * abs(phi_total) / (math.pi / 2)))


def symmetric_subspace(t: Transmission = DEFAULT) -> Subspace:
    """span{|0>_r|1>_s, |1>_r|0>_s}."""
    return Subspace.from_kets(t.register, ["01", "10"])


def symmetrization_projector(t: Transmission = DEFAULT) -> LinearOperator:
    return symmetric_subspace(t).projector()


def initial_state(theta0: float, t: Transmission = DEFAULT) -> StateVector:
    return StateVector.from_dict(t.register, {"01": math.cos(theta0), "10": math.sin(theta0)})


def closed_form_state(theta0: float, phi: float, t: Transmission = DEFAULT) -> StateVector:
    """cos(theta0 + phi)|01> + sin(theta0 + phi)|10>."""
    return initial_state(theta0 + phi, t)


def driven_target(theta0: float, phi: float, node: str = "r") -> DensityMatrix:
    """diag(cos^2(theta0 + phi), sin^2(theta0 + phi)) on ``node``."""
    a = theta0 + phi
    return DensityMatrix.diagonal((node,), [math.cos(a) ** 2, math.sin(a) ** 2])


def _p_one(rho: DensityMatrix, node: str) -> float:
    if rho.register != (node,):
        raise RegisterError(f"target is on {rho.register}, expected ({node!r},)")
    return float(rho.entries[1, 1].real)


def transmission_step(prev: StateVector, target_rho: DensityMatrix, t: Transmission = DEFAULT,
                      target_rho_s: DensityMatrix | None = None, tol: float = 1e-9) -> StateVector:
    """One finite increment of the driven, projected transmission.

    Returns the unit vector in the symmetric plane whose reduced state on ``r``
    has the diagonal of ``target_rho`` and which is closest to ``prev``.  An
    extra target on ``s`` may be imposed; inconsistent targets raise
    :class:`InfeasibleError`.
    """
    if prev.register != t.register:
        raise RegisterError(f"state register {prev.register} does not match {t.register}")
    sub = symmetric_subspace(t)
    if not prev.is_normalized(1e-10) or not sub.contains(prev, 1e-10):
        raise ValueError("previous state must be normalized and inside the symmetric plane")
    positions, p_one = [0], [_p_one(target_rho, t.r)]
    if target_rho_s is not None:
        positions.append(1)
        p_one.append(_p_one(target_rho_s, t.s))
    solver = _dynamics.CellSolver(2, sub.kets, positions, tol=tol)
    coords, res = solver.step(sub.coordinates(prev), p_one)
    if res > tol:
        raise InfeasibleError(f"no symmetric state meets the targets (residual {res:.3g})", res)
    return sub.embed(coords)


def _run(theta0, rotations, steps, t, tol, permissive=False):
    sub = symmetric_subspace(t)
    horizon = max((rot.duration for rot in rotations), default=0.0)
    times = np.linspace(0.0, horizon, steps + 1)
    positions = [t.register.index(rot.node) for rot in rotations]
    p_one = [[rot.p_one(x) for rot in rotations] for x in times]
    phis = np.array([rotations[0].angle(x) - rotations[0].theta0 for x in times])
    init = sub.coordinates(initial_state(theta0, t))
    return _dynamics.integrate(t.register, sub.kets, init, positions, p_one, phis, tol=tol,
                               permissive=permissive)


def evolve_transmission(theta0: float, phi_total: float, steps: int | None = None,
                        t: Transmission = DEFAULT, mirror: bool = False,
                        tol: float = 1e-9) -> EvolutionTrace:
    """Drive ``r`` from angle ``theta0`` through ``phi_total`` under projection.

    ``mirror=True`` also prescribes the matching rotation of ``s``; the result
    is the same trace, since that condition is implied by the first.  The
    closest-state rule never flips the sign of an amplitude that passes through
    zero, so the trace follows cos/sin of ``theta0 + phi`` while that angle
    stays within ``[0, pi/2]``.
    """
    steps = default_steps(phi_total) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rotations = [DriveRotation(t.r, theta0, phi_total, 1.0, from_bit=0)]
    if mirror:
        rotations.append(DriveRotation(t.s, theta0, phi_total, 1.0, from_bit=1))
    trace = _run(theta0, rotations, steps, t, tol)
    if not trace.feasible:
        raise InfeasibleError("transmission drive became infeasible", trace.halt_residual, trace.halted_at)
    return trace


@dataclass(frozen=True)
class DriveVerdict:
    feasible: bool
    residual: float
    halted_at: int | None = None


def conflicting_drives(theta0: float, phi_r: float, phi_s: float, steps: int | None = None,
                       t: Transmission = DEFAULT, tol: float = 1e-9) -> DriveVerdict:
    """Rotate both ends at once, ``r`` by ``phi_r`` and ``s`` by ``phi_s``.

    Equal rotations are consistent; unequal ones give an impossible system,
    reported with the residual of the first step that cannot be met.
    """
    steps = default_steps(max(abs(phi_r), abs(phi_s))) if steps is None else int(steps)
    rotations = [
        DriveRotation(t.r, theta0, phi_r, 1.0, from_bit=0),
        DriveRotation(t.s, theta0, phi_s, 1.0, from_bit=1),
    ]
    trace = _run(theta0, rotations, steps, t, tol)
    return DriveVerdict(trace.feasible, trace.max_residual, trace.halted_at)


def global_unitary(phi: float, t: Transmission = DEFAULT) -> LinearOperator:
    """Whole-state unitary realized by rotating ``r`` by ``phi`` under projection.

    Acts as the rotation [[cos, -sin], [sin, cos]] on (|01>, |10>) and as the
    identity on |00>, |11>.
    """
    c, s = math.cos(phi), math.sin(phi)
    u = np.eye(4, dtype=complex)
    u[1, 1], u[1, 2] = c, -s
    u[2, 1], u[2, 2] = s, c
    return LinearOperator(t.register, u)
