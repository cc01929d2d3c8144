"""Finite-increment solver for "drive some reduced states, stay in a ket subspace".

The feasible states are spanned by basis kets.  A step prescribes the diagonal
of the reduced density matrix of a few scheduled nodes; since every feasible
ket has a definite bit on each scheduled node, those prescriptions only
constrain the total probability of each *cell* (set of kets sharing the same
scheduled bits).  A step therefore

1. solves the cell masses by nonnegative least squares; a residual above
   tolerance means the constraint system is impossible,
2. picks, among the feasible mass vectors, the one closest to the previous
   state (unique in most cases; otherwise a small smooth optimization),
3. rescales amplitudes inside each cell, keeping their phases.  Cells that are
   born from zero weight take the phase of the previous dominant amplitude.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize, nnls

from . import _kernels
from .hilbert import StateVector, index_to_bits

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """Time-indexed states of a constrained evolution.

    States are stored as coordinates over ``kets`` (indices into the full
    register basis); use :meth:`state` for a dense :class:`StateVector`.
    ``residuals[i]`` is the least-squares residual of the constraint system
    solved for state ``i``.  When the run stopped on an impossible step,
    ``halted_at`` is that step's index and ``halt_residual`` its residual.
    """

    register: tuple[str, ...]
    kets: np.ndarray
    phis: np.ndarray
    coords: np.ndarray
    residuals: np.ndarray
    feasible: bool = True
    halted_at: int | None = None
    halt_residual: float = 0.0
    halt_phi: float | None = None
    steps: int = 0

    def __len__(self):
        return len(self.phis)

    def state(self, i: int) -> StateVector:
        amps = np.zeros(2 ** len(self.register), dtype=complex)
        amps[self.kets] = self.coords[i]
        return StateVector(self.register, amps)

    @property
    def final(self) -> StateVector:
        return self.state(len(self) - 1)

    @property
    def states(self) -> list[StateVector]:
        return [self.state(i) for i in range(len(self))]

    @property
    def max_residual(self) -> float:
        worst = float(self.residuals.max(initial=0.0))
        return max(worst, self.halt_residual)

    def populations(self, i: int) -> np.ndarray:
        """P(node reads 1) for every register node, at record ``i``."""
        return _kernels.bit_populations(self.coords[i], self.kets, len(self.register))

    def amplitudes_by_bits(self, i: int, floor: float = 0.0) -> dict[str, complex]:
        n = len(self.register)
        return {
            index_to_bits(int(k), n): complex(a)
            for k, a in zip(self.kets, self.coords[i])
            if abs(a) > floor
        }


def reference_phase(coords) -> complex:
    """Phase of the largest-magnitude amplitude (lowest index on ties)."""
    coords = np.asarray(coords)
    if coords.size == 0:
        return 1.0 + 0j
    a = coords[int(np.argmax(np.abs(coords)))]
    return a / abs(a) if abs(a) > 0 else 1.0 + 0j


_SURE = 1e-20


def _exact_pinv(a) -> np.ndarray:
    """(A^T A)^-1 A^T in rational arithmetic, for a full-column-rank 0/1 matrix."""
    rows, cols = a.shape
    A = [[Fraction(int(round(a[i, j]))) for j in range(cols)] for i in range(rows)]
    g = [[sum(A[k][i] * A[k][j] for k in range(rows)) for j in range(cols)] + [A[k][i] for k in range(rows)]
         for i in range(cols)]
    for c in range(cols):
        piv = next(r for r in range(c, cols) if g[r][c] != 0)
        g[c], g[piv] = g[piv], g[c]
        inv = 1 / g[c][c]
        g[c] = [v * inv for v in g[c]]
        for r in range(cols):
            if r != c and g[r][c] != 0:
                f = g[r][c]
                g[r] = [v - f * w for v, w in zip(g[r], g[c])]
    return np.array([[float(v) for v in row[cols:]] for row in g])


class CellSolver:
    """Per-step solver for one (register, kets, scheduled nodes) combination.

    ``positions`` are register positions of the scheduled nodes.  Targets are
    given per step as an array of P(node reads 1), aligned with ``positions``.
    """

    def __init__(self, n: int, kets, positions, floor: float = 1e-12, tol: float = 1e-9):
        self.n = n
        self.tol = tol
        self.kets = np.asarray(kets, dtype=np.int64)
        self.positions = np.asarray(positions, dtype=np.int64)
        self.floor = floor
        if self.kets.size:
            bits = (self.kets[:, None] >> (n - 1 - self.positions[None, :])) & 1
            cells, cell_of = np.unique(bits, axis=0, return_inverse=True)
        else:
            cells = np.zeros((0, self.positions.size), dtype=np.int64)
            cell_of = np.zeros(0, dtype=np.int64)
        self.cells = cells
        self.cell_of = np.asarray(cell_of, dtype=np.int64).reshape(-1)
        self.matrix = np.vstack([np.ones(len(cells)), cells.T.astype(float)])
        self._inverse_cache = {}

    def rhs(self, p_one) -> np.ndarray:
        return np.concatenate([[1.0], np.asarray(p_one, dtype=float)])

    def residual(self, coords, p_one) -> float:
        """Population residual of an existing state against the targets."""
        mass = np.bincount(self.cell_of, weights=np.abs(coords) ** 2, minlength=len(self.cells))
        return float(np.linalg.norm(self.matrix @ mass - self.rhs(p_one)))

    def _active(self, p_one) -> np.ndarray:
        # a target of exactly 0 or 1 rules out every cell reading the other bit
        p = np.asarray(p_one, dtype=float)
        sure = (p <= _SURE) | (p >= 1.0 - _SURE)
        want = (p >= 0.5).astype(np.int64)
        return np.all((self.cells == want[None, :]) | ~sure[None, :], axis=1)

    def _left_inverse(self, active):
        """Exact left inverse of the active constraint columns, or None if not unique."""
        key = active.tobytes()
        if key not in self._inverse_cache:
            sub = self.matrix[:, active]
            unique = np.linalg.matrix_rank(sub) == sub.shape[1]
            self._inverse_cache[key] = _exact_pinv(sub) if unique else None
        return self._inverse_cache[key]

    def masses(self, prev, p_one):
        """Best cell masses for the targets and their least-squares residual."""
        m = self.rhs(p_one)
        if not len(self.cells):
            return np.zeros(0), float(np.linalg.norm(m))
        active = self._active(p_one)
        x = np.zeros(len(self.cells))
        if not active.any():
            x, res = nnls(self.matrix, m)
            return x, float(res)
        x[active], res = nnls(self.matrix[:, active], m)
        if res > self.tol:
            return x, float(res)
        left = self._left_inverse(active)
        if left is not None:
            # same solution, without the cancellation that blurs tiny masses
            x[active] = np.clip(left @ m, 0.0, None)
            return x, float(res)
        weights = np.bincount(self.cell_of, weights=np.abs(prev) ** 2, minlength=len(self.cells))
        y = np.zeros(len(self.cells))
        y[active] = self._closest_masses(np.sqrt(weights[active]), x[active], m, active)
        return y, float(res)

    def _closest_masses(self, prev_norms, x0, m, active):
        # With |y| = 1 fixed, min |y - prev_norms| is max sum prev_norms * sqrt(x)
        # over masses x on the constraint polytope: a concave program.  The
        # small quadratic term spreads mass evenly over cells the objective
        # does not see (previously empty ones).
        full = self.matrix[:, active]
        u, sv, _ = np.linalg.svd(full, full_matrices=False)
        rows = u[:, sv > 1e-10 * max(1.0, sv.max(initial=0.0))]
        a = rows.T @ full
        b = rows.T @ m
        eps, tau = 1e-14, 1e-6

        def f(x):
            return float(-prev_norms @ np.sqrt(x + eps) + tau * x @ x)

        def grad(x):
            return -prev_norms / (2.0 * np.sqrt(x + eps)) + 2.0 * tau * x

        # start from the previous masses pushed onto the polytope, which stays
        # off the vertices where the square-root gradient blows up
        w = 1e4
        start, _ = nnls(np.vstack([w * full, np.eye(full.shape[1])]), np.concatenate([w * m, prev_norms**2]))
        start = np.clip(start + np.linalg.lstsq(full, m - full @ start, rcond=None)[0], 0.0, None)
        res = minimize(
            f, start, jac=grad, method="SLSQP",
            bounds=[(0.0, 1.0)] * len(prev_norms),
            constraints=[{"type": "eq", "fun": lambda x: a @ x - b, "jac": lambda x: a}],
            options={"ftol": 1e-15, "maxiter": 500},
        )
        mass = np.clip(res.x, 0.0, None)
        # polish: minimum-norm correction back onto the constraint plane
        mass = np.clip(mass + np.linalg.lstsq(full, m - full @ mass, rcond=None)[0], 0.0, None)
        if np.linalg.norm(full @ mass - m) > 1e-11 or f(mass) > f(np.clip(x0, 0.0, None)) + 1e-12:
            log.warning("closest-mass optimization did not converge (%s); using NNLS masses", res.message)
            return x0
        return mass

    def step(self, prev, p_one):
        """New coordinates and the residual of the constraint system."""
        prev = np.asarray(prev, dtype=complex)
        mass, res = self.masses(prev, p_one)
        if not len(self.cells):
            return prev.copy(), res
        if mass.sum() <= 0:
            return prev.copy(), res
        coords = _kernels.cell_rescale(prev, self.cell_of, mass, reference_phase(prev), self.floor)
        norm = np.linalg.norm(coords)
        if norm > 0:
            coords = coords / norm
        return coords, res


def integrate(register, kets, initial, positions, p_one, phis, tol=1e-9, floor=1e-12, permissive=False):
    """Run the solver over a precomputed schedule of targets.

    ``p_one`` has shape ``(len(phis), len(positions))``; row 0 belongs to the
    initial state, which is checked rather than solved.
    """
    register = tuple(register)
    n = len(register)
    solver = CellSolver(n, kets, positions, floor, tol)
    p_one = np.asarray(p_one, dtype=float).reshape(len(phis), len(solver.positions))
    phis = np.asarray(phis, dtype=float)
    coords = [np.asarray(initial, dtype=complex)]
    residuals = [solver.residual(coords[0], p_one[0]) if solver.kets.size else 1.0]
    feasible = residuals[0] <= tol
    halted_at = None
    halt_residual = 0.0
    halt_phi = None
    if not feasible and not permissive:
        return EvolutionTrace(register, solver.kets, phis[:1], np.array(coords), np.array([0.0]),
                              False, 0, residuals[0], float(phis[0]), len(phis) - 1)
    for k in range(1, len(phis)):
        new, res = solver.step(coords[-1], p_one[k])
        if res > tol:
            feasible = False
            if not permissive:
                halted_at, halt_residual, halt_phi = k, res, float(phis[k])
                break
        coords.append(new)
        residuals.append(res)
    return EvolutionTrace(
        register=register,
        kets=solver.kets,
        phis=phis[: len(coords)],
        coords=np.array(coords).reshape(len(coords), solver.kets.size),
        residuals=np.array(residuals),
        feasible=feasible,
        halted_at=halted_at,
        halt_residual=halt_residual,
        halt_phi=halt_phi,
        steps=len(phis) - 1,
    )
