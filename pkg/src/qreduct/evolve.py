"""Projection-shaped evolution of a whole network state, and SAT decisions with it.

The network state lives in the span of its consistent kets (every gate and
every wire satisfied).  Boundary qubits are driven or held through their
reduced density matrices; each finite step picks the closest state meeting all
prescriptions, and an impossible prescription halts the run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _dynamics
from ._dynamics import EvolutionTrace
from .errors import DegenerateNetworkError, InfeasibleError, PropagationConflict, RegisterError
from .hilbert import DensityMatrix, StateVector, Subspace
from .network import (
    Assignment,
    BooleanNetwork,
    classical_propagate,
    consistent_kets,
    ket_assignment,
    network_to_dict,
    small_networks,
    verify_solution,
)
from .transmission import DriveRotation

__all__ = [
    "DriveSchedule", "EvolutionConfig", "EvolutionTrace", "SatVerdict", "constrained_step",
    "feasible_subspace", "measure", "oracle_sweep", "plan_preparation", "run_evolution", "solve_sat",
]


@dataclass(frozen=True)
class DriveSchedule:
    rotations: tuple[DriveRotation, ...] = ()
    holds: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(self.rotations))
        object.__setattr__(self, "holds", tuple((x, int(b)) for x, b in self.holds))
        driven = [r.node for r in self.rotations]
        held = [x for x, _ in self.holds]
        if len(set(driven)) != len(driven) or len(set(held)) != len(held):
            raise ValueError("a node may be scheduled only once")
        if set(driven) & set(held):
            raise ValueError(f"nodes {sorted(set(driven) & set(held))} are both driven and held")
        if any(b not in (0, 1) for _, b in self.holds):
            raise ValueError("held values must be bits")

    @property
    def horizon(self) -> float:
        return max((r.duration for r in self.rotations), default=0.0)


@dataclass(frozen=True)
class EvolutionConfig:
    steps: int = 2000
    residual_tol: float = 1e-9
    amplitude_floor: float = 1e-12
    seed: int = 0
    permissive: bool = False
    cap: int | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.residual_tol <= 0 or self.amplitude_floor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SatVerdict:
    kind: str
    witness: Assignment | None = None
    diagnostics: dict = field(default_factory=dict)
    trace: EvolutionTrace | None = field(default=None, repr=False, compare=False)

    @property
    def satisfied(self) -> bool:
        return self.kind == "satisfied"


def feasible_subspace(net: BooleanNetwork, cap: int | None = None) -> Subspace:
    """Simultaneous +1 eigenspace of every gate and wire projector.

    Spanned by the kets of the consistent assignments with pins ignored.
    """
    kets = consistent_kets(net, respect_constraints=False, cap=cap)
    if kets.size == 0:
        raise DegenerateNetworkError("network has no consistent assignment", residual=1.0)
    return Subspace(net.nodes, kets=kets)


def _p_one(node: str, rho: DensityMatrix) -> float:
    if rho.register != (node,):
        raise RegisterError(f"target for {node!r} is on {rho.register}")
    return float(rho.entries[1, 1].real)


def constrained_step(prev: StateVector, targets: Mapping[str, DensityMatrix], sub: Subspace,
                     tol: float = 1e-9, floor: float = 1e-12) -> StateVector:
    """Closest unit vector of ``sub`` to ``prev`` meeting every node target.

    Targets prescribe the diagonal of single-node reduced density matrices.
    Raises :class:`InfeasibleError` (with ``residual``) when the best
    least-squares fit misses them by more than ``tol``.
    """
    if sub.kets is None:
        raise ValueError("constrained_step needs a subspace spanned by basis kets")
    if prev.register != sub.register:
        raise RegisterError(f"state register {prev.register} does not match {sub.register}")
    if not sub.contains(prev, 1e-10):
        raise ValueError("previous state is not inside the subspace")
    nodes = list(targets)
    positions = [prev.register.index(x) for x in nodes]
    solver = _dynamics.CellSolver(prev.n, sub.kets, positions, floor, tol)
    coords, res = solver.step(sub.coordinates(prev), [_p_one(x, targets[x]) for x in nodes])
    if res > tol:
        raise InfeasibleError(f"constraints cannot be met (residual {res:.3g})", res)
    return sub.embed(coords)


def run_evolution(net: BooleanNetwork, schedule: DriveSchedule, cfg: EvolutionConfig = EvolutionConfig(),
                  initial: StateVector | Mapping[str, int] | None = None) -> EvolutionTrace:
    """Iterate constrained steps over the schedule, from 0 to its horizon.

    ``initial`` defaults to the propagated preparation of the network's inputs
    (pinned values, free inputs at 0).  An impossible step halts the run with
    ``feasible=False``, unless ``cfg.permissive`` asks to keep going with the
    best least-squares fit.
    """
    sub = feasible_subspace(net, cfg.cap)
    for x in [r.node for r in schedule.rotations] + [x for x, _ in schedule.holds]:
        if x not in net.nodes:
            raise RegisterError(f"scheduled node {x!r} is not in the network")
    if initial is None:
        initial = plan_preparation(net)[0]
    if isinstance(initial, Mapping):
        initial = StateVector.basis(net.nodes, initial)
    if initial.register != net.nodes or not initial.is_normalized(1e-10):
        raise ValueError("initial state must be a normalized state of the network register")
    coords = sub.coordinates(initial)
    if abs(np.vdot(coords, coords).real - 1.0) > 1e-10:
        raise ValueError("initial state leaves the feasible subspace")
    horizon = schedule.horizon
    times = np.linspace(0.0, horizon, cfg.steps + 1) if horizon > 0 else np.zeros(1)
    nodes = [x for x, _ in schedule.holds] + [r.node for r in schedule.rotations]
    positions = [net.position(x) for x in nodes]
    p_one = np.array([[float(b) for _, b in schedule.holds] + [r.p_one(t) for r in schedule.rotations]
                      for t in times]).reshape(len(times), len(nodes))
    if schedule.rotations:
        lead = schedule.rotations[0]
        phis = np.array([lead.angle(t) - lead.theta0 for t in times])
    else:
        phis = times
    return _dynamics.integrate(net.nodes, sub.kets, coords, positions, p_one, phis,
                               tol=cfg.residual_tol, floor=cfg.amplitude_floor,
                               permissive=cfg.permissive)


def measure(state: StateVector, seed: int) -> Assignment:
    """Sample a basis assignment with Born probabilities; deterministic per seed."""
    probs = np.abs(state.amplitudes) ** 2
    support = np.flatnonzero(probs)
    if support.size == 0:
        raise ValueError("cannot measure a zero vector")
    rng = np.random.default_rng(seed)
    index = rng.choice(support, p=probs[support] / probs[support].sum())
    bits = format(int(index), f"0{state.n}b")
    return {x: int(b) for x, b in zip(state.register, bits)}


def plan_preparation(net: BooleanNetwork, free_values: Mapping[str, int] | None = None,
                     kets=None) -> tuple[Assignment, list[str]]:
    """Choose the single-ket starting state of a SAT run.

    Pinned inputs take their pin, free inputs ``free_values`` (default 0), and
    the rest follows by classical propagation.  When propagation does not
    settle (loops, reconvergent wires), the consistent ket that agrees with
    the pinned inputs and best matches the free values is used.  If no
    consistent ket agrees with the pinned inputs, the returned list names the
    pinned nodes whose prepared value differs from their pin (these must then
    be driven rather than held).
    """
    free_values = dict(free_values or {})
    inputs = net.input_nodes()
    seed = {x: net.pins[x] if x in net.pins else int(free_values.get(x, 0)) for x in inputs}
    try:
        prepared = classical_propagate(net, seed)
    except PropagationConflict:
        prepared = None
    if prepared is not None:
        return prepared, []
    if kets is None:
        kets = consistent_kets(net, respect_constraints=False)
    if len(kets) == 0:
        raise DegenerateNetworkError("network has no consistent assignment", residual=1.0)
    pinned_inputs = [x for x in inputs if x in net.pins]
    free = [x for x in inputs if x not in net.pins]

    def rank(k):
        a = ket_assignment(net, k)
        pin_miss = sum(a[x] != net.pins[x] for x in pinned_inputs)
        free_miss = sum(a[x] != int(free_values.get(x, 0)) for x in free)
        return (pin_miss, free_miss, int(k))

    best = ket_assignment(net, min(kets, key=rank))
    return best, [x for x in pinned_inputs if best[x] != net.pins[x]]


def sat_schedule(net: BooleanNetwork, prepared: Mapping[str, int]) -> DriveSchedule:
    """Hold pins already met by the preparation; drive the others a quarter turn."""
    holds = [(x, b) for x, b in net.pins.items() if prepared[x] == b]
    drives = [DriveRotation(x, 0.0, 1.0, math.pi / 2, from_bit=prepared[x])
              for x, b in net.pins.items() if prepared[x] != b]
    return DriveSchedule(tuple(drives), tuple(holds))


def solve_sat(net: BooleanNetwork, cfg: EvolutionConfig = EvolutionConfig(),
              free_values: Mapping[str, int] | None = None) -> SatVerdict:
    """Decide satisfiability by driving the mismatched pins under projection.

    A run that stays feasible ends on solution kets only; the measured witness
    is then checked classically.  An impossible step gives ``unsatisfiable``
    with the residual that exposed it.
    """
    try:
        kets = consistent_kets(net, respect_constraints=False, cap=cfg.cap)
        if kets.size == 0:
            raise DegenerateNetworkError("network has no consistent assignment", residual=1.0)
        prepared, forced = plan_preparation(net, free_values, kets)
    except DegenerateNetworkError as exc:
        return SatVerdict("unsatisfiable", None, {
            "reason": "no consistent assignment even without pins",
            "max_residual": exc.residual, "halted_step": 0, "halt_phi": 0.0, "feasible_dim": 0,
        })
    schedule = sat_schedule(net, prepared)
    trace = run_evolution(net, schedule, cfg, initial=prepared)
    diagnostics = {
        "prepared": dict(prepared),
        "held": [x for x, _ in schedule.holds],
        "driven": [r.node for r in schedule.rotations],
        "forced_inputs": forced,
        "feasible_dim": int(trace.kets.size),
        "max_residual": trace.max_residual,
        "halted_step": trace.halted_at,
        "halt_phi": trace.halt_phi,
    }
    if not trace.feasible and not cfg.permissive:
        diagnostics["reason"] = "constraint system became impossible"
        return SatVerdict("unsatisfiable", None, diagnostics, trace)
    measured = measure(trace.final, cfg.seed)
    diagnostics["measured"] = measured
    if verify_solution(net, measured):
        return SatVerdict("satisfied", measured, diagnostics, trace)
    diagnostics["reason"] = "measured assignment is not a solution"
    return SatVerdict("unsatisfiable", None, diagnostics, trace)


def _sweep_row(index: int, net: BooleanNetwork, cfg: EvolutionConfig) -> dict:
    oracle = bool(consistent_kets(net, respect_constraints=True, cap=cfg.cap).size)
    verdict = solve_sat(net, cfg)
    d = verdict.diagnostics
    return {
        "index": index,
        "network": network_to_dict(net),
        "oracle": "satisfied" if oracle else "unsatisfiable",
        "verdict": verdict.kind,
        "witness_ok": verdict.satisfied and verify_solution(net, verdict.witness),
        "residual": float(d.get("max_residual", 0.0)),
        "halted_step": d.get("halted_step"),
    }


def _sweep_chunk(args) -> list[dict]:
    max_nodes, cfg, worker, workers = args
    return [_sweep_row(i, net, cfg) for i, net in enumerate(small_networks(max_nodes)) if i % workers == worker]


def oracle_sweep(max_nodes: int = 5, cfg: EvolutionConfig = EvolutionConfig(steps=16),
                 workers: int = 1) -> list[dict]:
    """solve_sat against brute-force enumeration on every small network.

    Rows come back in enumeration order whatever the number of workers.
    """
    jobs = [(max_nodes, cfg, w, workers) for w in range(workers)]
    if workers == 1:
        rows = _sweep_chunk(jobs[0])
    else:
        with ProcessPoolExecutor(workers) as pool:
            rows = [r for chunk in pool.map(_sweep_chunk, jobs) for r in chunk]
    return sorted(rows, key=lambda r: r["index"])
