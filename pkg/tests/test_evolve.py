import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from conftest import random_state
from qreduct import _dynamics
from qreduct.errors import DegenerateNetworkError, InfeasibleError, RegisterError
from qreduct.evolve import (
    DriveSchedule,
    EvolutionConfig,
    constrained_step,
    feasible_subspace,
    measure,
    oracle_sweep,
    plan_preparation,
    run_evolution,
    solve_sat,
)
from qreduct.hilbert import DensityMatrix, StateVector, Subspace, distance
from qreduct.network import BooleanNetwork, fig4_network, table_gate, verify_solution
from qreduct.transmission import DriveRotation, Transmission

SOLUTION = {"t": 1, "u": 1, "v": 1, "r": 0, "s": 1}


def _rho(node, p1):
    return DensityMatrix.diagonal((node,), [1 - p1, p1])


def test_schedule_validation():
    with pytest.raises(ValueError):
        DriveSchedule((DriveRotation("a"),), (("a", 1),))
    with pytest.raises(ValueError):
        DriveSchedule(holds=(("a", 2),))
    assert DriveSchedule().horizon == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(steps=0)
    with pytest.raises(ValueError):
        EvolutionConfig(residual_tol=0)


def test_feasible_subspace_of_fig4():
    sub = feasible_subspace(fig4_network())
    assert sub.dim == 4
    degenerate = BooleanNetwork(("a", "b"), gates=(table_gate(("a", "b"), ("00", "11")),),
                                wires=(Transmission("a", "b"),))
    with pytest.raises(DegenerateNetworkError) as exc:
        feasible_subspace(degenerate)
    assert exc.value.residual == 1.0


def test_constrained_step_basic():
    reg = ("a", "b")
    sub = Subspace.from_kets(reg, ["01", "10"])
    prev = StateVector.basis(reg, "01")
    new = constrained_step(prev, {"a": _rho("a", 0.25)}, sub)
    assert new.amplitude("01") == pytest.approx(math.sqrt(0.75))
    assert new.amplitude("10") == pytest.approx(0.5)
    with pytest.raises(InfeasibleError) as exc:
        constrained_step(prev, {"a": _rho("a", 0.25), "b": _rho("b", 0.25)}, sub)
    assert exc.value.residual > 1e-9
    with pytest.raises(RegisterError):
        constrained_step(prev, {"a": _rho("b", 0.5)}, sub)
    with pytest.raises(ValueError):
        constrained_step(StateVector.basis(reg, "11"), {"a": _rho("a", 0.5)}, sub)


def _amplitude_space_optimum(prev, sub, positions, p_one, n, starts=8):
    # independent route: optimize real magnitudes of every ket from several starts
    kets = sub.kets
    bits = (kets[:, None] >> (n - 1 - np.asarray(positions))[None, :]) & 1
    a = np.abs(sub.coordinates(prev))
    cons = [{"type": "eq", "fun": lambda y: np.sum(y * y) - 1}]
    for j, p in enumerate(p_one):
        cons.append({"type": "eq", "fun": lambda y, j=j, p=p: np.sum(y * y * bits[:, j]) - p})
    rng = np.random.default_rng(0)
    best = np.inf
    for _ in range(starts):
        res = minimize(lambda y: np.sum((y - a) ** 2), rng.uniform(0, 1, len(kets)), method="SLSQP",
                       bounds=[(0, 1)] * len(kets), constraints=cons, options={"ftol": 1e-14, "maxiter": 1000})
        if res.success and max(abs(c["fun"](res.x)) for c in cons) < 1e-8:
            best = min(best, math.sqrt(res.fun))
    return best


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_constrained_step_is_closest(seed):
    rng = np.random.default_rng(seed)
    reg = ("a", "b", "c")
    kets = rng.choice(8, size=5, replace=False)
    sub = Subspace(reg, kets=kets)
    prev = sub.embed(np.abs(random_state(rng, 5)))
    target = sub.embed(np.abs(random_state(rng, 5)))  # guarantees feasibility
    pops = {x: float(np.sum(np.abs(target.amplitudes) ** 2 * ((np.arange(8) >> (2 - i)) & 1)))
            for i, x in enumerate(reg[:2])}
    new = constrained_step(prev, {x: _rho(x, p) for x, p in pops.items()}, sub)
    for i, (x, p) in enumerate(pops.items()):
        got = np.sum(np.abs(new.amplitudes) ** 2 * ((np.arange(8) >> (2 - i)) & 1))
        assert got == pytest.approx(p, abs=1e-9)
    oracle = _amplitude_space_optimum(prev, sub, [0, 1], list(pops.values()), 3)
    assert distance(prev, new) <= oracle + 1e-6


def test_fig4_run_matches_sin_cos_law():
    net = fig4_network()
    sched = DriveSchedule((DriveRotation("s", 0.0, 1.0, math.pi / 2, from_bit=0),), (("u", 1),))
    tr = run_evolution(net, sched, EvolutionConfig(steps=2000))
    assert tr.feasible
    for i in range(0, 2001, 250):
        phi = tr.phis[i]
        amps = tr.amplitudes_by_bits(i)
        assert abs(amps.get("01010", 0) - math.cos(phi)) < 1e-9
        assert abs(amps.get("11101", 0) - math.sin(phi)) < 1e-9
    assert abs(tr.final.amplitude("11101")) ** 2 > 1 - 1e-9


def test_run_evolution_rejects_bad_inputs():
    net = fig4_network()
    with pytest.raises(RegisterError):
        run_evolution(net, DriveSchedule(holds=(("zz", 1),)))
    with pytest.raises(ValueError):
        run_evolution(net, DriveSchedule(), initial={"t": 0, "u": 0, "v": 0, "r": 0, "s": 0})


def test_measure_is_seeded_and_born_distributed():
    reg = ("a", "b")
    v = StateVector.from_dict(reg, {"01": math.sqrt(0.3), "10": math.sqrt(0.7)})
    assert measure(v, 5) == measure(v, 5)
    hits = sum(measure(v, s)["a"] for s in range(2000))
    assert abs(hits / 2000 - 0.7) < 0.05


def test_solve_sat_fig4():
    v = solve_sat(fig4_network())
    assert v.satisfied and v.witness == SOLUTION
    assert v.diagnostics["driven"] == ["s"] and v.diagnostics["held"] == ["u"]


def test_contradiction_is_unsatisfiable():
    net = BooleanNetwork(("a", "b"), wires=(Transmission("a", "b"),), pins={"a": 0, "b": 0})
    v = solve_sat(net)
    assert v.kind == "unsatisfiable"
    assert v.diagnostics["max_residual"] > 1e-9
    assert v.diagnostics["halted_step"] == 1


def test_permissive_mode_completes_but_still_fails_verification():
    net = BooleanNetwork(("a", "b"), wires=(Transmission("a", "b"),), pins={"a": 0, "b": 0})
    v = solve_sat(net, EvolutionConfig(steps=50, permissive=True))
    assert v.kind == "unsatisfiable"
    assert len(v.trace) == 51
    assert v.diagnostics["reason"] == "measured assignment is not a solution"


def test_degenerate_network_verdict():
    net = BooleanNetwork(("a", "b"), gates=(table_gate(("a", "b"), ("00", "11")),),
                         wires=(Transmission("a", "b"),))
    v = solve_sat(net)
    assert v.kind == "unsatisfiable" and v.diagnostics["max_residual"] == 1.0


def test_preparation_fallback_when_propagation_conflicts():
    wires = (Transmission("a", "b"), Transmission("c", "b"))
    net = BooleanNetwork(("a", "b", "c"), wires=wires, pins={"c": 1})
    prepared, forced = plan_preparation(net)
    assert prepared == {"a": 1, "b": 0, "c": 1} and forced == []
    assert solve_sat(net).witness == prepared
    clash = net.with_pins({"a": 1, "c": 0})
    prepared, forced = plan_preparation(clash)
    assert len(forced) == 1
    assert solve_sat(clash).kind == "unsatisfiable"


def test_free_values_steer_the_witness():
    net = BooleanNetwork(("a", "b"), wires=(Transmission("a", "b"),))
    assert solve_sat(net, free_values={"a": 1}).witness == {"a": 1, "b": 0}
    assert verify_solution(net, solve_sat(net).witness)


def test_oracle_sweep_parallel_merge_is_deterministic():
    cfg = EvolutionConfig(steps=8)
    serial = oracle_sweep(3, cfg, workers=1)
    parallel = oracle_sweep(3, cfg, workers=2)
    assert serial == parallel
    assert all(r["verdict"] == r["oracle"] for r in serial)


def test_integrate_halts_on_infeasible_initial_state():
    tr = _dynamics.integrate(("a",), np.array([0, 1]), np.array([1, 0]), [0], [[1.0], [1.0]], [0, 1])
    assert not tr.feasible and tr.halted_at == 0 and tr.halt_residual > 0.5
