"""Space-deployed reversible Boolean networks.

Gates are parts whose eigenstates list the rows of their truth table (inputs
and outputs coexist as qubits).  Wires are transmissions: a Boolean NOT between
their endpoints.  Pins fix boundary nodes to a bit; a network is satisfiable
when some assignment meets every gate, wire and pin at once.

JSON schema (``network_to_dict`` / ``network_from_dict``)::

    {
      "nodes": ["t", "u", "v", "r", "s"],
      "gates": [{"type": "cnot", "nodes": ["t", "u", "v", "r"]},
                {"table": ["01", "10"], "nodes": ["a", "b"], "inputs": 1}],
      "wires": [["r", "s"]],
      "pins": {"u": 1, "s": 1},
      "free_inputs": ["t"]
    }

``type`` is one of ``cnot``, ``not`` or ``toffoli``; otherwise ``table`` lists
the eigenstate bitstrings and ``inputs`` (optional) how many leading nodes are
gate inputs.  A wire ``[r, s]`` is oriented from ``r`` to ``s`` for the
purpose of classical propagation only.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import NetworkValidationError, PropagationConflict, RegisterError
from .hilbert import StateVector, Subspace, index_to_bits
from .transmission import Transmission

DEFAULT_CAP = 14

Assignment = dict  # node label -> bit


def qubit_cap(cap: int | None = None) -> int:
    """Explicit cap, else ``$QREDUCT_CAP``, else 14."""
    if cap is not None:
        return int(cap)
    env = os.environ.get("QREDUCT_CAP")
    return int(env) if env else DEFAULT_CAP


@dataclass(frozen=True)
class Gate:
    """A part whose eigenstates map its input-output relation.

    ``n_inputs`` marks the leading nodes as inputs; the table must then be a
    function of them.  Without it the gate only constrains, it never drives
    propagation.
    """

    nodes: tuple[str, ...]
    eigenstates: tuple[str, ...]
    n_inputs: int | None = None
    kind: str = "table"

    def __post_init__(self):
        nodes = tuple(self.nodes)
        states = tuple(self.eigenstates)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "eigenstates", states)
        if len(set(nodes)) != len(nodes):
            raise RegisterError(f"gate nodes must be distinct: {nodes}")
        if len(set(states)) != len(states):
            raise ValueError(f"duplicate eigenstates in gate table {states}")
        for bits in states:
            if len(bits) != len(nodes) or set(bits) - {"0", "1"}:
                raise ValueError(f"eigenstate {bits!r} does not fit gate nodes {nodes}")
        if self.n_inputs is not None:
            if not 0 <= self.n_inputs <= len(nodes):
                raise ValueError(f"n_inputs={self.n_inputs} out of range for {len(nodes)} nodes")
            heads = [bits[: self.n_inputs] for bits in states]
            if len(set(heads)) != len(heads):
                raise ValueError("gate table is not a function of its inputs")

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.nodes[: self.n_inputs] if self.n_inputs is not None else ()

    @property
    def outputs(self) -> tuple[str, ...]:
        return self.nodes[self.n_inputs:] if self.n_inputs is not None else ()

    def lut(self) -> np.ndarray:
        table = np.zeros(2 ** len(self.nodes), dtype=np.uint8)
        for bits in self.eigenstates:
            table[int(bits, 2) if bits else 0] = 1
        return table

    def accepts(self, values: Mapping[str, int]) -> bool:
        return "".join(str(values[x]) for x in self.nodes) in self.eigenstates

    def outputs_for(self, input_bits: str) -> str | None:
        for bits in self.eigenstates:
            if bits[: self.n_inputs] == input_bits:
                return bits[self.n_inputs:]
        return None


def cnot_gate(t: str, u: str, v: str, r: str) -> Gate:
    """Controlled NOT with coexisting input (t, u) and output (v = t, r = t xor u)."""
    return Gate((t, u, v, r), ("0000", "0101", "1011", "1110"), 2, "cnot")


def not_gate(a: str, b: str) -> Gate:
    return Gate((a, b), ("01", "10"), 1, "not")


def toffoli_gate(a: str, b: str, c: str, a_out: str, b_out: str, c_out: str) -> Gate:
    states = []
    for x in range(8):
        a_, b_, c_ = (x >> 2) & 1, (x >> 1) & 1, x & 1
        states.append(f"{a_}{b_}{c_}{a_}{b_}{c_ ^ (a_ & b_)}")
    return Gate((a, b, c, a_out, b_out, c_out), tuple(states), 3, "toffoli")


def table_gate(nodes: Sequence[str], eigenstates: Sequence[str], n_inputs: int | None = None) -> Gate:
    return Gate(tuple(nodes), tuple(eigenstates), n_inputs, "table")


GATE_BUILDERS = {"cnot": cnot_gate, "not": not_gate, "toffoli": toffoli_gate}


@dataclass(frozen=True)
class BooleanNetwork:
    nodes: tuple[str, ...]
    gates: tuple[Gate, ...] = ()
    wires: tuple[Transmission, ...] = ()
    pins: Mapping[str, int] = field(default_factory=dict)
    free_inputs: tuple[str, ...] = ()

    def __post_init__(self):
        nodes = tuple(str(x) for x in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "wires", tuple(
            w if isinstance(w, Transmission) else Transmission(*w) for w in self.wires))
        object.__setattr__(self, "free_inputs", tuple(self.free_inputs))
        known = set(nodes)
        problems = []
        if not nodes:
            problems.append("network has no nodes")
        if len(known) != len(nodes):
            problems.append("duplicate node labels")
        for i, g in enumerate(self.gates):
            missing = [x for x in g.nodes if x not in known]
            if missing:
                problems.append(f"gate {i} references unknown nodes {missing}")
        for w in self.wires:
            missing = [x for x in (w.r, w.s) if x not in known]
            if missing:
                problems.append(f"wire {w.r}-{w.s} references unknown nodes {missing}")
        pins = {}
        for x, b in dict(self.pins).items():
            if x not in known:
                problems.append(f"pin on unknown node {x!r}")
            elif b not in (0, 1) or isinstance(b, bool):
                problems.append(f"pin {x}={b!r} is not a bit")
            else:
                pins[x] = int(b)
        for x in self.free_inputs:
            if x not in known:
                problems.append(f"free input {x!r} is not a node")
            elif x in pins:
                problems.append(f"free input {x!r} is also pinned")
        if problems:
            raise NetworkValidationError(problems)
        object.__setattr__(self, "pins", {x: pins[x] for x in nodes if x in pins})

    @property
    def n(self) -> int:
        return len(self.nodes)

    def position(self, node: str) -> int:
        return self.nodes.index(node)

    def check_size(self, cap: int | None = None) -> None:
        cap = qubit_cap(cap)
        if self.n > cap:
            raise NetworkValidationError(f"network has {self.n} qubits, cap is {cap}")

    def input_nodes(self) -> tuple[str, ...]:
        """Nodes not driven by a gate output or by the upstream end of a wire."""
        driven = {x for g in self.gates for x in g.outputs} | {w.s for w in self.wires}
        return tuple(x for x in self.nodes if x not in driven)

    def with_pins(self, pins: Mapping[str, int]) -> "BooleanNetwork":
        free = tuple(x for x in self.free_inputs if x not in pins)
        return BooleanNetwork(self.nodes, self.gates, self.wires, dict(pins), free)


def fig4_network() -> BooleanNetwork:
    """c-NOT on (t, u, v, r), wire r-s, pins u=1 and s=1: one solution."""
    return BooleanNetwork(
        nodes=("t", "u", "v", "r", "s"),
        gates=(cnot_gate("t", "u", "v", "r"),),
        wires=(Transmission("r", "s"),),
        pins={"u": 1, "s": 1},
        free_inputs=("t",),
    )


def _mask(net, gates, wires, pins) -> np.ndarray:
    n = net.n
    gate_pos, pos_off, gate_lut, lut_off = [], [0], [], [0]
    for g in gates:
        gate_pos.extend(net.position(x) for x in g.nodes)
        pos_off.append(len(gate_pos))
        gate_lut.append(g.lut())
        lut_off.append(lut_off[-1] + 2 ** len(g.nodes))
    pin_mask = pin_value = 0
    for x, b in pins.items():
        bit = 1 << (n - 1 - net.position(x))
        pin_mask |= bit
        pin_value |= bit * b
    return _kernels.consistent_mask(
        n,
        np.asarray(gate_pos, dtype=np.int64),
        np.asarray(pos_off, dtype=np.int64),
        np.concatenate(gate_lut).astype(np.uint8) if gate_lut else np.zeros(0, dtype=np.uint8),
        np.asarray(lut_off, dtype=np.int64),
        np.asarray([(net.position(w.r), net.position(w.s)) for w in wires], dtype=np.int64).reshape(-1, 2),
        pin_mask,
        pin_value,
    )


def gate_subspace(g: Gate, net: BooleanNetwork) -> Subspace:
    """Kets whose restriction to the gate's nodes is one of its eigenstates."""
    net.check_size()
    return Subspace(net.nodes, kets=np.flatnonzero(_mask(net, [g], [], {})))


def wire_subspace(w: Transmission, net: BooleanNetwork) -> Subspace:
    """Kets satisfying the wire's NOT relation (free on every other node)."""
    net.check_size()
    return Subspace(net.nodes, kets=np.flatnonzero(_mask(net, [], [w], {})))


def consistent_kets(net: BooleanNetwork, respect_constraints: bool = False,
                    cap: int | None = None) -> np.ndarray:
    """Sorted basis indices of all consistent assignments."""
    net.check_size(cap)
    pins = net.pins if respect_constraints else {}
    return np.flatnonzero(_mask(net, net.gates, net.wires, pins)).astype(np.int64)


def ket_assignment(net: BooleanNetwork, index: int) -> Assignment:
    return dict(zip(net.nodes, map(int, index_to_bits(int(index), net.n))))


def consistent_assignments(net: BooleanNetwork, respect_constraints: bool = True,
                           cap: int | None = None) -> list[Assignment]:
    """Every complete assignment meeting all gates and wires (and pins, if asked).

    Brute force over all ``2**n`` bitstrings, in lexicographic order.
    """
    return [ket_assignment(net, k) for k in consistent_kets(net, respect_constraints, cap)]


def _set(values, node, bit):
    old = values.get(node)
    if old is None:
        values[node] = bit
        return True
    if old != bit:
        raise PropagationConflict(f"node {node!r} would be both {old} and {bit}")
    return False


def classical_propagate(net: BooleanNetwork, inputs: Mapping[str, int]) -> Assignment:
    """Forward logical propagation of ``inputs`` through gates and wires.

    Gates fire once all their inputs are known; wires copy the negated value of
    whichever end is known.  Raises :class:`PropagationConflict` when two
    routes disagree, when a gate meets an input row missing from its table, or
    when some node stays undetermined.
    """
    values = {}
    for x, b in inputs.items():
        if x not in net.nodes:
            raise RegisterError(f"unknown node {x!r}")
        values[x] = int(b)
    changed = True
    while changed:
        changed = False
        for g in net.gates:
            if g.n_inputs is None or not all(x in values for x in g.inputs):
                continue
            head = "".join(str(values[x]) for x in g.inputs)
            tail = g.outputs_for(head)
            if tail is None:
                raise PropagationConflict(f"gate {g.nodes} has no row for inputs {head}")
            for x, b in zip(g.outputs, tail):
                changed |= _set(values, x, int(b))
        for w in net.wires:
            if w.r in values:
                changed |= _set(values, w.s, 1 - values[w.r])
            elif w.s in values:
                changed |= _set(values, w.r, 1 - values[w.s])
    missing = [x for x in net.nodes if x not in values]
    if missing:
        raise PropagationConflict(f"nodes {missing} are not determined by the inputs")
    for g in net.gates:
        if not g.accepts(values):
            raise PropagationConflict(f"gate {g.nodes} is violated by the propagated values")
    return {x: values[x] for x in net.nodes}


def prepare_initial_state(net: BooleanNetwork, inputs: Mapping[str, int]) -> StateVector:
    """Basis ket of the propagated assignment."""
    return StateVector.basis(net.nodes, classical_propagate(net, inputs))


def verify_solution(net: BooleanNetwork, a: Mapping[str, int]) -> bool:
    missing = [x for x in net.nodes if x not in a]
    if missing:
        raise ValueError(f"assignment is incomplete, missing {missing}")
    return (
        all(g.accepts(a) for g in net.gates)
        and all(a[w.r] != a[w.s] for w in net.wires)
        and all(a[x] == b for x, b in net.pins.items())
    )


def eigenstate_counts(net: BooleanNetwork) -> dict:
    """Sizes behind the point of using wires: separate parts vs one merged gate.

    ``merged`` is the eigenstate count of a single gate built from all gates
    without transmissions between them (the product of their table sizes);
    ``parts`` is the sum of the per-gate table sizes.
    """
    sizes = [len(g.eigenstates) for g in net.gates]
    return {
        "parts": sum(sizes),
        "merged": math.prod(sizes) if sizes else 0,
        "network_space": 2**net.n,
    }


def gate_to_dict(g: Gate) -> dict:
    if g.kind in GATE_BUILDERS:
        return {"type": g.kind, "nodes": list(g.nodes)}
    out = {"table": list(g.eigenstates), "nodes": list(g.nodes)}
    if g.n_inputs is not None:
        out["inputs"] = g.n_inputs
    return out


def network_to_dict(net: BooleanNetwork) -> dict:
    return {
        "nodes": list(net.nodes),
        "gates": [gate_to_dict(g) for g in net.gates],
        "wires": [[w.r, w.s] for w in net.wires],
        "pins": dict(net.pins),
        "free_inputs": list(net.free_inputs),
    }


def network_from_dict(data) -> BooleanNetwork:
    """Build and validate a network; collects every violation it can find."""
    if not isinstance(data, Mapping):
        raise NetworkValidationError("network must be a JSON object")
    problems = []
    unknown = set(data) - {"nodes", "gates", "wires", "pins", "free_inputs"}
    if unknown:
        problems.append(f"unknown fields {sorted(unknown)}")
    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not all(isinstance(x, str) for x in nodes):
        problems.append("field 'nodes' must be a list of strings")
        nodes = []
    gates = []
    for i, spec in enumerate(data.get("gates", [])):
        where = f"gates[{i}]"
        try:
            if not isinstance(spec, Mapping) or not isinstance(spec.get("nodes"), list):
                raise ValueError("needs a 'nodes' list")
            if "type" in spec:
                builder = GATE_BUILDERS.get(spec["type"])
                if builder is None:
                    raise ValueError(f"unknown gate type {spec['type']!r}")
                gates.append(builder(*spec["nodes"]))
            elif "table" in spec:
                gates.append(table_gate(spec["nodes"], spec["table"], spec.get("inputs")))
            else:
                raise ValueError("needs either 'type' or 'table'")
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}: {exc}")
    wires = []
    for i, pair in enumerate(data.get("wires", [])):
        try:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValueError("must be a [r, s] pair")
            wires.append(Transmission(str(pair[0]), str(pair[1])))
        except ValueError as exc:
            problems.append(f"wires[{i}]: {exc}")
    pins = data.get("pins", {})
    if not isinstance(pins, Mapping):
        problems.append("field 'pins' must be an object")
        pins = {}
    free = data.get("free_inputs", [])
    if not isinstance(free, list):
        problems.append("field 'free_inputs' must be a list")
        free = []
    try:
        net = BooleanNetwork(tuple(nodes), tuple(gates), tuple(wires), dict(pins), tuple(free))
    except NetworkValidationError as exc:
        problems.extend(exc.violations)
    if problems:
        raise NetworkValidationError(problems)
    return net


def _matchings(nodes):
    if len(nodes) < 2:
        yield ()
        return
    first, rest = nodes[0], nodes[1:]
    yield from _matchings(rest)
    for i, other in enumerate(rest):
        for m in _matchings(rest[:i] + rest[i + 1:]):
            yield ((first, other),) + m


def small_networks(max_nodes: int = 5):
    """Every network of up to ``max_nodes`` nodes built from c-NOTs and wires, with all pin patterns.

    Nodes are ``n0, n1, ...``; wires form a matching (each node joins at most
    one wire, oriented from the lower label).  From four nodes on, each wire
    pattern is tried with and without a c-NOT on ``n0..n3``.  Pins range over
    ``{unpinned, 0, 1}`` per node.
    """
    for n in range(1, max_nodes + 1):
        nodes = tuple(f"n{i}" for i in range(n))
        gate_sets = [()] + ([(cnot_gate(*nodes[:4]),)] if n >= 4 else [])
        for gates in gate_sets:
            for wires in _matchings(nodes):
                for pattern in itertools.product((None, 0, 1), repeat=n):
                    pins = {x: b for x, b in zip(nodes, pattern) if b is not None}
                    yield BooleanNetwork(nodes, gates, tuple(Transmission(*w) for w in wires), pins)
