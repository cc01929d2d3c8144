import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qreduct.errors import NetworkValidationError, PropagationConflict
from qreduct.network import (
    BooleanNetwork,
    Gate,
    classical_propagate,
    cnot_gate,
    consistent_assignments,
    consistent_kets,
    eigenstate_counts,
    fig4_network,
    gate_subspace,
    network_from_dict,
    network_to_dict,
    not_gate,
    prepare_initial_state,
    qubit_cap,
    small_networks,
    table_gate,
    toffoli_gate,
    verify_solution,
    wire_subspace,
)
from qreduct.transmission import Transmission


def _brute_force(net, respect_pins=True):
    # independent oracle: check every bitstring against each part directly
    out = []
    for bits in itertools.product((0, 1), repeat=net.n):
        a = dict(zip(net.nodes, bits))
        ok = all("".join(str(a[x]) for x in g.nodes) in g.eigenstates for g in net.gates)
        ok &= all(a[w.r] + a[w.s] == 1 for w in net.wires)
        if respect_pins:
            ok &= all(a[x] == b for x, b in net.pins.items())
        if ok:
            out.append(a)
    return out


def test_cnot_truth_table():
    g = cnot_gate("t", "u", "v", "r")
    assert g.eigenstates == ("0000", "0101", "1011", "1110")
    assert g.inputs == ("t", "u") and g.outputs == ("v", "r")
    assert g.outputs_for("10") == "11"
    assert g.accepts({"t": 1, "u": 1, "v": 1, "r": 0})
    assert not g.accepts({"t": 1, "u": 1, "v": 1, "r": 1})


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(("a", "a"), ("00",))
    with pytest.raises(ValueError):
        Gate(("a", "b"), ("01", "01"))
    with pytest.raises(ValueError):
        Gate(("a", "b"), ("011",))
    with pytest.raises(ValueError):
        table_gate(("a", "b"), ("00", "01"), n_inputs=1)  # two outputs for input 0


def test_toffoli_and_not():
    t = toffoli_gate("a", "b", "c", "x", "y", "z")
    assert len(t.eigenstates) == 8
    assert t.outputs_for("111") == "110"
    assert not_gate("a", "b").eigenstates == ("01", "10")


def test_network_validation_collects_every_problem():
    with pytest.raises(NetworkValidationError) as exc:
        BooleanNetwork(("a",), wires=(Transmission("a", "z"),), pins={"q": 1, "a": 2})
    assert len(exc.value.violations) == 3
    with pytest.raises(NetworkValidationError):
        BooleanNetwork(())


def test_qubit_cap(monkeypatch):
    monkeypatch.delenv("QREDUCT_CAP", raising=False)
    assert qubit_cap() == 14
    monkeypatch.setenv("QREDUCT_CAP", "3")
    assert qubit_cap() == 3
    assert qubit_cap(7) == 7
    with pytest.raises(NetworkValidationError):
        consistent_kets(fig4_network())


def test_fig4_has_one_solution():
    net = fig4_network()
    assert consistent_assignments(net) == [{"t": 1, "u": 1, "v": 1, "r": 0, "s": 1}]
    assert len(consistent_assignments(net, respect_constraints=False)) == 4
    assert net.input_nodes() == ("t", "u")


def test_subspaces_of_parts():
    net = fig4_network()
    assert gate_subspace(net.gates[0], net).dim == 8  # 4 rows times free s
    assert wire_subspace(net.wires[0], net).dim == 16


def test_propagation():
    net = fig4_network()
    assert classical_propagate(net, {"t": 0, "u": 1}) == {"t": 0, "u": 1, "v": 0, "r": 1, "s": 0}
    assert prepare_initial_state(net, {"t": 0, "u": 1}).amplitude("01010") == 1
    with pytest.raises(PropagationConflict):
        classical_propagate(net, {"t": 0})
    loop = BooleanNetwork(("a", "b"), wires=(Transmission("a", "b"),))
    with pytest.raises(PropagationConflict):
        classical_propagate(loop, {"a": 0, "b": 0})


def test_verify_solution():
    net = fig4_network()
    assert verify_solution(net, {"t": 1, "u": 1, "v": 1, "r": 0, "s": 1})
    assert not verify_solution(net, {"t": 0, "u": 1, "v": 1, "r": 0, "s": 1})
    with pytest.raises(ValueError):
        verify_solution(net, {"t": 1})


def test_eigenstate_counts():
    net = BooleanNetwork(tuple("abcdefgh"), gates=(cnot_gate(*"abcd"), cnot_gate(*"efgh")),
                         wires=(Transmission("d", "e"),))
    assert eigenstate_counts(net) == {"parts": 8, "merged": 16, "network_space": 256}


def test_round_trip(fixtures):
    for path in fixtures.glob("*.json"):
        data = json.loads(path.read_text())
        net = network_from_dict(data)
        assert network_from_dict(network_to_dict(net)) == net
    assert network_from_dict(network_to_dict(fig4_network())) == fig4_network()


def test_from_dict_reports_fields():
    with pytest.raises(NetworkValidationError) as exc:
        network_from_dict({"nodes": ["a"], "gates": [{"type": "xor", "nodes": ["a"]}], "bogus": 1})
    text = str(exc.value)
    assert "gates[0]" in text and "bogus" in text


@pytest.mark.parametrize("net", list(itertools.islice(small_networks(4), 0, None, 37)))
def test_kernel_enumeration_matches_brute_force(net):
    assert consistent_assignments(net) == _brute_force(net)
    assert consistent_assignments(net, respect_constraints=False) == _brute_force(net, False)


def test_small_network_count():
    # matchings on n nodes: 1, 2, 4, 10, 26; a c-NOT doubles from four nodes
    counts = {}
    for net in small_networks(5):
        counts[net.n] = counts.get(net.n, 0) + 1
    assert counts == {1: 3, 2: 2 * 9, 3: 4 * 27, 4: 20 * 81, 5: 52 * 243}


@given(st.lists(st.sampled_from(["0", "1"]), min_size=3, max_size=3), st.integers(0, 2))
def test_table_gate_accepts_its_rows(bits, k):
    row = "".join(bits)
    g = table_gate(("a", "b", "c"), (row,), n_inputs=k)
    assert g.accepts(dict(zip("abc", map(int, row))))
    assert np.sum(g.lut()) == 1
