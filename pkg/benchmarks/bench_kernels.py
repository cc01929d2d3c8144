"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import importlib
import timeit

import numpy as np

from qreduct import _pykernels
from qreduct.network import BooleanNetwork, _mask, cnot_gate
from qreduct.transmission import Transmission


def _chain(n_gates):
    # c-NOTs joined output-to-input by wires: 4 nodes per gate, one wire between gates
    nodes, gates, wires = [], [], []
    for g in range(n_gates):
        x = [f"g{g}{c}" for c in "tuvr"]
        nodes += x
        gates.append(cnot_gate(*x))
        if g:
            wires.append(Transmission(f"g{g - 1}r", f"g{g}t"))
    return BooleanNetwork(tuple(nodes), tuple(gates), tuple(wires))


def _mask_args(net):
    from qreduct import _kernels

    captured = {}
    real = _kernels.consistent_mask

    def spy(*a):
        captured["args"] = a
        return real(*a)

    _kernels.consistent_mask = spy
    try:
        _mask(net, net.gates, net.wires, net.pins)
    finally:
        _kernels.consistent_mask = real
    return captured["args"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    try:
        backends["cython"] = importlib.import_module("qreduct._ckernels")
    except ImportError:
        print("compiled extension not built; only the Python backend is timed")

    rng = np.random.default_rng(0)
    mask_args = _mask_args(_chain(4))  # 16 qubits, 65536 kets
    m, ncell = 4096, 64
    cell_of = rng.integers(0, ncell, size=m).astype(np.int64)
    prev = rng.normal(size=m) + 1j * rng.normal(size=m)
    masses = rng.dirichlet(np.ones(ncell))
    kets = np.sort(rng.choice(2**16, size=m, replace=False)).astype(np.int64)
    cases = {
        "consistent_mask (16 qubits)": lambda k: k.consistent_mask(*mask_args),
        "cell_rescale (4096 kets)": lambda k: k.cell_rescale(prev, cell_of, masses, 1.0 + 0j, 1e-12),
        "bit_populations (4096 kets)": lambda k: k.bit_populations(prev, kets, 16),
    }
    print(f"{'kernel':32s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for name, fn in cases.items():
        times = {}
        for b, mod in backends.items():
            number = 20
            times[b] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:32s}" + "".join(f"{times[b] * 1e3:11.3f} ms" for b in backends) + f"   {speed:6.1f}x")


if __name__ == "__main__":
    main()
