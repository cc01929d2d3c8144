"""Reference (numpy) implementations of the hot kernels.

These define the semantics; ``_ckernels.pyx`` must agree with them exactly.
Bit positions count from the most significant bit: position ``p`` of an index
``i`` in an ``n``-node register is ``(i >> (n - 1 - p)) & 1``.
"""
import numpy as np

BACKEND = "python"


def consistent_mask(n, gate_pos, gate_pos_off, gate_lut, gate_lut_off, wires, pin_mask, pin_value):
    """1 for every basis index satisfying all gate tables, NOT-wires and pins."""
    idx = np.arange(2**n, dtype=np.int64)
    ok = (idx & pin_mask) == pin_value
    for g in range(len(gate_pos_off) - 1):
        pos = gate_pos[gate_pos_off[g]:gate_pos_off[g + 1]]
        lut = gate_lut[gate_lut_off[g]:gate_lut_off[g + 1]]
        local = np.zeros_like(idx)
        for p in pos:
            local = (local << 1) | ((idx >> (n - 1 - p)) & 1)
        ok &= lut[local].astype(bool)
    for a, b in np.asarray(wires, dtype=np.int64).reshape(-1, 2):
        ok &= ((idx >> (n - 1 - a)) & 1) != ((idx >> (n - 1 - b)) & 1)
    return ok.astype(np.uint8)


def cell_rescale(prev, cell_of, masses, ref, floor):
    """Distribute the target cell masses over the kets, staying closest to ``prev``.

    Inside a populated cell the previous amplitudes are scaled uniformly (the
    distance-minimizing choice).  A cell whose previous weight is below
    ``floor`` but which must now carry mass is filled uniformly with phase
    ``ref``.
    """
    prev = np.asarray(prev, dtype=complex)
    masses = np.asarray(masses, dtype=float)
    weight = np.bincount(cell_of, weights=np.abs(prev) ** 2, minlength=masses.size)
    count = np.bincount(cell_of, minlength=masses.size)
    norms = np.sqrt(weight)
    out = np.zeros_like(prev)
    grown = norms[cell_of] > floor
    scale = np.sqrt(masses[cell_of[grown]]) / norms[cell_of[grown]]
    out[grown] = prev[grown] * scale
    born = ~grown & (masses[cell_of] > 0.0)
    out[born] = ref * np.sqrt(masses[cell_of[born]] / count[cell_of[born]])
    return out


def bit_populations(coords, kets, n):
    """Probability that each register position reads 1."""
    probs = np.abs(np.asarray(coords)) ** 2
    kets = np.asarray(kets, dtype=np.int64)
    return np.array([probs[((kets >> (n - 1 - p)) & 1) == 1].sum() for p in range(n)])
