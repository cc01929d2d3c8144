# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; same signatures and results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


def consistent_mask(int n, const cnp.int64_t[:] gate_pos, const cnp.int64_t[:] gate_pos_off,
                    const cnp.uint8_t[:] gate_lut, const cnp.int64_t[:] gate_lut_off,
                    wires, cnp.int64_t pin_mask, cnp.int64_t pin_value):
    cdef const cnp.int64_t[:, :] w = np.ascontiguousarray(np.asarray(wires, dtype=np.int64).reshape(-1, 2))
    cdef Py_ssize_t size = 1 << n
    cdef Py_ssize_t ngates = gate_pos_off.shape[0] - 1
    cdef Py_ssize_t nwires = w.shape[0]
    out_arr = np.zeros(size, dtype=np.uint8)
    cdef cnp.uint8_t[:] out = out_arr
    cdef Py_ssize_t i, g, j, k
    cdef cnp.int64_t local
    cdef bint ok
    for i in range(size):
        if (i & pin_mask) != pin_value:
            continue
        ok = True
        for g in range(ngates):
            local = 0
            for j in range(gate_pos_off[g], gate_pos_off[g + 1]):
                local = (local << 1) | ((i >> (n - 1 - gate_pos[j])) & 1)
            if gate_lut[gate_lut_off[g] + local] == 0:
                ok = False
                break
        if ok:
            for k in range(nwires):
                if ((i >> (n - 1 - w[k, 0])) & 1) == ((i >> (n - 1 - w[k, 1])) & 1):
                    ok = False
                    break
        if ok:
            out[i] = 1
    return out_arr


def cell_rescale(prev, const cnp.int64_t[:] cell_of, masses, double complex ref, double floor):
    cdef const double complex[:] p = np.ascontiguousarray(prev, dtype=np.complex128)
    cdef const double[:] mass = np.ascontiguousarray(masses, dtype=np.float64)
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t ncell = mass.shape[0]
    weight_arr = np.zeros(ncell, dtype=np.float64)
    count_arr = np.zeros(ncell, dtype=np.int64)
    out_arr = np.zeros(m, dtype=np.complex128)
    cdef double[:] weight = weight_arr
    cdef cnp.int64_t[:] count = count_arr
    cdef double complex[:] out = out_arr
    cdef Py_ssize_t i, c
    cdef double norm
    for i in range(m):
        c = cell_of[i]
        weight[c] += p[i].real * p[i].real + p[i].imag * p[i].imag
        count[c] += 1
    for c in range(ncell):
        weight[c] = sqrt(weight[c])
    for i in range(m):
        c = cell_of[i]
        norm = weight[c]
        if norm > floor:
            out[i] = p[i] * (sqrt(mass[c]) / norm)
        elif mass[c] > 0.0:
            out[i] = ref * sqrt(mass[c] / count[c])
    return out_arr


def bit_populations(coords, kets, int n):
    cdef const double complex[:] a = np.ascontiguousarray(coords, dtype=np.complex128)
    cdef const cnp.int64_t[:] k = np.ascontiguousarray(kets, dtype=np.int64)
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[:] out = out_arr
    cdef Py_ssize_t i, pos
    cdef double prob
    for i in range(a.shape[0]):
        prob = a[i].real * a[i].real + a[i].imag * a[i].imag
        for pos in range(n):
            if (k[i] >> (n - 1 - pos)) & 1:
                out[pos] += prob
    return out_arr
