"""Dense linear algebra over labeled qubit registers.

Basis ordering: a register ``(a, b, c)`` indexes its ``2**3`` amplitudes by the
bitstring ``abc`` read as a binary number, so the first node is the most
significant bit.  Every value here is immutable; operations return new objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AnnihilatedError, RegisterError

NodeLabel = str

ORTHO_TOL = 1e-12
ZERO_NORM = 1e-12
PSD_SLACK = 1e-10
SCHMIDT_TOL = 1e-10


def _frozen(array, dtype=complex):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_register(register) -> tuple[str, ...]:
    register = tuple(str(x) for x in register)
    if len(set(register)) != len(register):
        raise RegisterError(f"duplicate node labels in register {register}")
    return register


def bits_to_index(bits: str) -> int:
    if bits and set(bits) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {bits!r}")
    return int(bits, 2) if bits else 0


def index_to_bits(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the computational basis of ``register``."""

    register: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        register = _check_register(self.register)
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != 2 ** len(register):
            raise RegisterError(
                f"{amps.size} amplitudes do not fit a {len(register)}-node register"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, register: Sequence[str], bits) -> "StateVector":
        """Basis ket; ``bits`` is a bitstring, an index or a node->bit mapping."""
        register = _check_register(register)
        n = len(register)
        if isinstance(bits, Mapping):
            missing = set(register) - set(bits)
            if missing:
                raise RegisterError(f"no value for nodes {sorted(missing)}")
            bits = "".join(str(int(bits[x])) for x in register)
        index = bits_to_index(bits) if isinstance(bits, str) else int(bits)
        if isinstance(bits, str) and len(bits) != n:
            raise RegisterError(f"bitstring {bits!r} does not match register {register}")
        amps = np.zeros(2**n, dtype=complex)
        amps[index] = 1.0
        return cls(register, amps)

    @classmethod
    def from_dict(cls, register: Sequence[str], amps: Mapping[str, complex]) -> "StateVector":
        register = _check_register(register)
        vec = np.zeros(2 ** len(register), dtype=complex)
        for bits, a in amps.items():
            if len(bits) != len(register):
                raise RegisterError(f"bitstring {bits!r} does not match register {register}")
            vec[bits_to_index(bits)] += a
        return cls(register, vec)

    @property
    def n(self) -> int:
        return len(self.register)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = ORTHO_TOL) -> bool:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0) <= tol

    def amplitude(self, bits) -> complex:
        index = bits_to_index(bits) if isinstance(bits, str) else int(bits)
        return complex(self.amplitudes[index])

    def as_dict(self, floor: float = 0.0) -> dict[str, complex]:
        """Nonzero amplitudes keyed by bitstring, in index order."""
        return {
            index_to_bits(i, self.n): complex(a)
            for i, a in enumerate(self.amplitudes)
            if abs(a) > floor
        }

    def reorder(self, register: Sequence[str]) -> "StateVector":
        """The same state expressed over a permutation of its register."""
        register = _check_register(register)
        if sorted(register) != sorted(self.register):
            raise RegisterError(f"{register} is not a permutation of {self.register}")
        if register == self.register or self.n == 0:
            return self
        axes = [self.register.index(x) for x in register]
        psi = self.amplitudes.reshape((2,) * self.n).transpose(axes)
        return StateVector(register, psi.reshape(-1))

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        return self.register == other.register and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=atol
        )

    def __repr__(self):
        terms = " + ".join(
            f"({a.real:.6g}{a.imag:+.6g}j)|{b}>" for b, a in self.as_dict(1e-12).items()
        )
        return f"StateVector({','.join(self.register)}: {terms or '0'})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Reduced density matrix on ``register``; validated on construction."""

    register: tuple[str, ...]
    entries: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        register = _check_register(self.register)
        rho = _frozen(self.entries)
        d = 2 ** len(register)
        if rho.shape != (d, d):
            raise RegisterError(f"density matrix shape {rho.shape} does not fit {register}")
        if self.check:
            if np.max(np.abs(rho - rho.conj().T), initial=0.0) > ORTHO_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > ORTHO_TOL:
                raise ValueError(f"density matrix trace {np.trace(rho).real!r} != 1")
            if np.linalg.eigvalsh(rho).min() < -PSD_SLACK:
                raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def diagonal(cls, register: Sequence[str], populations) -> "DensityMatrix":
        return cls(tuple(register), np.diag(np.asarray(populations, dtype=complex)))

    @property
    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = other.entries if isinstance(other, DensityMatrix) else np.asarray(other)
        return np.allclose(self.entries, other, rtol=0.0, atol=atol)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """A square matrix acting on the state space of ``register``.

    ``domain`` optionally names the physical sector the operator is meant to act
    on (for example the antisymmetric sector of two fermions); spectral helpers
    restrict to it when present.
    """

    register: tuple[str, ...]
    matrix: np.ndarray
    domain: "Subspace | None" = None

    def __post_init__(self):
        register = _check_register(self.register)
        mat = _frozen(self.matrix)
        d = 2 ** len(register)
        if mat.shape != (d, d):
            raise RegisterError(f"operator shape {mat.shape} does not fit {register}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, register: Sequence[str]) -> "LinearOperator":
        return cls(tuple(register), np.eye(2 ** len(tuple(register))))

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            _same_register(self, other)
            return LinearOperator(self.register, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.register, self.matrix.conj().T, self.domain)


class Subspace:
    """Span of orthonormal vectors, optionally known to be spanned by basis kets.

    Ket-spanned subspaces (the common case for gate and wire constraints) keep
    only the ket indices; the dense basis is built lazily.
    """

    def __init__(self, register: Sequence[str], basis=None, kets=None):
        self.register = _check_register(register)
        d = 2 ** len(self.register)
        if kets is not None:
            kets = np.unique(np.asarray(kets, dtype=np.int64))
            if kets.size and (kets[0] < 0 or kets[-1] >= d):
                raise RegisterError("ket index outside the register's state space")
            kets.setflags(write=False)
            self.kets = kets
            self._basis = None
            return
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.shape[0] != d:
            raise RegisterError(f"basis vectors of length {basis.shape[0]} do not fit {self.register}")
        gram = basis.conj().T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1])), initial=0.0) > ORTHO_TOL:
            raise ValueError("subspace basis is not orthonormal")
        self.kets = None
        self._basis = _frozen(basis)

    @classmethod
    def from_kets(cls, register: Sequence[str], kets: Iterable) -> "Subspace":
        register = _check_register(register)
        indices = [bits_to_index(k) if isinstance(k, str) else int(k) for k in kets]
        return cls(register, kets=indices)

    @classmethod
    def from_vectors(cls, register: Sequence[str], vectors) -> "Subspace":
        """Orthonormal basis for the span of ``vectors`` (StateVectors or arrays)."""
        cols = [v.amplitudes if isinstance(v, StateVector) else np.asarray(v) for v in vectors]
        if not cols:
            return cls(register, np.zeros((2 ** len(tuple(register)), 0)))
        mat = np.column_stack(cols).astype(complex)
        u, s, _ = np.linalg.svd(mat, full_matrices=False)
        rank = int(np.sum(s > ZERO_NORM * max(1.0, s.max(initial=0.0))))
        return cls(register, u[:, :rank])

    @property
    def basis(self) -> np.ndarray:
        if self._basis is None:
            b = np.zeros((2 ** len(self.register), self.kets.size), dtype=complex)
            b[self.kets, np.arange(self.kets.size)] = 1.0
            self._basis = _frozen(b)
        return self._basis

    @property
    def dim(self) -> int:
        return int(self.kets.size) if self.kets is not None else self._basis.shape[1]

    def basis_vectors(self) -> list[StateVector]:
        return [StateVector(self.register, self.basis[:, j]) for j in range(self.dim)]

    def projector(self) -> LinearOperator:
        b = self.basis
        return LinearOperator(self.register, b @ b.conj().T)

    def coordinates(self, v: StateVector) -> np.ndarray:
        _same_register(self, v)
        if self.kets is not None:
            return v.amplitudes[self.kets].copy()
        return self.basis.conj().T @ v.amplitudes

    def embed(self, coords) -> StateVector:
        coords = np.asarray(coords, dtype=complex)
        if self.kets is not None:
            amps = np.zeros(2 ** len(self.register), dtype=complex)
            amps[self.kets] = coords
            return StateVector(self.register, amps)
        return StateVector(self.register, self.basis @ coords)

    def contains(self, v: StateVector, tol: float = ORTHO_TOL) -> bool:
        _same_register(self, v)
        rest = v.amplitudes - self.embed(self.coordinates(v)).amplitudes
        return float(np.linalg.norm(rest)) <= tol

    def __repr__(self):
        return f"Subspace({','.join(self.register)}, dim={self.dim})"


def _same_register(a, b):
    if a.register != b.register:
        raise RegisterError(f"register mismatch: {a.register} vs {b.register}")


def tensor(a: StateVector, b: StateVector) -> StateVector:
    overlap = set(a.register) & set(b.register)
    if overlap:
        raise RegisterError(f"registers overlap on {sorted(overlap)}")
    return StateVector(a.register + b.register, np.kron(a.amplitudes, b.amplitudes))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    _same_register(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def normalize(v: StateVector) -> StateVector:
    norm = v.norm()
    if norm < ZERO_NORM:
        raise AnnihilatedError("cannot normalize a zero vector")
    return StateVector(v.register, v.amplitudes / norm)


def distance(a: StateVector, b: StateVector) -> float:
    _same_register(a, b)
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner(a, b)) ** 2


def apply(u: LinearOperator, v: StateVector) -> StateVector:
    _same_register(u, v)
    return StateVector(v.register, u.matrix @ v.amplitudes)


def is_unitary(u: LinearOperator, tol: float = ORTHO_TOL) -> bool:
    m = u.matrix
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0)) <= tol


def is_hermitian(u: LinearOperator, tol: float = ORTHO_TOL) -> bool:
    m = u.matrix
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol


def commutator_norm(a: LinearOperator, b: LinearOperator) -> float:
    """Spectral norm of ``[a, b]``."""
    _same_register(a, b)
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    return float(np.linalg.norm(c, 2)) if c.size else 0.0


def project(v: StateVector, s: Subspace) -> StateVector:
    """Nearest unit vector of ``s`` to the unit vector ``v``.

    The renormalized orthogonal projection already has a real, positive overlap
    with ``v``, which is the phase convention used throughout.  Raises
    :class:`AnnihilatedError` when ``v`` is orthogonal to ``s``.
    """
    _same_register(v, s)
    p = s.embed(s.coordinates(v))
    norm = p.norm()
    if norm < ZERO_NORM:
        raise AnnihilatedError(f"state is orthogonal to {s!r}")
    return StateVector(v.register, p.amplitudes / norm)


def partial_trace(v: StateVector, keep: Iterable[str]) -> DensityMatrix:
    """Reduced density matrix of ``v`` on ``keep`` (ordered as in the register)."""
    keep = set(keep)
    if not keep:
        raise RegisterError("partial trace needs at least one node to keep")
    unknown = keep - set(v.register)
    if unknown:
        raise RegisterError(f"nodes {sorted(unknown)} are not in register {v.register}")
    kept = [i for i, x in enumerate(v.register) if x in keep]
    traced = [i for i, x in enumerate(v.register) if x not in keep]
    psi = v.amplitudes.reshape((2,) * v.n).transpose(kept + traced)
    m = psi.reshape(2 ** len(kept), -1)
    rho = m @ m.conj().T
    return DensityMatrix(tuple(v.register[i] for i in kept), rho, check=False)


def operator_schmidt_rank(u: LinearOperator, cut: Iterable[str], tol: float = SCHMIDT_TOL) -> int:
    """Number of operator-Schmidt coefficients of ``u`` across ``cut | rest``.

    Rank one means ``u`` factorizes as a tensor product of local operators.
    """
    cut = set(cut)
    n = len(u.register)
    side_a = [i for i, x in enumerate(u.register) if x in cut]
    side_b = [i for i, x in enumerate(u.register) if x not in cut]
    if n < 2 or not side_a or not side_b or cut - set(u.register):
        raise RegisterError(f"invalid bipartition {sorted(cut)} of {u.register}")
    t = u.matrix.reshape((2,) * (2 * n))
    # axes 0..n-1 are row (output) bits, n..2n-1 column (input) bits
    order = side_a + [n + i for i in side_a] + side_b + [n + i for i in side_b]
    r = t.transpose(order).reshape(4 ** len(side_a), 4 ** len(side_b))
    sv = np.linalg.svd(r, compute_uv=False)
    return int(np.sum(sv > tol))
