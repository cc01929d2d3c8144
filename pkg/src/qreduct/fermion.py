"""Two identical fermions on two sites, whose ground sector acts as a transmission.

Each fermion carries a spin bit ``chi`` and a site ``lambda`` in {r, s}.  The
four single-particle modes are ordered ``(0r, 1r, 0s, 1s)``; that order fixes
both the Jordan-Wigner signs of the Fock-space operators and the index
``m = 2 * site + spin`` of a particle in first quantization.

Qubit alias: ``|x>_r |y>_s`` stands for ``a_{x r}^dag a_{y s}^dag |vac>``, one
fermion per site with spins ``x`` (at r) and ``y`` (at s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _dynamics
from ._dynamics import EvolutionTrace
from .errors import InfeasibleError, RegisterError
from .hilbert import LinearOperator, StateVector, Subspace
from .transmission import DriveRotation, default_steps

FIRST_QUANTIZED = ("site1", "spin1", "site2", "spin2")
FOCK = ("n0r", "n1r", "n0s", "n1s")
ALIAS = ("r", "s")
SITES = {"r": 0, "s": 1}


@dataclass(frozen=True)
class FermionMode:
    chi: int
    site: str

    @property
    def index(self) -> int:
        return 2 * SITES[self.site] + self.chi

    def __str__(self):
        return f"{self.chi}{self.site}"


MODES = (FermionMode(0, "r"), FermionMode(1, "r"), FermionMode(0, "s"), FermionMode(1, "s"))


@dataclass(frozen=True, eq=False)
class FockOperatorAlgebra:
    creation: tuple[np.ndarray, ...]
    annihilation: tuple[np.ndarray, ...]

    def max_anticommutator_error(self) -> float:
        """Largest entrywise deviation from the canonical anticommutation relations."""
        worst = 0.0
        eye = np.eye(16)
        for i in range(4):
            for j in range(4):
                ci, cj = self.creation[i], self.creation[j]
                ai, aj = self.annihilation[i], self.annihilation[j]
                worst = max(
                    worst,
                    np.abs(ci @ cj + cj @ ci).max(),
                    np.abs(ai @ aj + aj @ ai).max(),
                    np.abs(ci @ aj + aj @ ci - (i == j) * eye).max(),
                )
        return float(worst)


@lru_cache(maxsize=None)
def _fock_ops():
    z = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|: empties an occupied mode
    ann = []
    for j in range(4):
        factors = [z] * j + [lower] + [np.eye(2)] * (3 - j)
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ann.append(op)
    return tuple(a.T.copy() for a in ann), tuple(ann)


def fock_operators() -> FockOperatorAlgebra:
    """Creation/annihilation matrices on the 16-dim occupation space (mode 0r is the MSB)."""
    cre, ann = _fock_ops()
    return FockOperatorAlgebra(cre, ann)


def vacuum() -> np.ndarray:
    v = np.zeros(16)
    v[0] = 1.0
    return v


def _pair(i: int, j: int) -> np.ndarray:
    """First-quantized (|i>|j> - |j>|i>)/sqrt2 for single-particle indices i, j."""
    v = np.zeros(16, dtype=complex)
    v[4 * i + j] += 1 / math.sqrt(2)
    v[4 * j + i] -= 1 / math.sqrt(2)
    return v


@lru_cache(maxsize=None)
def _fock_to_fq() -> np.ndarray:
    w = np.zeros((16, 16), dtype=complex)
    for occ in range(16):
        modes = [j for j in range(4) if (occ >> (3 - j)) & 1]
        if len(modes) == 2:
            w[:, occ] = _pair(*modes)
    return w


def fock_to_first_quantized() -> np.ndarray:
    """Isometry from the two-particle Fock sector into first quantization.

    The column of the occupation ket with modes ``i < j`` occupied is
    ``(|i>|j> - |j>|i>)/sqrt2``; columns outside the sector are zero.
    """
    return _fock_to_fq().copy()


@lru_cache(maxsize=None)
def _alias() -> np.ndarray:
    v = np.zeros((16, 4), dtype=complex)
    for x in range(2):
        for y in range(2):
            v[:, 2 * x + y] = _pair(FermionMode(x, "r").index, FermionMode(y, "s").index)
    return v


def alias_isometry() -> np.ndarray:
    """16x4 map from the qubit alias ``(r, s)`` into the antisymmetric sector."""
    return _alias().copy()


def from_alias(state: StateVector) -> StateVector:
    if state.register != ALIAS:
        raise RegisterError(f"alias states live on {ALIAS}, got {state.register}")
    return StateVector(FIRST_QUANTIZED, _alias() @ state.amplitudes)


def to_alias(state: StateVector) -> StateVector:
    """Qubit-alias coordinates of a first-quantized state (drops both-on-one-site parts)."""
    if state.register != FIRST_QUANTIZED:
        raise RegisterError(f"expected a first-quantized state, got {state.register}")
    return StateVector(ALIAS, _alias().conj().T @ state.amplitudes)


def antisymmetric_sector() -> Subspace:
    """The six-dimensional space of two-fermion states."""
    w = _fock_to_fq()
    return Subspace(FIRST_QUANTIZED, w[:, np.abs(w).sum(axis=0) > 0])


def _product(spin: dict, site: dict) -> np.ndarray:
    """First-quantized vector of sum spin[(c1, c2)] site[(l1, l2)] |c1 c2>|l1 l2>."""
    v = np.zeros(16, dtype=complex)
    for (c1, c2), a in spin.items():
        for (l1, l2), b in site.items():
            m1 = FermionMode(c1, l1).index
            m2 = FermionMode(c2, l2).index
            v[4 * m1 + m2] += a * b
    return v


@dataclass(frozen=True, eq=False)
class NamedAntisymmetricState:
    label: str
    first_quantized: StateVector
    fock: StateVector
    alias: StateVector | None


def build_antisymmetric_basis() -> list[NamedAntisymmetricState]:
    """The six two-fermion states |a>..|f>, each in three notations."""
    h = 1 / math.sqrt(2)
    singlet = {(0, 1): h, (1, 0): -h}
    triplet0 = {(0, 1): h, (1, 0): h}
    rs_minus = {("r", "s"): h, ("s", "r"): -h}
    rs_plus = {("r", "s"): h, ("s", "r"): h}
    cre = _fock_ops()[0]
    c = {str(m): cre[m.index] for m in MODES}
    vac = vacuum()
    spec = [
        ("a", singlet, {("r", "r"): 1.0}, c["0r"] @ c["1r"] @ vac, None),
        ("b", singlet, {("s", "s"): 1.0}, c["0s"] @ c["1s"] @ vac, None),
        ("c", {(0, 0): 1.0}, rs_minus, c["0r"] @ c["0s"] @ vac, {"00": 1.0}),
        ("d", {(1, 1): 1.0}, rs_minus, c["1r"] @ c["1s"] @ vac, {"11": 1.0}),
        ("e", triplet0, rs_minus, h * (c["0r"] @ c["1s"] + c["1r"] @ c["0s"]) @ vac, {"01": h, "10": h}),
        ("f", singlet, rs_plus, h * (c["0r"] @ c["1s"] - c["1r"] @ c["0s"]) @ vac, {"01": h, "10": -h}),
    ]
    return [
        NamedAntisymmetricState(
            label,
            StateVector(FIRST_QUANTIZED, _product(spin, site)),
            StateVector(FOCK, fock),
            StateVector.from_dict(ALIAS, alias) if alias else None,
        )
        for label, spin, site, fock, alias in spec
    ]


def symmetric_impostors() -> dict[str, StateVector]:
    """|00>_rs and |11>_rs built with the symmetric spatial factor (not fermionic)."""
    h = 1 / math.sqrt(2)
    rs_plus = {("r", "s"): h, ("s", "r"): h}
    return {
        "00": StateVector(FIRST_QUANTIZED, _product({(0, 0): 1.0}, rs_plus)),
        "11": StateVector(FIRST_QUANTIZED, _product({(1, 1): 1.0}, rs_plus)),
    }


@dataclass(frozen=True)
class TransmissionHamiltonian:
    """Energies of |a>, |b> (both fermions on one site) and |c>, |d> (parallel spins).

    Requires ``E_a, E_b > E_c, E_d >= E > 0``.
    """

    E_a: float = 3.0
    E_b: float = 3.0
    E_c: float = 2.0
    E_d: float = 2.0
    E: float = 1.0

    def __post_init__(self):
        if not (self.E > 0 and min(self.E_c, self.E_d) >= self.E
                and min(self.E_a, self.E_b) > max(self.E_c, self.E_d)):
            raise ValueError(f"energy ordering E_a, E_b > E_c, E_d >= E > 0 violated by {self}")


def build_h_rs(energies: TransmissionHamiltonian = TransmissionHamiltonian()) -> LinearOperator:
    """E_a|a><a| + E_b|b><b| + E_c|c><c| + E_d|d><d| in first quantization."""
    basis = {s.label: s.first_quantized.amplitudes for s in build_antisymmetric_basis()}
    h = sum(
        e * np.outer(basis[x], basis[x].conj())
        for x, e in zip("abcd", (energies.E_a, energies.E_b, energies.E_c, energies.E_d))
    )
    return LinearOperator(FIRST_QUANTIZED, h, domain=antisymmetric_sector())


def h_rs_second_quantized(energies: TransmissionHamiltonian = TransmissionHamiltonian()) -> LinearOperator:
    """-(E_a a+0r a+1r a0r a1r + E_b ..s.. + E_c a+0r a+0s a0r a0s + E_d a+1r a+1s a1r a1s) on Fock space."""
    cre, ann = _fock_ops()
    pairs = [((0, 1), energies.E_a), ((2, 3), energies.E_b), ((0, 2), energies.E_c), ((1, 3), energies.E_d)]
    h = np.zeros((16, 16))
    for (i, j), e in pairs:
        h -= e * cre[i] @ cre[j] @ ann[i] @ ann[j]
    return LinearOperator(FOCK, h)


def ground_subspace(h: LinearOperator, within: Subspace | None = None, tol: float = 1e-9) -> Subspace:
    """Eigenvectors of the lowest eigenvalue of ``h`` inside ``within``.

    ``within`` defaults to the operator's declared domain, else the full space.
    """
    within = within if within is not None else h.domain
    if within is None:
        vals, vecs = np.linalg.eigh(h.matrix)
        basis = vecs
    else:
        b = within.basis
        vals, vecs = np.linalg.eigh(b.conj().T @ h.matrix @ b)
        basis = b @ vecs
    if vals.size == 0:
        return Subspace(h.register, np.zeros((2 ** len(h.register), 0)))
    ground = vals <= vals[0] + tol * max(1.0, abs(vals[0]))
    return Subspace.from_vectors(h.register, basis[:, ground].T)


def expected_energy(state: StateVector, energies: TransmissionHamiltonian = TransmissionHamiltonian()) -> float:
    """<psi|H_rs|psi> for a first-quantized state or a qubit-alias state."""
    if state.register == ALIAS:
        state = from_alias(state)
    h = build_h_rs(energies).matrix
    return float(np.vdot(state.amplitudes, h @ state.amplitudes).real)


def malfunction_probability(state: StateVector) -> float:
    """|gamma|^2 + |delta|^2: weight on |00> and |11> of an alias state."""
    if state.register != ALIAS:
        raise RegisterError(f"expected a qubit-alias state on {ALIAS}, got {state.register}")
    a = state.amplitudes
    return float(abs(a[0]) ** 2 + abs(a[3]) ** 2)


def leakage_state(alpha: complex, beta: complex, gamma: complex, delta: complex) -> StateVector:
    """alpha|01> + beta|10> + gamma|00> + delta|11>, as given (not renormalized)."""
    return StateVector(ALIAS, np.array([gamma, alpha, beta, delta], dtype=complex))


def random_leakage_state(rng: np.random.Generator) -> StateVector:
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    z /= np.linalg.norm(z)
    return leakage_state(z[0], z[1], z[2], z[3])


@dataclass(frozen=True, eq=False)
class EmbeddedTrace:
    """A transmission run carried out inside the two-fermion space.

    ``alias`` is the trace in qubit-alias coordinates; ``vectors`` holds the
    matching first-quantized states and ``energies`` their <H_rs>.
    """

    alias: EvolutionTrace
    vectors: np.ndarray
    energies: np.ndarray

    def __len__(self):
        return len(self.alias)

    @property
    def phis(self):
        return self.alias.phis

    def state(self, i: int) -> StateVector:
        return StateVector(FIRST_QUANTIZED, self.vectors[i])


def _ground_kets(ground: Subspace) -> np.ndarray:
    q = _alias().conj().T @ ground.basis
    proj = q @ q.conj().T
    kets = np.flatnonzero(proj.diagonal().real > 1 - 1e-9)
    expected = np.zeros((4, 4), dtype=complex)
    expected[kets, kets] = 1.0
    if np.abs(proj - expected).max() > 1e-9:
        raise InfeasibleError("ground sector is not spanned by alias kets")
    return kets


def embedded_evolution(theta0: float, phi_total: float, steps: int | None = None,
                       energies: TransmissionHamiltonian = TransmissionHamiltonian(),
                       tol: float = 1e-9) -> EmbeddedTrace:
    """Drive spin r from ``theta0`` through ``phi_total`` inside the fermion space.

    Each step keeps the state antisymmetric, meets the prescribed diagonal of
    the spin-r density matrix, stays closest to the previous state, and keeps
    the transmission energy at its minimum.  The last two conditions together
    confine the state to the ground sector of ``H_rs`` (energy 0), which is
    computed here numerically and mapped to qubit-alias kets.
    """
    steps = default_steps(phi_total) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = build_h_rs(energies)
    kets = _ground_kets(ground_subspace(h))
    drive = DriveRotation("r", theta0, phi_total, 1.0, from_bit=0)
    times = np.linspace(0.0, 1.0, steps + 1)
    init = np.array([math.cos(theta0), math.sin(theta0)], dtype=complex)
    init_alias = np.zeros(4, dtype=complex)
    init_alias[[1, 2]] = init
    trace = _dynamics.integrate(ALIAS, kets, init_alias[kets], [0], [[drive.p_one(t)] for t in times],
                                phi_total * times, tol=tol)
    if not trace.feasible:
        raise InfeasibleError("embedded drive became infeasible", trace.halt_residual, trace.halted_at)
    vectors = trace.coords @ _alias()[:, kets].T
    hm = h.matrix
    energies_ = np.einsum("ti,ij,tj->t", vectors.conj(), hm, vectors).real
    return EmbeddedTrace(trace, vectors, energies_)


def relaxation_time(sigma: float, p_n: float, n: int) -> float:
    """Shortest t with (1 - exp(-sigma t))**n >= p_n.

    Each of ``n`` independent transmissions is on ground with probability
    ``1 - exp(-sigma t)``.
    """
    if sigma <= 0 or n < 1:
        raise ValueError("need sigma > 0 and n >= 1")
    if not 0 < p_n < 1:
        raise ValueError(f"target probability {p_n} is unreachable; need 0 < p_n < 1")
    return -math.log(-math.expm1(math.log(p_n) / n)) / sigma


def all_ground_probability(sigma: float, t: float, n: int) -> float:
    return math.exp(n * math.log1p(-math.exp(-sigma * t))) if t > 0 else 0.0


def simulate_all_ground(sigma: float, t: float, n: int, trials: int, seed: int) -> float:
    """Monte Carlo fraction of trials in which all ``n`` transmissions are on ground."""
    rng = np.random.default_rng(seed)
    p = -math.expm1(-sigma * t)
    return float(np.mean(rng.binomial(n, p, size=trials) == n))
