"""Hilbert space, state vectors, Hermitian operators and Dicke states.

The simulation space is N optical qubits times one truncated harmonic
oscillator (the axial center-of-mass mode).  Qubit levels are written
``'d'`` (down, the fluorescing ground state) and ``'u'`` (up, the shelved
state); a spin word is a string such as ``"du"`` with ion 1 first.

Basis ordering convention (frozen, all modules depend on it):

    index(spins, n) = spin_index * (n_max + 1) + n

where ``spin_index`` reads the spin word as a big-endian binary number with
``u = 1`` (``"dd" -> 0``, ``"du" -> 1``, ``"ud" -> 2``, ``"uu" -> 3``), i.e.
the ordering is spin-major with the Fock index ascending fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from .errors import ResourceGuardError

SPIN_DOWN = "d"
SPIN_UP = "u"

#: Unicode arrows accepted as input aliases for spin labels.
_SPIN_ALIASES = {"↓": SPIN_DOWN, "↑": SPIN_UP, "d": SPIN_DOWN, "u": SPIN_UP}

DEFAULT_DIM_CAP = 4096

NORM_TOL = 1e-9
HERMITICITY_TOL = 1e-12


def normalize_spins(spins) -> str:
    """Coerce a spin word (string or sequence, arrows allowed) to 'd'/'u' form."""
    out = []
    for s in spins:
        if s not in _SPIN_ALIASES:
            raise ValueError(f"invalid spin label {s!r}; expected 'd'/'u' or arrows")
        out.append(_SPIN_ALIASES[s])
    return "".join(out)


@dataclass(frozen=True)
class BasisState:
    """One product basis state: a spin word and a motional quantum number."""

    spins: str
    fock_n: int

    def __post_init__(self):
        object.__setattr__(self, "spins", normalize_spins(self.spins))
        if self.fock_n < 0:
            raise ValueError(f"fock_n must be nonnegative, got {self.fock_n}")

    @property
    def n_up(self) -> int:
        return self.spins.count(SPIN_UP)

    def __str__(self) -> str:
        arrows = self.spins.replace("d", "↓").replace("u", "↑")
        return f"|{arrows},{self.fock_n}>"


@dataclass(frozen=True)
class HilbertSpace:
    """N qubits times a Fock space truncated at ``n_max`` quanta.

    Operators are built dense (the spaces used here stay below a few
    thousand dimensions) and cached on first use.  Instances are immutable
    and safe to share.
    """

    n_qubits: int
    n_max: int

    @property
    def n_fock(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2**self.n_qubits * self.n_fock

    def index(self, spins, fock_n: int) -> int:
        """Basis index of ``|spins, fock_n>`` under the frozen ordering."""
        spins = normalize_spins(spins)
        if len(spins) != self.n_qubits:
            raise ValueError(
                f"spin word {spins!r} has {len(spins)} labels, space has {self.n_qubits} qubits"
            )
        if not 0 <= fock_n <= self.n_max:
            raise ValueError(f"fock_n={fock_n} outside truncation [0, {self.n_max}]")
        spin_index = int(spins.replace(SPIN_DOWN, "0").replace(SPIN_UP, "1"), 2)
        return spin_index * self.n_fock + fock_n

    def basis_state(self, index: int) -> BasisState:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} outside [0, {self.dim})")
        spin_index, fock_n = divmod(index, self.n_fock)
        word = format(spin_index, f"0{self.n_qubits}b")
        spins = word.replace("0", SPIN_DOWN).replace("1", SPIN_UP)
        return BasisState(spins, fock_n)

    def basis_states(self):
        return [self.basis_state(i) for i in range(self.dim)]

    # ------------------------------------------------------------------
    # dense operator building blocks (plain ndarrays, cached)
    # ------------------------------------------------------------------

    @cached_property
    def annihilation(self) -> np.ndarray:
        """COM-mode annihilation operator ``a`` on the full space."""
        a = np.diag(np.sqrt(np.arange(1, self.n_fock)), 1)
        return np.kron(np.eye(2**self.n_qubits), a)

    @cached_property
    def fock_number(self) -> np.ndarray:
        """Motional number operator ``a'a``."""
        n = np.diag(np.arange(self.n_fock, dtype=float))
        return np.kron(np.eye(2**self.n_qubits), n)

    def _qubit_op(self, ion: int, op2: np.ndarray) -> np.ndarray:
        """Lift a 2x2 single-qubit operator acting on ``ion`` (0-based)."""
        if not 0 <= ion < self.n_qubits:
            raise ValueError(f"ion index {ion} outside [0, {self.n_qubits})")
        mat = np.eye(1)
        for j in range(self.n_qubits):
            mat = np.kron(mat, op2 if j == ion else np.eye(2))
        return np.kron(mat, np.eye(self.n_fock))

    def sigma_plus(self, ion: int) -> np.ndarray:
        """``|u><d|`` on one ion."""
        return self._qubit_op(ion, np.array([[0.0, 0.0], [1.0, 0.0]]))

    def sigma_x(self, ion: int) -> np.ndarray:
        return self._qubit_op(ion, np.array([[0.0, 1.0], [1.0, 0.0]]))

    def up_projector(self, ion: int) -> np.ndarray:
        return self._qubit_op(ion, np.array([[0.0, 0.0], [0.0, 1.0]]))

    @cached_property
    def atom_number(self) -> np.ndarray:
        """Number of ions in the up state, summed over ions."""
        return sum(self.up_projector(j) for j in range(self.n_qubits))

    @cached_property
    def excitation_number(self) -> np.ndarray:
        """Total excitation number: up-state ions plus motional quanta."""
        return self.atom_number + self.fock_number

    @cached_property
    def swap_xchg(self) -> np.ndarray:
        """Two-ion swap operator (N = 2 only)."""
        if self.n_qubits != 2:
            raise ValueError("swap operator defined for two ions")
        perm = np.zeros((4, 4))
        for i, word in enumerate(["dd", "du", "ud", "uu"]):
            j = int(word[::-1].replace("d", "0").replace("u", "1"), 2)
            perm[j, i] = 1.0
        return np.kron(perm, np.eye(self.n_fock))

    def fock_slice_weight(self, amplitudes: np.ndarray, fock_n: int) -> float:
        """Total population sitting at one motional quantum number."""
        idx = np.arange(2**self.n_qubits) * self.n_fock + fock_n
        return float(np.sum(np.abs(amplitudes[idx]) ** 2))


def build_space(n_qubits: int, n_max: int, dim_cap: int = DEFAULT_DIM_CAP) -> HilbertSpace:
    """Construct the qubits-times-oscillator space with a dimension guard."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    dim = 2**n_qubits * (n_max + 1)
    if dim > dim_cap:
        raise ResourceGuardError(
            f"requested space has dim={dim}, exceeding the cap of {dim_cap}"
        )
    return HilbertSpace(n_qubits, n_max)


@dataclass
class StateVector:
    """Complex amplitudes over a :class:`HilbertSpace`.

    States are unit-normalized; scratch states that are deliberately
    unnormalized must be flagged with ``unnormalized=True``.
    """

    space: HilbertSpace
    amplitudes: np.ndarray
    unnormalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({self.space.dim},)"
            )
        if not self.unnormalized and abs(self.norm_sq - 1.0) > NORM_TOL:
            raise ValueError(
                f"state norm^2 = {self.norm_sq:.12g} deviates from 1 by more than {NORM_TOL}"
            )

    @property
    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product ``<self|other>``."""
        if other.space != self.space:
            raise ValueError("states live in different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def squared_overlap(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def population(self, spins, fock_n: int) -> float:
        return abs(self.amplitudes[self.space.index(spins, fock_n)]) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.space, self.amplitudes.copy(), self.unnormalized)


@dataclass
class HermitianOperator:
    """A dense Hermitian matrix tied to its space; hermiticity is asserted."""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape}, expected ({d}, {d})")
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > HERMITICITY_TOL * scale:
            raise ValueError("matrix is not Hermitian within tolerance")


def embed(space: HilbertSpace, spins, fock_n: int) -> StateVector:
    """Unit basis vector ``|spins, fock_n>``."""
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[space.index(spins, fock_n)] = 1.0
    return StateVector(space, amplitudes)


def dicke_spin_words(n_qubits: int, m: int):
    """All spin words with ``m`` ions up, in index order."""
    words = []
    for ups in combinations(range(n_qubits), m):
        word = [SPIN_DOWN] * n_qubits
        for j in ups:
            word[j] = SPIN_UP
        words.append("".join(word))
    return sorted(words)


def make_dicke(n_qubits: int, m: int, space: HilbertSpace | None = None) -> StateVector:
    """Equal-amplitude symmetric superposition of all spin words with m ups.

    The motional factor is ``|0>``.  With ``space=None`` the state lives in a
    motionless space (``n_max = 0``); pass a space to embed it there instead.
    """
    if not 0 <= m <= n_qubits:
        raise ValueError(f"excitation number m={m} outside [0, {n_qubits}]")
    if space is None:
        space = HilbertSpace(n_qubits, 0)
    elif space.n_qubits != n_qubits:
        raise ValueError(
            f"space has {space.n_qubits} qubits, Dicke state needs {n_qubits}"
        )
    amplitudes = np.zeros(space.dim, dtype=complex)
    amp = 1.0 / np.sqrt(comb(n_qubits, m))
    for word in dicke_spin_words(n_qubits, m):
        amplitudes[space.index(word, 0)] = amp
    return StateVector(space, amplitudes)


def expectation(op: HermitianOperator, psi: StateVector) -> float:
    """``<psi|O|psi>`` with the (relative) imaginary residual checked and dropped."""
    if op.space != psi.space:
        raise ValueError("operator and state live in different spaces")
    value = complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes))
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ValueError(f"expectation value has imaginary residual {value.imag:.3e}")
    return value.real
