"""Single-qubit Clifford group over the hardware-native generator set.

The only gates the hardware plays are +-90 degree rotations about the x and
y axes of the rotating frame (phase 0 or 90 degrees, sign flips realised as
180 degree phase offsets).  Everything else -- the 24-element Clifford
group, its composition and inverse tables, and the minimal pulse word for
each element -- is derived from those four generators.

Conventions
-----------
* A rotation by angle ``theta`` about the equatorial axis with phase ``phi``
  is ``R(phi, theta) = exp(-i * theta/2 * (cos(phi) sx + sin(phi) sy))``,
  so ``+X90`` maps |0> to (|0> - i|1>)/sqrt(2).
* Words are stored in temporal order: the first label is played first, i.e.
  the matrix of a word ``(g1, g2, ...)`` is ``... @ U(g2) @ U(g1)``.
* Global phase is fixed by making the first row-major entry with magnitude
  above tolerance real and positive; all table lookups compare canonical
  matrices.
* ``compose(i, j)`` is "apply i, then j".

The breadth-first search assigns indices in discovery order (identity is 0,
the four generators are 1..4) and, within a word length, prefers the
lexicographically first word under the label order +X90 < +Y90 < -X90 <
-Y90.  The resulting minimal word lengths are {0: 1, 1: 4, 2: 10, 3: 8,
4: 1} -- the lone length-4 element is the 180-degree z rotation -- giving a
mean of 52/24 = 2.1667 pulses per Clifford.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GENERATOR_LABELS",
    "QubitState",
    "UnitaryOp",
    "PulseSpec",
    "CliffordElement",
    "CliffordGroup",
    "GateSequence",
    "build_clifford_table",
    "decompose_clifford",
    "min_pulse_decomposition",
    "recovery_gate",
    "canonicalize_phase",
]

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID = np.eye(2, dtype=complex)

#: Expansion / tie-break order for the generator search (lexicographic).
GENERATOR_LABELS = ("+X90", "+Y90", "-X90", "-Y90")

_PHASE_TOL = 1e-9


def _axis_matrix(phase: float) -> np.ndarray:
    return np.cos(phase) * _SX + np.sin(phase) * _SY


def rotation_matrix(phase: float, angle: float) -> np.ndarray:
    """2x2 propagator for a rotation by `angle` about the equatorial axis `phase`."""
    return np.cos(angle / 2) * _ID - 1j * np.sin(angle / 2) * _axis_matrix(phase)


_GENERATOR_MATRICES = {
    "+X90": rotation_matrix(0.0, np.pi / 2),
    "-X90": rotation_matrix(0.0, -np.pi / 2),
    "+Y90": rotation_matrix(np.pi / 2, np.pi / 2),
    "-Y90": rotation_matrix(np.pi / 2, -np.pi / 2),
}


def canonicalize_phase(matrix: np.ndarray, tol: float = _PHASE_TOL) -> np.ndarray:
    """Remove the global phase: first row-major entry above `tol` becomes real-positive."""
    flat = matrix.reshape(-1)
    big = np.abs(flat) > tol
    if not big.any():
        raise ValueError("matrix is numerically zero; cannot fix global phase")
    pivot = flat[int(np.argmax(big))]
    return matrix * (abs(pivot) / pivot)


def _table_key(matrix: np.ndarray) -> tuple:
    canon = canonicalize_phase(matrix)
    return tuple(np.round(canon.reshape(-1), 8).tolist())


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QubitState:
    """Pure state of the two-level system, stored as a normalized complex pair."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(2)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state norm {norm} deviates from 1 beyond tolerance")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls) -> "QubitState":
        return cls(np.array([1.0, 0.0], dtype=complex))

    @classmethod
    def one(cls) -> "QubitState":
        return cls(np.array([0.0, 1.0], dtype=complex))

    @classmethod
    def basis(cls, index: int) -> "QubitState":
        return cls.zero() if index == 0 else cls.one()

    def probability(self, basis_state: int) -> float:
        return float(abs(self.amplitudes[basis_state]) ** 2)

    def overlap(self, other: "QubitState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QubitState") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def bloch_vector(self) -> np.ndarray:
        a = self.amplitudes
        return np.array(
            [
                2 * (a[0].conjugate() * a[1]).real,
                2 * (a[0].conjugate() * a[1]).imag,
                abs(a[0]) ** 2 - abs(a[1]) ** 2,
            ]
        )


@dataclass(frozen=True)
class UnitaryOp:
    """A 2x2 unitary, validated on construction."""

    matrix: np.ndarray
    _tol: float = 1e-9

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex).reshape(2, 2)
        defect = np.max(np.abs(mat.conj().T @ mat - _ID))
        if defect > self._tol:
            raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls) -> "UnitaryOp":
        return cls(_ID.copy())

    @classmethod
    def rotation(cls, phase: float, angle: float) -> "UnitaryOp":
        return cls(rotation_matrix(phase, angle))

    @classmethod
    def rz(cls, angle: float) -> "UnitaryOp":
        return cls(np.diag([np.exp(-1j * angle / 2), np.exp(1j * angle / 2)]))

    def apply(self, state: QubitState) -> QubitState:
        return QubitState(self.matrix @ state.amplitudes)

    def compose(self, then: "UnitaryOp") -> "UnitaryOp":
        """Return the unitary 'self first, `then` second'."""
        return UnitaryOp(then.matrix @ self.matrix)

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T)

    def equal_up_to_phase(self, other: "UnitaryOp", tol: float = 1e-8) -> bool:
        try:
            a = canonicalize_phase(self.matrix)
            b = canonicalize_phase(other.matrix)
        except ValueError:
            return False
        return bool(np.max(np.abs(a - b)) <= tol)


@dataclass(frozen=True)
class PulseSpec:
    """One hardware pi/2 pulse.

    Attributes
    ----------
    phase:
        Rotation-axis phase in rad (0 = x, pi/2 = y).
    sign:
        +1 or -1; negative pulses are played as a 180-degree phase offset.
    t_half_pi:
        Total pulse duration in seconds, *including* both amplitude ramps.
    ramp_time:
        Duration of each ramp (s).
    gap_time:
        Free-evolution gap appended after the pulse (s).
    amp_scale:
        Requested amplitude as a fraction of full scale, in (0, 1].
    """

    phase: float
    sign: int = 1
    t_half_pi: float = 6.0e-6
    ramp_time: float = 40e-9
    gap_time: float = 40e-9
    amp_scale: float = 1.0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if not 0.0 < self.amp_scale <= 1.0:
            raise ValueError("amp_scale must lie in (0, 1]")
        if self.t_half_pi <= 2 * self.ramp_time:
            raise ValueError("t_half_pi must exceed twice the ramp time")
        if self.ramp_time < 0 or self.gap_time < 0:
            raise ValueError("ramp_time and gap_time must be non-negative")

    @property
    def effective_phase(self) -> float:
        """Axis phase actually programmed (sign folded in as a 180-deg offset)."""
        return self.phase if self.sign > 0 else self.phase + np.pi

    @property
    def flat_time(self) -> float:
        return self.t_half_pi - 2 * self.ramp_time

    @property
    def total_time(self) -> float:
        return self.t_half_pi + self.gap_time

    def ideal_unitary(self) -> UnitaryOp:
        return UnitaryOp.rotation(self.phase, self.sign * np.pi / 2)


def pulse_from_label(label: str, **kwargs) -> PulseSpec:
    """Build the PulseSpec for a generator label such as '+X90' or '-Y90'."""
    if label not in GENERATOR_LABELS and label not in ("-X90", "-Y90"):
        raise ValueError(f"unknown generator label {label!r}")
    sign = 1 if label[0] == "+" else -1
    phase = 0.0 if label[1] == "X" else np.pi / 2
    return PulseSpec(phase=phase, sign=sign, **kwargs)


@dataclass(frozen=True)
class CliffordElement:
    """One element of the 24-element group with its minimal pulse word."""

    index: int
    matrix: np.ndarray  # canonical-phase 2x2
    pulses: tuple[str, ...]

    def unitary(self) -> UnitaryOp:
        return UnitaryOp(self.matrix)

    @property
    def pulse_count(self) -> int:
        return len(self.pulses)


@dataclass(frozen=True)
class GateSequence:
    """A benchmarking sequence: random Cliffords plus the recovery element."""

    cliffords: tuple[int, ...]
    recovery: int
    prepared_state: int = 0
    shelve_choice: str = "expected"

    def __post_init__(self):
        if self.prepared_state not in (0, 1):
            raise ValueError("prepared_state must be 0 or 1")
        if self.shelve_choice not in ("expected", "other"):
            raise ValueError("shelve_choice must be 'expected' or 'other'")

    @property
    def length(self) -> int:
        return len(self.cliffords)

    def all_indices(self) -> tuple[int, ...]:
        return self.cliffords + (self.recovery,)


# ---------------------------------------------------------------------------
# Group construction
# ---------------------------------------------------------------------------


@dataclass
class CliffordGroup:
    """The full group: elements, composition table, inverses, lookup."""

    elements: list[CliffordElement]
    compose_table: np.ndarray  # [i, j] -> index of (i then j)
    inverse_table: np.ndarray
    _index_by_key: dict = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def identity_index(self) -> int:
        return 0

    @property
    def mean_pulses_per_clifford(self) -> float:
        """Mean minimal word length; all budget formulas use this constant."""
        return float(np.mean([e.pulse_count for e in self.elements]))

    @property
    def max_pulses_per_clifford(self) -> int:
        return max(e.pulse_count for e in self.elements)

    def compose(self, first: int, then: int) -> int:
        return int(self.compose_table[first, then])

    def inverse(self, index: int) -> int:
        return int(self.inverse_table[index])

    def find_index(self, unitary: UnitaryOp | np.ndarray, tol: float = 1e-8) -> int:
        matrix = unitary.matrix if isinstance(unitary, UnitaryOp) else np.asarray(unitary)
        key = _table_key(matrix)
        if key in self._index_by_key:
            return self._index_by_key[key]
        # slow path for matrices with rounding noise
        canon = canonicalize_phase(matrix)
        for elem in self.elements:
            if np.max(np.abs(elem.matrix - canon)) <= tol:
                return elem.index
        raise KeyError("matrix is not a Clifford element within tolerance")

    def fold(self, indices: Iterable[int]) -> int:
        """Compose a temporal sequence of element indices into one element."""
        acc = self.identity_index
        for idx in indices:
            acc = self.compose(acc, int(idx))
        return acc

    def to_json(self) -> str:
        payload = {
            "format": "qubitbench.clifford_table.v1",
            "generator_order": list(GENERATOR_LABELS),
            "elements": [
                {
                    "index": e.index,
                    "pulses": list(e.pulses),
                    "matrix": [
                        [[z.real, z.imag] for z in row] for row in e.matrix.tolist()
                    ],
                }
                for e in self.elements
            ],
            "compose": self.compose_table.tolist(),
            "inverse": self.inverse_table.tolist(),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CliffordGroup":
        payload = json.loads(text)
        if payload.get("format") != "qubitbench.clifford_table.v1":
            raise ValueError("unrecognized clifford table format")
        elements = []
        for rec in payload["elements"]:
            matrix = np.array(
                [[complex(re, im) for re, im in row] for row in rec["matrix"]]
            )
            elements.append(
                CliffordElement(rec["index"], matrix, tuple(rec["pulses"]))
            )
        group = cls(
            elements=elements,
            compose_table=np.array(payload["compose"], dtype=int),
            inverse_table=np.array(payload["inverse"], dtype=int),
        )
        group._index_by_key = {_table_key(e.matrix): e.index for e in elements}
        return group


def word_matrix(word: Sequence[str]) -> np.ndarray:
    """Matrix of a pulse word applied in temporal order."""
    mat = _ID.copy()
    for label in word:
        mat = _GENERATOR_MATRICES[label] @ mat
    return mat


_GROUP_CACHE: CliffordGroup | None = None


def build_clifford_table() -> CliffordGroup:
    """Enumerate the group by breadth-first search over generator words.

    Returns a cached instance: the table is deterministic, so all callers
    share one copy.
    """
    global _GROUP_CACHE
    if _GROUP_CACHE is not None:
        return _GROUP_CACHE

    elements: list[CliffordElement] = []
    index_by_key: dict = {}

    identity = canonicalize_phase(_ID.copy())
    elements.append(CliffordElement(0, identity, ()))
    index_by_key[_table_key(identity)] = 0

    frontier: list[tuple[tuple[str, ...], np.ndarray]] = [((), _ID.copy())]
    while frontier:
        next_frontier = []
        for word, mat in frontier:
            for label in GENERATOR_LABELS:
                new_mat = _GENERATOR_MATRICES[label] @ mat
                key = _table_key(new_mat)
                if key in index_by_key:
                    continue
                new_word = word + (label,)
                idx = len(elements)
                elements.append(
                    CliffordElement(idx, canonicalize_phase(new_mat), new_word)
                )
                index_by_key[key] = idx
                next_frontier.append((new_word, new_mat))
        frontier = next_frontier

    n = len(elements)
    if n != 24:
        raise RuntimeError(f"expected 24 Clifford elements, found {n}")

    compose = np.zeros((n, n), dtype=int)
    for i, ei in enumerate(elements):
        for j, ej in enumerate(elements):
            compose[i, j] = index_by_key[_table_key(ej.matrix @ ei.matrix)]
    inverse = np.zeros(n, dtype=int)
    for i, ei in enumerate(elements):
        inverse[i] = index_by_key[_table_key(ei.matrix.conj().T)]

    group = CliffordGroup(
        elements=elements, compose_table=compose, inverse_table=inverse
    )
    group._index_by_key = index_by_key
    _GROUP_CACHE = group
    return group


def decompose_clifford(index: int, group: CliffordGroup | None = None) -> tuple[str, ...]:
    """Minimal pulse word for element `index`, from the fixed table."""
    group = group or build_clifford_table()
    return group.elements[index].pulses


def min_pulse_decomposition(
    target: UnitaryOp | np.ndarray | int,
    group: CliffordGroup | None = None,
    max_len: int = 4,
) -> tuple[str, ...]:
    """Independent oracle: exhaustively enumerate words by length, then rank.

    Unlike ``decompose_clifford`` this does not consult the stored table; it
    scans all words of length 0..max_len in lexicographic order and returns
    the first that reproduces the target up to global phase.
    """
    import itertools

    if isinstance(target, int):
        group = group or build_clifford_table()
        target_mat = group.elements[target].matrix
    else:
        target_mat = target.matrix if isinstance(target, UnitaryOp) else np.asarray(target)
    target_canon = canonicalize_phase(target_mat)

    for length in range(max_len + 1):
        for word in itertools.product(GENERATOR_LABELS, repeat=length):
            candidate = canonicalize_phase(word_matrix(word))
            if np.max(np.abs(candidate - target_canon)) <= 1e-8:
                return word
    raise ValueError(f"no generator word of length <= {max_len} matches target")


def recovery_gate(cliffords: Sequence[int], group: CliffordGroup | None = None) -> int:
    """Index of the element that closes the sequence back to the identity."""
    group = group or build_clifford_table()
    return group.inverse(group.fold(cliffords))
