"""Pure qudit states, orthonormal bases and projective measurement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
STRUCT_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """A normalised pure state of a d-level system."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError(f"state needs a 1-D amplitude vector of length >= 2, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised: <psi|psi> = {norm!r}")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_unnormalised(cls, amps: Sequence[complex]) -> StateVector:
        a = np.asarray(amps, dtype=complex)
        return cls(a / np.linalg.norm(a))

    @classmethod
    def basis_state(cls, d: int, k: int) -> StateVector:
        if not 0 <= k < d:
            raise ValueError(f"basis index {k} outside [0, {d})")
        a = np.zeros(d, dtype=complex)
        a[k] = 1.0
        return cls(a)

    @property
    def dim(self) -> int:
        return self.amps.size

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateVector) and np.array_equal(self.amps, other.amps)

    def __hash__(self) -> int:
        return hash(self.amps.tobytes())

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.amps, precision=4)})"


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


@dataclass(frozen=True, eq=False)
class Basis:
    """An orthonormal basis stored as a unitary matrix whose columns are the vectors."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"basis matrix must be square with d >= 2, got shape {m.shape}")
        dev = np.abs(m.conj().T @ m - np.eye(m.shape[0])).max()
        if dev > STRUCT_TOL:
            raise ValueError(f"basis vectors are not orthonormal (max deviation {dev:.3g})")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vectors(cls, vectors: Sequence[StateVector], label: str = "") -> Basis:
        return cls(np.column_stack([v.amps for v in vectors]), label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> tuple[StateVector, ...]:
        return tuple(StateVector(self.matrix[:, k]) for k in range(self.dim))

    def __getitem__(self, k: int) -> StateVector:
        return StateVector(self.matrix[:, k])

    def __len__(self) -> int:
        return self.dim

    def probabilities(self, state: StateVector) -> np.ndarray:
        """Born probabilities |<b_k|psi>|^2 for every basis vector."""
        if state.dim != self.dim:
            raise ValueError(f"dimension mismatch: state {state.dim}, basis {self.dim}")
        return np.abs(self.matrix.conj().T @ state.amps) ** 2


@dataclass(frozen=True, eq=False)
class BasisSet:
    """An ordered collection of mutually unbiased bases of one dimension."""

    bases: tuple[Basis, ...]

    def __post_init__(self):
        bases = tuple(self.bases)
        if len(bases) < 1:
            raise ValueError("basis set is empty")
        dims = {b.dim for b in bases}
        if len(dims) != 1:
            raise ValueError(f"bases have mixed dimensions {sorted(dims)}")
        d = dims.pop()
        if len(bases) > d + 1:
            raise ValueError(f"at most d+1 = {d + 1} mutually unbiased bases exist, got {len(bases)}")
        object.__setattr__(self, "bases", bases)
        dev = self.max_overlap_deviation()
        if dev > STRUCT_TOL:
            raise ValueError(f"bases are not mutually unbiased (max deviation {dev:.3g})")

    @property
    def dim(self) -> int:
        return self.bases[0].dim

    @property
    def m(self) -> int:
        return len(self.bases)

    def __len__(self) -> int:
        return len(self.bases)

    def __getitem__(self, i: int) -> Basis:
        return self.bases[i]

    def __iter__(self):
        return iter(self.bases)

    @property
    def matrices(self) -> np.ndarray:
        """Stacked (m, d, d) array; ``matrices[b][:, k]`` is vector k of basis b."""
        out = np.stack([b.matrix for b in self.bases])
        out.setflags(write=False)
        return out

    def max_overlap_deviation(self) -> float:
        """Largest | |<a|b>|^2 - 1/d | over all cross-basis vector pairs."""
        d = self.dim
        worst = 0.0
        for i, a in enumerate(self.bases):
            for b in self.bases[i + 1:]:
                ov = np.abs(a.matrix.conj().T @ b.matrix) ** 2
                worst = max(worst, float(np.abs(ov - 1.0 / d).max()))
        return worst

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "m": self.m,
            "bases": [
                [[[float(z.real), float(z.imag)] for z in b.matrix[:, k]] for k in range(self.dim)]
                for b in self.bases
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> BasisSet:
        bases = []
        for vecs in doc["bases"]:
            cols = [[complex(re, im) for re, im in v] for v in vecs]
            bases.append(Basis(np.array(cols, dtype=complex).T))
        out = cls(tuple(bases))
        if out.dim != doc["dim"] or out.m != doc["m"]:
            raise ValueError("header does not match the stored bases")
        return out


def computational_basis(d: int) -> Basis:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return Basis(np.eye(d, dtype=complex), "computational")


def dqft_matrix(d: int) -> np.ndarray:
    """Unitary with entries w^(ij)/sqrt(d), w = exp(2*pi*i/d); column i is vector i."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    j = np.arange(d)
    # reduce the exponent mod d first so large products keep full precision
    return np.exp(2j * np.pi * (np.outer(j, j) % d) / d) / np.sqrt(d)


def dqft_basis(d: int) -> Basis:
    """The discrete quantum Fourier basis: |phi_i> = sum_j w^(ij) |j> / sqrt(d)."""
    return Basis(dqft_matrix(d), "fourier")


def born_probabilities(states: np.ndarray, basis_matrices: np.ndarray) -> np.ndarray:
    """Row-wise Born probabilities.

    ``states`` is (N, d); ``basis_matrices`` is (N, d, d) (one basis per row) or a
    single (d, d) matrix. Returns (N, d).
    """
    if basis_matrices.ndim == 2:
        amps = states @ basis_matrices.conj()
    else:
        amps = np.einsum("nji,nj->ni", basis_matrices.conj(), states)
    return np.abs(amps) ** 2


def sample_from_probabilities(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling, one uniform per row of ``probs``."""
    cdf = np.cumsum(probs, axis=-1)
    cdf /= cdf[..., -1:]
    idx = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def born_sample(state: StateVector, basis: Basis, rng: np.random.Generator) -> int:
    """Measure ``state`` in ``basis``; outcome k has probability |<b_k|state>|^2."""
    probs = basis.probabilities(state)
    return int(sample_from_probabilities(probs, np.array(rng.random())))
