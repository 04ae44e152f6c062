"""Prepare / measure / sift / parameter-estimation logic for each protocol.

Every stochastic step consumes uniforms in [0, 1) from the caller, which is
what lets the simulation engine address per-pulse randomness by counter.
The single-pulse functions (:func:`prepare`, :func:`measure`) draw those
uniforms from a ``numpy.random.Generator`` and delegate to the batch versions,
so both paths share one implementation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np

from .quditmath import BasisSet, StateVector, born_probabilities, mub_set, sample_from_probabilities

INCONCLUSIVE = -1
CHAU02_TABLE_SIFT_RATE = 0.5
DEFAULT_SAMPLE_FRACTION = 0.1


class ProtocolKind(str, enum.Enum):
    BB84 = "BB84"
    MUB = "MUB"
    CHAU15 = "CHAU15"
    CHAU02 = "CHAU02"

    @classmethod
    def parse(cls, value) -> ProtocolKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown protocol kind {value!r}; expected one of {[k.value for k in cls]}"
            ) from None


def _index_from_uniform(u: np.ndarray, n: int) -> np.ndarray:
    return np.minimum((np.asarray(u) * n).astype(np.int64), n - 1)


@dataclass(frozen=True)
class ProtocolSpec:
    """Which protocol runs, in which dimension, with which basis choice weights.

    ``num_bases`` defaults to 2 for BB84, d+1 for MUB and 3 for CHAU02 (which
    is fixed to d = 2). CHAU15 ignores it and requires d = 2^N with N >= 2.
    """

    kind: ProtocolKind
    dim: int
    num_bases: int | None = None
    basis_bias: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = ProtocolKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        d = self.dim
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 2:
            raise ValueError(f"protocol.d must be an integer >= 2, got {d!r}")
        object.__setattr__(self, "dim", int(d))
        m = self.num_bases
        if kind is ProtocolKind.BB84:
            if m not in (None, 2):
                raise ValueError(f"BB84 uses exactly 2 bases, got m={m}")
            m = 2
        elif kind is ProtocolKind.MUB:
            m = d + 1 if m is None else int(m)
            if m < 2:
                raise ValueError(f"m must be >= 2, got m={m}")
            if m > d + 1:
                raise ValueError(f"m > d+1: m={m}, d={d}")
        elif kind is ProtocolKind.CHAU02:
            if d != 2:
                raise ValueError(f"CHAU02 is a qubit protocol (d=2), got d={d}")
            if m not in (None, 3):
                raise ValueError(f"CHAU02 uses the 3 Pauli bases, got m={m}")
            m = 3
        else:
            if d < 4 or d & (d - 1):
                raise ValueError(f"d must be a power of two >= 4 for CHAU15, got d={d}")
            if self.basis_bias is not None:
                raise ValueError("CHAU15 chooses subspace pairs uniformly; basis_bias is not allowed")
            m = None
        object.__setattr__(self, "num_bases", m)
        if m is not None:
            # mub_set raises for unsupported (d, m) combinations
            mub_set(d, m)
            if self.basis_bias is None:
                bias = tuple([1.0 / m] * m)
            else:
                bias = tuple(float(b) for b in self.basis_bias)
                if len(bias) != m:
                    raise ValueError(f"basis_bias needs {m} entries, got {len(bias)}")
                if any(b < 0 for b in bias):
                    raise ValueError(f"basis_bias entries must be non-negative: {bias}")
                if abs(math.fsum(bias) - 1.0) > 1e-12:
                    raise ValueError(f"basis_bias must sum to 1, got {math.fsum(bias)!r}")
            object.__setattr__(self, "basis_bias", bias)

    @property
    def uses_pairs(self) -> bool:
        return self.kind is ProtocolKind.CHAU15

    @property
    def basis_set(self) -> BasisSet:
        if self.uses_pairs:
            raise AttributeError("CHAU15 does not measure in a basis set")
        return mub_set(self.dim, self.num_bases)

    @cached_property
    def pairs(self) -> np.ndarray:
        """All subspace pairs (i, j), i < j, in lexicographic order; shape (d(d-1)/2, 2)."""
        return np.array(list(combinations(range(self.dim), 2)), dtype=np.int64)

    @cached_property
    def _bias_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.basis_bias)
        cdf[-1] = 1.0
        return cdf

    def draw_choice(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms to a basis index (or a pair index for CHAU15)."""
        if self.uses_pairs:
            return _index_from_uniform(u, len(self.pairs))
        return np.minimum(np.searchsorted(self._bias_cdf, u, side="right"), self.num_bases - 1)

    def to_config(self) -> dict:
        out = {"kind": self.kind.value, "d": self.dim}
        if self.num_bases is not None:
            out["m"] = self.num_bases
            out["bias"] = list(self.basis_bias)
        return out


# per-pulse records ----------------------------------------------------------

@dataclass(frozen=True)
class PrepRecord:
    """Alice's choices for one pulse: key symbol plus basis index or subspace pair."""

    symbol: int
    basis_idx: int | None = None
    pair: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        if self.pair is not None:
            return {"symbol": self.symbol, "pair": list(self.pair)}
        return {"symbol": self.symbol, "basis": self.basis_idx}


@dataclass(frozen=True)
class MeasRecord:
    """Bob's choice and result; ``outcome`` is INCONCLUSIVE (-1) only for CHAU15."""

    outcome: int
    basis_idx: int | None = None
    pair: tuple[int, int] | None = None

    @property
    def inconclusive(self) -> bool:
        return self.outcome == INCONCLUSIVE

    def to_dict(self) -> dict:
        if self.pair is not None:
            return {"outcome": None if self.inconclusive else self.outcome, "pair": list(self.pair)}
        return {"outcome": self.outcome, "basis": self.basis_idx}


# columnar batches -----------------------------------------------------------

@dataclass
class PrepBatch:
    """Columnar transcript of Alice's side; ``choice`` is a basis or pair index."""

    spec: ProtocolSpec
    symbols: np.ndarray
    choice: np.ndarray

    def __len__(self) -> int:
        return len(self.symbols)

    def record(self, k: int) -> PrepRecord:
        if self.spec.uses_pairs:
            i, j = self.spec.pairs[self.choice[k]]
            return PrepRecord(int(self.symbols[k]), pair=(int(i), int(j)))
        return PrepRecord(int(self.symbols[k]), basis_idx=int(self.choice[k]))

    def records(self) -> list[PrepRecord]:
        return [self.record(k) for k in range(len(self))]

    @classmethod
    def from_records(cls, spec: ProtocolSpec, records: Sequence[PrepRecord]) -> PrepBatch:
        symbols = np.array([r.symbol for r in records], dtype=np.int64)
        return cls(spec, symbols, _choices_from_records(spec, records))

    @classmethod
    def concat(cls, parts: Sequence[PrepBatch]) -> PrepBatch:
        return cls(
            parts[0].spec,
            np.concatenate([p.symbols for p in parts]),
            np.concatenate([p.choice for p in parts]),
        )


@dataclass
class MeasBatch:
    spec: ProtocolSpec
    outcomes: np.ndarray
    choice: np.ndarray

    def __len__(self) -> int:
        return len(self.outcomes)

    def record(self, k: int) -> MeasRecord:
        if self.spec.uses_pairs:
            i, j = self.spec.pairs[self.choice[k]]
            return MeasRecord(int(self.outcomes[k]), pair=(int(i), int(j)))
        return MeasRecord(int(self.outcomes[k]), basis_idx=int(self.choice[k]))

    def records(self) -> list[MeasRecord]:
        return [self.record(k) for k in range(len(self))]

    @classmethod
    def from_records(cls, spec: ProtocolSpec, records: Sequence[MeasRecord]) -> MeasBatch:
        outcomes = np.array([r.outcome for r in records], dtype=np.int64)
        return cls(spec, outcomes, _choices_from_records(spec, records))

    @classmethod
    def concat(cls, parts: Sequence[MeasBatch]) -> MeasBatch:
        return cls(
            parts[0].spec,
            np.concatenate([p.outcomes for p in parts]),
            np.concatenate([p.choice for p in parts]),
        )


def _choices_from_records(spec: ProtocolSpec, records) -> np.ndarray:
    if not spec.uses_pairs:
        return np.array([r.basis_idx for r in records], dtype=np.int64)
    d = spec.dim
    out = []
    for r in records:
        i, j = r.pair
        if not 0 <= i < j < d:
            raise ValueError(f"subspace pair must satisfy 0 <= i < j < d, got {r.pair}")
        # index of (i, j) in lexicographic combinations(range(d), 2)
        out.append(i * d - i * (i + 1) // 2 + (j - i - 1))
    return np.array(out, dtype=np.int64)


# prepare / measure ----------------------------------------------------------

def prepare_batch(spec: ProtocolSpec, u_symbol: np.ndarray, u_choice: np.ndarray):
    """Alice's preparation for a block of pulses. Returns (PrepBatch, states (N, d))."""
    u_symbol = np.asarray(u_symbol, dtype=float)
    n, d = u_symbol.shape[0], spec.dim
    choice = spec.draw_choice(np.asarray(u_choice, dtype=float))
    if spec.uses_pairs:
        bits = _index_from_uniform(u_symbol, 2)
        ij = spec.pairs[choice]
        states = np.zeros((n, d), dtype=complex)
        rows = np.arange(n)
        states[rows, ij[:, 0]] = 1.0 / math.sqrt(2)
        states[rows, ij[:, 1]] = np.where(bits == 1, -1.0, 1.0) / math.sqrt(2)
        return PrepBatch(spec, bits, choice), states
    symbols = _index_from_uniform(u_symbol, d)
    mats = spec.basis_set.matrices
    states = mats[choice, :, symbols]
    return PrepBatch(spec, symbols, choice), states


def measure_batch(spec: ProtocolSpec, states: np.ndarray, u_choice: np.ndarray, u_outcome: np.ndarray) -> MeasBatch:
    """Bob's measurement for a block of received states (N, d)."""
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[1] != spec.dim:
        raise ValueError(f"dimension mismatch: states {states.shape}, protocol d={spec.dim}")
    choice = spec.draw_choice(np.asarray(u_choice, dtype=float))
    u_outcome = np.asarray(u_outcome, dtype=float)
    if spec.uses_pairs:
        ij = spec.pairs[choice]
        rows = np.arange(len(states))
        a, b = states[rows, ij[:, 0]], states[rows, ij[:, 1]]
        p_plus = np.abs(a + b) ** 2 / 2
        p_minus = np.abs(a - b) ** 2 / 2
        probs = np.column_stack([p_plus, p_minus, np.clip(1.0 - p_plus - p_minus, 0.0, None)])
        outcomes = sample_from_probabilities(probs, u_outcome)
        outcomes[outcomes == 2] = INCONCLUSIVE
        return MeasBatch(spec, outcomes, choice)
    mats = spec.basis_set.matrices
    probs = born_probabilities(states, mats[choice])
    return MeasBatch(spec, sample_from_probabilities(probs, u_outcome), choice)


def prepare(spec: ProtocolSpec, rng: np.random.Generator) -> tuple[PrepRecord, StateVector]:
    u = rng.random(2)
    batch, states = prepare_batch(spec, u[:1], u[1:])
    return batch.record(0), StateVector(states[0])


def measure(spec: ProtocolSpec, state: StateVector, rng: np.random.Generator) -> MeasRecord:
    if state.dim != spec.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, protocol d={spec.dim}")
    u = rng.random(2)
    return measure_batch(spec, state.amps[None, :], u[:1], u[1:]).record(0)


def prepared_state(spec: ProtocolSpec, record: PrepRecord) -> StateVector:
    """The state Alice sends for a given record."""
    batch = PrepBatch.from_records(spec, [record])
    if spec.uses_pairs:
        i, j = record.pair
        amps = np.zeros(spec.dim, dtype=complex)
        amps[i] = 1 / math.sqrt(2)
        amps[j] = (-1) ** record.symbol / math.sqrt(2)
        return StateVector(amps)
    return StateVector(spec.basis_set.matrices[batch.choice[0], :, record.symbol])


# sifting and parameter estimation ------------------------------------------

@dataclass
class SiftResult:
    kept_indices: np.ndarray
    alice_dits: np.ndarray
    bob_dits: np.ndarray
    total: int

    def __post_init__(self):
        if not (len(self.kept_indices) == len(self.alice_dits) == len(self.bob_dits)):
            raise ValueError("sifted strings have unequal lengths")

    def __len__(self) -> int:
        return len(self.kept_indices)

    @property
    def sift_rate(self) -> float:
        return len(self) / self.total if self.total else 0.0

    def mismatches(self) -> np.ndarray:
        return self.alice_dits != self.bob_dits

    @property
    def error_rate(self) -> float:
        """Exact mismatch fraction over the whole sifted string."""
        if not len(self):
            raise ValueError("sifted key is empty")
        return float(self.mismatches().mean())


def keep_mask(preps: PrepBatch, meas: MeasBatch) -> np.ndarray:
    if len(preps) != len(meas):
        raise ValueError(f"transcript length mismatch: {len(preps)} preparations, {len(meas)} measurements")
    keep = preps.choice == meas.choice
    if preps.spec.uses_pairs:
        keep &= meas.outcomes != INCONCLUSIVE
    return keep


def sift(preps, meas, spec: ProtocolSpec | None = None) -> SiftResult:
    """Keep positions where Alice's and Bob's basis (or subspace pair) agree.

    Accepts batches, or plain sequences of records together with ``spec``.
    CHAU15 additionally discards INCONCLUSIVE outcomes.
    """
    if not isinstance(preps, PrepBatch):
        if spec is None:
            raise TypeError("spec is required when sifting record lists")
        preps = PrepBatch.from_records(spec, preps)
    if not isinstance(meas, MeasBatch):
        meas = MeasBatch.from_records(spec or preps.spec, meas)
    keep = keep_mask(preps, meas)
    idx = np.flatnonzero(keep)
    return SiftResult(idx, preps.symbols[idx], meas.outcomes[idx], len(preps))


def estimate_qber(sifted: SiftResult, sample_fraction: float = DEFAULT_SAMPLE_FRACTION, rng: np.random.Generator | None = None):
    """Disclose a random subset of the sifted key and return (error estimate, disclosed positions).

    Positions index into the sifted key; they are sorted and must be dropped
    from the final key.
    """
    if not 0 < sample_fraction <= 1:
        raise ValueError(f"sample_fraction must lie in (0, 1], got {sample_fraction}")
    n = len(sifted)
    if n == 0:
        raise ValueError("cannot estimate the error rate of an empty sifted key")
    k = math.ceil(sample_fraction * n)
    if k >= n:
        disclosed = np.arange(n)
    else:
        if rng is None:
            raise TypeError("rng is required when sample_fraction < 1")
        disclosed = np.sort(rng.choice(n, size=k, replace=False))
    return float(sifted.mismatches()[disclosed].mean()), disclosed


def sift_rate_theory(spec: ProtocolSpec) -> float:
    """Expected fraction of pulses surviving sifting on an undisturbed channel.

    Basis protocols keep a pulse with probability sum_b p_b^2. CHAU15 keeps
    2/(d^2 - d). CHAU02 is the uniform three-basis match rate 1/3; see
    :func:`sift_rate_note` for the 1/2 quoted in published comparisons.
    """
    if spec.uses_pairs:
        d = spec.dim
        return 2.0 / (d * d - d)
    return math.fsum(p * p for p in spec.basis_bias)


def sift_rate_note(spec: ProtocolSpec) -> str | None:
    if spec.kind is ProtocolKind.CHAU02:
        return (
            f"basis-match rate is 1/3; published comparison table lists {CHAU02_TABLE_SIFT_RATE}"
        )
    return None


def default_spec(kind, d: int, m: int | None = None) -> ProtocolSpec:
    return ProtocolSpec(ProtocolKind.parse(kind), d, m)


__all__ = [
    "CHAU02_TABLE_SIFT_RATE",
    "DEFAULT_SAMPLE_FRACTION",
    "INCONCLUSIVE",
    "MeasBatch",
    "MeasRecord",
    "PrepBatch",
    "PrepRecord",
    "ProtocolKind",
    "ProtocolSpec",
    "SiftResult",
    "default_spec",
    "estimate_qber",
    "keep_mask",
    "measure",
    "measure_batch",
    "prepare",
    "prepare_batch",
    "prepared_state",
    "sift",
    "sift_rate_note",
    "sift_rate_theory",
]
