"""Per-pulse channel and eavesdropper models.

Each pulse consumes ``CHANNEL_UNIFORMS`` uniforms regardless of the channel
kind, so switching channel never shifts the random numbers seen by Bob.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analysis import cloning_figures
from .protocols import ProtocolSpec
from .quditmath import BasisSet, StateVector, born_probabilities, mub_set, sample_from_probabilities

CHANNEL_UNIFORMS = 3


class ChannelKind(str, enum.Enum):
    IDENTITY = "IDENTITY"
    DEPOLARIZING = "DEPOLARIZING"
    INTERCEPT_RESEND = "INTERCEPT_RESEND"
    CLONER = "CLONER"

    @classmethod
    def parse(cls, value) -> ChannelKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown channel kind {value!r}; expected one of {[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """A channel model.

    ``q`` is the depolarizing probability, ``eve_bases`` the bases an
    intercept-resend attacker chooses from, and ``dim`` the dimension the
    cloner is built for.
    """

    kind: ChannelKind = ChannelKind.IDENTITY
    q: float = 0.0
    eve_bases: BasisSet | None = None
    dim: int | None = None

    def __post_init__(self):
        kind = ChannelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        q = float(self.q)
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"channel.q must lie in [0, 1], got {self.q!r}")
        object.__setattr__(self, "q", q)
        if kind is ChannelKind.INTERCEPT_RESEND and self.eve_bases is None:
            raise ValueError("intercept-resend needs the basis set Eve measures in")
        if kind is ChannelKind.CLONER:
            if self.dim is None or self.dim < 2:
                raise ValueError(f"cloner needs a dimension >= 2, got {self.dim!r}")

    @classmethod
    def identity(cls) -> ChannelSpec:
        return cls(ChannelKind.IDENTITY)

    @classmethod
    def depolarizing(cls, q: float) -> ChannelSpec:
        return cls(ChannelKind.DEPOLARIZING, q=q)

    @classmethod
    def intercept_resend(cls, eve_bases: BasisSet) -> ChannelSpec:
        return cls(ChannelKind.INTERCEPT_RESEND, eve_bases=eve_bases)

    @classmethod
    def cloner(cls, d: int) -> ChannelSpec:
        return cls(ChannelKind.CLONER, dim=d)

    @property
    def adversarial(self) -> bool:
        return self.kind in (ChannelKind.INTERCEPT_RESEND, ChannelKind.CLONER)

    @property
    def shrink(self) -> float:
        """Probability that the cloner forwards Bob's copy undisturbed."""
        if self.kind is not ChannelKind.CLONER:
            raise AttributeError("shrink factor only applies to the cloner")
        return float(cloning_figures(self.dim).shrink)

    @property
    def required_dim(self) -> int | None:
        if self.kind is ChannelKind.INTERCEPT_RESEND:
            return self.eve_bases.dim
        if self.kind is ChannelKind.CLONER:
            return self.dim
        return None

    def retarget(self, d: int) -> ChannelSpec:
        """The same attack rebuilt for dimension d."""
        if self.kind is ChannelKind.INTERCEPT_RESEND:
            m = min(self.eve_bases.m, d + 1)
            return ChannelSpec.intercept_resend(mub_set(d, m))
        if self.kind is ChannelKind.CLONER:
            return ChannelSpec.cloner(d)
        return self

    def check_compatible(self, spec: ProtocolSpec) -> None:
        need = self.required_dim
        if need is not None and need != spec.dim:
            raise ValueError(f"channel is built for d={need} but the protocol uses d={spec.dim}")

    def to_config(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is ChannelKind.DEPOLARIZING:
            out["q"] = self.q
        if self.kind is ChannelKind.INTERCEPT_RESEND:
            out["eve_m"] = self.eve_bases.m
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ChannelSpec) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def _key(self):
        eve = None if self.eve_bases is None else (self.eve_bases.dim, self.eve_bases.matrices.tobytes())
        return (self.kind, self.q, eve, self.dim)


@dataclass(frozen=True)
class EveRecord:
    """Eve's per-pulse view: basis and outcome for intercept-resend, or whether
    the cloner disturbed Bob's copy."""

    basis_idx: int | None = None
    outcome: int | None = None
    disturbed: bool | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class EveBatch:
    basis_idx: np.ndarray | None = None
    outcome: np.ndarray | None = None
    disturbed: np.ndarray | None = None

    def record(self, k: int) -> EveRecord:
        if self.disturbed is not None:
            return EveRecord(disturbed=bool(self.disturbed[k]))
        return EveRecord(basis_idx=int(self.basis_idx[k]), outcome=int(self.outcome[k]))

    @classmethod
    def concat(cls, parts) -> EveBatch | None:
        if not parts or parts[0] is None:
            return None
        cat = lambda name: None if getattr(parts[0], name) is None else np.concatenate([getattr(p, name) for p in parts])
        return cls(cat("basis_idx"), cat("outcome"), cat("disturbed"))


def _uniform_replace(states: np.ndarray, replace: np.ndarray, u_level: np.ndarray) -> np.ndarray:
    d = states.shape[1]
    out = states.copy()
    rows = np.flatnonzero(replace)
    level = np.minimum((u_level[rows] * d).astype(np.int64), d - 1)
    out[rows] = 0.0
    out[rows, level] = 1.0
    return out


def transmit_batch(chan: ChannelSpec, states: np.ndarray, u: np.ndarray):
    """Apply the channel to a block of states (N, d) using uniforms u of shape (N, 3).

    Returns (received states, EveBatch or None).
    """
    states = np.asarray(states, dtype=complex)
    u = np.asarray(u, dtype=float)
    need = chan.required_dim
    if need is not None and states.shape[1] != need:
        raise ValueError(f"dimension mismatch: channel d={need}, states d={states.shape[1]}")
    kind = chan.kind
    if kind is ChannelKind.IDENTITY:
        return states, None
    if kind is ChannelKind.DEPOLARIZING:
        return _uniform_replace(states, u[:, 0] < chan.q, u[:, 1]), None
    if kind is ChannelKind.CLONER:
        disturbed = u[:, 0] >= chan.shrink
        return _uniform_replace(states, disturbed, u[:, 1]), EveBatch(disturbed=disturbed)
    mats = chan.eve_bases.matrices
    m = mats.shape[0]
    eve_basis = np.minimum((u[:, 0] * m).astype(np.int64), m - 1)
    probs = born_probabilities(states, mats[eve_basis])
    outcome = sample_from_probabilities(probs, u[:, 1])
    resent = mats[eve_basis, :, outcome]
    return resent, EveBatch(basis_idx=eve_basis, outcome=outcome)


def transmit(chan: ChannelSpec, state: StateVector, rng: np.random.Generator):
    """Send one state through the channel. Returns (received state, EveRecord or None)."""
    u = rng.random((1, CHANNEL_UNIFORMS))
    out, eve = transmit_batch(chan, state.amps[None, :], u)
    return StateVector(out[0]), (None if eve is None else eve.record(0))


def intercept_resend_qber_theory(d: int, m: int) -> float:
    """Sifted error rate when Eve measures every pulse in one of the m bases.

    Wrong basis with probability (m-1)/m, after which Bob's outcome is uniform.
    """
    if not 2 <= m <= d + 1:
        raise ValueError(f"need 2 <= m <= d+1, got m={m}, d={d}")
    return (m - 1) / m * (d - 1) / d


def cloner_qber_theory(d: int) -> float:
    """(1 - shrink)(d-1)/d, which equals 1 - F_clo."""
    return float(cloning_figures(d).disturbance)


def depolarizing_qber_theory(spec: ProtocolSpec, q: float) -> float:
    """Sifted error rate of a depolarizing channel for the given protocol."""
    d = spec.dim
    if spec.uses_pairs:
        # replacement lands in Bob's matched pair with probability 2/d, else inconclusive
        return (q / d) / (1 - q + 2 * q / d)
    return q * (d - 1) / d


def depolarizing_for_qber(spec: ProtocolSpec, e: float) -> float:
    """Inverse of :func:`depolarizing_qber_theory`."""
    d = spec.dim
    if spec.uses_pairs:
        if not 0 <= e < 0.5:
            raise ValueError(f"pair-subspace error rate must lie in [0, 1/2), got {e}")
        return e / (1 / d + e * (1 - 2 / d))
    q = e * d / (d - 1)
    if q > 1:
        raise ValueError(f"error rate {e} is above the depolarizing maximum (d-1)/d")
    return q


def channel_from_config(kind, spec: ProtocolSpec, q: float = 0.0, eve_m: int | None = None) -> ChannelSpec:
    kind = ChannelKind.parse(kind)
    if kind is ChannelKind.IDENTITY:
        return ChannelSpec.identity()
    if kind is ChannelKind.DEPOLARIZING:
        return ChannelSpec.depolarizing(q)
    if kind is ChannelKind.CLONER:
        return ChannelSpec.cloner(spec.dim)
    if eve_m is None:
        eve_m = spec.num_bases if spec.num_bases is not None else 2
    return ChannelSpec.intercept_resend(mub_set(spec.dim, eve_m))


__all__ = [
    "CHANNEL_UNIFORMS",
    "ChannelKind",
    "ChannelSpec",
    "EveBatch",
    "EveRecord",
    "channel_from_config",
    "cloner_qber_theory",
    "depolarizing_for_qber",
    "depolarizing_qber_theory",
    "intercept_resend_qber_theory",
    "transmit",
    "transmit_batch",
]
