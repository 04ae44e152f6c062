"""Closed-form figures of merit: entropies, key rates, thresholds, cloning fidelities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import bisect

from .protocols import ProtocolKind

THRESHOLD_XTOL = 1e-6

# Published error bounds for BB84 under coherent attacks, keyed by dimension.
COHERENT_ERROR_BOUNDS = {2: 0.1100, 7: 0.2372}
# Chau15 reaches its 50% tolerance only from this dimension upwards.
CHAU15_FULL_TOLERANCE_MIN_DIM = 16


def _xlog2(x: float, y: float) -> float:
    """x * log2(y), taken as 0 when x == 0."""
    return 0.0 if x == 0 else x * math.log2(y)


def _check_prob(x: float, name: str = "x") -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    return int(d)


def shannon_h(x: float) -> float:
    """Binary entropy in bits, h(0) = h(1) = 0."""
    x = _check_prob(x)
    return -_xlog2(x, x) - _xlog2(1 - x, 1 - x)


def entropy_d(e: float, d: int) -> float:
    """Entropy of a d-ary symmetric error with total error probability e.

    Equals -e log2(e/(d-1)) - (1-e) log2(1-e) and reduces to ``shannon_h`` at d = 2.
    """
    e, d = _check_prob(e, "e"), _check_dim(d)
    return -_xlog2(e, e / (d - 1)) - _xlog2(1 - e, 1 - e)


def keyrate_bb84(e: float, d: int) -> float:
    """Secret bits per sifted dit for d-dimensional BB84: log2 d - 2 h_d(e).

    Negative values mean no secure key; they are returned unclamped.
    """
    return math.log2(_check_dim(d)) - 2 * entropy_d(e, d)


def keyrate_mub(e: float, d: int) -> float:
    """Secret bits per sifted dit for the protocol using all d+1 bases.

    At d = 2 this is the six-state rate 1 + (1 - 3e/2) log2(1 - 3e/2) + (3e/2) log2(e/2).
    """
    e, d = _check_prob(e, "e"), _check_dim(d)
    x = (d + 1) * e / d
    if x > 1:
        raise ValueError(f"error rate {e} exceeds d/(d+1) = {d / (d + 1):.6f}")
    return math.log2(d) + _xlog2(1 - x, 1 - x) + _xlog2(x, e / (d * (d - 1)))


def key_rate(kind, e: float, d: int) -> float | None:
    """Dispatch on protocol kind; None where no key-rate formula in e exists."""
    kind = ProtocolKind.parse(kind)
    if kind is ProtocolKind.BB84:
        return keyrate_bb84(e, d)
    if kind is ProtocolKind.MUB:
        return keyrate_mub(e, d)
    return None


def zero_error_rate(kind, d: int) -> float:
    """R(0): log2 d for the basis protocols, one bit for the Chau protocols."""
    kind = ProtocolKind.parse(kind)
    if kind in (ProtocolKind.BB84, ProtocolKind.MUB):
        return math.log2(_check_dim(d))
    return 1.0


def threshold(kind, d: int, xtol: float = THRESHOLD_XTOL) -> float:
    """Error rate at which the key rate crosses zero, found by bisection on (0, (d-1)/d)."""
    kind = ProtocolKind.parse(kind)
    d = _check_dim(d)
    rate = {ProtocolKind.BB84: keyrate_bb84, ProtocolKind.MUB: keyrate_mub}.get(kind)
    if rate is None:
        raise ValueError(f"no key-rate threshold for {kind.value}; see chau_tolerances()")
    lo, hi = 0.0, (d - 1) / d
    f_lo, f_hi = rate(lo, d), rate(hi, d)
    if not (f_lo > 0 > f_hi):
        raise ValueError(f"no sign change on [0, {hi}]: R(lo)={f_lo}, R(hi)={f_hi}")
    return float(bisect(rate, lo, hi, args=(d,), xtol=xtol))


def mutual_info(e: float, d: int) -> float:
    """Alice-Bob mutual information per photon for a symmetric error rate e."""
    return math.log2(_check_dim(d)) - entropy_d(e, d)


@dataclass(frozen=True)
class CloningFigures:
    d: int
    f_est: Fraction
    f_clo: Fraction
    shrink: Fraction

    @property
    def disturbance(self) -> Fraction:
        return 1 - self.f_clo


def cloning_figures(d: int) -> CloningFigures:
    """Exact fidelities of optimal state estimation and the universal 1->2 cloner.

    ``shrink`` is the weight on the undisturbed state when a clone is written as
    shrink * psi + (1 - shrink) * I/d, i.e. F_clo = shrink + (1 - shrink)/d.
    """
    d = _check_dim(d)
    f_clo = Fraction(1, 2) + Fraction(1, d + 1)
    return CloningFigures(
        d=d,
        f_est=Fraction(2, d + 1),
        f_clo=f_clo,
        shrink=(f_clo * d - 1) / (d - 1),
    )


def chau_tolerances() -> dict[str, float]:
    """Bit-error tolerances of Chau02 and Chau15 (the latter for d >= 16)."""
    return {"chau02": 0.5 - 0.1 * math.sqrt(5), "chau15": 0.5}


def security_bound(kind, d: int) -> float:
    """Maximum tolerated error rate for a protocol: key-rate root or published constant."""
    kind = ProtocolKind.parse(kind)
    if kind is ProtocolKind.CHAU02:
        return chau_tolerances()["chau02"]
    if kind is ProtocolKind.CHAU15:
        return chau_tolerances()["chau15"]
    return threshold(kind, d)


@dataclass(frozen=True)
class KeyRateCurve:
    kind: ProtocolKind
    d: int
    m: int
    errors: np.ndarray
    rates: np.ndarray
    threshold: float


def key_rate_curve(kind, d: int, num: int = 201, e_max: float | None = None) -> KeyRateCurve:
    """Sampled key rate on [0, e_max]; e_max defaults to the threshold."""
    kind = ProtocolKind.parse(kind)
    thr = threshold(kind, d)
    top = thr if e_max is None else float(e_max)
    errors = np.linspace(0.0, top, num)
    fn = keyrate_bb84 if kind is ProtocolKind.BB84 else keyrate_mub
    rates = np.array([fn(e, d) for e in errors])
    m = 2 if kind is ProtocolKind.BB84 else d + 1
    return KeyRateCurve(kind, d, m, errors, rates, thr)


__all__ = [
    "CHAU15_FULL_TOLERANCE_MIN_DIM",
    "COHERENT_ERROR_BOUNDS",
    "CloningFigures",
    "KeyRateCurve",
    "chau_tolerances",
    "cloning_figures",
    "entropy_d",
    "key_rate",
    "key_rate_curve",
    "keyrate_bb84",
    "keyrate_mub",
    "mutual_info",
    "security_bound",
    "shannon_h",
    "threshold",
    "zero_error_rate",
]
