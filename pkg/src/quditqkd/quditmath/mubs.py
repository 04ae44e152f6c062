"""Sets of mutually unbiased bases.

Ordering convention for ``mub_set(d, m)``:

* ``m == 2``: computational basis followed by the Fourier basis, for any d >= 2.
* ``m > 2`` requires a prime power d <= 16. Basis 0 is computational and the
  remaining bases are taken, in order, from the complete set built over
  GF(d) and labelled by a field element ``a = 0, 1, ..., d-1``:

  - odd characteristic: vector b of basis a has amplitudes
    ``w_p^{tr(a x^2 + b x)} / sqrt(d)`` for x in GF(d). For prime d the
    a = 0 basis is exactly the Fourier basis.
  - characteristic 2: basis a is the joint eigenbasis of the commuting
    Pauli operators ``X(x) Z(a x)``, where the Z part of the label is written
    in trace-dual coordinates so that commutation follows from the trace
    form. For d = 2 this yields the sigma_z, sigma_x, sigma_y eigenbases.

The Fourier basis of Z_d is not part of any complete set when d = p^n with
n >= 2 (d = 4, 8, 9, 16), so for those dimensions basis 1 of an m > 2 set is
the field's character basis instead (Walsh-Hadamard for d = 2^n).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .field import finite_field, prime_power
from .states import Basis, BasisSet, computational_basis, dqft_basis

MAX_DIM = 16

_PAULI = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def supports_full_set(d: int) -> bool:
    return 2 <= d <= MAX_DIM and prime_power(d) is not None


def _odd_char_bases(d: int) -> list[Basis]:
    p, n = prime_power(d)
    F = finite_field(p, n)
    omega = np.exp(2j * np.pi / p)
    xs = range(d)
    sq = [F.mul(x, x) for x in xs]
    out = []
    for a in range(d):
        cols = np.empty((d, d), dtype=complex)
        for b in range(d):
            tr = [F.trace(F.add(F.mul(a, sq[x]), F.mul(b, x))) for x in xs]
            cols[:, b] = omega ** np.array(tr)
        cols /= np.sqrt(d)
        out.append(Basis(cols, f"quadratic a={a}"))
    return out


def _pauli_string(xbits, zbits) -> np.ndarray:
    op = np.ones((1, 1), dtype=complex)
    for xb, zb in zip(xbits, zbits):
        op = np.kron(op, _PAULI[(xb, zb)])
    return op


def _even_char_bases(d: int) -> list[Basis]:
    _, n = prime_power(d)
    F = finite_field(2, n)
    # qubit k carries the coefficient of x^k; field element x^k is encoded as 1 << k
    unit = [1 << k for k in range(n)]
    out = []
    for a in range(d):
        gens = []
        for k in range(n):
            ax = F.mul(a, unit[k])
            xbits = [1 if i == k else 0 for i in range(n)]
            zbits = [F.trace(F.mul(ax, unit[i])) for i in range(n)]
            gens.append(_pauli_string(xbits, zbits))
        # kron puts qubit 0 in the most significant position; reverse so index = field encoding
        gens = [_reindex(g, n) for g in gens]
        weighted = sum((2.0**k) * g for k, g in enumerate(gens))
        _, vecs = np.linalg.eigh(weighted)
        out.append(Basis(vecs, f"pauli-class a={a}"))
    return out


def _reindex(op: np.ndarray, n: int) -> np.ndarray:
    d = 2**n
    perm = np.array([int(format(i, f"0{n}b")[::-1], 2) for i in range(d)])
    return op[np.ix_(perm, perm)]


@lru_cache(maxsize=None)
def complete_mub_bases(d: int) -> tuple[Basis, ...]:
    """All d+1 bases for a supported prime-power dimension."""
    if not supports_full_set(d):
        raise ValueError(f"complete MUB sets are only built for prime powers 2..{MAX_DIM}, got d={d}")
    p, n = prime_power(d)
    rest = _odd_char_bases(d) if p > 2 else _even_char_bases(d)
    if n == 1:
        rest[0] = dqft_basis(d)
    return (computational_basis(d), *rest)


@lru_cache(maxsize=None)
def mub_set(d: int, m: int) -> BasisSet:
    """The first m mutually unbiased bases in dimension d (see module docstring)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 2 <= m <= d + 1:
        raise ValueError(f"need 2 <= m <= d+1 = {d + 1}, got m={m}")
    if m == 2:
        return BasisSet((computational_basis(d), dqft_basis(d)))
    if not supports_full_set(d):
        raise ValueError(
            f"m={m} > 2 bases need a prime-power dimension <= {MAX_DIM}, got d={d}"
        )
    return BasisSet(complete_mub_bases(d)[:m])
